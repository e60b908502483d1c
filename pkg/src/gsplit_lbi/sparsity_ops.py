"""Thresholds, support sets, and projection onto a support's kernel subspace.

The selection estimate is the Euclidean projection of the dense estimate onto
ker(D restricted to off-support rows): off-support voxel rows force entries to
zero, off-support edge rows force the two endpoints to agree.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components
from scipy.sparse.linalg import lsqr

__all__ = [
    "SupportSet",
    "shrink",
    "shrink_nonneg",
    "support",
    "project_onto_support",
    "identify_procedural_bias",
]

# relative singular-value cutoff for the rank-deficient normal system
_SV_CUTOFF = 1e-10
# above this many dense entries, solve the normal system iteratively
_DENSE_LIMIT = 200_000


def shrink(x, threshold=1.0):
    """Soft threshold: sign(x) * max(|x| - threshold, 0)."""
    x = np.asarray(x, dtype=float)
    return np.sign(x) * np.maximum(np.abs(x) - threshold, 0.0)


def shrink_nonneg(x, threshold=1.0):
    """One-sided soft threshold: max(x - threshold, 0). Never negative."""
    x = np.asarray(x, dtype=float)
    return np.maximum(x - threshold, 0.0)


@dataclass(frozen=True)
class SupportSet:
    """Sorted 0-based row indices into the stacked (p + m) coordinate space."""

    indices: np.ndarray
    p: int
    m: int

    def __post_init__(self):
        idx = np.unique(np.asarray(self.indices, dtype=np.int64))
        if idx.size and (idx[0] < 0 or idx[-1] >= self.p + self.m):
            raise ValueError("support index out of range")
        object.__setattr__(self, "indices", idx)

    def __len__(self) -> int:
        return int(self.indices.size)

    @property
    def vertex_part(self) -> np.ndarray:
        return self.indices[self.indices < self.p]

    @property
    def edge_part(self) -> np.ndarray:
        return self.indices[self.indices >= self.p]

    def complement(self) -> np.ndarray:
        keep = np.ones(self.p + self.m, dtype=bool)
        keep[self.indices] = False
        return np.flatnonzero(keep)


def support(gamma, p, tol=0.0) -> SupportSet:
    """Indices where |gamma| exceeds tol, split into vertex (< p) and edge rows."""
    gamma = np.asarray(gamma, dtype=float)
    if tol < 0:
        raise ValueError(f"tol must be nonnegative, got {tol}")
    idx = np.flatnonzero(np.abs(gamma) > tol)
    return SupportSet(indices=idx, p=int(p), m=int(gamma.size - p))


def _project_graph(beta, op, comp_rows):
    """Exact projection using the operator's structure.

    Off-support voxel rows pin entries to zero; off-support edge rows (when
    rho > 0) merge their endpoints. Each merged component is averaged, and any
    component touching a pinned entry collapses to zero.
    """
    p = op.p
    forced_zero = comp_rows[comp_rows < p]
    edge_ids = comp_rows[comp_rows >= p] - p
    out = beta.copy()
    if op.rho == 0.0 or edge_ids.size == 0:
        out[forced_zero] = 0.0
        return out
    pairs = op.edges[edge_ids]
    adj = sp.coo_matrix(
        (np.ones(pairs.shape[0]), (pairs[:, 0], pairs[:, 1])), shape=(p, p)
    )
    n_comp, labels = connected_components(adj, directed=False)
    sums = np.bincount(labels, weights=beta, minlength=n_comp)
    counts = np.bincount(labels, minlength=n_comp)
    means = sums / counts
    zeroed = np.zeros(n_comp, dtype=bool)
    zeroed[labels[forced_zero]] = True
    means[zeroed] = 0.0
    # only merged or pinned coordinates change; isolated free ones keep beta
    touched = np.zeros(p, dtype=bool)
    touched[pairs.reshape(-1)] = True
    touched[forced_zero] = True
    out[touched] = means[labels[touched]]
    return out


def _project_normal_eq(beta, op, comp_rows):
    """Projection via beta - M^T u with M M^T u = M beta, M the off-support rows."""
    M = op.matrix[comp_rows]
    r = M.shape[0]
    if r * op.p <= _DENSE_LIMIT:
        Md = M.toarray()
        u, *_ = np.linalg.lstsq(Md @ Md.T, Md @ beta, rcond=_SV_CUTOFF)
        return beta - Md.T @ u
    res = lsqr(M.T, beta, atol=1e-14, btol=1e-14, iter_lim=8 * (op.p + r))
    return beta - M.T @ res[0]


def project_onto_support(beta, op, supp, method="auto"):
    """Project beta onto ker of the off-support rows of the penalty operator.

    ``supp`` is a SupportSet or an array of retained row indices. The default
    method exploits the identity-over-differences structure and is exact; the
    normal-equation route is kept for cross-checking and for operators that
    were modified by hand.
    """
    beta = np.asarray(beta, dtype=float)
    if beta.shape != (op.p,):
        raise ValueError(f"expected vector of length {op.p}, got shape {beta.shape}")
    if isinstance(supp, SupportSet):
        comp_rows = supp.complement()
    else:
        ss = SupportSet(indices=np.asarray(supp, dtype=np.int64), p=op.p, m=op.m)
        comp_rows = ss.complement()
    if comp_rows.size == 0:
        return beta.copy()
    if method == "auto" or method == "graph":
        return _project_graph(beta, op, comp_rows)
    if method == "normal":
        return _project_normal_eq(beta, op, comp_rows)
    raise ValueError(f"unknown method {method!r}")


def identify_procedural_bias(beta_pre, beta_les, top_k):
    """Voxels the selection estimate zeroed out but the dense estimate drives negative.

    Among coordinates with beta_les == 0 and beta_pre < 0, returns the top_k
    indices with the largest |beta_pre|, strongest first.
    """
    beta_pre = np.asarray(beta_pre, dtype=float)
    beta_les = np.asarray(beta_les, dtype=float)
    if beta_pre.shape != beta_les.shape:
        raise ValueError("estimate shapes differ")
    if top_k < 0:
        raise ValueError(f"top_k must be nonnegative, got {top_k}")
    cand = np.flatnonzero((beta_les == 0.0) & (beta_pre < 0.0))
    if cand.size == 0 or top_k == 0:
        return np.empty(0, dtype=np.int64)
    order = np.lexsort((cand, -np.abs(beta_pre[cand])))
    return cand[order[:top_k]]

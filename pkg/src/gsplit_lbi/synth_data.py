"""Deterministic synthetic data: a dense-design recovery benchmark and a 3-D phantom.

Both generators run on the counter-based Philox engine so a seed pins every
byte of the output on any platform. The recovery benchmark is a classic
compressed-sensing setup: iid Gaussian design, eight-spike coefficient vector
with both signs. The phantom builds a voxel volume with two kinds of signal,
positive clustered blobs (the effect we want selected) and scattered negative
voxels (predictive artifacts of a nuisance sign that a one-sided prior should
refuse), then draws smoothed Gaussian images and logistic labels.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .glm_loss import Dataset, GlmFamily, _as_family
from .grid_graph import build_grid_graph

__all__ = [
    "generate_recovery_dataset",
    "PhantomSpec",
    "PhantomTruth",
    "default_phantom_spec",
    "generate_phantom",
    "write_dataset",
    "read_dataset",
    "write_truth_sidecar",
    "read_truth_sidecar",
    "write_index_list",
    "read_index_list",
]

RECOVERY_N = 100
RECOVERY_P = 80


def _rng(seed) -> np.random.Generator:
    # Philox: counter-based, identical streams on every platform
    return np.random.Generator(np.random.Philox(seed))


def _logistic_labels(eta, rng) -> np.ndarray:
    prob_pos = 1.0 / (1.0 + np.exp(-eta))
    return np.where(rng.random(eta.size) < prob_pos, 1.0, -1.0)


def generate_recovery_dataset(seed, family) -> Dataset:
    """100 x 80 iid Gaussian design, eight-spike truth (four +2, four -2).

    Linear family: y = X beta_star + standard Gaussian noise. Logistic
    family: labels in {-1, +1} drawn from the logit model with zero
    intercept. The true support is attached to the returned Dataset.
    """
    family = _as_family(family)
    rng = _rng(seed)
    beta_star = np.zeros(RECOVERY_P)
    beta_star[:4] = 2.0
    beta_star[4:8] = -2.0
    X = rng.standard_normal((RECOVERY_N, RECOVERY_P))
    eta = X @ beta_star
    if family is GlmFamily.LINEAR:
        y = eta + rng.standard_normal(RECOVERY_N)
    else:
        y = _logistic_labels(eta, rng)
    return Dataset(X=X, y=y, beta_star=beta_star, true_support=np.arange(8))


@dataclass(frozen=True)
class PhantomSpec:
    """Volume layout and sampling plan for the phantom generator.

    lesion_blobs entries are (center xyz, radius, amplitude > 0); blob
    membership is the Euclidean ball. bias_voxels entries are (flat voxel
    index, amplitude < 0) and must be pairwise non-adjacent under 6-neighbor
    connectivity and disjoint from every blob, so the ground truth stays
    unambiguous.
    """

    dims: tuple[int, int, int] = (8, 8, 8)
    lesion_blobs: tuple = ()
    bias_voxels: tuple = ()
    noise_sd: float = 1.0
    n_samples: int = 200
    seed: int = 7

    def __post_init__(self):
        if len(self.dims) != 3 or any(int(d) < 1 for d in self.dims):
            raise ValueError(f"dims must be three positive integers, got {self.dims}")
        if self.noise_sd <= 0:
            raise ValueError(f"noise_sd must be positive, got {self.noise_sd}")
        if self.n_samples < 1:
            raise ValueError(f"n_samples must be positive, got {self.n_samples}")
        for center, radius, amp in self.lesion_blobs:
            if radius < 0:
                raise ValueError(f"blob radius must be nonnegative, got {radius}")
            if amp <= 0:
                raise ValueError(f"blob amplitude must be positive, got {amp}")
            if any(not (0 <= c < d) for c, d in zip(center, self.dims)):
                raise ValueError(f"blob center {tuple(center)} outside grid {self.dims}")
        p = self.dims[0] * self.dims[1] * self.dims[2]
        for idx, amp in self.bias_voxels:
            if not (0 <= int(idx) < p):
                raise ValueError(f"bias voxel index {idx} outside grid of {p} voxels")
            if amp >= 0:
                raise ValueError(f"bias amplitude must be negative, got {amp}")


@dataclass(frozen=True)
class PhantomTruth:
    """Which voxels carry which kind of signal."""

    beta_star: np.ndarray
    lesion_support: np.ndarray
    bias_support: np.ndarray


# 10 scattered voxels, pairwise non-adjacent (6-neighbor), clear of both blobs
_DEFAULT_BIAS_XYZ = (
    (0, 0, 0), (3, 0, 7), (7, 0, 3), (0, 4, 6), (7, 3, 0),
    (4, 7, 0), (0, 7, 4), (7, 7, 7), (3, 7, 6), (7, 4, 5),
)


def default_phantom_spec() -> PhantomSpec:
    """Two radius-1.5 blobs of 19 voxels each, ten scattered bias voxels."""
    dims = (8, 8, 8)
    nx = dims[0]
    bias = tuple(
        (x + nx * (y + dims[1] * z), -2.0) for (x, y, z) in _DEFAULT_BIAS_XYZ
    )
    return PhantomSpec(
        dims=dims,
        lesion_blobs=(((2, 2, 2), 1.5, 2.0), ((5, 5, 5), 1.5, 2.0)),
        bias_voxels=bias,
        noise_sd=1.0,
        n_samples=200,
        seed=7,
    )


def _smoothing_matrix(p, edges) -> sp.csr_matrix:
    """Row v averages voxel v with its neighbors (uniform weights)."""
    if len(edges):
        rows = np.concatenate([edges[:, 0], edges[:, 1], np.arange(p)])
        cols = np.concatenate([edges[:, 1], edges[:, 0], np.arange(p)])
    else:
        rows = cols = np.arange(p)
    vals = np.ones(rows.size)
    adj = sp.coo_matrix((vals, (rows, cols)), shape=(p, p)).tocsr()
    inv_deg = 1.0 / np.asarray(adj.sum(axis=1)).ravel()
    return sp.diags(inv_deg) @ adj


def generate_phantom(spec: PhantomSpec, connectivity=6):
    """Build the phantom volume and sample a logistic dataset from it.

    Returns (Dataset, VoxelGrid, edges, PhantomTruth). Images are iid
    Gaussian voxel noise passed once through a 6-neighbor mean filter, which
    induces the short-range spatial correlation the graph penalty feeds on.
    Labels come from the logit model on beta_star with zero intercept. The
    Dataset's true_support is the union of lesion and bias voxels.
    """
    grid, edges = build_grid_graph(spec.dims, connectivity=connectivity)
    p = grid.p
    coords = grid.voxels.astype(float)

    beta_star = np.zeros(p)
    lesion = np.zeros(p, dtype=bool)
    for center, radius, amp in spec.lesion_blobs:
        inside = np.linalg.norm(coords - np.asarray(center, dtype=float), axis=1) <= radius
        beta_star[inside] += amp
        lesion |= inside
    bias_idx = np.array(sorted(int(i) for i, _ in spec.bias_voxels), dtype=int)
    if bias_idx.size != len(set(bias_idx.tolist())):
        raise ValueError("duplicate bias voxel indices")
    if bias_idx.size and np.any(lesion[bias_idx]):
        raise ValueError("bias voxels overlap a lesion blob: ground truth is ambiguous")
    for i, amp in spec.bias_voxels:
        beta_star[int(i)] = amp

    # non-adjacency of bias voxels under the 6-neighbor graph
    smooth_edges = edges if connectivity == 6 else build_grid_graph(spec.dims, connectivity=6)[1]
    if bias_idx.size > 1 and len(smooth_edges):
        in_bias = np.zeros(p, dtype=bool)
        in_bias[bias_idx] = True
        if np.any(in_bias[smooth_edges[:, 0]] & in_bias[smooth_edges[:, 1]]):
            raise ValueError("bias voxels must be pairwise non-adjacent")

    rng = _rng(spec.seed)
    raw = rng.standard_normal((spec.n_samples, p)) * spec.noise_sd
    X = raw @ _smoothing_matrix(p, smooth_edges).T.toarray()
    y = _logistic_labels(X @ beta_star, rng)

    support = np.flatnonzero(beta_star != 0)
    data = Dataset(X=X, y=y, beta_star=beta_star, true_support=support)
    truth = PhantomTruth(
        beta_star=beta_star,
        lesion_support=np.flatnonzero(lesion),
        bias_support=bias_idx,
    )
    return data, grid, edges, truth


def write_dataset(path, data: Dataset) -> None:
    """CSV with y in the first column and the p design columns after it."""
    with open(path, "w") as fh:
        cols = ",".join(f"x{j}" for j in range(data.p))
        fh.write(f"y,{cols}\n")
        for i in range(data.n):
            row = ",".join(f"{v:.17g}" for v in data.X[i])
            fh.write(f"{data.y[i]:.17g},{row}\n")


def read_dataset(path) -> Dataset:
    """Inverse of write_dataset; value-exact for 17-digit output."""
    with open(path) as fh:
        lines = [ln.rstrip("\n") for ln in fh]
    if not lines or not lines[0].strip():
        raise ValueError(f"{path}: empty dataset file")
    header = lines[0].split(",")
    if header[0] != "y":
        raise ValueError(f"{path}:1: expected header starting with 'y', got {header[0]!r}")
    p = len(header) - 1
    if p < 1:
        raise ValueError(f"{path}:1: no design columns in header")
    rows = []
    for lineno, ln in enumerate(lines[1:], start=2):
        if not ln.strip():
            continue
        parts = ln.split(",")
        if len(parts) != p + 1:
            raise ValueError(f"{path}:{lineno}: expected {p + 1} fields, got {len(parts)}")
        try:
            rows.append([float(v) for v in parts])
        except ValueError as exc:
            raise ValueError(f"{path}:{lineno}: {exc}") from None
    if not rows:
        raise ValueError(f"{path}: no samples")
    arr = np.asarray(rows)
    return Dataset(X=arr[:, 1:], y=arr[:, 0])


def write_truth_sidecar(path, beta_star, true_support) -> None:
    """Ground-truth coefficients plus a support flag, one row per feature."""
    beta_star = np.asarray(beta_star, dtype=float)
    flags = np.zeros(beta_star.size, dtype=int)
    if true_support is not None:
        flags[np.asarray(true_support, dtype=int)] = 1
    with open(path, "w") as fh:
        fh.write("index,beta_star,in_support\n")
        for j in range(beta_star.size):
            fh.write(f"{j},{beta_star[j]:.17g},{flags[j]}\n")


def read_truth_sidecar(path):
    with open(path) as fh:
        lines = [ln.rstrip("\n") for ln in fh]
    if not lines or lines[0] != "index,beta_star,in_support":
        raise ValueError(f"{path}: not a truth sidecar file")
    beta, flags = [], []
    for lineno, ln in enumerate(lines[1:], start=2):
        if not ln.strip():
            continue
        parts = ln.split(",")
        if len(parts) != 3:
            raise ValueError(f"{path}:{lineno}: expected 3 fields, got {len(parts)}")
        beta.append(float(parts[1]))
        flags.append(int(parts[2]))
    beta_star = np.asarray(beta)
    return beta_star, np.flatnonzero(np.asarray(flags) != 0)


def write_index_list(path, indices) -> None:
    """One sorted integer index per line."""
    indices = np.unique(np.asarray(indices, dtype=int))
    with open(path, "w") as fh:
        for i in indices:
            fh.write(f"{i}\n")


def read_index_list(path) -> np.ndarray:
    with open(path) as fh:
        vals = [ln.strip() for ln in fh if ln.strip()]
    try:
        return np.asarray([int(v) for v in vals], dtype=int)
    except ValueError as exc:
        raise ValueError(f"{path}: {exc}") from None

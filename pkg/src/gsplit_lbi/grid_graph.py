"""Voxel-grid graphs and the stacked difference operator for split regularization.

A 3-D volume with a binary mask becomes a graph: masked-in voxels are the
vertices, edges connect spatial neighbors under 6- or 26-connectivity. The
penalty operator stacks an identity block on top of a scaled graph-difference
block, so a single auxiliary vector carries voxel sparsity (first p rows) and
edge smoothness (last m rows) at the same time.

Voxel indices are dense and x-fastest: voxel (x, y, z) of a fully masked grid
gets index x + nx*(y + ny*z). Masked-out voxels are dropped and the survivors
reindexed, preserving that order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

__all__ = [
    "VoxelGrid",
    "DifferenceOperator",
    "build_grid_graph",
    "assemble_difference_operator",
    "read_mask",
    "write_mask",
    "write_operator_coo",
]

# Offsets reaching every neighbor once from each end: all 26 Chebyshev-1
# displacements, or the 6 Manhattan-1 ones.
_OFFSETS = {
    6: [(1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0), (0, 0, 1), (0, 0, -1)],
    26: [
        (dx, dy, dz)
        for dx in (-1, 0, 1)
        for dy in (-1, 0, 1)
        for dz in (-1, 0, 1)
        if (dx, dy, dz) != (0, 0, 0)
    ],
}


@dataclass(frozen=True)
class VoxelGrid:
    """Masked voxel lattice with a dense reindexing of the retained voxels."""

    dims: tuple[int, int, int]
    mask: np.ndarray        # bool, shape dims
    index_of: np.ndarray    # int,  shape dims; -1 outside the mask, else 0..p-1
    voxels: np.ndarray      # (p, 3) int; row i holds the (x, y, z) of voxel i

    @property
    def p(self) -> int:
        return self.voxels.shape[0]


def build_grid_graph(dims, mask=None, connectivity: int = 26):
    """Build the voxel graph of a masked box.

    Parameters
    ----------
    dims : (nx, ny, nz) positive ints.
    mask : optional bool array of shape ``dims``; ``None`` keeps every voxel.
    connectivity : 6 (faces only) or 26 (faces, edges and corners; default).

    Returns
    -------
    (VoxelGrid, edges) where edges is an (m, 2) int array of voxel-index
    pairs (i, j) with i < j, sorted lexicographically. Every unordered
    neighbor pair appears exactly once.
    """
    dims = tuple(int(d) for d in dims)
    if len(dims) != 3 or any(d < 1 for d in dims):
        raise ValueError(f"dims must be three positive integers, got {dims}")
    if connectivity not in _OFFSETS:
        raise ValueError(f"connectivity must be 6 or 26, got {connectivity}")
    if mask is None:
        mask = np.ones(dims, dtype=bool)
    else:
        mask = np.asarray(mask)
        if mask.shape != dims:
            raise ValueError(f"mask shape {mask.shape} does not match dims {dims}")
        mask = mask.astype(bool)
    p = int(mask.sum())
    if p == 0:
        raise ValueError("no voxels selected: the mask is empty")

    index_of = np.full(dims, -1, dtype=np.int64)
    # x-fastest enumeration of retained voxels
    xs, ys, zs = np.meshgrid(*(np.arange(d) for d in dims), indexing="ij")
    order = np.lexsort((xs.ravel(), ys.ravel(), zs.ravel()))
    flat_mask = mask.ravel()[order]
    coords = np.column_stack([xs.ravel()[order], ys.ravel()[order], zs.ravel()[order]])
    kept = coords[flat_mask]
    index_of[kept[:, 0], kept[:, 1], kept[:, 2]] = np.arange(p)
    voxels = kept.astype(np.int64)

    pairs = []
    for dx, dy, dz in _OFFSETS[connectivity]:
        src = voxels
        dst = src + np.array([dx, dy, dz])
        ok = np.all((dst >= 0) & (dst < np.array(dims)), axis=1)
        a = index_of[src[ok, 0], src[ok, 1], src[ok, 2]]
        b = index_of[dst[ok, 0], dst[ok, 1], dst[ok, 2]]
        ok2 = (b >= 0) & (a < b)     # each unordered pair survives from one end only
        if np.any(ok2):
            pairs.append(np.column_stack([a[ok2], b[ok2]]))
    if pairs:
        edges = np.concatenate(pairs, axis=0)
        edges = edges[np.lexsort((edges[:, 1], edges[:, 0]))]
    else:
        edges = np.empty((0, 2), dtype=np.int64)

    return VoxelGrid(dims=dims, mask=mask, index_of=index_of, voxels=voxels), edges


@dataclass(frozen=True)
class DifferenceOperator:
    """Stacked penalty operator: identity over voxels, scaled differences over edges.

    ``matrix`` is (p + m, p) sparse CSR. Row i < p is e_i. Row p + e for edge
    (i, j) holds +rho at column i and -rho at column j (lower index positive).
    """

    p: int
    m: int
    rho: float
    matrix: sp.csr_matrix
    edges: np.ndarray

    def apply(self, v: np.ndarray) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        if v.shape != (self.p,):
            raise ValueError(f"expected vector of length {self.p}, got shape {v.shape}")
        return self.matrix @ v

    def apply_transpose(self, w: np.ndarray) -> np.ndarray:
        w = np.asarray(w, dtype=float)
        if w.shape != (self.p + self.m,):
            raise ValueError(
                f"expected vector of length {self.p + self.m}, got shape {w.shape}"
            )
        return self.matrix.T @ w


def assemble_difference_operator(p: int, edges: np.ndarray, rho: float) -> DifferenceOperator:
    """Assemble the (p + m, p) operator [I; rho * D_graph] for the given edge list."""
    if rho < 0:
        raise ValueError(f"rho must be nonnegative, got {rho}")
    edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    m = edges.shape[0]
    if m and (edges.min() < 0 or edges.max() >= p):
        raise ValueError("edge endpoint out of range")
    eye = sp.identity(p, format="csr", dtype=float)
    if m:
        rows = np.repeat(np.arange(m), 2)
        cols = edges.reshape(-1)
        data = np.tile([rho, -rho], m).astype(float)
        diff = sp.coo_matrix((data, (rows, cols)), shape=(m, p)).tocsr()
        matrix = sp.vstack([eye, diff]).tocsr()
    else:
        matrix = eye
    return DifferenceOperator(p=p, m=m, rho=float(rho), matrix=matrix, edges=edges)


def write_mask(path, dims, mask) -> None:
    """Write a mask as a header line "nx ny nz" plus 0/1 values, x-fastest."""
    mask = np.asarray(mask, dtype=bool)
    flat = mask.transpose(2, 1, 0).reshape(-1).astype(int)  # x fastest
    with open(path, "w") as fh:
        fh.write(" ".join(str(int(d)) for d in dims) + "\n")
        nx = int(dims[0])
        for start in range(0, flat.size, nx):
            fh.write(" ".join(str(v) for v in flat[start : start + nx]) + "\n")


def read_mask(path):
    """Read a mask file; returns (dims, bool array of shape dims)."""
    with open(path) as fh:
        header = fh.readline().split()
        if len(header) != 3:
            raise ValueError(f"{path}: expected header 'nx ny nz', got {header!r}")
        try:
            dims = tuple(int(t) for t in header)
        except ValueError as exc:
            raise ValueError(f"{path}: non-integer dimension in header") from exc
        tokens = fh.read().split()
    n = dims[0] * dims[1] * dims[2]
    if len(tokens) != n:
        raise ValueError(f"{path}: expected {n} mask values, got {len(tokens)}")
    values = np.array([int(t) for t in tokens])
    if not np.isin(values, (0, 1)).all():
        raise ValueError(f"{path}: mask values must be 0 or 1")
    # stored x-fastest: unravel accordingly
    mask = values.reshape(dims[2], dims[1], dims[0]).transpose(2, 1, 0).astype(bool)
    return dims, mask


def write_operator_coo(path, op: DifferenceOperator) -> None:
    """Dump the operator as 1-based "row col value" triplets (debugging aid)."""
    coo = op.matrix.tocoo()
    order = np.lexsort((coo.col, coo.row))
    with open(path, "w") as fh:
        fh.write(f"# {op.p + op.m} x {op.p}\n")
        for r, c, v in zip(coo.row[order], coo.col[order], coo.data[order]):
            fh.write(f"{r + 1} {c + 1} {v:.17g}\n")

"""Discrete operators of a single cube element (leaf).

A leaf carries an n_c^3 tensor Chebyshev grid with the edge and corner
nodes removed (the tensor-product basis never couples them to the
interior). Points are ordered interior first, then the six faces
(-x, +x, -y, +y, -z, +z), each face enumerated lexicographically in its
two tangential indices so that neighboring leaves traverse a shared face
in the same order.

The leaf rows of the global system are the collocated PDE on the interior
nodes and the incoming-impedance operator F = N + i*eta*I on the boundary
nodes, where N is the outward-normal derivative. The outgoing-impedance
operator G = N - i*eta*I shares the stored flux matrix N; only the sign of
the i*eta diagonal differs.
"""

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.sparse as sp

from .spectral import SpectralBasis, as_cube, build_basis, laplacian_apply, sweep

FACE_NAMES = ("-x", "+x", "-y", "+y", "-z", "+z")
FACE_AXIS = (0, 0, 1, 1, 2, 2)      # normal axis of each face
FACE_SIDE = (0, 1, 0, 1, 0, 1)      # 0 = low end, 1 = high end
OPPOSITE_FACE = (1, 0, 3, 2, 5, 4)


def face_index(face) -> int:
    """Accept a face as an int 0..5 or a name like '+x'."""
    if isinstance(face, str):
        try:
            return FACE_NAMES.index(face)
        except ValueError:
            raise ValueError(f"unknown face {face!r}; use one of {FACE_NAMES}") from None
    f = int(face)
    if not 0 <= f <= 5:
        raise ValueError(f"face index out of range: {face}")
    return f


@dataclass(frozen=True)
class LeafBox:
    """Axis-aligned cube: origin plus edge length h.

    When the cube belongs to a uniform mesh, `grid` holds its integer grid
    coordinates and node positions are computed as (grid + reference_node)*h,
    which makes shared-face coordinates bitwise identical across neighbors.
    """

    origin: tuple[float, float, float]
    h: float
    grid: tuple[int, int, int] | None = None

    def axis_coords(self, axis: int, ref_nodes: np.ndarray) -> np.ndarray:
        if self.grid is not None:
            return (self.grid[axis] + ref_nodes) * self.h
        return self.origin[axis] + ref_nodes * self.h


def unit_box() -> LeafBox:
    return LeafBox(origin=(0.0, 0.0, 0.0), h=1.0, grid=(0, 0, 0))


@dataclass(frozen=True)
class LeafIndexMap:
    """Local numbering of the kept nodes of one leaf.

    local_of_grid[ix, iy, iz] is the local index of that tensor node, or -1
    for the removed edge/corner nodes. coords is (n, 3) in physical space.
    """

    n_c: int
    local_of_grid: np.ndarray        # (n_c, n_c, n_c) int, -1 where removed
    grid_of_local: np.ndarray        # (n, 3) int tensor indices per local node
    coords: np.ndarray               # (n, 3) float

    @property
    def m(self) -> int:
        return self.n_c - 2

    @property
    def n_interior(self) -> int:
        return self.m ** 3

    @property
    def n_boundary(self) -> int:
        return 6 * self.m ** 2

    @property
    def n(self) -> int:
        return self.n_interior + self.n_boundary

    def face_slice(self, face) -> slice:
        f = face_index(face)
        m2 = self.m ** 2
        start = self.n_interior + f * m2
        return slice(start, start + m2)

    def face_indices(self, face) -> np.ndarray:
        s = self.face_slice(face)
        return np.arange(s.start, s.stop)


def build_index_map(n_c: int, box: LeafBox, ref_nodes: np.ndarray) -> LeafIndexMap:
    m = n_c - 2
    li = np.full((n_c, n_c, n_c), -1, dtype=np.int64)

    a, b, c = np.meshgrid(np.arange(m), np.arange(m), np.arange(m), indexing="ij")
    li[1:-1, 1:-1, 1:-1] = a + m * b + m * m * c  # x fastest

    # tangential index pairs, first tangential axis major (lexicographic)
    t1, t2 = np.meshgrid(np.arange(1, n_c - 1), np.arange(1, n_c - 1), indexing="ij")
    p = (t1 - 1) * m + (t2 - 1)
    n_i = m ** 3
    m2 = m * m
    li[0, t1, t2] = n_i + 0 * m2 + p          # -x: tangential (y, z)
    li[n_c - 1, t1, t2] = n_i + 1 * m2 + p    # +x
    li[t1, 0, t2] = n_i + 2 * m2 + p          # -y: tangential (x, z)
    li[t1, n_c - 1, t2] = n_i + 3 * m2 + p    # +y
    li[t1, t2, 0] = n_i + 4 * m2 + p          # -z: tangential (x, y)
    li[t1, t2, n_c - 1] = n_i + 5 * m2 + p    # +z

    n = n_i + 6 * m2
    grid_of_local = np.empty((n, 3), dtype=np.int64)
    kept = np.argwhere(li >= 0)
    grid_of_local[li[kept[:, 0], kept[:, 1], kept[:, 2]]] = kept

    coords = np.empty((n, 3))
    for axis in range(3):
        coords[:, axis] = box.axis_coords(axis, ref_nodes)[grid_of_local[:, axis]]

    return LeafIndexMap(n_c=n_c, local_of_grid=li, grid_of_local=grid_of_local,
                        coords=coords)


def _flux_matrix(basis: SpectralBasis, imap: LeafIndexMap) -> sp.csr_matrix:
    """Outward-normal derivative rows N (n_b x n) for all six faces."""
    n_c = basis.n_c
    m = basis.m
    li = imap.local_of_grid
    rows, cols, vals = [], [], []
    t1, t2 = np.meshgrid(np.arange(1, n_c - 1), np.arange(1, n_c - 1), indexing="ij")
    t1 = t1.ravel()
    t2 = t2.ravel()
    for f in range(6):
        axis, side = FACE_AXIS[f], FACE_SIDE[f]
        edge = 0 if side == 0 else n_c - 1
        sign = -1.0 if side == 0 else 1.0
        drow = sign * basis.D1[edge, :]                      # (n_c,)
        face_rows = imap.face_indices(f)                     # (m^2,) lexicographic
        j = np.arange(n_c)
        if axis == 0:
            col_grid = li[j[None, :], t1[:, None], t2[:, None]]
        elif axis == 1:
            col_grid = li[t1[:, None], j[None, :], t2[:, None]]
        else:
            col_grid = li[t1[:, None], t2[:, None], j[None, :]]
        rows.append(np.repeat(face_rows, n_c))
        cols.append(col_grid.ravel())
        vals.append(np.tile(drow, m * m))
    N = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows) - imap.n_interior,
                                np.concatenate(cols))),
        shape=(imap.n_boundary, imap.n),
    )
    return N.tocsr()


def _interior_boundary_coupling(basis: SpectralBasis, imap: LeafIndexMap) -> sp.csr_matrix:
    """A_ib: interior PDE rows restricted to boundary columns (n_i x n_b)."""
    m = basis.m
    n_i = imap.n_interior
    a, b, c = np.meshgrid(np.arange(m), np.arange(m), np.arange(m), indexing="ij")
    a, b, c = a.ravel(), b.ravel(), c.ravel()
    row = a + m * b + m * m * c
    m2 = m * m
    # face-local position of the boundary node each interior node couples to,
    # per axis: x faces pair (y, z), y faces (x, z), z faces (x, y)
    p_x = b * m + c
    p_y = a * m + c
    p_z = a * m + b
    B1 = basis.B1
    cols = np.concatenate([
        0 * m2 + p_x, 1 * m2 + p_x,
        2 * m2 + p_y, 3 * m2 + p_y,
        4 * m2 + p_z, 5 * m2 + p_z,
    ])
    vals = np.concatenate([
        -B1[a, 0], -B1[a, 1],
        -B1[b, 0], -B1[b, 1],
        -B1[c, 0], -B1[c, 1],
    ])
    rows = np.tile(row, 6)
    A_ib = sp.coo_matrix((vals, (rows, cols)), shape=(n_i, imap.n_boundary))
    return A_ib.tocsr()


@dataclass
class LeafOperator:
    """All discrete blocks of one leaf, ready for matrix-free application."""

    basis: SpectralBasis
    box: LeafBox
    map: LeafIndexMap
    kappa: float
    eta: complex
    C_diag: np.ndarray               # (n,) kappa^2 (1 - b(x_k))
    N: sp.csr_matrix                 # (n_b, n) flux rows, all faces
    A_ib: sp.csr_matrix              # (n_i, n_b)
    F_bi: sp.csr_matrix              # (n_b, n_i)
    F_bb: sp.csr_matrix              # (n_b, n_b)
    N_face: list = field(default_factory=list)   # per-face row slices of N
    index: int = -1                  # position in the mesh, -1 if standalone

    @property
    def n_interior(self) -> int:
        return self.map.n_interior

    @property
    def n_boundary(self) -> int:
        return self.map.n_boundary

    @property
    def n(self) -> int:
        return self.map.n

    @property
    def C_ii(self) -> np.ndarray:
        return self.C_diag[: self.n_interior]

    def g_face_matrix(self, face) -> sp.csr_matrix:
        """Dense-assembly helper: explicit G rows for one face, (m^2, n)."""
        f = face_index(face)
        G = self.N_face[f].tolil(copy=True)
        for r, gcol in enumerate(self.map.face_indices(f)):
            G[r, gcol] -= 1j * self.eta
        return G.tocsr()


def build_leaf(box: LeafBox, n_c: int, kappa: float, eta: complex,
               b_eval: Callable, *, basis: SpectralBasis | None = None,
               index: int = -1) -> LeafOperator:
    """Assemble the discrete blocks of one leaf.

    b_eval(x, y, z) is the scattering potential, vectorized over numpy
    arrays. eta is the impedance parameter (kappa in practice).
    """
    if basis is None:
        basis = build_basis(n_c, box.h)
    imap = build_index_map(n_c, box, basis.ref_nodes)
    x, y, z = imap.coords.T
    b_vals = np.asarray(b_eval(x, y, z), dtype=complex)
    C_diag = kappa ** 2 * (1.0 - b_vals)
    N = _flux_matrix(basis, imap)
    A_ib = _interior_boundary_coupling(basis, imap)
    n_i = imap.n_interior
    F_bi = N[:, :n_i].tocsr()
    F_bb = (N[:, n_i:] + 1j * eta * sp.identity(imap.n_boundary)).tocsr()
    m2 = basis.m ** 2
    N_face = [N[f * m2:(f + 1) * m2, :].tocsr() for f in range(6)]
    return LeafOperator(basis=basis, box=box, map=imap, kappa=kappa,
                        eta=complex(eta), C_diag=C_diag, N=N, A_ib=A_ib,
                        F_bi=F_bi, F_bb=F_bb, N_face=N_face, index=index)


def apply_interior(leaf: LeafOperator, v_i: np.ndarray) -> np.ndarray:
    """A_ii @ v_i via the three one-axis sweeps; never forms A_ii."""
    n_i = leaf.n_interior
    if v_i.shape != (n_i,):
        raise ValueError(f"expected interior vector of length {n_i}, got {v_i.shape}")
    m = leaf.basis.m
    U = as_cube(v_i, m)
    w = -laplacian_apply(leaf.basis.L1, U).reshape(-1)
    return w - leaf.C_ii * v_i


def apply_leaf(leaf: LeafOperator, v: np.ndarray) -> np.ndarray:
    """Self-interaction block: interior PDE rows over F impedance rows."""
    n_i, n = leaf.n_interior, leaf.n
    if v.shape != (n,):
        raise ValueError(f"expected leaf vector of length {n}, got {v.shape}")
    v_i, v_b = v[:n_i], v[n_i:]
    w = np.empty(n, dtype=complex)
    w[:n_i] = apply_interior(leaf, v_i)
    w[:n_i] += leaf.A_ib @ v_b
    w[n_i:] = leaf.F_bi @ v_i
    w[n_i:] += leaf.F_bb @ v_b
    return w


def extract_outgoing(leaf: LeafOperator, face, v: np.ndarray) -> np.ndarray:
    """Outgoing impedance G(I_f, :) @ v on one face (leaf-local normal)."""
    f = face_index(face)
    if v.shape != (leaf.n,):
        raise ValueError(f"expected leaf vector of length {leaf.n}, got {v.shape}")
    return leaf.N_face[f] @ v - 1j * leaf.eta * v[leaf.map.face_slice(f)]


def interior_flop_proxy(n_c: int) -> int:
    """Complex multiply-add count of one apply_interior call."""
    m = n_c - 2
    return 3 * m ** 4 + 4 * m ** 3

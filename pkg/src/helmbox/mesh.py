"""Uniform leaf mesh of the unit cube, global layout and matrix-free operator.

The global unknown vector concatenates one block per leaf, each block
ordered [interior; boundary]. Leaves are ordered lexicographically by
their (x, y, z) grid index. Interface nodes are duplicated: each leaf owns
its own copy of every face.

The global operator applies each leaf's self-interaction block and then,
for every interior face, adds the neighbor's outgoing impedance to the
face's incoming-impedance rows: F_tau v_tau + G_tau' v_tau' = 0 realizes
the continuity requirement f_tau = -g_tau' (the two leaves' outward
normals are opposite).
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import ConfigError
from .leaf import (LeafBox, LeafOperator, OPPOSITE_FACE, apply_leaf,
                   build_leaf, extract_outgoing)
from .spectral import SpectralBasis, build_basis

BOUNDARY = -1


@dataclass(frozen=True)
class MeshTopology:
    """L x L x L uniform partition of (0,1)^3 with a face-neighbor table.

    neighbors[tau, f] is the adjacent leaf across face f, or BOUNDARY when
    the face lies on the domain boundary; the mirror face is always
    OPPOSITE_FACE[f].
    """

    L: int
    boxes: tuple
    neighbors: np.ndarray            # (N_leaves, 6) int

    @property
    def h(self) -> float:
        return 1.0 / self.L

    @property
    def n_leaves(self) -> int:
        return self.L ** 3

    def leaf_id(self, gx: int, gy: int, gz: int) -> int:
        L = self.L
        return (gx * L + gy) * L + gz

    def grid_of(self, tau: int) -> tuple[int, int, int]:
        L = self.L
        return (tau // (L * L), (tau // L) % L, tau % L)


def build_mesh(L: int) -> MeshTopology:
    """Build the uniform L^3 leaf mesh of the unit cube."""
    if L < 1:
        raise ConfigError(f"leaves per side must be >= 1 (got {L})")
    h = 1.0 / L
    boxes = []
    neighbors = np.full((L ** 3, 6), BOUNDARY, dtype=np.int64)
    tau = 0
    for gx in range(L):
        for gy in range(L):
            for gz in range(L):
                boxes.append(LeafBox(origin=(gx * h, gy * h, gz * h), h=h,
                                     grid=(gx, gy, gz)))
                g = (gx, gy, gz)
                for f, (axis, step) in enumerate(((0, -1), (0, +1), (1, -1),
                                                  (1, +1), (2, -1), (2, +1))):
                    gn = list(g)
                    gn[axis] += step
                    if 0 <= gn[axis] < L:
                        neighbors[tau, f] = (gn[0] * L + gn[1]) * L + gn[2]
                tau += 1
    return MeshTopology(L=L, boxes=tuple(boxes), neighbors=neighbors)


def build_leaves(mesh: MeshTopology, n_c: int, kappa: float, eta: complex,
                 b_eval: Callable, *, basis: SpectralBasis | None = None
                 ) -> list[LeafOperator]:
    """Build one LeafOperator per mesh box, sharing a single basis."""
    if basis is None:
        basis = build_basis(n_c, mesh.h)
    return [build_leaf(box, n_c, kappa, eta, b_eval, basis=basis, index=tau)
            for tau, box in enumerate(mesh.boxes)]


@dataclass(frozen=True)
class ProblemSpec:
    """Continuous problem data: wave number, potential, source and boundary
    impedance data, plus an optional exact solution for error reporting."""

    kappa: float
    b_eval: Callable                          # b(x, y, z)
    s_eval: Callable                          # s(x, y, z)
    t_eval: Callable                          # t(x, y, z, normal_axis, side)
    eta: complex = None                       # defaults to kappa
    u_exact: Callable | None = None           # u(x, y, z)

    def __post_init__(self):
        eta = self.kappa if self.eta is None else self.eta
        if complex(eta).real == 0.0:
            raise ConfigError("impedance parameter eta must have nonzero real part")
        object.__setattr__(self, "eta", complex(eta))


def global_size(mesh: MeshTopology, leaves: Sequence[LeafOperator]) -> int:
    return mesh.n_leaves * leaves[0].n


def leaf_block(leaves: Sequence[LeafOperator], tau: int) -> slice:
    n = leaves[0].n
    return slice(tau * n, (tau + 1) * n)


def assemble_rhs(spec: ProblemSpec, mesh: MeshTopology,
                 leaves: Sequence[LeafOperator]) -> np.ndarray:
    """Right-hand side: source on interior nodes, impedance data t on faces
    lying on the domain boundary, zero on interior shared faces."""
    n = leaves[0].n
    n_i = leaves[0].n_interior
    rhs = np.zeros(mesh.n_leaves * n, dtype=complex)
    for tau, leaf in enumerate(leaves):
        blk = rhs[tau * n:(tau + 1) * n]
        x, y, z = leaf.map.coords[:n_i].T
        blk[:n_i] = spec.s_eval(x, y, z)
        for f in range(6):
            if mesh.neighbors[tau, f] != BOUNDARY:
                continue
            sl = leaf.map.face_slice(f)
            x, y, z = leaf.map.coords[sl].T
            blk[sl] = spec.t_eval(x, y, z, f // 2, -1 if f % 2 == 0 else +1)
    return rhs


def _leaf_output(tau, mesh, leaves, v, out):
    n = leaves[0].n
    n_i = leaves[0].n_interior
    leaf = leaves[tau]
    w = apply_leaf(leaf, v[tau * n:(tau + 1) * n])
    for f in range(6):
        nb = mesh.neighbors[tau, f]
        if nb == BOUNDARY:
            continue
        g = extract_outgoing(leaves[nb], OPPOSITE_FACE[f],
                             v[nb * n:(nb + 1) * n])
        sl = leaf.map.face_slice(f)
        w[sl.start:sl.stop] += g
    out[tau * n:(tau + 1) * n] = w


def apply_global(mesh: MeshTopology, leaves: Sequence[LeafOperator],
                 v: np.ndarray, *, pool: ThreadPoolExecutor | None = None
                 ) -> np.ndarray:
    """Matrix-free application of the global operator A.

    Each leaf's output block depends only on its own input block and its
    face neighbors' blocks, so leaves are processed independently (in the
    supplied thread pool, when given) with disjoint writes.
    """
    N = global_size(mesh, leaves)
    if v.shape != (N,):
        raise ValueError(f"expected global vector of length {N}, got {v.shape}")
    out = np.empty(N, dtype=complex)
    taus = range(mesh.n_leaves)
    if pool is None:
        for tau in taus:
            _leaf_output(tau, mesh, leaves, v, out)
    else:
        list(pool.map(lambda t: _leaf_output(t, mesh, leaves, v, out), taus))
    return out

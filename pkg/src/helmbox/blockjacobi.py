"""Global block-Jacobi preconditioner: exact per-leaf inverses.

Each application inverts every leaf's self-interaction block through the
2x2 block solve

    u_b = S^-1 (v_b - F_bi A_ii^-1 v_i)
    u_i = A_ii^-1 (v_i - A_ib u_b)

with both inverses realized by the nested homogenization-preconditioned
iterative solves. Leaves are fully independent, so the loop parallelizes
with disjoint writes and thread-count-independent results.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .leafprec import LeafPreconditioner, solve_interior, solve_schur
from .mesh import MeshTopology


@dataclass
class ApplicationStats:
    """Per-leaf iteration counts of one preconditioner application.

    interior_its counts the two top-level interior solves, schur_its the
    outer Schur iterations; interior solves nested inside Schur operator
    applications are tallied separately in schur_interior_its.
    """

    interior_its: np.ndarray
    schur_its: np.ndarray
    schur_interior_its: np.ndarray

    @property
    def named_solve_its(self) -> np.ndarray:
        return self.interior_its + self.schur_its

    def totals(self) -> dict:
        return {
            "interior": int(self.interior_its.sum()),
            "schur": int(self.schur_its.sum()),
            "schur_interior": int(self.schur_interior_its.sum()),
        }


@dataclass
class BlockJacobi:
    """One LeafPreconditioner per leaf plus iteration statistics."""

    mesh: MeshTopology
    precs: Sequence[LeafPreconditioner]
    applications: list = field(default_factory=list)

    def __post_init__(self):
        if len(self.precs) != self.mesh.n_leaves:
            raise ValueError(
                f"need one preconditioner per leaf: got {len(self.precs)} "
                f"for {self.mesh.n_leaves} leaves")

    @property
    def n(self) -> int:
        return self.precs[0].leaf.n

    def total_inner_iterations(self) -> dict:
        out = {"interior": 0, "schur": 0, "schur_interior": 0}
        for st in self.applications:
            for k, v in st.totals().items():
                out[k] += v
        return out

    def reset_stats(self):
        self.applications.clear()


def _invert_leaf_block(pc: LeafPreconditioner, v: np.ndarray, out: np.ndarray):
    leaf = pc.leaf
    n_i = leaf.n_interior
    v_i, v_b = v[:n_i], v[n_i:]
    f_i, it1 = solve_interior(pc, v_i)
    g_b, schur_its, nested = solve_schur(pc, v_b - leaf.F_bi @ f_i)
    corr, it2 = solve_interior(pc, leaf.A_ib @ g_b)
    out[:n_i] = f_i - corr
    out[n_i:] = g_b
    return it1 + it2, schur_its, nested


def apply_block_jacobi(J: BlockJacobi, v: np.ndarray, *,
                       pool: ThreadPoolExecutor | None = None) -> np.ndarray:
    """w = J^-1 v, leaf by leaf; records per-leaf iteration counts."""
    n = J.n
    N = J.mesh.n_leaves * n
    if v.shape != (N,):
        raise ValueError(f"expected global vector of length {N}, got {v.shape}")
    out = np.empty(N, dtype=complex)
    n_leaves = J.mesh.n_leaves
    stats = ApplicationStats(
        interior_its=np.zeros(n_leaves, dtype=np.int64),
        schur_its=np.zeros(n_leaves, dtype=np.int64),
        schur_interior_its=np.zeros(n_leaves, dtype=np.int64))

    def run(tau):
        counts = _invert_leaf_block(J.precs[tau], v[tau * n:(tau + 1) * n],
                                    out[tau * n:(tau + 1) * n])
        (stats.interior_its[tau], stats.schur_its[tau],
         stats.schur_interior_its[tau]) = counts

    if pool is None:
        for tau in range(n_leaves):
            run(tau)
    else:
        list(pool.map(run, range(n_leaves)))
    J.applications.append(stats)
    return out

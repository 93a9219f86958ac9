"""Per-leaf solves behind the block-Jacobi preconditioner.

The interior block A_ii differs from a constant-coefficient operator only
through its diagonal. Replacing the diagonal by the scalar shift
lambda = (max + min)/2 of diag(C_ii) gives a homogenized operator that
fast diagonalization inverts exactly: with L1 = V E V^-1, the shifted 3D
Kronecker sum diagonalizes in the tensor basis V x V x V, so applying the
inverse is six one-axis sweeps around a diagonal scaling.

That exact inverse preconditions an inner GMRES solve of A_ii (which then
converges in one iteration when the potential is constant), and the same
homogenized inverse defines a dense Schur complement surrogate
S_tilde = F_bb - F_bi A_tilde^-1 A_ib that is factorized once and
preconditions the iterative Schur solve.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import NoConvergenceError, ResonanceError, SingularSchurError
from .krylov import gmres_cycles
from .leaf import LeafOperator
from .spectral import EigFactor, sweep

RESONANCE_FLOOR = 1e-10
SCHUR_PIVOT_FLOOR = 1e-14


def homogenization_shift(C_ii: np.ndarray) -> complex:
    """Midrange of the interior diagonal; real parts set the range, the
    imaginary part is averaged (only matters for complex potentials)."""
    re = C_ii.real
    lam = 0.5 * (re.max() + re.min())
    im = C_ii.imag
    if np.any(im):
        lam = lam + 1j * im.mean()
    return complex(lam)


@dataclass
class LeafPreconditioner:
    """Factorized local solves for one leaf.

    Only the LU factors of the homogenized Schur complement are kept (the
    dense matrix itself is redundant once factorized; schur_surrogate
    rebuilds it when a test needs the explicit matrix).
    """

    leaf: LeafOperator
    eig: EigFactor
    lam: complex
    diag_inv: np.ndarray             # (m, m, m) 1/(-e_i - e_j - e_k - lam)
    shift: np.ndarray                # (n_i,) lam - C_ii, the A = A_tilde + shift split
    S_tilde_lu: tuple                # lu_factor output for S_tilde
    inner_tol_interior: float = 1e-10
    inner_tol_schur: float = 1e-10
    inner_maxit: int = 200


def _fast_diag_apply(pc: LeafPreconditioner, X: np.ndarray) -> np.ndarray:
    """A_tilde^-1 applied to one interior vector or an (n_i, k) batch."""
    m = pc.leaf.basis.m
    batch = X.ndim == 2
    cube = X.reshape(m, m, m, -1) if batch else X.reshape(m, m, m)
    Vi, V = pc.eig.Vinv, pc.eig.V
    for axis in range(3):
        cube = sweep(Vi, cube, axis)
    cube = cube * (pc.diag_inv[..., None] if batch else pc.diag_inv)
    for axis in range(3):
        cube = sweep(V, cube, axis)
    return cube.reshape(X.shape)


def homogenize(leaf: LeafOperator, eig: EigFactor, *,
               inner_tol_interior: float = 1e-10,
               inner_tol_schur: float = 1e-10,
               inner_maxit: int = 200) -> LeafPreconditioner:
    """Build the homogenized inverse and the factorized Schur surrogate."""
    lam = homogenization_shift(leaf.C_ii)
    E = eig.E
    denom = -(E[:, None, None] + E[None, :, None] + E[None, None, :]) - lam
    floor = RESONANCE_FLOOR * max(1.0, abs(lam))
    gap = np.abs(denom).min()
    if gap < floor:
        raise ResonanceError(
            f"homogenized interior operator numerically singular on leaf "
            f"{leaf.index}: min |spectrum| = {gap:.3e} < {floor:.3e}")
    pc = LeafPreconditioner(
        leaf=leaf, eig=eig, lam=lam, diag_inv=1.0 / denom,
        shift=lam - leaf.C_ii, S_tilde_lu=None,
        inner_tol_interior=inner_tol_interior,
        inner_tol_schur=inner_tol_schur, inner_maxit=inner_maxit)

    S = schur_surrogate(pc)
    scale = np.abs(S).max()
    lu, piv = scipy.linalg.lu_factor(S, overwrite_a=True, check_finite=False)
    pivots = np.abs(np.diag(lu))
    floor_s = SCHUR_PIVOT_FLOOR * scale
    if pivots.min() < floor_s:
        raise SingularSchurError(
            f"homogenized Schur complement nearly singular on leaf "
            f"{leaf.index}: pivot {pivots.min():.3e} < {floor_s:.3e}")
    pc.S_tilde_lu = (lu, piv)
    return pc


def schur_surrogate(pc: LeafPreconditioner) -> np.ndarray:
    """Dense S_tilde = F_bb - F_bi A_tilde^-1 A_ib (one batched inverse)."""
    leaf = pc.leaf
    X = _fast_diag_apply(pc, leaf.A_ib.toarray().astype(complex))
    return leaf.F_bb.toarray().astype(complex) - leaf.F_bi @ X


def apply_homogenized_inverse(pc: LeafPreconditioner, v: np.ndarray) -> np.ndarray:
    """A_tilde^-1 @ v for one interior vector (six sweeps + diagonal)."""
    n_i = pc.leaf.n_interior
    if v.shape != (n_i,):
        raise ValueError(f"expected interior vector of length {n_i}, got {v.shape}")
    return _fast_diag_apply(pc, np.asarray(v, dtype=complex))


def solve_interior(pc: LeafPreconditioner, rhs: np.ndarray,
                   *, rtol: float | None = None) -> tuple[np.ndarray, int]:
    """Solve A_ii w = rhs by GMRES preconditioned with A_tilde^-1.

    Uses the exact split A_ii = A_tilde + diag(lam - C_ii), so the
    preconditioned operator is v -> v + A_tilde^-1((lam - C_ii) v).
    Returns (w, iterations).
    """
    rhs = np.asarray(rhs, dtype=complex)
    if not rhs.any():
        return np.zeros_like(rhs), 0
    if rtol is None:
        rtol = pc.inner_tol_interior
    neg_shift = -pc.shift

    def op(v):
        return v - _fast_diag_apply(pc, neg_shift * v)

    b = _fast_diag_apply(pc, rhs)
    x, its, converged, _, final = gmres_cycles(
        op, b, rtol=rtol, maxit=pc.inner_maxit)
    if not converged:
        raise NoConvergenceError(
            f"interior solve stalled on leaf {pc.leaf.index}: reached "
            f"{final:.3e} after {its} iterations (target {rtol:.1e})",
            achieved=final, iterations=its, leaf=pc.leaf.index)
    return x, its


def apply_schur(pc: LeafPreconditioner, v: np.ndarray) -> tuple[np.ndarray, int]:
    """S @ v = F_bb v - F_bi A_ii^-1 A_ib v; the interior inverse is the
    preconditioned iterative solve. Returns (Sv, interior_iterations)."""
    leaf = pc.leaf
    t, its = solve_interior(pc, leaf.A_ib @ v)
    return leaf.F_bb @ v - leaf.F_bi @ t, its


def solve_schur(pc: LeafPreconditioner, rhs_b: np.ndarray,
                *, rtol: float | None = None) -> tuple[np.ndarray, int, int]:
    """Solve S w = rhs_b by GMRES preconditioned with the factorized
    S_tilde. Returns (w, outer_iterations, nested_interior_iterations)."""
    rhs_b = np.asarray(rhs_b, dtype=complex)
    if not rhs_b.any():
        return np.zeros_like(rhs_b), 0, 0
    if rtol is None:
        rtol = pc.inner_tol_schur
    inner_total = 0

    def op(v):
        nonlocal inner_total
        sv, its = apply_schur(pc, v)
        inner_total += its
        return scipy.linalg.lu_solve(pc.S_tilde_lu, sv, check_finite=False)

    b = scipy.linalg.lu_solve(pc.S_tilde_lu, rhs_b, check_finite=False)
    x, its, converged, _, final = gmres_cycles(
        op, b, rtol=rtol, maxit=pc.inner_maxit)
    if not converged:
        raise NoConvergenceError(
            f"Schur solve stalled on leaf {pc.leaf.index}: reached "
            f"{final:.3e} after {its} iterations (target {rtol:.1e})",
            achieved=final, iterations=its, leaf=pc.leaf.index)
    return x, its, inner_total

"""Restarted GMRES with left preconditioning, plus a flexible variant.

The standard mode runs Arnoldi on the left-preconditioned operator P*A with
modified Gram-Schmidt and Givens-rotation least squares, monitoring the
preconditioned residual ||P(b - A x_k)||. The flexible mode is
right-preconditioned FGMRES (the preconditioned basis vectors are stored),
which stays exact when the preconditioner varies between applications;
there the recurrence monitors the unpreconditioned residual.
"""

import time
from dataclasses import dataclass, field

import numpy as np

_BREAKDOWN_REL = 1e-14


@dataclass
class KrylovConfig:
    """Outer-solver knobs. rel_reduction is the target residual reduction."""

    restart: int = 200
    max_iterations: int = 5000
    rel_reduction: float = 1e-8
    flexible: bool = False
    record_history: bool = True

    def __post_init__(self):
        if self.restart < 1:
            raise ValueError("restart must be >= 1")
        if not 0.0 < self.rel_reduction < 1.0:
            raise ValueError("rel_reduction must lie in (0, 1)")


@dataclass
class SolveReport:
    converged: bool
    iterations: int
    achieved_reduction: float
    residual_history: list = field(default_factory=list)  # r_k / r_0
    wall_time: float = 0.0
    true_residual: float | None = None      # ||b - A x|| at exit
    breakdown: bool = False
    monitored: str = "preconditioned"
    inner_iterations: dict = field(default_factory=dict)


def _vdot(x, y):
    return np.vdot(x, y)


def _norm(x):
    return np.linalg.norm(x)


def _givens(a, b):
    r = np.hypot(abs(a), abs(b))
    if r == 0.0:
        return 1.0 + 0.0j, 0.0 + 0.0j
    return a / r, b / r


def gmres_cycles(op, b, *, x0=None, rtol=1e-10, maxit=200, restart=None,
                 collect_basis=None, history=None, vdot=None, r0_norm=None):
    """Run restarted GMRES on op(x) = b.

    op is the full (already preconditioned, for left preconditioning)
    operator. collect_basis, when given, is a callable v -> z whose outputs
    are stored and used for the solution update instead of the Krylov basis
    (FGMRES); op is then applied to z. Returns
    (x, iterations, converged, breakdown, final_estimate).
    """
    if vdot is None:
        vdot = _vdot
    n = b.shape[0]
    if restart is None:
        restart = maxit
    x = np.zeros(n, dtype=complex) if x0 is None else x0.astype(complex, copy=True)

    if x0 is None:
        r = b.astype(complex, copy=True)
    else:
        r = b - op(x)
    beta = _norm(r)
    if r0_norm is None:
        r0_norm = beta
    if r0_norm == 0.0:
        return x, 0, True, False, 0.0
    target = rtol * r0_norm

    total_it = 0
    est = beta
    while True:
        if beta <= target or total_it >= maxit:
            return x, total_it, beta <= target, False, beta / r0_norm
        k = min(restart, maxit - total_it)
        V = np.empty((k + 1, n), dtype=complex)
        Z = np.empty((k, n), dtype=complex) if collect_basis is not None else None
        H = np.zeros((k + 1, k), dtype=complex)
        cs = np.empty(k, dtype=complex)
        sn = np.empty(k, dtype=complex)
        g = np.zeros(k + 1, dtype=complex)
        V[0] = r / beta
        g[0] = beta
        breakdown = False
        j = 0
        while j < k:
            if collect_basis is not None:
                Z[j] = collect_basis(V[j])
                w = op(Z[j])
            else:
                w = op(V[j])
            norm_before = _norm(w)
            for i in range(j + 1):
                H[i, j] = vdot(V[i], w)
                w -= H[i, j] * V[i]
            wnorm = _norm(w)
            if wnorm < norm_before / np.sqrt(2.0):
                # lost orthogonality; one more modified Gram-Schmidt pass
                for i in range(j + 1):
                    corr = vdot(V[i], w)
                    H[i, j] += corr
                    w -= corr * V[i]
                wnorm = _norm(w)
            H[j + 1, j] = wnorm
            happy = wnorm <= _BREAKDOWN_REL * max(norm_before, 1e-300)
            if not happy:
                V[j + 1] = w / wnorm
            # previously accumulated rotations
            for i in range(j):
                t = H[i, j]
                H[i, j] = np.conj(cs[i]) * t + np.conj(sn[i]) * H[i + 1, j]
                H[i + 1, j] = -sn[i] * t + cs[i] * H[i + 1, j]
            cs[j], sn[j] = _givens(H[j, j], H[j + 1, j])
            H[j, j] = np.conj(cs[j]) * H[j, j] + np.conj(sn[j]) * H[j + 1, j]
            H[j + 1, j] = 0.0
            g[j + 1] = -sn[j] * g[j]
            g[j] = np.conj(cs[j]) * g[j]
            est = abs(g[j + 1])
            total_it += 1
            if history is not None:
                history.append(est / r0_norm)
            j += 1
            if happy or est <= target or total_it >= maxit:
                breakdown = happy
                break
        # solve the small triangular system and update x
        y = np.zeros(j, dtype=complex)
        for i in range(j - 1, -1, -1):
            y[i] = (g[i] - H[i, i + 1:j] @ y[i + 1:j]) / H[i, i]
        if collect_basis is not None:
            x += Z[:j].T @ y
        else:
            x += V[:j].T @ y
        if breakdown:
            return x, total_it, True, True, est / r0_norm
        if est <= target or total_it >= maxit:
            # recompute before declaring victory; estimate can drift
            r = b - op(x)
            beta = _norm(r)
            return x, total_it, beta <= target * (1 + 1e-9) or est <= target, \
                False, beta / r0_norm
        r = b - op(x)
        beta = _norm(r)


def gmres_solve(apply_A, apply_P, b, x0=None, cfg: KrylovConfig | None = None,
                *, vdot=None):
    """Solve A x = b with preconditioner P (approximating A^-1).

    Standard mode: left-preconditioned, stopping on
    ||P(b - A x_k)|| <= rel_reduction * ||P(b - A x_0)||.
    Flexible mode: FGMRES, stopping on the same reduction of the
    unpreconditioned residual.
    """
    if cfg is None:
        cfg = KrylovConfig()
    if apply_P is None:
        apply_P = lambda v: v
    history = [] if cfg.record_history else None
    t0 = time.perf_counter()

    if not cfg.flexible:
        op = lambda v: apply_P(apply_A(v))
        pb = apply_P(b)
        x, its, converged, breakdown, final = gmres_cycles(
            op, pb, x0=x0, rtol=cfg.rel_reduction, maxit=cfg.max_iterations,
            restart=cfg.restart, history=history, vdot=vdot)
        monitored = "preconditioned"
    else:
        x, its, converged, breakdown, final = gmres_cycles(
            apply_A, b, x0=x0, rtol=cfg.rel_reduction,
            maxit=cfg.max_iterations, restart=cfg.restart,
            collect_basis=apply_P, history=history, vdot=vdot)
        monitored = "true"

    wall = time.perf_counter() - t0
    true_res = float(_norm(b - apply_A(x)))
    report = SolveReport(
        converged=bool(converged),
        iterations=its,
        achieved_reduction=float(final),
        residual_history=history if history is not None else [],
        wall_time=wall,
        true_residual=true_res,
        breakdown=breakdown,
        monitored=monitored,
    )
    return x, report


def rprr_tolerance(expected_digits: int) -> float:
    """Residual reduction that realizes all digits the discretization can
    deliver: two digits tighter than the expected accuracy."""
    if expected_digits < 1:
        raise ValueError("expected_digits must be >= 1")
    return 10.0 ** (-(expected_digits + 2))

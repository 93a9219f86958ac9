"""Manufactured problems, the scattering potential, and error metrics.

Two closed-form solutions drive the accuracy experiments: a modulated
plane wave travelling along (1,1,1), which is separable, and a
non-separable grid of bumps modulated by a log factor. Their gradients
and Laplacians are hand-derived here and validated against finite
differences in the test suite before any solver test relies on them.
"""

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .mesh import ProblemSpec

PROBLEM_KINDS = ("plane", "bumps", "scatter")


def gaussian_bump(x, y, z):
    """Scattering potential used in the global experiments: a Gaussian
    bump of amplitude -1.5 centered in the unit cube."""
    return -1.5 * np.exp(-160.0 * ((x - 0.5) ** 2 + (y - 0.5) ** 2 + (z - 0.5) ** 2))


def corner_bump(x, y, z):
    """Variant with amplitude +1.5 centered at the origin (used by the
    single-leaf interior-solve benchmark)."""
    return 1.5 * np.exp(-160.0 * (x ** 2 + y ** 2 + z ** 2))


def kappa_for_ppw(ppw: float, L: int, n_c: int) -> float:
    """Wave number giving `ppw` points per wavelength, counting the
    L*(n_c - 2) distinct non-edge nodes along an axis."""
    if ppw <= 0:
        raise ValueError("ppw must be positive")
    return 2.0 * np.pi * L * (n_c - 2) / ppw


def ppw_for_kappa(kappa: float, L: int, n_c: int) -> float:
    """Inverse of kappa_for_ppw."""
    return 2.0 * np.pi * L * (n_c - 2) / kappa


@dataclass(frozen=True)
class ManufacturedProblem:
    """A problem instance with (optionally) closed-form solution data.

    u, grad_u and lap_u are None for the scatter source problem; s and t
    are always defined. t(x, y, z, axis, side) evaluates the impedance
    data for the outward normal `side`*e_axis.
    """

    kind: str
    kappa: float
    eta: complex
    b: Callable
    s: Callable
    t: Callable
    u: Callable | None = None
    grad_u: Callable | None = None
    lap_u: Callable | None = None

    def spec(self) -> ProblemSpec:
        return ProblemSpec(kappa=self.kappa, eta=self.eta, b_eval=self.b,
                           s_eval=self.s, t_eval=self.t, u_exact=self.u)


def _plane_fields(kappa: float):
    k = kappa

    def P(x):
        return np.exp((1.0 + 1j * k) * x)

    def Q(y):
        return np.exp(1j * k * y) * np.cosh(y)

    def dQ(y):
        return np.exp(1j * k * y) * (1j * k * np.cosh(y) + np.sinh(y))

    def d2Q(y):
        return np.exp(1j * k * y) * ((1.0 - k * k) * np.cosh(y)
                                     + 2j * k * np.sinh(y))

    def R(z):
        return np.exp(1j * k * z) * (z + 1.0) ** 2

    def dR(z):
        return np.exp(1j * k * z) * (1j * k * (z + 1.0) ** 2 + 2.0 * (z + 1.0))

    def d2R(z):
        return np.exp(1j * k * z) * (-k * k * (z + 1.0) ** 2
                                     + 4j * k * (z + 1.0) + 2.0)

    def u(x, y, z):
        return P(x) * Q(y) * R(z)

    def grad(x, y, z):
        return ((1.0 + 1j * k) * P(x) * Q(y) * R(z),
                P(x) * dQ(y) * R(z),
                P(x) * Q(y) * dR(z))

    def lap(x, y, z):
        return ((1.0 + 1j * k) ** 2 * P(x) * Q(y) * R(z)
                + P(x) * d2Q(y) * R(z)
                + P(x) * Q(y) * d2R(z))

    return u, grad, lap


def _bumps_fields(kappa: float):
    k = kappa

    def w(t):
        return 1.0 + np.exp(1j * k * t)

    def dw(t):
        return 1j * k * np.exp(1j * k * t)

    def d2w(t):
        return -k * k * np.exp(1j * k * t)

    def u(x, y, z):
        return w(x) * w(y) * w(z) * np.log(1.0 + x * x + y * y + z * z)

    def grad(x, y, z):
        q = 1.0 + x * x + y * y + z * z
        log_q = np.log(q)
        wx, wy, wz = w(x), w(y), w(z)
        return (dw(x) * wy * wz * log_q + wx * wy * wz * 2.0 * x / q,
                wx * dw(y) * wz * log_q + wx * wy * wz * 2.0 * y / q,
                wx * wy * dw(z) * log_q + wx * wy * wz * 2.0 * z / q)

    def lap(x, y, z):
        q = 1.0 + x * x + y * y + z * z
        log_q = np.log(q)
        wx, wy, wz = w(x), w(y), w(z)
        second = (d2w(x) * wy * wz + wx * d2w(y) * wz + wx * wy * d2w(z)) * log_q
        cross = (4.0 / q) * (dw(x) * wy * wz * x + wx * dw(y) * wz * y
                             + wx * wy * dw(z) * z)
        lap_log = (4.0 + 2.0 * q) / (q * q)
        return second + cross + wx * wy * wz * lap_log

    return u, grad, lap


def make_problem(kind: str, kappa: float, eta: complex | None = None,
                 b: Callable | None = None) -> ManufacturedProblem:
    """Build a named problem; eta defaults to kappa, b to the centered
    Gaussian bump."""
    kind = kind.lower()
    if kind not in PROBLEM_KINDS:
        raise ValueError(f"unknown problem kind {kind!r}; pick from {PROBLEM_KINDS}")
    if kappa <= 0:
        raise ValueError("kappa must be positive")
    eta = complex(kappa if eta is None else eta)
    if b is None:
        b = gaussian_bump

    if kind == "scatter":
        def s(x, y, z):
            return b(x, y, z) * np.exp(1j * kappa * (x + y + z))

        def t(x, y, z, axis, side):
            return np.zeros_like(np.asarray(x), dtype=complex)

        return ManufacturedProblem(kind=kind, kappa=kappa, eta=eta,
                                   b=b, s=s, t=t)

    u, grad, lap = (_plane_fields if kind == "plane" else _bumps_fields)(kappa)

    def s(x, y, z):
        return -lap(x, y, z) - kappa ** 2 * (1.0 - b(x, y, z)) * u(x, y, z)

    def t(x, y, z, axis, side):
        return side * grad(x, y, z)[axis] + 1j * eta * u(x, y, z)

    return ManufacturedProblem(kind=kind, kappa=kappa, eta=eta, b=b,
                               s=s, t=t, u=u, grad_u=grad, lap_u=lap)


@dataclass(frozen=True)
class ErrorMetrics:
    """Relative discrete l2 errors over all stored unknowns.

    E_h_it is measured against the run under study, E_h against a
    fully-converged reference run when one was made.
    """

    E_h_it: float | None = None
    E_h: float | None = None

    @staticmethod
    def digits(e: float | None) -> float | None:
        if e is None or e <= 0:
            return None
        return -np.log10(e)


def compute_error(u_h: np.ndarray, problem: ManufacturedProblem,
                  mesh, leaves) -> float:
    """Relative l2 error of a global solution vector against the exact
    solution, duplicated interface nodes counted as stored."""
    if problem.u is None:
        raise ValueError(f"problem kind {problem.kind!r} has no exact solution")
    n = leaves[0].n
    exact = np.empty(mesh.n_leaves * n, dtype=complex)
    for tau, leaf in enumerate(leaves):
        x, y, z = leaf.map.coords.T
        exact[tau * n:(tau + 1) * n] = problem.u(x, y, z)
    return float(np.linalg.norm(u_h - exact) / np.linalg.norm(exact))

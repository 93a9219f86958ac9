"""One-dimensional Chebyshev machinery and Kronecker-product kernels.

Everything here is per-axis: nodes and differentiation matrices for a
single interval, the eigen-factorization of the interior second-derivative
block, and the tensor sweeps that apply (Mz x My x Mx) to a flattened 3D
array without ever forming the Kronecker product.

Vector convention: a field on an m x m x m grid is stored with the x index
fastest, i.e. entry (ix, iy, iz) sits at flat position ix + m*iy + m*m*iz.
That is the column-major vectorization for which (Mz x My x Mx) applies Mx
along x, My along y and Mz along z.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import EigenFactorError


def chebyshev_nodes(n_c: int, h: float = 1.0) -> np.ndarray:
    """Chebyshev extreme points mapped to [0, h], ascending.

    Valid for any n_c >= 2 (build_basis itself is stricter).
    """
    j = np.arange(n_c)
    return 0.5 * h * (1.0 - np.cos(np.pi * j / (n_c - 1)))


def chebyshev_reference_nodes(n_c: int) -> np.ndarray:
    """Nodes on the reference interval [0, 1] (ascending)."""
    return chebyshev_nodes(n_c, 1.0)


def _diff_matrix(n_c: int, h: float) -> np.ndarray:
    """First-derivative collocation matrix on the ascending nodes of [0, h]."""
    N = n_c - 1
    x = np.cos(np.pi * np.arange(N + 1) / N)  # descending on [-1, 1]
    c = np.hstack([2.0, np.ones(N - 1), 2.0]) * (-1.0) ** np.arange(N + 1)
    dX = x[:, None] - x[None, :]
    D = np.outer(c, 1.0 / c) / (dX + np.eye(N + 1))
    D -= np.diag(D.sum(axis=1))  # negative sum trick
    # flipping trick: exact anti-centrosymmetry keeps D numerically symmetric
    # about the interval midpoint
    D = 0.5 * (D - D[::-1, ::-1])
    # ascending nodes t = h*(1 - x)/2 flip the sign, interval map scales 2/h
    return (-2.0 / h) * D


@dataclass(frozen=True)
class SpectralBasis:
    """Per-order 1D Chebyshev data for a leaf edge of length h.

    D1 is the n_c x n_c first-derivative matrix, L1 the interior block of
    D1 @ D1 and B1 its two endpoint columns restricted to interior rows.
    """

    n_c: int
    h: float
    nodes_1d: np.ndarray      # (n_c,) ascending in [0, h]
    ref_nodes: np.ndarray     # (n_c,) same nodes on [0, 1]
    D1: np.ndarray            # (n_c, n_c)
    L1: np.ndarray            # (n_c-2, n_c-2)
    B1: np.ndarray            # (n_c-2, 2) endpoint columns of D1 @ D1

    @property
    def m(self) -> int:
        return self.n_c - 2


def build_basis(n_c: int, h: float) -> SpectralBasis:
    """Build the 1D spectral basis for n_c nodes on an interval of length h."""
    if n_c < 4:
        raise ValueError(f"n_c must be >= 4 (got {n_c}): need interior nodes "
                         "after removing the endpoints")
    if not h > 0:
        raise ValueError(f"leaf edge h must be positive (got {h})")
    D1 = _diff_matrix(n_c, h)
    D2 = D1 @ D1
    L1 = D2[1:-1, 1:-1].copy()
    B1 = D2[1:-1, [0, n_c - 1]].copy()
    return SpectralBasis(
        n_c=n_c,
        h=h,
        nodes_1d=chebyshev_nodes(n_c, h),
        ref_nodes=chebyshev_reference_nodes(n_c),
        D1=D1,
        L1=L1,
        B1=B1,
    )


@dataclass(frozen=True)
class EigFactor:
    """Eigen-factorization L1 = V diag(E) Vinv, eigenvalues sorted by
    (real, imag)."""

    V: np.ndarray
    E: np.ndarray
    Vinv: np.ndarray


def eig_factor(basis: SpectralBasis) -> EigFactor:
    """Diagonalize the interior second-derivative block of a basis."""
    L1 = basis.L1
    try:
        E, V = scipy.linalg.eig(L1)
    except scipy.linalg.LinAlgError as exc:  # pragma: no cover
        raise EigenFactorError(f"eigendecomposition failed for n_c={basis.n_c}") from exc
    order = np.lexsort((E.imag, E.real))
    E = E[order]
    V = V[:, order]
    cond = np.linalg.cond(V)
    if not np.isfinite(cond) or cond > 1e12:
        raise EigenFactorError(
            f"eigenvector basis numerically singular (cond ~ {cond:.2e})")
    Vinv = np.linalg.inv(V)
    return EigFactor(V=V, E=E, Vinv=Vinv)


def sweep(M: np.ndarray, U: np.ndarray, axis: int) -> np.ndarray:
    """Apply the matrix M along one axis of an ndarray (one BLAS gemm)."""
    out = np.tensordot(M, U, axes=(1, axis))
    return np.moveaxis(out, 0, axis)


def as_cube(x: np.ndarray, m: int) -> np.ndarray:
    """View a length m^3 vector as a (z, y, x) cube matching the layout above."""
    return x.reshape(m, m, m)


def kron3_apply(Mz, My, Mx, x: np.ndarray) -> np.ndarray:
    """Compute (Mz kron My kron Mx) @ x via per-axis sweeps.

    Pass None for an identity factor; it is skipped rather than multiplied.
    x has length m**3 in the layout documented in the module docstring.
    """
    mats = [Mx, My, Mz]
    sizes = {M.shape[0] for M in mats if M is not None}
    if len(sizes) > 1:
        raise ValueError(f"factor sizes disagree: {sorted(sizes)}")
    m = sizes.pop() if sizes else round(len(x) ** (1 / 3))
    if x.shape != (m ** 3,):
        raise ValueError(f"expected vector of length {m**3}, got {x.shape}")
    for M in mats:
        if M is not None and M.shape != (m, m):
            raise ValueError(f"factors must be square of size {m}, got {M.shape}")
    U = as_cube(x, m)
    # cube axes are (z, y, x): Mx acts on axis 2, My on 1, Mz on 0
    for axis, M in ((2, Mx), (1, My), (0, Mz)):
        if M is not None:
            U = sweep(M, U, axis)
    return U.reshape(-1)


def laplacian_apply(L1: np.ndarray, U: np.ndarray) -> np.ndarray:
    """Sum of the three one-axis L1 sweeps of a (z, y, x) cube (or batch).

    Equals (I x I x L1 + I x L1 x I + L1 x I x I) applied to vec(U); U may
    carry trailing batch axes beyond the first three.
    """
    return sweep(L1, U, 2) + sweep(L1, U, 1) + sweep(L1, U, 0)


def barycentric_weights(nodes: np.ndarray) -> np.ndarray:
    """Barycentric interpolation weights for arbitrary distinct nodes."""
    diff = nodes[:, None] - nodes[None, :]
    np.fill_diagonal(diff, 1.0)
    return 1.0 / diff.prod(axis=1)


def interp_matrix(nodes: np.ndarray, targets: np.ndarray) -> np.ndarray:
    """Row-stochastic matrix evaluating the nodal interpolant at targets."""
    w = barycentric_weights(nodes)
    d = targets[:, None] - nodes[None, :]
    hit_rows, hit_cols = np.nonzero(d == 0.0)
    d[hit_rows, :] = 1.0  # avoid 0/0; rows overwritten below
    M = w[None, :] / d
    M /= M.sum(axis=1, keepdims=True)
    M[hit_rows, :] = 0.0
    M[hit_rows, hit_cols] = 1.0
    return M

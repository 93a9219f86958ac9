"""Exception hierarchy shared by all solver modules."""


class SolverError(Exception):
    """Base class for all solver failures."""


class ConfigError(SolverError):
    """Invalid or inconsistent configuration (CLI exit code 3)."""


class NoConvergenceError(SolverError):
    """An iterative solve hit its iteration cap (CLI exit code 2).

    Carries the achieved residual reduction and, for leaf-local solves,
    the leaf index.
    """

    def __init__(self, message, *, achieved=None, iterations=None, leaf=None):
        super().__init__(message)
        self.achieved = achieved
        self.iterations = iterations
        self.leaf = leaf


class NumericalError(SolverError):
    """Numerical breakdown in a factorization (CLI exit code 4)."""


class ResonanceError(NumericalError):
    """Homogenized interior operator is numerically singular."""


class SingularSchurError(NumericalError):
    """Homogenized Schur complement factorization hit a negligible pivot."""


class EigenFactorError(NumericalError):
    """Eigenvalue decomposition failed or produced a near-singular basis."""

"""Iterative spectral-collocation solver for 3D variable-coefficient
Helmholtz problems with impedance boundary conditions on the unit cube."""

from .blockjacobi import BlockJacobi, apply_block_jacobi
from .errors import (ConfigError, EigenFactorError, NoConvergenceError,
                     NumericalError, ResonanceError, SingularSchurError,
                     SolverError)
from .experiment import (ExperimentConfig, ExperimentResult, run_experiment,
                         run_sweep)
from .krylov import KrylovConfig, SolveReport, gmres_solve, rprr_tolerance
from .leaf import (LeafBox, LeafIndexMap, LeafOperator, apply_interior,
                   apply_leaf, build_leaf, extract_outgoing, unit_box)
from .leafprec import (LeafPreconditioner, apply_homogenized_inverse,
                       homogenize, schur_surrogate, solve_interior,
                       solve_schur)
from .mesh import (BOUNDARY, MeshTopology, ProblemSpec, apply_global,
                   assemble_rhs, build_leaves, build_mesh)
from .problems import (ErrorMetrics, ManufacturedProblem, compute_error,
                       corner_bump, gaussian_bump, kappa_for_ppw,
                       make_problem, ppw_for_kappa)
from .spectral import (EigFactor, SpectralBasis, build_basis, chebyshev_nodes,
                       eig_factor, kron3_apply)

__all__ = [name for name in dir() if not name.startswith("_")]

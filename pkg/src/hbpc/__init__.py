"""Parallel-in-time, high-order two-derivative IMEX predictor-corrector
ODE solvers with a pipelined executor and a convergence-study harness."""

from .core import (Array, FluxBundle, NonFiniteError, SplitProblem,
                   eval_bundle, fd_jacobian)
from .harness import (ConvergenceRow, ConvergenceTable, InsufficientDataError,
                      LimitRow, MismatchedResultsError, MissingReferenceError,
                      SpeedupReport, StudyConfig, estimate_order,
                      newton_partition, parse_csv, render_csv,
                      run_convergence_study, run_limit_study,
                      run_speedup_study, theoretical_speedup, write_csv)
from .newton import (NewtonConfig, NewtonResult, SingularJacobianError,
                     solve as newton_solve)
from .pipeline import (Block, BlockResult, DeadlockError, WorkerAssignment,
                       dependencies, integrate_parallel, simulate_schedule)
from .problems import (BUILTIN, arenstorf, make, pareschi_russo, scalar_pow,
                       van_der_pol)
from .solver import (CapExceededError, NoConvergenceError, RunResult,
                     SolverConfig, adaptive_kmax, integrate, limit_integrate)
from .tableaux import (TableauReport, TwoDerivativeTableau,
                       UnsupportedOrderError, builtin, quadrature, validate)

__version__ = "0.1.0"

__all__ = [
    "Array", "FluxBundle", "NonFiniteError", "SplitProblem", "eval_bundle",
    "fd_jacobian",
    "TwoDerivativeTableau", "TableauReport", "UnsupportedOrderError",
    "builtin", "quadrature", "validate",
    "NewtonConfig", "NewtonResult", "SingularJacobianError", "newton_solve",
    "SolverConfig", "RunResult", "NoConvergenceError", "CapExceededError",
    "integrate", "limit_integrate", "adaptive_kmax",
    "Block", "BlockResult", "DeadlockError", "WorkerAssignment",
    "dependencies", "simulate_schedule", "integrate_parallel",
    "BUILTIN", "make", "scalar_pow", "pareschi_russo", "van_der_pol",
    "arenstorf",
    "StudyConfig", "ConvergenceRow", "ConvergenceTable", "SpeedupReport",
    "LimitRow", "InsufficientDataError", "MismatchedResultsError",
    "MissingReferenceError", "run_convergence_study", "estimate_order",
    "run_speedup_study", "run_limit_study", "newton_partition",
    "theoretical_speedup", "render_csv", "write_csv", "parse_csv",
    "__version__",
]

"""Limited-memory BFGS matrices with inner-product-only shifted solves."""
from .augmented import AugmentedSystem, build_augmented
from .baselines import CgReport, cg_solve, dense_assemble, direct_solve, secular_oracle
from .errors import (ConsistencyError, DenseLimitError, InvalidArgumentError, LbfgsError,
                     NearSingularError, NonConvergenceError, NotPositiveDefiniteError,
                     ShiftTooSmallError, StaleStateError)
from .lbfgs_core import LbfgsMatrix, UpdateVectors, compute_update_vectors, new_matrix
from .shifted_solve import InnerProductCounter, Shift, ShiftedSolver, build, build_diagonal
from .trust_region import TrSolution, solve_subproblem

__version__ = "0.1.0"

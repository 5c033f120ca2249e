"""Bimatrix algebra, bimatrix equation solvers and pole assignment for
complex-valued linear systems ``x' = {A1, A2} x + {B1, B2} u``."""
from .assignment import (DesignReport, FeedbackDesign, TargetSpectrum,
                         assign_poles, build_target, closed_loop,
                         rendezvous_model, rendezvous_target,
                         second_order_to_complex)
from .bimatrix import (Bimatrix, Spectrum, adjoint, apply, complex_lifting,
                       exponential, from_real, inverse, is_nonsingular,
                       is_positive_definite, multiply, power, spectrum, to_real)
from .errors import (BimatError, CoprimenessError, DimensionError, InputError,
                     NonsingularSearchError, NoSolutionError,
                     NoUniqueSolutionError, NumericError, PreconditionError,
                     SingularityError, StructuralError)
from .models import SecondOrderModel, SystemModel, controllability_rank
from .polyfactor import (CoprimeFactorization, PolyBimatrix,
                         anti_coprime_factorization, check_coprime,
                         coprime_factorization, minimal_right_factorization)
from .solvers import (char_poly, oracle_solve, solve_antilinear,
                      solve_conjugate_stein, solve_conjugate_sylvester,
                      solve_gsyl, solve_gsyl_decoupled, solve_lyapunov_ct,
                      solve_lyapunov_dt, solve_stein, solve_stein_series,
                      solve_sylvester)

__version__ = "0.1.0"

"""Block preconditioners and Krylov solvers for 3x3 block saddle point systems."""

from .dense import (ConvergenceError, NotPositiveDefiniteError, SingularMatrixError, chol,
                    chol_solve, householder_qr, lu_solve, nullspace_basis, qr_eigen, sym_eigen)
from .gmres import GmresReport, NumericalFailure, gmres_right
from .preconditioners import (PrecondP, PrecondP1, PrecondPD, apply_P1_inv, apply_P_inv,
                              apply_PD_inv, apply_R, build_P, build_P1, build_PD,
                              build_preconditioner)
from .problems import (Ex1Params, Ex2Params, gen_example1, gen_example2, generate, load_saddle,
                       random_saddle, read_matrix_market, write_matrix_market)
from .saddle import (BlockSaddle, SChoice, assemble_skew, assemble_sym, build_S,
                     check_norm_condition, check_theorem_condition, err_metric, exact_schur,
                     rel_residual, rhs_all_ones)
from .solvers import DiagonalPlusRankOne, spd_solver
from .sparse import SparseMat, Triplets, triplets_to_csr
from .spectrum import (SpectrumReport, check_nonunit_eigvec_family, check_unit_eigvec_family,
                       minimal_poly_check, preconditioned_spectrum, spectrum_to_csv)
from .stationary import (StationaryReport, iteration_matrix_spectrum, spectral_radius,
                         stationary_solve)

__version__ = "0.1.0"

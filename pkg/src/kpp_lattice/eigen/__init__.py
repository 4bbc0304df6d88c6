"""Principal eigenvalues of the twisted lattice operator.

The bounded-eigenfunction eigenvalue (positive test functions bounded above
and away from zero) is not computed here; it is only known to lie above
``inf_i c_i``.
"""

from ._types import (AdmissibilityReport, CellSolution, CertificateFunction,
                     DecaySolution, EigenEstimate, GammaEstimate, LyapunovCurve,
                     LyapunovPoint, NonlinearCertificate, TridiagEigenpair)
from .basic import (admissibility_check, apply_twisted, envelope, lambda_closed_form,
                    lambda_periodic, periodic_matrix, relative_residual, site_symbols)
from .cell import lambda_limit, solve_cell_problem
from .certificate import nonlinear_cell_certificate
from .lyapunov import (DecayChain, LyapunovHamiltonian, decaying_solution,
                       exponential_envelope, lyapunov_curve, lyapunov_mu)
from .tridiag import block_matrix, block_top, gamma_infinity, tridiag_principal

__all__ = [
    "AdmissibilityReport", "CellSolution", "CertificateFunction", "DecayChain",
    "DecaySolution", "EigenEstimate", "GammaEstimate", "LyapunovCurve",
    "LyapunovHamiltonian", "LyapunovPoint", "NonlinearCertificate", "TridiagEigenpair",
    "admissibility_check", "apply_twisted", "block_matrix", "block_top",
    "decaying_solution", "envelope", "exponential_envelope", "gamma_infinity",
    "lambda_closed_form", "lambda_limit", "lambda_periodic", "lyapunov_curve",
    "lyapunov_mu", "nonlinear_cell_certificate", "periodic_matrix",
    "relative_residual", "site_symbols", "solve_cell_problem", "tridiag_principal",
]

"""mullkit: measurement-error-robust sparse estimation for Lipschitz losses.

Feasible-set (matrix-uncertainty) estimators solved by iterative
linearization + linear programming, their penalized analog solved by spectral
projected gradient, simulation schemes, cross-validation tuning, and a
benchmark runner.
"""

from .analog import AnalogConfig, analog_objective, analog_subgradient, kkt_check, project_l1, spg_fit
from .data import (Coefficients, Dataset, FitResult, Task, l1_norm, load_csv,
                   standardize, unstandardize_coefficients)
from .losses import (LossKind, LossSpec, conquer, curvature_matrix, d2_max,
                     default_bandwidth, empirical_loss, encode_labels, gradient,
                     lipschitz_const, logistic, loss_d1, loss_d2, loss_value,
                     smooth_hinge)
from .lp import LinearProgram, LpSolution, LpStatus, solve_lp
from .muc import FeasibleSetEmptyError, MucConfig, build_muc_lp, hybrid_fit, muc_fit
from .selection import (CvGrid, check_loss, classification_metrics, cv_tune,
                        support_metrics, threshold_estimate)
from .simulate import SchemeKind, SchemeSpec, SimReplicate, add_noise, cholesky, gen_scheme

__version__ = "0.1.0"

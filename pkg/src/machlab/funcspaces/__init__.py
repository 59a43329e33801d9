"""Function-space estimators: weights of class F, ball norms, Whitney covers."""

from machlab.funcspaces.classf import (
    ClassF,
    ClassFReport,
    from_selector,
    one_plus_log,
    one_plus_log_alpha,
    one_plus_loglog_log,
    osgood_bound,
    osgood_M,
    osgood_M_inverse,
    osgood_solve,
    power,
    verify_class_f,
)
from machlab.funcspaces.balls import (
    BallSampler,
    BallStatistics,
    InterpolationReport,
    ball_average,
    ball_statistics,
    bmo_f_from_stats,
    bmo_f_norm,
    bmo_from_stats,
    bmo_norm,
    interpolation_check,
    lmo_f_from_stats,
    lmo_f_norm,
    log_lipschitz_norm,
)
from machlab.funcspaces.whitney import WhitneyCover, fit_shell_decay, whitney_cover

__all__ = [
    "ClassF",
    "ClassFReport",
    "from_selector",
    "one_plus_log",
    "one_plus_log_alpha",
    "one_plus_loglog_log",
    "osgood_bound",
    "osgood_M",
    "osgood_M_inverse",
    "osgood_solve",
    "power",
    "verify_class_f",
    "BallSampler",
    "BallStatistics",
    "InterpolationReport",
    "ball_average",
    "ball_statistics",
    "bmo_f_from_stats",
    "bmo_f_norm",
    "bmo_from_stats",
    "bmo_norm",
    "interpolation_check",
    "lmo_f_from_stats",
    "lmo_f_norm",
    "log_lipschitz_norm",
    "WhitneyCover",
    "fit_shell_decay",
    "whitney_cover",
]

"""Multi-phase bounded logistic growth modelling.

Evaluate n-phase logistic curves and their derivatives exactly, fit them
to noisy cumulative series with an analytic-Jacobian damped Gauss-Newton
solver, bracket the estimates with residual-resampling bootstrap
intervals, and summarize the growth state with peak-relative ratios.
"""

from .core import (
    ClassicLogistic,
    InvalidModelError,
    NlsigModel,
    Partition,
    classic_from_partition,
)
from .calculus import (
    PARAM_NAMES,
    LsqObjective,
    WeightLayer,
    gauss_newton_hessian,
    objective_gradient,
    param_partials,
    residual_jacobian,
    weight_partials,
)
from .fit import (
    BootstrapError,
    BootstrapResult,
    DegenerateDataError,
    FitOptions,
    FitResult,
    InflectionGuess,
    TimeSeries,
    bootstrap,
    detect_inflections,
    fit,
    model_params,
    moving_average,
    r_squared,
    refit,
    uniform_guess,
)
from .metrics import (
    DegeneratePartitionError,
    MetricReport,
    build_report,
    classify,
    metric_ci,
    partition_for,
    xir,
    yir,
)
from .network import (
    NlsigNetwork,
    PipelineGradients,
    backward,
    descend_weights,
    forward,
    forward_multinomial,
)

__version__ = "0.1.0"

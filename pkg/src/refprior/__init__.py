"""Monte Carlo estimation of reference priors with delta-method error bars
and common-random-number variance reduction."""

from refprior.errors import (
    DegenerateSample,
    DomainError,
    EmptySample,
    InternalError,
    MissingReference,
    NaNError,
    QuadratureError,
    RefPriorError,
    ShapeMismatch,
)
from refprior.models import MODELS, Model, Sample, get_model
from refprior.quadrature import QuadratureSettings, QuadResult, integrate_adaptive, log_integrate
from refprior.sampling import StreamKey, UniformMatrix, sample_matrix, uniform_matrix
from refprior.estimators import (
    EarpFit,
    FkEstimate,
    Interval,
    RatioEstimate,
    f_hat,
    fit_constant_earp,
    fk_hat,
    fnac_exp_closed_form,
    fnac_hat,
    half_width_f,
    half_width_fk,
)
from refprior.metrics import GridEntry, GridEvaluation, amrp, coverage, earp

__version__ = "0.1.0"

__all__ = [
    "DegenerateSample",
    "DomainError",
    "EmptySample",
    "InternalError",
    "MissingReference",
    "NaNError",
    "QuadratureError",
    "RefPriorError",
    "ShapeMismatch",
    "MODELS",
    "Model",
    "Sample",
    "get_model",
    "QuadratureSettings",
    "QuadResult",
    "integrate_adaptive",
    "log_integrate",
    "StreamKey",
    "UniformMatrix",
    "sample_matrix",
    "uniform_matrix",
    "EarpFit",
    "FkEstimate",
    "Interval",
    "RatioEstimate",
    "f_hat",
    "fit_constant_earp",
    "fk_hat",
    "fnac_exp_closed_form",
    "fnac_hat",
    "half_width_f",
    "half_width_fk",
    "GridEntry",
    "GridEvaluation",
    "amrp",
    "coverage",
    "earp",
]

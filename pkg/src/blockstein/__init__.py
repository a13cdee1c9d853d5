"""Block James-Stein submodel fitting, out-of-sample MSPE estimation,
model selection, prediction intervals, and finite-sample bound verification."""

from .dgp import CandidateModel, ConditionalParams, Dgp, TrainingSample
from .dgp import conditional_params, generate_sample, variance_of_y
from .estimator import BlockJamesSteinRegressor
from .exceptions import (BlocksteinError, DegenerateVarianceError,
                         InvalidArgumentError, InvalidModelError, NotSpdError)
from .inference import (PredictionInterval, build_interval,
                        conditional_coverage, tv_centered_normals)
from .mspe import (MspeReport, empirical_mspe, normalizer_r, true_mspe,
                   true_mspe_expanded)
from .rng import RngStream
from .selection import ModelCollection, SelectionResult, collection_summary, select
from .shrinkage import BlockJsFit, ShrinkageConfig, fit, predict

__version__ = "0.1.0"

__all__ = [
    "BlockJamesSteinRegressor", "BlockJsFit", "BlocksteinError",
    "CandidateModel", "ConditionalParams", "DegenerateVarianceError", "Dgp",
    "InvalidArgumentError", "InvalidModelError", "ModelCollection",
    "MspeReport", "NotSpdError", "PredictionInterval", "RngStream",
    "SelectionResult", "ShrinkageConfig", "TrainingSample", "build_interval",
    "collection_summary", "conditional_coverage", "conditional_params",
    "empirical_mspe", "fit", "generate_sample", "normalizer_r", "predict",
    "select", "true_mspe", "true_mspe_expanded", "tv_centered_normals",
    "variance_of_y",
]

"""Prediction intervals, their exact conditional coverage, and the total
variation distance between the estimated and true prediction-error laws."""

import math
from dataclasses import dataclass

from scipy.special import ndtr, ndtri

from .exceptions import InvalidArgumentError
from .shrinkage import predict


def normal_cdf(x):
    return float(ndtr(x))


def normal_quantile(p):
    if not (0.0 < p < 1.0):
        raise InvalidArgumentError(f"quantile level must be in (0, 1), got {p}")
    return float(ndtri(p))


@dataclass(frozen=True)
class PredictionInterval:
    center: float
    half_width: float
    alpha: float

    def __post_init__(self):
        if not (0.0 < self.alpha < 1.0):
            raise InvalidArgumentError(f"alpha must be in (0, 1), got {self.alpha}")
        if not (self.half_width >= 0.0):
            raise InvalidArgumentError(
                f"half_width must be >= 0, got {self.half_width}")

    @property
    def lower(self):
        return self.center - self.half_width

    @property
    def upper(self):
        return self.center + self.half_width


def build_interval(fitted, x0, rho_hat_sq, alpha):
    """Two-sided interval centered at the prediction with half-width
    Q_{1-alpha/2} * rho_hat."""
    if not (rho_hat_sq >= 0.0):
        raise InvalidArgumentError(f"rho_hat_sq must be >= 0, got {rho_hat_sq}")
    if not (0.0 < alpha < 1.0):
        raise InvalidArgumentError(f"alpha must be in (0, 1), got {alpha}")
    center = predict(fitted, x0)
    q = normal_quantile(1.0 - alpha / 2.0)
    return PredictionInterval(center=center,
                              half_width=q * math.sqrt(rho_hat_sq),
                              alpha=alpha)


def conditional_coverage(rho_hat_sq, rho_sq_true, alpha):
    """Exact coverage of the interval given the training sample: the
    prediction error is centered normal with variance rho^2, so coverage is
    2 Phi(Q_{1-alpha/2} sqrt(rho_hat^2/rho^2)) - 1."""
    if not (rho_sq_true > 0.0):
        raise InvalidArgumentError(f"rho_sq_true must be > 0, got {rho_sq_true}")
    if not (rho_hat_sq >= 0.0):
        raise InvalidArgumentError(f"rho_hat_sq must be >= 0, got {rho_hat_sq}")
    if not (0.0 < alpha < 1.0):
        raise InvalidArgumentError(f"alpha must be in (0, 1), got {alpha}")
    q = normal_quantile(1.0 - alpha / 2.0)
    return 2.0 * normal_cdf(q * math.sqrt(rho_hat_sq / rho_sq_true)) - 1.0


def tv_centered_normals(v1, v2):
    """Exact total variation distance between N(0, v1) and N(0, v2).

    The densities cross at x*^2 = v_< v_> log(v_>/v_<)/(v_> - v_<); the TV
    distance is twice the probability mass between the crossing points under
    the smaller-variance law minus under the larger one.
    """
    if not (v1 > 0.0) or not (v2 > 0.0):
        raise InvalidArgumentError(f"variances must be > 0, got {v1}, {v2}")
    if v1 == v2:
        return 0.0
    lo, hi = (v1, v2) if v1 < v2 else (v2, v1)
    x_star = math.sqrt(lo * hi * math.log(hi / lo) / (hi - lo))
    return 2.0 * (normal_cdf(x_star / math.sqrt(lo))
                  - normal_cdf(x_star / math.sqrt(hi)))

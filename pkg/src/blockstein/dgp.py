"""Data-generating process, candidate models, and conditional-model parameters.

The generating model is y = x'beta + u with x ~ N(0, Sigma) of finite
dimension p and u ~ N(0, noise_var) independent of x.  A candidate model is
a subset of the p coordinates split into two ordered blocks; the induced
conditional model y | x(m) is Gaussian with coefficient vector theta and
conditional variance cond_var.
"""

from dataclasses import dataclass, field

import numpy as np

from .exceptions import InvalidArgumentError, InvalidModelError, NotSpdError
from .linalg import cholesky_spd, _as_matrix, _as_vector


@dataclass(frozen=True)
class Dgp:
    beta: np.ndarray
    sigma: np.ndarray
    noise_var: float

    def __post_init__(self):
        beta = _as_vector(self.beta, "beta")
        sigma = _as_matrix(self.sigma, "sigma")
        if sigma.shape != (beta.shape[0], beta.shape[0]):
            raise InvalidArgumentError("sigma must be p x p for beta of length p")
        if not (self.noise_var > 0):
            raise InvalidArgumentError("noise_var must be > 0")
        chol = cholesky_spd(sigma)  # also validates SPD
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "noise_var", float(self.noise_var))
        object.__setattr__(self, "_chol", chol)

    @property
    def p(self):
        return self.beta.shape[0]


@dataclass(frozen=True)
class CandidateModel:
    """A submodel given by two disjoint ordered blocks of coordinate indices.

    Indices are 0-based.  Block sizes must both be at least 3 (so that the
    James-Stein factors are meaningful); the sample-size constraint
    |m| < n is checked at fit time.
    """

    block1: tuple
    block2: tuple

    def __post_init__(self):
        b1 = tuple(int(i) for i in self.block1)
        b2 = tuple(int(i) for i in self.block2)
        if len(set(b1)) != len(b1) or len(set(b2)) != len(b2):
            raise InvalidModelError("block indices must be distinct")
        if set(b1) & set(b2):
            raise InvalidModelError("block1 and block2 must be disjoint")
        if len(b1) < 3 or len(b2) < 3:
            raise InvalidModelError(
                f"both blocks need at least 3 coordinates, got {len(b1)} and {len(b2)}")
        if any(i < 0 for i in b1 + b2):
            raise InvalidModelError("indices must be nonnegative")
        object.__setattr__(self, "block1", b1)
        object.__setattr__(self, "block2", b2)

    @property
    def indices(self):
        return self.block1 + self.block2

    @property
    def size(self):
        return len(self.block1) + len(self.block2)

    @property
    def size1(self):
        return len(self.block1)

    @property
    def size2(self):
        return len(self.block2)

    def validate_for(self, p, n=None):
        if max(self.indices) >= p:
            raise InvalidModelError(f"model uses index {max(self.indices)} but p={p}")
        if n is not None and self.size >= n:
            raise InvalidModelError(f"model size {self.size} must be < n={n}")


@dataclass(frozen=True)
class TrainingSample:
    X: np.ndarray
    Y: np.ndarray

    def __post_init__(self):
        X = _as_matrix(self.X, "X")
        Y = _as_vector(self.Y, "Y")
        if X.shape[0] != Y.shape[0] or X.shape[0] < 1:
            raise InvalidArgumentError("X and Y must have the same positive number of rows")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "Y", Y)

    @property
    def n(self):
        return self.X.shape[0]

    @property
    def p(self):
        return self.X.shape[1]


@dataclass(frozen=True)
class ConditionalParams:
    """theta, sigma^2(m), and the signal-to-noise quantities mu and mu2."""

    theta: np.ndarray
    cond_var: float
    mu: float
    mu2: float
    cov: np.ndarray = field(repr=False, default=None)  # Sigma(m) in block order


def generate_sample(dgp, n, rng):
    """n iid rows of (x, y) from the generating model."""
    if n < 1:
        raise InvalidArgumentError("n must be >= 1")
    L = dgp._chol
    Z = rng.generator.standard_normal((n, dgp.p))
    X = Z @ L.T
    u = rng.generator.standard_normal(n) * np.sqrt(dgp.noise_var)
    Y = X @ dgp.beta + u
    return TrainingSample(X=X, Y=Y)


def model_covariance(dgp, m):
    """Sigma(m) with rows/columns in (block1, block2) order."""
    idx = list(m.indices)
    return dgp.sigma[np.ix_(idx, idx)]


def conditional_params(dgp, m):
    """Population parameters of the conditional model y | x(m)."""
    m.validate_for(dgp.p)
    idx = list(m.indices)
    S = model_covariance(dgp, m)
    try:
        cholesky_spd(S)
    except NotSpdError as e:
        raise NotSpdError(f"Sigma(m) is numerically singular: {e}") from e
    cov_xy = dgp.sigma[idx, :] @ dgp.beta
    theta = np.linalg.solve(S, cov_xy)
    var_y = variance_of_y(dgp)
    cond_var = var_y - float(theta @ cov_xy)
    if cond_var <= 0:
        raise NotSpdError("conditional variance is not positive")
    mu = float(theta @ S @ theta) / cond_var
    k1 = m.size1
    S11 = S[:k1, :k1]
    S12 = S[:k1, k1:]
    S22 = S[k1:, k1:]
    schur = S22 - S12.T @ np.linalg.solve(S11, S12)
    theta2 = theta[k1:]
    mu2 = float(theta2 @ schur @ theta2) / cond_var
    return ConditionalParams(theta=theta, cond_var=cond_var, mu=mu, mu2=max(mu2, 0.0), cov=S)


def variance_of_y(dgp):
    """Var(y) = beta' Sigma beta + noise_var."""
    return float(dgp.beta @ dgp.sigma @ dgp.beta) + dgp.noise_var

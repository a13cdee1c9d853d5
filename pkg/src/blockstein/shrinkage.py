"""Positive-part block James-Stein fitting for one candidate model.

The design X(m) = (X1, X2) is orthogonalized into (X1, M1 X2) with M1 the
projector onto the orthocomplement of col(X1).  Both least-squares pieces
are shrunk by positive-part factors a1, a2 in [0, 1], and the block-1
coefficients are corrected back to the original parametrization.
"""

from dataclasses import dataclass

import numpy as np

from .exceptions import InvalidArgumentError, InvalidModelError
from .linalg import least_squares, _as_vector, RANK_TOL


@dataclass(frozen=True)
class ShrinkageConfig:
    """Tuning parameters c1, c2 >= 0; None means the classical
    positive-part constant (|block| - 2)/|block| for that block."""

    c1: float = None
    c2: float = None

    def __post_init__(self):
        for name in ("c1", "c2"):
            v = getattr(self, name)
            if v is not None and not (v >= 0):
                raise InvalidArgumentError(f"{name} must be >= 0, got {v}")

    def resolved(self, m):
        c1 = (m.size1 - 2) / m.size1 if self.c1 is None else float(self.c1)
        c2 = (m.size2 - 2) / m.size2 if self.c2 is None else float(self.c2)
        return c1, c2


@dataclass(frozen=True)
class BlockJsFit:
    model: object
    n: int
    theta1_star_ls: np.ndarray
    theta2_ls: np.ndarray
    sigma_hat_sq: float
    a1: float
    a2: float
    theta_bjs: np.ndarray
    beta_hat: np.ndarray
    quad1: float
    quad2: float
    c1: float
    c2: float


def _shrink_factor(c, sigma_hat_sq, block_size, quad):
    # quad == 0 is the continuous limit where the min clause binds, except
    # for c == 0 where the factor is identically zero.
    if c == 0.0:
        return 0.0
    if quad <= 0.0:
        return 1.0
    return min(1.0, c * sigma_hat_sq * block_size / quad)


def fit(sample, m, cfg=None):
    """Fit the block James-Stein estimator of model m on (Y, X)."""
    cfg = cfg or ShrinkageConfig()
    m.validate_for(sample.p, sample.n)
    n = sample.n
    Y = sample.Y
    Z1 = sample.X[:, list(m.block1)]
    Z2 = sample.X[:, list(m.block2)]
    c1, c2 = cfg.resolved(m)

    # Orthogonalized design: theta1* on X1, theta2 on X2* = M1 X2.
    theta1_star = least_squares(Z1, Y)
    C = np.linalg.lstsq(Z1, Z2, rcond=RANK_TOL)[0]  # (Z1'Z1)^- Z1'Z2
    X2star = Z2 - Z1 @ C
    theta2 = least_squares(X2star, Y)

    Z = np.concatenate([Z1, Z2], axis=1)
    theta_full = least_squares(Z, Y)
    resid = Y - Z @ theta_full
    sigma_hat_sq = float(resid @ resid) / (n - m.size)

    quad1 = float(np.sum((Z1 @ theta1_star) ** 2))
    quad2 = float(np.sum((X2star @ theta2) ** 2))
    a1 = _shrink_factor(c1, sigma_hat_sq, m.size1, quad1)
    a2 = _shrink_factor(c2, sigma_hat_sq, m.size2, quad2)

    theta2_js = (1.0 - a2) * theta2
    theta1_js = (1.0 - a1) * theta1_star - C @ theta2_js
    theta_bjs = np.concatenate([theta1_js, theta2_js])

    beta_hat = np.zeros(sample.p)
    beta_hat[list(m.indices)] = theta_bjs

    return BlockJsFit(
        model=m, n=n,
        theta1_star_ls=theta1_star, theta2_ls=theta2,
        sigma_hat_sq=sigma_hat_sq, a1=a1, a2=a2,
        theta_bjs=theta_bjs, beta_hat=beta_hat,
        quad1=quad1, quad2=quad2, c1=c1, c2=c2,
    )


def predict(fitted, x0):
    """Predicted response at a new covariate vector x0 (length p)."""
    x0 = _as_vector(x0, "x0")
    if x0.shape[0] != fitted.beta_hat.shape[0]:
        raise InvalidArgumentError(
            f"x0 has length {x0.shape[0]}, expected {fitted.beta_hat.shape[0]}")
    full = float(x0 @ fitted.beta_hat)
    block = float(x0[list(fitted.model.indices)] @ fitted.theta_bjs)
    if abs(full - block) > 1e-10 * max(1.0, abs(full)):
        raise AssertionError("full-vector and block predictions disagree")
    return full


def ols_theta(sample, m):
    """Least-squares estimator of theta in model m, in block order."""
    Z = sample.X[:, list(m.indices)]
    return least_squares(Z, sample.Y)


def rewrite_identity_check(fitted, sample, m):
    """Max componentwise gap between theta_bjs and its rewritten form
    (1 - a2) theta_ols + (a2 - a1) (theta1*', 0')'."""
    theta_hat = ols_theta(sample, m)
    alt = (1.0 - fitted.a2) * theta_hat
    alt[:m.size1] += (fitted.a2 - fitted.a1) * fitted.theta1_star_ls
    return float(np.max(np.abs(fitted.theta_bjs - alt)))

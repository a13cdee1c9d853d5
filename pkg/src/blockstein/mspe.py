"""Conditional mean-squared prediction error: oracle value, its term-by-term
expansion, the empirical estimator, and the normalizer used by the
verification harness."""

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import InvalidArgumentError, NotSpdError
from .linalg import RANK_TOL
from .shrinkage import ols_theta


@dataclass(frozen=True)
class MspeReport:
    rho_sq_true: float
    rho_sq_hat: float

    @property
    def log_ratio(self):
        # log(rho_hat^2 / rho^2); the convention for rho_hat^2 = 0 is +inf.
        if self.rho_sq_hat == 0.0:
            return math.inf
        return abs_log_ratio_signed(self.rho_sq_hat, self.rho_sq_true)


def abs_log_ratio_signed(num, den):
    return math.log(num / den)


def true_mspe(fitted, cp, S=None):
    """Oracle MSPE: (theta_bjs - theta)' S (theta_bjs - theta) + sigma^2(m)."""
    S = cp.cov if S is None else np.asarray(S, dtype=float)
    d = fitted.theta_bjs - cp.theta
    if S.shape != (d.shape[0], d.shape[0]):
        raise InvalidArgumentError("S must be |m| x |m| in block order")
    return float(d @ S @ d) + cp.cond_var


def true_mspe_expanded(fitted, cp, sample, m):
    """The same quantity evaluated through its full term-by-term expansion
    in the orthogonalized parametrization; agreement with true_mspe is the
    main algebraic self-check of the fitting code."""
    k1 = m.size1
    S = cp.cov
    S11, S12, S22 = S[:k1, :k1], S[:k1, k1:], S[k1:, k1:]
    theta = cp.theta
    theta1, theta2 = theta[:k1], theta[k1:]
    s2 = cp.cond_var
    a1, a2 = fitted.a1, fitted.a2

    Z1 = sample.X[:, list(m.block1)]
    Z2 = sample.X[:, list(m.block2)]
    try:
        S11_inv_S12 = np.linalg.solve(S11, S12)
    except np.linalg.LinAlgError as e:
        raise NotSpdError(f"S11 singular: {e}") from e
    Zt2 = Z2 - Z1 @ S11_inv_S12
    G1 = np.linalg.lstsq(Z1, Zt2, rcond=RANK_TOL)[0]  # (Z1'Z1)^-1 Z1' Zt2
    C = np.linalg.lstsq(Z1, Z2, rcond=RANK_TOL)[0]

    theta1_star = theta1 + C @ theta2  # random, depends on the design
    e1 = fitted.theta1_star_ls - theta1_star
    e2 = fitted.theta2_ls - theta2
    theta_hat = ols_theta(sample, m)
    dd = theta_hat - theta

    schur = S22 - S12.T @ S11_inv_S12
    b2 = float(theta2 @ schur @ theta2)
    b = float(theta @ S @ theta)
    u = S11 @ theta1 + S12 @ theta2
    g = G1 @ theta2

    total = (1 - a2) ** 2 * float(dd @ S @ dd) + s2
    total += (a2 - a1) * (2 - a1 - a2) * float(e1 @ S11 @ e1)
    total += (a2 - a1) ** 2 * float(g @ S11 @ g)
    total += a1 ** 2 * (b - b2) + a2 ** 2 * b2
    total += 2 * a1 * (a1 - a2) * float(u @ g)
    total += 2 * a1 * (a1 - 1) * float(e1 @ u)
    total += 2 * (1 - a1) * (a2 - a1) * float(e1 @ S11 @ g)
    total += 2 * a2 * (a2 - 1) * float(e2 @ schur @ theta2)
    total += 2 * a1 * (1 - a2) * float(e2 @ (G1.T @ u))
    total += 2 * (1 - a2) * (a1 - a2) * float(e2 @ (G1.T @ (S11 @ g)))
    total += 2 * (1 - a2) * (a1 - a2) * float(e1 @ S11 @ (G1 @ e2))
    return total


def empirical_weights(a1, a2, n, m_size, m1_size):
    """The three weights multiplying sigma_hat^2, Y'P1Y/n and
    Y'M1Y/(n - |m1|)."""
    f_m = m_size / (n - m_size + 1)
    f_1 = m1_size / (n - m1_size + 1)
    w1 = ((1 - a2) ** 2 * f_m + 1 - a2 ** 2 - (a1 - a2) ** 2 * f_1
          + (a2 - a1) * (2 - a1 - a2) * f_1)
    w2 = a1 ** 2
    w3 = a2 ** 2 - a1 ** 2 * m1_size / n + (a2 - a1) ** 2 * f_1
    return w1, w2, w3


def projection_quadratics(sample, m):
    """(Y'P1Y, Y'M1Y) computed through the thin QR of X1."""
    Z1 = sample.X[:, list(m.block1)]
    Y = sample.Y
    Q1, _ = np.linalg.qr(Z1)
    p1y = float(np.sum((Q1.T @ Y) ** 2))
    yy = float(Y @ Y)
    return p1y, yy - p1y


def empirical_mspe(sample, m, fitted):
    """The plug-in estimator rho_hat^2(m)."""
    n = sample.n
    w1, w2, w3 = empirical_weights(fitted.a1, fitted.a2, n, m.size, m.size1)
    p1y, m1y = projection_quadratics(sample, m)
    return (w1 * fitted.sigma_hat_sq + w2 * p1y / n + w3 * m1y / (n - m.size1))


def mspe_report(sample, m, fitted, cp=None):
    rho_hat = empirical_mspe(sample, m, fitted)
    rho_true = true_mspe(fitted, cp) if cp is not None else math.nan
    return MspeReport(rho_sq_true=rho_true, rho_sq_hat=rho_hat)


def normalizer_r(a1, a2, s2, mu, mu2, n, m_size, m1_size):
    """The scale r that both rho^2(m) and rho_hat^2(m) concentrate around."""
    f_m = m_size / (n - m_size + 1)
    f_1 = m1_size / (n - m1_size + 1)
    return s2 * ((1 - a2) ** 2 * f_m + (a2 - a1) * (2 - a1 - a2) * f_1 + 1
                 + a1 ** 2 * (mu - mu2) + a2 ** 2 * mu2
                 + (a1 - a2) ** 2 * f_1 * mu2)


def normalizer_r_from(fitted, cp, n, m_size, m1_size):
    return normalizer_r(fitted.a1, fitted.a2, cp.cond_var, cp.mu, cp.mu2,
                        n, m_size, m1_size)

"""Closed-form finite-sample tail bounds as pure functions of their named
quantities, the deterministic inequality battery, and small helpers shared by
the verification harness.

Every bound evaluator returns the raw value (which may exceed 1);
`clip_probability` applies min(1, .) for probability use.  Exponent
arithmetic switches to extended precision (mpmath) whenever the exponent
magnitude exceeds 700, so extreme parameter regimes do not underflow to a
misleading 0.0 or overflow to inf.
"""

import math
from dataclasses import dataclass

import mpmath
import numpy as np

from .exceptions import DegenerateVarianceError, InvalidArgumentError

_EXP_SWITCH = 700.0


def _exp(exponent):
    """exp with an extended-precision path for large |exponent|."""
    if abs(exponent) > _EXP_SWITCH:
        with mpmath.workdps(50):
            return float(mpmath.exp(mpmath.mpf(exponent)))
    return math.exp(exponent)


def clip_probability(value):
    if not (value >= 0):
        raise InvalidArgumentError(f"bound value must be >= 0, got {value}")
    return min(1.0, float(value))


@dataclass(frozen=True)
class BoundInput:
    """Shared parameter bundle for the headline bounds.

    `mu` selects the signal-to-noise variants; `d` the uniform variants with
    Var(y)/sigma^2 <= d; `collection` is (count, r_n, s_n) for bounds over a
    model collection.
    """

    n: int
    m_size: int = None
    m1_size: int = None
    epsilon: float = None
    mu: float = None
    d: float = None
    collection: tuple = None  # (count, r_n, s_n)

    def __post_init__(self):
        if self.m_size is not None:
            if not (6 <= self.m_size < self.n):
                raise InvalidArgumentError(
                    f"need 6 <= m_size < n, got m_size={self.m_size}, n={self.n}")
            if not (3 <= self.m1_size <= self.m_size - 3):
                raise InvalidArgumentError(
                    f"need 3 <= m1_size <= m_size - 3, got {self.m1_size}")
        if self.epsilon is not None and not (self.epsilon > 0):
            raise InvalidArgumentError(f"epsilon must be > 0, got {self.epsilon}")
        if self.mu is not None and not (self.mu >= 0):
            raise InvalidArgumentError(f"mu must be >= 0, got {self.mu}")
        if self.d is not None and not (self.d >= 1):
            raise InvalidArgumentError(f"d must be >= 1, got {self.d}")
        if self.collection is not None:
            count, r_n, s_n = self.collection
            if not (count >= 1 and 3 <= r_n and 6 <= s_n < self.n):
                raise InvalidArgumentError(
                    f"invalid collection triple {self.collection} for n={self.n}")


def g_function(x, y):
    """G(x, y) = y/x - log((x + y)/x); >= 0 with equality iff y = 0."""
    if not (x > 0) or not (x + y > 0):
        raise InvalidArgumentError(f"need x > 0 and x + y > 0, got x={x}, y={y}")
    return y / x - math.log((x + y) / x)


def _headline(n, front, rate_sq, frac, power5, eps_kernel, denom):
    """front * exp(-n * rate_sq * (1 - frac)^power5 * eps_kernel / denom)."""
    exponent = -n * rate_sq * (1.0 - frac) ** power5 * eps_kernel / denom
    return front * _exp(exponent)


def bound_theorem1(inp):
    """Tail bound on |log(rho_hat^2/rho^2)| >= eps for one model; the mu
    variant (constant 28279) is selected when inp.mu is given."""
    eps = inp.epsilon
    n, m, m1 = inp.n, inp.m_size, inp.m1_size
    kernel = eps ** 2 / (1.0 + eps) ** 2
    if inp.mu is None:
        return _headline(n, 31.0 * m, (m1 / n) ** 2, m / n, 5, kernel, 14397.0)
    return _headline(n, 31.0 * m, 1.0, m / n, 5, kernel,
                     28279.0 * (1.0 + inp.mu) ** 2)


def _require_collection(inp):
    if inp.collection is None:
        raise InvalidArgumentError("collection triple (count, r_n, s_n) required")
    return inp.collection


def _uniform_kernel_bound(inp, denom_const, shift, d_variant, d_denom_const):
    """Shared shape of all collection-level bounds: front factor
    31*count*s_n and exponent -n (r_n/n)^2 (1-s_n/n)^5 eps^2/(c (shift+eps)^2),
    or the d-variant without the (r_n/n)^2 factor and with c d^2."""
    count, r_n, s_n = _require_collection(inp)
    eps = inp.epsilon
    n = inp.n
    front = 31.0 * count * s_n
    kernel = eps ** 2 / (shift + eps) ** 2
    if d_variant:
        if inp.d is None:
            raise InvalidArgumentError("d required for the d-variant")
        return _headline(n, front, 1.0, s_n / n, 5, kernel,
                         d_denom_const * inp.d ** 2)
    return _headline(n, front, (r_n / n) ** 2, s_n / n, 5, kernel, denom_const)


def bound_uniform(inp, d_variant=False):
    """Uniform-over-collection version of bound_theorem1."""
    return _uniform_kernel_bound(inp, 14397.0, 1.0, d_variant, 28279.0)


def bound_corollary3(inp, which, d_variant=False):
    """Selection bounds: `true_perf` compares the selected model's oracle
    MSPE to the best oracle MSPE ((2+eps)^2 denominator); `est_perf`
    compares the selected model's estimate to its own oracle value
    ((1+eps)^2 denominator)."""
    if which == "true_perf":
        shift = 2.0
    elif which == "est_perf":
        shift = 1.0
    else:
        raise InvalidArgumentError(f"which must be true_perf or est_perf, got {which!r}")
    return _uniform_kernel_bound(inp, 14397.0, shift, d_variant, 28279.0)


def bound_tv(inp, uniform=False, d_variant=False):
    """Tail bound on the total-variation distance between the estimated and
    true prediction-error laws exceeding eps (constants 900 / 1768, with the
    (1 + 4 eps)^2 kernel)."""
    eps = inp.epsilon
    n = inp.n
    kernel = eps ** 2 / (1.0 + 4.0 * eps) ** 2
    if uniform:
        count, r_n, s_n = _require_collection(inp)
        front = 31.0 * count * s_n
        if d_variant:
            if inp.d is None:
                raise InvalidArgumentError("d required for the d-variant")
            return _headline(n, front, 1.0, s_n / n, 5, kernel,
                             1768.0 * inp.d ** 2)
        return _headline(n, front, (r_n / n) ** 2, s_n / n, 5, kernel, 900.0)
    m, m1 = inp.m_size, inp.m1_size
    if d_variant or inp.mu is not None:
        if inp.mu is None:
            raise InvalidArgumentError("mu required for the mu-variant")
        return _headline(n, 31.0 * m, 1.0, m / n, 5, kernel,
                         1768.0 * (1.0 + inp.mu) ** 2)
    return _headline(n, 31.0 * m, (m1 / n) ** 2, m / n, 5, kernel, 900.0)


def bound_pi_short(inp, d_variant=False):
    """Tail bound on |log(rho_hat(selected)/rho(best))| >= eps, controlling
    the interval-length ratio (constants 3600 / 7070 with (1 + 2 eps)^2)."""
    eps = inp.epsilon
    n = inp.n
    count, r_n, s_n = _require_collection(inp)
    front = 31.0 * count * s_n
    kernel = eps ** 2 / (1.0 + 2.0 * eps) ** 2
    if d_variant:
        if inp.d is None:
            raise InvalidArgumentError("d required for the d-variant")
        return _headline(n, front, 1.0, s_n / n, 5, kernel, 7070.0 * inp.d ** 2)
    return _headline(n, front, (r_n / n) ** 2, s_n / n, 5, kernel, 3600.0)


# ---------------------------------------------------------------------------
# Elementary tail bounds.

ELEMENTARY_KINDS = (
    "quadform", "quadform_traceless", "quadform_nilpotent", "normal",
    "chisq_one_sided", "chisq_two_sided", "noncentral_balance",
    "wishart_lower_eig", "wishart_upper_eig", "wishart_upper_eig_gamma",
    "trace_inv_rel", "trace_inv_abs",
)


def elementary_tail_bounds(kind, params, epsilon):
    """Upper bound on the named tail event at deviation `epsilon`.

    kind -> required params:
      quadform: lam_d (largest eigenvalue of the psd matrix A), d
      quadform_traceless: lam_1, lam_d, d
      quadform_nilpotent: lam_max_ata (largest eigenvalue of A'A), d
      normal: tau_sq
      chisq_one_sided / chisq_two_sided: k
      noncentral_balance: d, k, noncentrality
      wishart_lower_eig: d, k, gamma1 in [0, 1)  (epsilon unused)
      wishart_upper_eig: d  (epsilon is the additive eigenvalue margin)
      wishart_upper_eig_gamma: d, k, gamma2 > 0  (epsilon unused)
      trace_inv_rel / trace_inv_abs: d, k
    """
    if kind not in ELEMENTARY_KINDS:
        raise InvalidArgumentError(f"unknown tail-bound kind {kind!r}")
    if kind not in ("wishart_lower_eig", "wishart_upper_eig_gamma"):
        if not (epsilon > 0):
            raise InvalidArgumentError(f"epsilon must be > 0, got {epsilon}")
    eps = float(epsilon) if epsilon is not None else None

    if kind == "quadform":
        d, lam_d = int(params["d"]), float(params["lam_d"])
        if lam_d < 0:
            raise InvalidArgumentError("lam_d must be >= 0 for a psd matrix")
        if lam_d == 0.0:
            return 0.0
        return 2.0 * _exp(-d * eps ** 2 / (4.0 * d * lam_d * (eps + d * lam_d)))

    if kind == "quadform_traceless":
        d = int(params["d"])
        lam_1, lam_d = float(params["lam_1"]), float(params["lam_d"])
        if lam_d == 0.0:
            return 0.0
        if not (lam_d > 0 and lam_1 < 0):
            raise InvalidArgumentError(
                "a nonzero traceless matrix needs lam_d > 0 > lam_1")
        return (2.0 * _exp(-d / 2.0 * g_function(d * lam_d, eps / 2.0))
                + 2.0 * _exp(-d / 2.0 * g_function(-d * lam_1, eps / 2.0)))

    if kind == "quadform_nilpotent":
        d, lam = int(params["d"]), float(params["lam_max_ata"])
        if lam < 0:
            raise InvalidArgumentError("lam_max_ata must be >= 0")
        if lam == 0.0:
            return 0.0
        s = d * math.sqrt(2.0 * lam)
        return 4.0 * _exp(-d * eps ** 2 / (4.0 * s * (eps + s)))

    if kind == "normal":
        tau_sq = float(params["tau_sq"])
        if not (tau_sq > 0):
            raise InvalidArgumentError(f"tau_sq must be > 0, got {tau_sq}")
        return 2.0 * _exp(-eps ** 2 / (2.0 * tau_sq))

    if kind in ("chisq_one_sided", "chisq_two_sided"):
        k = int(params["k"])
        if k < 1:
            raise InvalidArgumentError(f"k must be >= 1, got {k}")
        base = _exp(-k * eps ** 2 / (4.0 * (eps + 1.0)))
        return base if kind == "chisq_one_sided" else 2.0 * base

    if kind == "noncentral_balance":
        d, k = int(params["d"]), int(params["k"])
        lam = float(params["noncentrality"])
        if not (d >= k >= 1) or lam < 0:
            raise InvalidArgumentError("need d >= k >= 1 and noncentrality >= 0")
        return 2.0 * _exp(-d * eps ** 2 / (4.0 * (eps + 2.0 * (k / d + lam / d))))

    if kind == "wishart_lower_eig":
        d, k = int(params["d"]), int(params["k"])
        g1 = float(params["gamma1"])
        if not (d >= k >= 2) or not (0 <= g1 < 1):
            raise InvalidArgumentError("need d >= k >= 2 and gamma1 in [0, 1)")
        return _exp(-d * (1.0 - g1) ** 2 * (1.0 - math.sqrt(k / d)) ** 2 / 2.0)

    if kind == "wishart_upper_eig":
        d = int(params["d"])
        return _exp(-d * eps ** 2 / 2.0)

    if kind == "wishart_upper_eig_gamma":
        d, k = int(params["d"]), int(params["k"])
        g2 = float(params["gamma2"])
        if not (d >= k >= 2) or not (g2 > 0):
            raise InvalidArgumentError("need d >= k >= 2 and gamma2 > 0")
        return _exp(-d * g2 ** 2 * (1.0 + math.sqrt(k / d)) / 2.0)

    # trace of (V'V)^{-1} for a d x k standard normal V
    d, k = int(params["d"]), int(params["k"])
    if not (d > k >= 1):
        raise InvalidArgumentError("need d > k >= 1")
    if kind == "trace_inv_rel":
        return 2.0 * k * _exp(-(d - k) * eps ** 2 / (8.0 * (eps + 1.0) ** 2))
    fr = 1.0 - k / d
    return 2.0 * k * _exp(-(d - k) * eps ** 2 * fr ** 2
                          / (8.0 * (eps * fr + 1.0) ** 2))


# ---------------------------------------------------------------------------
# Intermediate concentration bounds for rho_hat^2/r and rho^2/r.

INTERMEDIATE_KINDS = (
    "rhohat_pos", "rhohat_neg", "rhohat_mu_pos", "rhohat_mu_neg",
    "rho_pos", "rho_neg", "rho_mu_pos", "rho_mu_neg",
)


def intermediate_lemma_bounds(kind, n, m_size, m1_size, delta, mu=None):
    """Tail bounds on rho_hat^2(m)/r > e^delta (pos) or < e^{-delta} (neg),
    and the analogous rho^2(m)/r bounds; *_mu kinds use the signal-to-noise
    variants with n in place of |m1|."""
    if kind not in INTERMEDIATE_KINDS:
        raise InvalidArgumentError(f"unknown intermediate-bound kind {kind!r}")
    if not (delta > 0):
        raise InvalidArgumentError(f"delta must be > 0, got {delta}")
    if not (6 <= m_size < n and 3 <= m1_size <= m_size - 3):
        raise InvalidArgumentError("invalid (n, m_size, m1_size)")
    if "mu" in kind:
        if mu is None or mu < 0:
            raise InvalidArgumentError("mu >= 0 required for the mu-variants")
    ed = math.exp(delta)
    num = (ed - 1.0) ** 2
    fr = 1.0 - m_size / n

    if kind == "rhohat_pos":
        return 22.0 * _exp(-m1_size * fr ** 3 * num / (210.0 * ed))
    if kind == "rhohat_neg":
        return 22.0 * _exp(-m1_size * fr ** 3 * num / (840.0 * ed ** 2))
    if kind == "rhohat_mu_pos":
        return 22.0 * _exp(-n * fr ** 3 * num / (210.0 * ed * (1.0 + mu)))
    if kind == "rhohat_mu_neg":
        return 22.0 * _exp(-n * fr ** 3 * num / (840.0 * ed ** 2 * (1.0 + mu)))

    front = 58.0 + 2.0 * m1_size
    if kind == "rho_pos":
        return front * _exp(-m1_size * (m1_size / n) * fr ** 5 * num
                            / (10477.0 * ed ** 2))
    if kind == "rho_neg":
        return front * _exp(-m1_size * (m1_size / n) * fr ** 5 * num
                            / (13089.0 * ed ** 2))
    if kind == "rho_mu_pos":
        return front * _exp(-n * fr ** 5 * num
                            / (19371.0 * (1.0 + mu) ** 2 * ed ** 2))
    return front * _exp(-n * fr ** 5 * num
                        / (22534.0 * (1.0 + mu) ** 2 * ed ** 2))


# ---------------------------------------------------------------------------
# Deterministic inequality battery.

PROP_NAMES_I = ("ineq1", "ineq2a", "ineq2b", "ineq3")
PROP_NAMES_II = ("prop1", "prop2", "propxy1", "propxy2", "propxy3",
                 "propxy4", "propxy5")


def normalized_weight_denominator(x1, x2, y1, y2, k1, k2, d):
    """The normalized quadratic q appearing in the part-(i) inequalities."""
    k = k1 + k2
    return ((1 - x2) ** 2 * k / (d - k + 1)
            + (x2 - x1) * (2 - x1 - x2) * k1 / (d - k1 + 1)
            + 1 + x1 ** 2 * y1 + x2 ** 2 * y2
            + (x1 - x2) ** 2 * k1 / (d - k1 + 1) * y2)


def _part_i_checks(x1, x2, y1, y2, k1, k2, d, tol):
    k = k1 + k2
    q = normalized_weight_denominator(x1, x2, y1, y2, k1, k2, d)
    lhs1 = abs((1 - x2) ** 2 * k / (d - k + 1)
               + (x2 - x1) * (2 - x1 - x2) * k1 / (d - k1 + 1)
               + 1 - x2 ** 2 - (x1 - x2) ** 2 * k1 / (d - k1 + 1)) / q
    lhs3 = abs(x2 ** 2 - x1 ** 2 * k1 / d
               + (x1 - x2) ** 2 * k1 / (d - k1 + 1)) / q
    checks = {
        "ineq1": lhs1 <= 1.0 / (1.0 - k / d) + tol,
        "ineq2a": x1 ** 2 / q
        <= 1.0 / (1.0 + y1 + y2 * k1 / d * (1.0 - k1 / d)) + tol,
        "ineq2b": x1 ** 2 / q <= 1.0 + tol,
        "ineq3": lhs3 <= 1.0 / ((1.0 - k1 / d) * (1.0 + y2)) + tol,
    }
    return checks


def _part_ii_checks(x, y, tol):
    rx = math.sqrt(x)
    ry = math.sqrt(y / (1.0 - x))
    return {
        "prop1": 2 * (1 - x) ** 5 / 9 <= (1 - rx) ** 4 + tol,
        "prop2": 3 * (1 - x) ** 5 / 4 <= (1 - rx) ** 2 + tol,
        "propxy1": 3 * (1 - x - y) ** 5 / 4
        <= (1 - ry) ** 2 * (1 - x) + tol,
        "propxy2": (1 - x - y) ** 5 / 2
        <= (1 - ry) ** 2 * (1 - rx) ** 2 * (1 - x) + tol,
        "propxy3": 8 * (1 - x - y) ** 5 / 45
        <= (1 - ry) ** 2 * (1 - rx) ** 4 + tol,
        "propxy4": 8 * (1 - x - y) ** 5 / 165
        <= (1 - ry) ** 2 * (1 - rx) ** 4 * (1 - x) + tol,
        "propxy5": 3 * (1 - x - y) ** 5 / 4 <= (1 - ry) ** 2 + tol,
    }


def prop_inequality_check(part, grid, tol=1e-12):
    """Evaluate the deterministic inequality battery on a grid and return
    the list of (point, inequality-name) violations (expected empty).

    part "i": grid rows (x1, x2, y1, y2, k1, k2, d) with x in [0,1],
    y >= 0, integers k1 + k2 < d; covers four inequalities.
    part "ii": grid rows (x, y) with x, y in (0, 1), x + y <= 1; covers
    seven inequalities.  Eleven named inequalities in total.
    """
    violations = []
    for row in grid:
        if part == "i":
            x1, x2, y1, y2, k1, k2, d = row
            k1, k2, d = int(k1), int(k2), int(d)
            if not (0 <= x1 <= 1 and 0 <= x2 <= 1 and y1 >= 0 and y2 >= 0
                    and k1 >= 1 and k2 >= 1 and k1 + k2 < d):
                raise InvalidArgumentError(f"grid point out of domain: {row}")
            checks = _part_i_checks(x1, x2, y1, y2, k1, k2, d, tol)
        elif part == "ii":
            x, y = row
            if not (0 < x < 1 and 0 < y < 1 and x + y <= 1):
                raise InvalidArgumentError(f"grid point out of domain: {row}")
            checks = _part_ii_checks(x, y, tol)
        else:
            raise InvalidArgumentError(f"part must be 'i' or 'ii', got {part!r}")
        for name, ok in checks.items():
            if not ok:
                violations.append((tuple(row), name))
    return violations


def plugin_mu_estimate(sample, m, fitted):
    """Plug-in signal-to-noise estimate (Y'Y/n)/sigma_hat^2 - 1."""
    if fitted.sigma_hat_sq <= 0:
        raise DegenerateVarianceError("sigma_hat^2 must be positive")
    yy = float(sample.Y @ sample.Y)
    return yy / sample.n / fitted.sigma_hat_sq - 1.0

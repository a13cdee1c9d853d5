"""Model selection: fit every candidate model, estimate each model's
out-of-sample MSPE, and pick the empirically best one (and, with oracle
access to the generating process, the truly best one)."""

import math
from dataclasses import dataclass, field

from .dgp import conditional_params
from .exceptions import InvalidArgumentError, InvalidModelError
from .mspe import MspeReport, empirical_mspe, true_mspe
from .shrinkage import ShrinkageConfig, fit


@dataclass(frozen=True)
class ModelCollection:
    models: tuple
    name: str = "collection"

    def __post_init__(self):
        models = tuple(self.models)
        if not models:
            raise InvalidArgumentError("model collection must be non-empty")
        object.__setattr__(self, "models", models)

    def __len__(self):
        return len(self.models)

    @property
    def min_block1_size(self):
        return min(m.size1 for m in self.models)

    @property
    def max_model_size(self):
        return max(m.size for m in self.models)


def collection_summary(collection, n=None):
    """(smallest block-1 size, largest model size, model count); optionally
    validates every model against the sample size."""
    if n is not None:
        for i, m in enumerate(collection.models):
            try:
                m.validate_for(p=max(m.indices) + 1, n=n)
            except InvalidModelError as e:
                raise InvalidModelError(f"model {i}: {e}") from e
    return (collection.min_block1_size, collection.max_model_size,
            len(collection))


@dataclass(frozen=True)
class SelectionResult:
    reports: tuple              # per-model MspeReport, in collection order
    fits: tuple                 # per-model BlockJsFit, in collection order
    selected_empirical: int     # argmin of rho_sq_hat
    selected_oracle: int = None  # argmin of rho_sq_true, if oracle given
    ratio_stats: dict = field(default_factory=dict)


def _argmin_lowest_index(values):
    best, best_i = math.inf, 0
    for i, v in enumerate(values):
        if v < best:
            best, best_i = v, i
    return best_i


def select(sample, collection, cfg=None, oracle=None):
    """Fit all models and select the empirical MSPE minimizer (ties broken
    by lowest collection index).  With an oracle Dgp, also locate the true
    MSPE minimizer and report the two log-ratios that quantify how good the
    empirical choice is."""
    cfg = cfg or ShrinkageConfig()
    for i, m in enumerate(collection.models):
        if m.size >= sample.n:
            raise InvalidModelError(
                f"model {i} has size {m.size} >= n = {sample.n}")

    fits = []
    reports = []
    for m in collection.models:
        f = fit(sample, m, cfg)
        rho_hat = empirical_mspe(sample, m, f)
        if oracle is not None:
            cp = conditional_params(oracle, m)
            rho_true = true_mspe(f, cp)
        else:
            rho_true = math.nan
        fits.append(f)
        reports.append(MspeReport(rho_sq_true=rho_true, rho_sq_hat=rho_hat))

    sel_emp = _argmin_lowest_index([r.rho_sq_hat for r in reports])
    sel_ora = None
    stats = {}
    if oracle is not None:
        sel_ora = _argmin_lowest_index([r.rho_sq_true for r in reports])
        stats["log_true_ratio"] = math.log(
            reports[sel_emp].rho_sq_true / reports[sel_ora].rho_sq_true)
        stats["log_est_ratio"] = reports[sel_emp].log_ratio
    return SelectionResult(reports=tuple(reports), fits=tuple(fits),
                           selected_empirical=sel_emp,
                           selected_oracle=sel_ora, ratio_stats=stats)

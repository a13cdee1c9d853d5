"""End-to-end acceptance gate.

Each test exercises one acceptance criterion and emits a single
"ACCEPTANCE CRITERION n: PASS/FAIL" line (written past pytest's capture so
it always shows in the terminal).
"""

import json
import math
import time

import mpmath
import numpy as np
from scipy.integrate import quad
from scipy.stats import norm

from blockstein import bounds as bd
from blockstein import harness as hz
from blockstein.dgp import (CandidateModel, Dgp, conditional_params,
                            generate_sample)
from blockstein.inference import conditional_coverage, tv_centered_normals
from blockstein.mspe import empirical_mspe, true_mspe, true_mspe_expanded
from blockstein.rng import RngStream
from blockstein.selection import ModelCollection, select
from blockstein.shrinkage import ShrinkageConfig, fit


def _verdict(capsys, num, ok, detail=""):
    line = f"ACCEPTANCE CRITERION {num}: {'PASS' if ok else 'FAIL'}"
    if detail:
        line += f" ({detail})"
    with capsys.disabled():
        print(line, flush=True)
    assert ok, line


def _random_config(rng, n_choices=(50, 100, 200)):
    n = int(rng.choice(n_choices))
    k1 = int(rng.integers(3, 7))
    k2 = int(rng.integers(3, 7))
    p = k1 + k2 + int(rng.integers(0, 3))
    A = rng.standard_normal((p, p))
    sigma = A @ A.T + 0.5 * np.eye(p)
    beta = rng.standard_normal(p)
    dgp = Dgp(beta=beta, sigma=sigma, noise_var=0.5 + rng.random())
    idx = rng.permutation(p)[:k1 + k2]
    m = CandidateModel(block1=tuple(int(i) for i in idx[:k1]),
                       block2=tuple(int(i) for i in idx[k1:]))
    cfg = ShrinkageConfig(c1=2 * rng.random(), c2=2 * rng.random())
    return dgp, m, n, cfg


def test_criterion_01_expanded_identity(capsys):
    start = time.time()
    rng = np.random.default_rng(101)
    worst = 0.0
    for trial in range(1000):
        dgp, m, n, cfg = _random_config(rng)
        sample = generate_sample(dgp, n, RngStream(trial))
        cp = conditional_params(dgp, m)
        f = fit(sample, m, cfg)
        direct = true_mspe(f, cp)
        expanded = true_mspe_expanded(f, cp, sample, m)
        worst = max(worst, abs(expanded - direct) / direct)
    elapsed = time.time() - start
    _verdict(capsys, 1, worst <= 1e-8 and elapsed < 60,
             f"max rel gap {worst:.2e}, {elapsed:.1f}s over 1000 configs")


def test_criterion_02_future_draw_oracle(capsys):
    start = time.time()
    rng = np.random.default_rng(102)
    hits = 0
    for trial in range(20):
        dgp, m, n, cfg = _random_config(rng, n_choices=(60, 100))
        sample = generate_sample(dgp, n, RngStream(5000 + trial))
        cp = conditional_params(dgp, m)
        f = fit(sample, m, cfg)
        rho = true_mspe(f, cp)
        n_mc = 10 ** 6
        future = generate_sample(dgp, n_mc, RngStream(6000 + trial))
        pred = future.X[:, list(m.indices)] @ f.theta_bjs
        sq = (future.Y - pred) ** 2
        se = math.sqrt(float(np.var(sq)) / n_mc)
        hits += int(abs(float(sq.mean()) - rho) <= 4 * se)
    elapsed = time.time() - start
    _verdict(capsys, 2, hits >= 19 and elapsed < 120,
             f"{hits}/20 within 4 SE of 1e6-draw mean, {elapsed:.1f}s")


def test_criterion_03_collapse_identities(capsys):
    rng = np.random.default_rng(103)
    worst = 0.0
    for trial in range(100):
        dgp, m, n, _ = _random_config(rng)
        sample = generate_sample(dgp, n, RngStream(7000 + trial))
        f0 = fit(sample, m, ShrinkageConfig(c1=0.0, c2=0.0))
        target0 = f0.sigma_hat_sq * (1.0 + m.size / (n - m.size + 1))
        got0 = empirical_mspe(sample, m, f0)
        worst = max(worst, abs(got0 - target0) / target0)
        f1 = fit(sample, m, ShrinkageConfig(c1=1e12, c2=1e12))
        assert f1.a1 == 1.0 and f1.a2 == 1.0
        target1 = float(sample.Y @ sample.Y) / n
        got1 = empirical_mspe(sample, m, f1)
        worst = max(worst, abs(got1 - target1) / target1)
    _verdict(capsys, 3, worst <= 1e-12,
             f"max rel gap {worst:.2e} over 100 datasets, both identities")


def test_criterion_04_distribution_checks(capsys):
    start = time.time()
    cfg = hz.McConfig(reps=10000, master_seed=104)
    results = {}
    for kind, params in [
        ("hot_ratio", {"n": 40, "m_size": 6, "m1_size": 3}),
        ("sigma_hat", {"n": 40, "m_size": 6, "m1_size": 3}),
        ("wishart_schur", {"n": 40, "m_size": 6, "m1_size": 3}),
        ("inv_chisq_diag", {"d": 20, "k": 4}),
    ]:
        out = hz.verify_distribution(kind, params, cfg)
        results[kind] = out["p_value"]
    elapsed = time.time() - start
    ok = all(p > 0.001 for p in results.values()) and elapsed < 180
    detail = ", ".join(f"{k} p={p:.3f}" for k, p in results.items())
    _verdict(capsys, 4, ok, f"{detail}, {elapsed:.1f}s")


def test_criterion_05_nonvacuous_tail_bounds(capsys):
    start = time.time()
    reps = 10 ** 5
    # the smallest frequency a Wilson-0.999 limit can certify at this rep
    # count; bounds below it are checked against the raw frequency instead
    floor = hz.wilson_upper(0, reps, 0.999)
    cases = [
        ("chisq_two_sided", {"k": 200}, (0.25, 0.3, 0.4)),
        ("quadform", {"A": (np.eye(5) / 5).tolist()}, (0.6, 0.8, 1.0)),
        ("wishart_lower_eig", {"d": 100, "k": 10}, (0.4, 0.5)),
        ("wishart_upper_eig_gamma", {"d": 100, "k": 10}, (0.4, 0.5)),
        ("trace_inv_rel", {"d": 60, "k": 5}, (0.5, 1.0)),
    ]
    ok = True
    details = []
    for kind, params, grid in cases:
        cfg = hz.McConfig(reps=reps, master_seed=105, epsilon_grid=grid)
        verdicts = hz.verify_tail_bound(kind, params, cfg)
        for v in verdicts:
            if v.bound_value < floor:
                point_ok = v.empirical_freq <= v.bound_value
            else:
                point_ok = v.wilson_upper <= v.bound_value
            ok = ok and point_ok
            if not point_ok:
                details.append(f"{kind}@{v.epsilon}: wilson "
                               f"{v.wilson_upper:.2e} > {v.bound_value:.2e}")
    elapsed = time.time() - start
    ok = ok and elapsed < 300
    _verdict(capsys, 5, ok, "; ".join(details) or
             f"all grid points certified at 1e5 reps, {elapsed:.1f}s")


def test_criterion_06_inequality_battery(capsys):
    start = time.time()
    rng = np.random.default_rng(106)
    grid_i = []
    for _ in range(50000):
        d = int(rng.integers(8, 400))
        k1 = int(rng.integers(1, min(d - 2, 40)))
        k2 = int(rng.integers(1, min(d - k1, 40)))
        grid_i.append((rng.random(), rng.random(), 10 * rng.random(),
                       10 * rng.random(), k1, k2, d))
    violations = bd.prop_inequality_check("i", grid_i, tol=1e-12)
    x = rng.uniform(1e-9, 1 - 1e-9, 50000)
    y = rng.uniform(1e-9, 1.0, 50000) * (1 - x)
    grid_ii = list(zip(x.tolist(), y.tolist()))
    violations += bd.prop_inequality_check("ii", grid_ii, tol=1e-12)
    elapsed = time.time() - start
    _verdict(capsys, 6, not violations and elapsed < 30,
             f"{len(violations)} violations on 1e5 points, {elapsed:.1f}s")


def _tv_quadrature(v1, v2):
    f = lambda t: abs(norm.pdf(t, scale=math.sqrt(v1))
                      - norm.pdf(t, scale=math.sqrt(v2)))
    val, _ = quad(f, -np.inf, np.inf, limit=200)
    return 0.5 * val


def test_criterion_07_tv_and_coverage(capsys):
    rng = np.random.default_rng(107)
    ok = True
    details = []
    # TV against quadrature on 100 pairs
    worst_tv = 0.0
    for _ in range(100):
        v1, v2 = 0.05 + 4 * rng.random(), 0.05 + 4 * rng.random()
        worst_tv = max(worst_tv,
                       abs(tv_centered_normals(v1, v2) - _tv_quadrature(v1, v2)))
    if worst_tv > 1e-6:
        ok, _ = False, details.append(f"tv quadrature gap {worst_tv:.2e}")
    # quarter-log-ratio domination on 1e4 pairs
    v1 = 0.01 + 5 * rng.random(10000)
    v2 = 0.01 + 5 * rng.random(10000)
    for a, b in zip(v1, v2):
        if tv_centered_normals(a, b) > abs(math.log(a / b)) / 4 + 1e-12:
            ok = False
            details.append("quarter-log-ratio bound violated")
            break
    # coverage against brute force on 20 configurations
    hits = 0
    for trial in range(20):
        g = np.random.default_rng(1070 + trial)
        rho = 0.5 + 2 * g.random()
        ratio = 0.5 + g.random()
        alpha = 0.02 + 0.3 * g.random()
        n_mc = 200000
        err = g.standard_normal(n_mc) * math.sqrt(rho)
        hw = norm.ppf(1 - alpha / 2) * math.sqrt(ratio * rho)
        freq = float(np.mean(np.abs(err) <= hw))
        expected = conditional_coverage(ratio * rho, rho, alpha)
        se = math.sqrt(max(expected * (1 - expected), 1e-12) / n_mc)
        hits += int(abs(freq - expected) <= 4 * se)
    if hits < 19:
        ok = False
        details.append(f"coverage MC hits {hits}/20")
    # exact nominal coverage under injection
    worst_inj = 0.0
    for _ in range(100):
        rho = 0.1 + 5 * rng.random()
        alpha = 0.01 + 0.9 * rng.random()
        worst_inj = max(worst_inj, abs(conditional_coverage(rho, rho, alpha)
                                       - (1 - alpha)))
    if worst_inj > 1e-12:
        ok = False
        details.append(f"injected coverage gap {worst_inj:.2e}")
    _verdict(capsys, 7, ok, "; ".join(details)
             or f"tv gap {worst_tv:.1e}, coverage {hits}/20, "
                f"injection gap {worst_inj:.1e}")


def _mp_headline(n, front, rate_sq, frac, power5, kernel_num, kernel_den,
                 denom):
    with mpmath.workdps(40):
        e = (-mpmath.mpf(n) * mpmath.mpf(rate_sq)
             * (1 - mpmath.mpf(frac)) ** power5
             * mpmath.mpf(kernel_num)
             / (mpmath.mpf(kernel_den) * mpmath.mpf(denom)))
        return float(mpmath.mpf(front) * mpmath.exp(e))


def test_criterion_08_headline_bounds_and_experiments(capsys):
    rng = np.random.default_rng(108)
    worst = 0.0
    for _ in range(50):
        n = int(rng.integers(60, 3000))
        s_n = int(rng.integers(8, min(40, n // 2)))
        r_n = int(rng.integers(3, s_n - 4))
        m, m1 = s_n, r_n
        count = int(rng.integers(1, 40))
        eps = 0.05 + 2 * rng.random()
        mu = 3 * rng.random()
        d = 1.0 + 3 * rng.random()
        single = bd.BoundInput(n=n, m_size=m, m1_size=m1, epsilon=eps)
        single_mu = bd.BoundInput(n=n, m_size=m, m1_size=m1, epsilon=eps,
                                  mu=mu)
        coll = bd.BoundInput(n=n, epsilon=eps, collection=(count, r_n, s_n),
                             d=d)
        pairs = [
            (bd.bound_theorem1(single),
             _mp_headline(n, 31 * m, (m1 / n) ** 2, m / n, 5,
                          eps ** 2, (1 + eps) ** 2, 14397)),
            (bd.bound_theorem1(single_mu),
             _mp_headline(n, 31 * m, 1.0, m / n, 5, eps ** 2,
                          (1 + eps) ** 2, 28279 * (1 + mu) ** 2)),
            (bd.bound_uniform(coll),
             _mp_headline(n, 31 * count * s_n, (r_n / n) ** 2, s_n / n, 5,
                          eps ** 2, (1 + eps) ** 2, 14397)),
            (bd.bound_corollary3(coll, "true_perf"),
             _mp_headline(n, 31 * count * s_n, (r_n / n) ** 2, s_n / n, 5,
                          eps ** 2, (2 + eps) ** 2, 14397)),
            (bd.bound_tv(single),
             _mp_headline(n, 31 * m, (m1 / n) ** 2, m / n, 5,
                          eps ** 2, (1 + 4 * eps) ** 2, 900)),
            (bd.bound_tv(coll, uniform=True, d_variant=True),
             _mp_headline(n, 31 * count * s_n, 1.0, s_n / n, 5,
                          eps ** 2, (1 + 4 * eps) ** 2, 1768 * d ** 2)),
            (bd.bound_pi_short(coll),
             _mp_headline(n, 31 * count * s_n, (r_n / n) ** 2, s_n / n, 5,
                          eps ** 2, (1 + 2 * eps) ** 2, 3600)),
        ]
        for got, want in pairs:
            worst = max(worst, abs(got - want) / max(abs(want), 1e-300))
    grid_ok = worst <= 1e-12

    # experiment exceedance frequencies vs clipped bounds at n = 200
    beta = np.zeros(20)
    beta[:4] = [1.0, 0.7, 0.4, 0.2]
    dgp = Dgp(beta=beta, sigma=np.eye(20), noise_var=1.0)
    models = [CandidateModel(block1=(0, 1, 2),
                             block2=tuple(range(3, 3 + k2)))
              for k2 in range(3, 11)]
    coll_models = ModelCollection(models=tuple(models))
    cfg = hz.McConfig(reps=1000, master_seed=108)
    exp_ok = True
    vacuous_labeled = True
    payload = hz.experiment_ratio(dgp, coll_models, 200, cfg)
    verdicts = [v for pm in payload["per_model"] for v in pm["per_epsilon"]]
    verdicts += payload["uniform"]
    sel = hz.experiment_selection(dgp, coll_models, 200, cfg)
    for vs in sel["per_epsilon"].values():
        verdicts += vs
    cov = hz.experiment_coverage(dgp, coll_models, 200, cfg)
    for vs in cov["per_epsilon"].values():
        verdicts += vs
    for v in verdicts:
        if v["empirical_freq"] > v["clipped_bound"]:
            exp_ok = False
        if v["clipped_bound"] >= 1.0 and not v["vacuous"]:
            vacuous_labeled = False
    n_vac = sum(v["vacuous"] for v in verdicts)
    _verdict(capsys, 8, grid_ok and exp_ok and vacuous_labeled,
             f"grid max rel gap {worst:.1e}; {len(verdicts)} verdicts, "
             f"{n_vac} vacuous (labeled), all frequencies <= clipped bounds")


def test_criterion_09_selection_trend(capsys):
    start = time.time()
    p = 33
    beta = np.zeros(p)
    beta[:6] = [0.30, 0.27, 0.24, 0.21, 0.18, 0.15]
    dgp = Dgp(beta=beta, sigma=np.eye(p), noise_var=1.0)
    models = tuple(CandidateModel(block1=(0, 1, 2),
                                  block2=tuple(range(3, 6 + 3 * j)))
                   for j in range(10))
    coll = ModelCollection(models=models)
    match_freq = {}
    median_gap = {}
    for n in (100, 200, 400):
        matches = 0
        gaps = []
        for rep in range(500):
            sample = generate_sample(dgp, n, RngStream(109, 10 * n + rep))
            res = select(sample, coll, oracle=dgp)
            matches += int(res.selected_empirical == res.selected_oracle)
            gaps.append(abs(res.ratio_stats["log_true_ratio"]))
        match_freq[n] = matches / 500
        median_gap[n] = float(np.median(gaps))
    elapsed = time.time() - start
    trend_ok = match_freq[100] <= match_freq[200] <= match_freq[400]
    gap_ok = median_gap[400] < median_gap[100]
    _verdict(capsys, 9, trend_ok and gap_ok and elapsed < 300,
             f"match freq {match_freq}, median |log ratio| {median_gap}, "
             f"{elapsed:.1f}s")


def test_criterion_10_determinism_across_parallelism(capsys):
    beta = np.zeros(10)
    beta[:4] = [1.0, 0.7, 0.4, 0.2]
    dgp = Dgp(beta=beta, sigma=np.eye(10), noise_var=1.0)
    coll = ModelCollection(models=(
        CandidateModel(block1=(0, 1, 2), block2=(3, 4, 5)),
        CandidateModel(block1=(0, 1, 2), block2=(6, 7, 8)),
    ))
    ok = True
    for runner in (hz.experiment_ratio, hz.experiment_selection,
                   hz.experiment_coverage):
        texts = []
        for par in (1, 8):
            cfg = hz.McConfig(reps=50, master_seed=110, parallelism=par)
            texts.append(json.dumps(runner(dgp, coll, 120, cfg),
                                    sort_keys=True))
        ok = ok and texts[0] == texts[1]
    _verdict(capsys, 10, ok, "ratio/selection/coverage payloads byte-identical "
                     "at parallelism 1 and 8")

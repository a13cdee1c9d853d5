"""Command-line front end.

Subcommands: gen, fit, select, interval, bounds, verify, experiment.
Exit codes: 0 ok, 1 usage/config error, 2 verification failure.

Config file (JSON): dgp (p, beta, sigma, noise_var), models (1-based block
indices), shrinkage, mc, alpha.  Sigma accepts a dense matrix or the
shorthands "identity" and "ar1:<rho>".
"""

import argparse
import csv
import json
import os
import sys
from datetime import datetime, timezone
from importlib import resources

import jsonschema
import numpy as np

from . import bounds as bd
from . import harness
from .dgp import CandidateModel, Dgp, TrainingSample, conditional_params, generate_sample
from .exceptions import BlocksteinError, InvalidArgumentError
from .inference import build_interval
from .mspe import empirical_mspe, true_mspe
from .rng import RngStream
from .selection import ModelCollection, select
from .shrinkage import ShrinkageConfig, fit

SCHEMA_VERSION = 1

_CONFIG_KEYS = {"schema_version", "dgp", "models", "shrinkage", "mc", "alpha"}
_DGP_KEYS = {"p", "beta", "sigma", "noise_var"}
_MODEL_KEYS = {"block1", "block2"}
_SHRINK_KEYS = {"c1", "c2"}
_MC_KEYS = {"reps", "master_seed", "epsilon_grid", "confidence", "parallelism"}


def _fail(msg, code=1):
    print(f"error: {msg}", file=sys.stderr)
    raise SystemExit(code)


def _check_keys(obj, allowed, context):
    unknown = set(obj) - allowed
    if unknown:
        raise InvalidArgumentError(
            f"unknown keys in {context}: {sorted(unknown)}")


def _parse_sigma(spec, p):
    if isinstance(spec, str):
        if spec == "identity":
            return np.eye(p)
        if spec.startswith("ar1:"):
            rho = float(spec.split(":", 1)[1])
            idx = np.arange(p)
            return rho ** np.abs(idx[:, None] - idx[None, :])
        raise InvalidArgumentError(f"unknown sigma shorthand {spec!r}")
    return np.asarray(spec, dtype=float)


def load_config(path):
    with open(path) as fh:
        raw = json.load(fh)
    _check_keys(raw, _CONFIG_KEYS, "config")
    if raw.get("schema_version", SCHEMA_VERSION) != SCHEMA_VERSION:
        raise InvalidArgumentError(
            f"unsupported config schema_version {raw.get('schema_version')}")
    cfg = {}
    dspec = raw.get("dgp")
    if dspec is not None:
        _check_keys(dspec, _DGP_KEYS, "dgp")
        p = int(dspec["p"])
        beta = np.asarray(dspec["beta"], dtype=float)
        if beta.shape != (p,):
            raise InvalidArgumentError(f"beta must have length p={p}")
        sigma = _parse_sigma(dspec.get("sigma", "identity"), p)
        cfg["dgp"] = Dgp(beta=beta, sigma=sigma,
                         noise_var=float(dspec["noise_var"]))
    models = []
    for i, mspec in enumerate(raw.get("models", [])):
        _check_keys(mspec, _MODEL_KEYS, f"models[{i}]")
        # config indices are 1-based (column x1 is the first regressor)
        b1 = tuple(int(j) - 1 for j in mspec["block1"])
        b2 = tuple(int(j) - 1 for j in mspec["block2"])
        if any(j < 0 for j in b1 + b2):
            raise InvalidArgumentError(
                f"models[{i}]: config block indices are 1-based")
        models.append(CandidateModel(block1=b1, block2=b2))
    if models:
        cfg["collection"] = ModelCollection(models=tuple(models))
    sh = raw.get("shrinkage", "default")
    if sh == "default" or sh is None:
        cfg["shrinkage"] = ShrinkageConfig()
    else:
        _check_keys(sh, _SHRINK_KEYS, "shrinkage")
        cfg["shrinkage"] = ShrinkageConfig(c1=sh.get("c1"), c2=sh.get("c2"))
    mc = raw.get("mc")
    if mc is not None:
        _check_keys(mc, _MC_KEYS, "mc")
        cfg["mc"] = dict(mc)
    cfg["alpha"] = float(raw.get("alpha", 0.1))
    return cfg


def _threads_default():
    env = os.environ.get("BLOCKSTEIN_THREADS")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise InvalidArgumentError(
                f"BLOCKSTEIN_THREADS must be an integer, got {env!r}")
    return 0


def _mc_config(cfg, args):
    mc = dict(cfg.get("mc", {}))
    if getattr(args, "reps", None) is not None:
        mc["reps"] = args.reps
    if getattr(args, "seed", None) is not None:
        mc["master_seed"] = args.seed
    par = _threads_default()
    if getattr(args, "parallelism", None) is not None:
        par = args.parallelism
    elif mc.get("parallelism") is not None and par == 0:
        par = mc["parallelism"]
    mc["parallelism"] = par
    mc.setdefault("reps", 1000)
    mc.setdefault("master_seed", 0)
    mc.setdefault("epsilon_grid", [0.25, 0.5, 1.0])
    mc.setdefault("confidence", 0.999)
    return harness.McConfig(reps=int(mc["reps"]),
                            master_seed=int(mc["master_seed"]),
                            epsilon_grid=tuple(mc["epsilon_grid"]),
                            confidence=float(mc["confidence"]),
                            parallelism=int(mc["parallelism"]))


def _report(command, payload):
    return {
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "payload": payload,
        "metadata": {
            "timestamp": datetime.now(timezone.utc).isoformat(),
        },
    }


def validate_report(report):
    schema = json.loads(
        resources.files("blockstein.schemas").joinpath("report.schema.json")
        .read_text())
    jsonschema.validate(report, schema)


def _emit(report, out_path):
    validate_report(report)
    text = json.dumps(report, indent=2, sort_keys=True, allow_nan=True)
    if out_path:
        with open(out_path, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def read_csv_data(path):
    with open(path) as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise InvalidArgumentError(f"{path}: empty file")
        p = len(header) - 1
        if header[0] != "y" or header[1:] != [f"x{i+1}" for i in range(p)]:
            raise InvalidArgumentError(
                f"{path}: header must be y,x1,...,xp, got {header}")
        ys, xs = [], []
        for lineno, row in enumerate(reader, start=2):
            if len(row) != p + 1:
                raise InvalidArgumentError(
                    f"{path}:{lineno}: expected {p + 1} fields, got {len(row)}")
            try:
                vals = [float(v) for v in row]
            except ValueError as e:
                raise InvalidArgumentError(f"{path}:{lineno}: {e}") from e
            ys.append(vals[0])
            xs.append(vals[1:])
    return TrainingSample(X=np.asarray(xs), Y=np.asarray(ys))


def cmd_gen(args):
    cfg = load_config(args.config)
    dgp = cfg.get("dgp") or _fail("config must define a dgp for gen")
    rng = RngStream(args.seed if args.seed is not None else 0)
    sample = generate_sample(dgp, args.n, rng)
    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["y"] + [f"x{i+1}" for i in range(dgp.p)])
        for i in range(sample.n):
            writer.writerow([repr(float(sample.Y[i]))]
                            + [repr(float(v)) for v in sample.X[i]])
    return 0


def _per_model_payload(sample, cfg, with_oracle):
    collection = cfg.get("collection") or _fail("config must define models")
    shrink = cfg["shrinkage"]
    oracle = cfg.get("dgp") if with_oracle else None
    result = select(sample, collection, shrink, oracle=oracle)
    rows = []
    for j, (f, rep) in enumerate(zip(result.fits, result.reports)):
        row = {
            "model_index": j,
            "a1": f.a1, "a2": f.a2,
            "sigma_hat_sq": f.sigma_hat_sq,
            "rho_hat_sq": rep.rho_sq_hat,
        }
        if with_oracle:
            row["rho_sq_true"] = rep.rho_sq_true
            row["log_ratio"] = rep.log_ratio
        rows.append(row)
    return result, {"models": rows}


def cmd_fit(args):
    cfg = load_config(args.config)
    sample = read_csv_data(args.data)
    _, payload = _per_model_payload(sample, cfg, args.oracle)
    _emit(_report("fit", payload), args.out)
    return 0


def cmd_select(args):
    cfg = load_config(args.config)
    sample = read_csv_data(args.data)
    result, payload = _per_model_payload(sample, cfg, args.oracle)
    payload["selected_empirical"] = result.selected_empirical
    if args.oracle:
        payload["selected_oracle"] = result.selected_oracle
        payload["ratio_stats"] = result.ratio_stats
    _emit(_report("select", payload), args.out)
    return 0


def cmd_interval(args):
    cfg = load_config(args.config)
    sample = read_csv_data(args.data)
    collection = cfg.get("collection") or _fail("config must define models")
    result = select(sample, collection, cfg["shrinkage"])
    j = result.selected_empirical
    x0 = np.asarray([float(v) for v in args.x0.split(",")])
    alpha = args.alpha if args.alpha is not None else cfg["alpha"]
    interval = build_interval(result.fits[j], x0,
                              result.reports[j].rho_sq_hat, alpha)
    payload = {
        "selected_empirical": j,
        "center": interval.center,
        "half_width": interval.half_width,
        "alpha": interval.alpha,
    }
    _emit(_report("interval", payload), args.out)
    return 0


def cmd_bounds(args):
    name = args.name
    eps = args.eps
    coll = None
    if args.count is not None:
        coll = (args.count, args.rn, args.sn)
    if name == "theorem1":
        inp = bd.BoundInput(n=args.n, m_size=args.m, m1_size=args.m1,
                            epsilon=eps, mu=args.mu)
        raw = bd.bound_theorem1(inp)
    elif name == "uniform":
        inp = bd.BoundInput(n=args.n, epsilon=eps, collection=coll, d=args.d)
        raw = bd.bound_uniform(inp, d_variant=args.d is not None)
    elif name == "corollary3":
        inp = bd.BoundInput(n=args.n, epsilon=eps, collection=coll, d=args.d)
        raw = bd.bound_corollary3(inp, args.which or "true_perf",
                                  d_variant=args.d is not None)
    elif name == "tv":
        if coll is not None:
            inp = bd.BoundInput(n=args.n, epsilon=eps, collection=coll,
                                d=args.d)
            raw = bd.bound_tv(inp, uniform=True, d_variant=args.d is not None)
        else:
            inp = bd.BoundInput(n=args.n, m_size=args.m, m1_size=args.m1,
                                epsilon=eps, mu=args.mu)
            raw = bd.bound_tv(inp)
    elif name == "pi_short":
        inp = bd.BoundInput(n=args.n, epsilon=eps, collection=coll, d=args.d)
        raw = bd.bound_pi_short(inp, d_variant=args.d is not None)
    else:
        _fail(f"unknown bound name {name!r}")
    payload = {"name": name, "raw": raw, "clipped": bd.clip_probability(raw)}
    _emit(_report("bounds", payload), args.out)
    return 0


_VERIFY_KIND_MAP = {
    "chisq_tail": "chisq_two_sided",
    "chisq_tail_one_sided": "chisq_one_sided",
}


def cmd_verify(args):
    kind = _VERIFY_KIND_MAP.get(args.kind, args.kind)
    mc = harness.McConfig(
        reps=args.reps, master_seed=args.seed or 0,
        epsilon_grid=tuple(args.eps) if args.eps else (0.25, 0.5, 1.0),
        parallelism=args.parallelism or _threads_default())
    if kind in harness.DISTRIBUTION_KINDS:
        params = {"n": args.n, "m_size": args.m, "m1_size": args.m1,
                  "d": args.d, "k": args.k}
        result = harness.verify_distribution(kind, params, mc)
        payload = {"kind": kind, "result": result}
        failed = not result["passed"]
    else:
        params = {}
        if args.k is not None:
            params["k"] = args.k
        if args.d is not None:
            params["d"] = args.d
        if kind.startswith("quadform"):
            d = args.d or _fail("--d required for quadratic-form kinds")
            params["A"] = (np.eye(d) / d).tolist()
        if args.tau_sq is not None:
            params["tau_sq"] = args.tau_sq
        if args.noncentrality is not None:
            params["noncentrality"] = args.noncentrality
        verdicts = harness.verify_tail_bound(kind, params, mc)
        payload = {"kind": kind,
                   "per_epsilon": [v.to_dict() for v in verdicts]}
        failed = not all(v.passed for v in verdicts)
    report = _report("verify", payload)
    _emit(report, args.out)
    if failed:
        print("verification failed", file=sys.stderr)
        return 2
    return 0


def cmd_experiment(args):
    cfg = load_config(args.config)
    dgp = cfg.get("dgp") or _fail("config must define a dgp")
    collection = cfg.get("collection") or _fail("config must define models")
    mc = _mc_config(cfg, args)
    shrink = cfg["shrinkage"]
    if args.which == "ratio":
        payload = harness.experiment_ratio(dgp, collection, args.n, mc, shrink)
    elif args.which == "selection":
        payload = harness.experiment_selection(dgp, collection, args.n, mc,
                                               shrink)
    elif args.which == "coverage":
        alpha = args.alpha if args.alpha is not None else cfg["alpha"]
        payload = harness.experiment_coverage(
            dgp, collection, args.n, mc, shrink, alpha=alpha,
            oracle_injection=args.oracle)
    else:
        _fail(f"unknown experiment {args.which!r}")
    report = _report("experiment", payload)
    _emit(report, args.out)
    if not payload.get("all_passed", True):
        print("experiment verdicts failed", file=sys.stderr)
        return 2
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="blockstein",
        description="Block James-Stein submodel fitting, model selection, "
                    "prediction intervals, and bound verification.")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("gen", help="generate a synthetic dataset CSV")
    p.add_argument("--config", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_gen)

    for name, func in (("fit", cmd_fit), ("select", cmd_select)):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True)
        p.add_argument("--data", required=True)
        p.add_argument("--out")
        p.add_argument("--oracle", action="store_true",
                       help="include oracle MSPE from the config dgp")
        p.set_defaults(func=func)

    p = sub.add_parser("interval")
    p.add_argument("--config", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--x0", required=True,
                   help="comma-separated covariate vector of length p")
    p.add_argument("--alpha", type=float)
    p.add_argument("--out")
    p.set_defaults(func=cmd_interval)

    p = sub.add_parser("bounds")
    p.add_argument("--name", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--m", type=int)
    p.add_argument("--m1", type=int)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--mu", type=float)
    p.add_argument("--d", type=float)
    p.add_argument("--count", type=int)
    p.add_argument("--rn", type=int)
    p.add_argument("--sn", type=int)
    p.add_argument("--which", choices=["true_perf", "est_perf"])
    p.add_argument("--out")
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("verify")
    p.add_argument("--kind", required=True)
    p.add_argument("--reps", type=int, default=10000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--eps", type=float, nargs="+")
    p.add_argument("--n", type=int)
    p.add_argument("--m", type=int)
    p.add_argument("--m1", type=int)
    p.add_argument("--d", type=int)
    p.add_argument("--k", type=int)
    p.add_argument("--tau-sq", type=float, dest="tau_sq")
    p.add_argument("--noncentrality", type=float)
    p.add_argument("--parallelism", type=int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("experiment")
    p.add_argument("which", choices=["ratio", "selection", "coverage"])
    p.add_argument("--config", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--reps", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--parallelism", type=int)
    p.add_argument("--alpha", type=float)
    p.add_argument("--oracle", action="store_true",
                   help="inject oracle MSPE values (coverage only)")
    p.add_argument("--out")
    p.set_defaults(func=cmd_experiment)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except SystemExit:
        raise
    except (BlocksteinError, OSError, json.JSONDecodeError, KeyError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

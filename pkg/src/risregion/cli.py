"""Command line interface: ``risregion {region,single-point,validate,fixtures}``."""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import os
import platform
import sys

import numpy as np
import scipy
import yaml

from . import __version__
from .ao import StopRule, run_ao
from .errors import RisRegionError
from .region import sweep_schemes
from .scenario import (
    DEFAULT_IQI,
    IqiConfig,
    ScenarioConfig,
    available_realizations,
    fixed_direct_channels,
    fixture_config,
    generate_scene,
)
from .schemes import parse_scheme
from .validation import run_suite


def _fmt(x):
    return repr(float(x))


def csv_header(K):
    return ["scheme"] + [f"alpha{k + 1}" for k in range(K)] + [f"r{k + 1}" for k in range(K)] + ["converged", "iters"]


def csv_rows(label, points):
    for p in points:
        yield ([label] + [_fmt(a) for a in p.alpha] + [_fmt(r) for r in p.rates]
               + ["true" if p.converged else "false", str(int(p.iterations))])


def render_csv(results, K):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(csv_header(K))
    for label, points in results.items():
        w.writerows(csv_rows(label, points))
    return buf.getvalue()


def render_trace(point):
    head = f"# scheme {point.scheme} alpha {' '.join(_fmt(a) for a in point.alpha)} status {point.status}\n"
    return head + "".join(_fmt(v) + "\n" for v in point.trace)


def versions():
    return {
        "risregion": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "pyyaml": yaml.__version__,
    }


def _sha256(text):
    return hashlib.sha256(text.encode()).hexdigest()


def _write(path, text):
    d = os.path.dirname(path)
    if d:
        os.makedirs(d, exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(text)


# ----------------------------------------------------------------- config


def _load_config_file(path):
    with open(path) as fh:
        text = fh.read()
    try:
        # manifests are JSON; YAML 1.1 would read "1e-05" as a string
        data = json.loads(text)
    except ValueError:
        data = yaml.safe_load(text) or {}
    if "config" in data and "versions" in data:
        # a run manifest: replay its configuration
        data = data["config"]
    return ScenarioConfig.from_dict(data)


def _parse_floats(text, n=None, what="values"):
    try:
        vals = [float(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"could not parse {what}: {text!r}")
    if n is not None and len(vals) != n:
        raise argparse.ArgumentTypeError(f"expected {n} comma-separated {what}")
    return vals


def expand_schemes(labels, ris):
    """With a RIS, each RIS-free scheme is also run with the RIS."""
    out = []
    for lab in labels:
        s = parse_scheme(lab).label
        if s not in out:
            out.append(s)
    if ris:
        for s in list(out):
            if not s.endswith("_IR"):
                t = s + "_IR"
                if t not in out:
                    out.append(t)
    return out


def build_config(args):
    if args.config:
        cfg = _load_config_file(args.config)
        if args.scenario:
            raise RisRegionError("use either --config or --scenario")
    else:
        name = args.scenario or "C1"
        cfg = fixture_config(name)
    if args.power_db is not None:
        cfg.power_db = args.power_db
    if args.sigma2 is not None:
        cfg.sigma2 = args.sigma2
    if args.seed is not None:
        cfg.seed = args.seed
    if args.iqi_params:
        cfg.iqi = IqiConfig(*_parse_floats(args.iqi_params, 4, "IQI parameters"))
    elif args.iqi:
        cfg.iqi = IqiConfig(**vars(DEFAULT_IQI))
    if args.ris or args.ris_elements is not None:
        cfg.n_ris = args.ris_elements if args.ris_elements is not None else (cfg.n_ris or 16)
    if args.epsilon is not None:
        cfg.epsilon = args.epsilon
    if args.max_iter is not None:
        cfg.max_iter = args.max_iter
    if args.rel_tol is not None:
        cfg.rel_tol = args.rel_tol
    if getattr(args, "single_start", False):
        cfg.multistart = False
    if getattr(args, "alpha_points", None) is not None:
        cfg.alpha_points = args.alpha_points
    if getattr(args, "schemes", None):
        cfg.schemes = [s for s in args.schemes.split(",") if s.strip()]
    if not args.config or args.ris:
        cfg.schemes = expand_schemes(cfg.schemes, args.ris)
    return cfg.validate()


def _stop(cfg):
    return StopRule(rel_tol=cfg.rel_tol, max_iter=cfg.max_iter)


# --------------------------------------------------------------- commands


def cmd_region(args):
    cfg = build_config(args)
    scene = generate_scene(cfg)
    profile = cfg.profile()
    results = sweep_schemes(scene, profile, cfg.schemes, cfg.alpha_points, stop=_stop(cfg),
                            epsilon=cfg.epsilon, workers=args.workers, multistart=cfg.multistart)
    text = render_csv(results, cfg.K)
    _write(args.out, text)
    traces = {}
    if args.traces:
        for label, points in results.items():
            for i, p in enumerate(points):
                if not p.trace:
                    continue
                name = f"{label}_{i:03d}.txt"
                body = render_trace(p)
                _write(os.path.join(args.traces, name), body)
                traces[name] = _sha256(body)
    manifest = {
        "command": "region",
        "config": cfg.to_dict(),
        "seed": cfg.seed,
        "versions": versions(),
        "outputs": {"csv": {"path": os.path.basename(args.out), "sha256": _sha256(text)}, "traces": traces},
    }
    manifest_path = args.manifest or os.path.splitext(args.out)[0] + ".manifest.json"
    _write(manifest_path, json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    failed = sum(p.status.startswith("failed") for pts in results.values() for p in pts)
    n_rows = sum(len(p) for p in results.values())
    print(f"wrote {n_rows} rows to {args.out} ({failed} failed points); manifest {manifest_path}")
    return 0


def cmd_single_point(args):
    cfg = build_config(args)
    scene = generate_scene(cfg)
    alpha = _parse_floats(args.alpha, cfg.K, "weights")
    _, point = run_ao(scene, cfg.profile(), args.scheme, alpha, stop=_stop(cfg), epsilon=cfg.epsilon)
    print(f"scheme {point.scheme}  alpha {alpha}")
    print("rates " + " ".join(f"{r:.6f}" for r in point.rates))
    print(f"objective {point.objective:.9f}  status {point.status}  iterations {point.iterations}")
    if args.trace:
        _write(args.trace, render_trace(point))
    if args.out:
        _write(args.out, render_csv({point.scheme: [point]}, cfg.K))
    return 0


def cmd_validate(args):
    checks = run_suite(args.suite, seed=args.seed)
    for c in checks:
        print(f"{'PASS' if c.passed else 'FAIL'}  {c.name}  {c.detail}")
    n_pass = sum(c.passed for c in checks)
    print(f"{n_pass}/{len(checks)} checks passed")
    return 0 if n_pass == len(checks) else 1


def cmd_fixtures(args):
    names = [args.name.upper()] if args.name else available_realizations()
    data = {}
    for name in names:
        F = fixed_direct_channels(name)
        data[name] = F
    if args.json:
        out = {n: [[[[v.real, v.imag] for v in row] for row in Fk] for Fk in F] for n, F in data.items()}
        print(json.dumps(out, indent=2))
        return 0
    for name, F in data.items():
        K, n_u, n_bs = F.shape
        print(f"{name}: K={K} N_u={n_u} N_BS={n_bs}")
        for k, Fk in enumerate(F):
            rows = ["[" + ", ".join(f"{v.real:+.4f}{v.imag:+.4f}i" for v in row) + "]" for row in Fk]
            print(f"  F{k + 1} = " + " ".join(rows))
    return 0


# ----------------------------------------------------------------- parser


def _scenario_args(p):
    p.add_argument("--config", help="YAML scenario file or a run manifest to replay")
    p.add_argument("--scenario", help="benchmark realization (C1..C5)")
    p.add_argument("--power-db", type=float)
    p.add_argument("--sigma2", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--iqi", action="store_true", help="use the default I/Q imbalance profile")
    p.add_argument("--iqi-params", help="tx_amp,tx_phase_deg,rx_amp,rx_phase_deg")
    p.add_argument("--ris", action="store_true", help="add a RIS (and RIS variants of the schemes)")
    p.add_argument("--ris-elements", type=int)
    p.add_argument("--epsilon", type=float, help="unit-modulus relaxation margin")
    p.add_argument("--max-iter", type=int)
    p.add_argument("--rel-tol", type=float)


def make_parser():
    parser = argparse.ArgumentParser(prog="risregion", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("region", help="sweep weights and write the region boundary CSV")
    _scenario_args(p)
    p.add_argument("--schemes", help="comma-separated scheme labels, e.g. PR,IR,TS")
    p.add_argument("--alpha-points", type=int)
    p.add_argument("--single-start", action="store_true", help="only the default AO start per point")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", default="region.csv")
    p.add_argument("--traces", help="directory for per-point convergence traces")
    p.add_argument("--manifest", help="manifest path (default: next to --out)")
    p.set_defaults(func=cmd_region)

    p = sub.add_parser("single-point", help="run the AO for one weight vector")
    _scenario_args(p)
    p.add_argument("--scheme", default="PR")
    p.add_argument("--alpha", default="0.5,0.5")
    p.add_argument("--trace")
    p.add_argument("--out")
    p.set_defaults(func=cmd_single_point)

    p = sub.add_parser("validate", help="run invariant self-checks")
    p.add_argument("--suite", default="all", help="wl, rates, surrogates, solver, ao or all")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("fixtures", help="print the benchmark channel realizations")
    p.add_argument("--name")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_fixtures)
    return parser


def run_cli(argv=None):
    parser = make_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (RisRegionError, KeyError, argparse.ArgumentTypeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main():
    sys.exit(run_cli())


if __name__ == "__main__":
    main()

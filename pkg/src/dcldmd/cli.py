"""Command-line interface: ``dcldmd {gen-data,fit,predict,compare,reproduce}``."""

from __future__ import annotations

import argparse
import json
import sys
import warnings
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import core, edmdc
from .config import FEEDBACK_INTERPRETATION, load_config, parse_gain, parse_vector
from .data import SnapshotFormatError, load_snapshots, records_to_array, save_snapshots, save_trajectories
from .exceptions import DivergenceWarning, IntegrationError, SingularMatrixError
from .simulate import generate_snapshots, rollout_true


def rmse(pred, true):
    """Per-component RMSE; ``inf`` if ``pred`` was truncated."""
    pred = np.asarray(pred, dtype=float)
    true = np.asarray(true, dtype=float)
    if pred.shape != true.shape:
        return np.full(true.shape[1], np.inf)
    return np.sqrt(np.mean((pred - true) ** 2, axis=0))


def _out_dir(out):
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _predictions(model, mu, x0, steps, which):
    if which == "dcldmd-indirect":
        return core.predict_indirect(model, x0, steps)
    if which == "dcldmd-direct":
        return core.predict_direct(model, x0, steps)
    return edmdc.rollout_edmdc(model, mu, x0, steps)


def _fit_edmdc(cfg, S):
    d = edmdc.default_dictionary(cfg.bounds, cfg.edmdc_centers, cfg.seed, cfg.edmdc_rbf, cfg.edmdc_scale)
    return edmdc.fit_edmdc(S, d, cfg.edmdc_ridge)


def _fit_dcldmd(cfg, S):
    conf = core.DcldmdConfig(cfg.kernel_obj(), cfg.epsilon, cfg.feedback_law(), cfg.solver)
    return core.fit(S, conf)


def _truth(cfg, x0, steps):
    return records_to_array(rollout_true(cfg.system(), cfg.feedback_law(), x0, steps, cfg.dt))


def _eig_summary(model, top=6):
    lam = model.lambdas
    lines = [f"{model.M} eigenpairs, max |lambda| = {np.abs(lam).max():.6g}"]
    for v in lam[:top]:
        lines.append(f"  {v.real:+.6e} {v.imag:+.6e}i  |{abs(v):.6f}|")
    if model.degenerate is not None and model.degenerate.any():
        lines.append(f"  {int(model.degenerate.sum())} eigenvectors with degenerate normalizer")
    return "\n".join(lines)


# -- commands ----------------------------------------------------------------


def cmd_gen_data(cfg, out):
    S = generate_snapshots(cfg.system(), cfg.sampling())
    path = save_snapshots(S, _out_dir(out) / "snapshots.csv")
    lo = S.X.min(axis=1)
    hi = S.X.max(axis=1)
    print(f"wrote {path}: M={S.M}, n={S.n}, m={S.m}, "
          f"x in {[list(b) for b in zip(lo.round(6), hi.round(6))]}, u in {cfg.input_bounds}")
    return path


def cmd_fit(cfg, snapshots, out, baseline=False):
    S = load_snapshots(snapshots)
    out = _out_dir(out)
    if baseline:
        model = _fit_edmdc(cfg, S)
        path = edmdc.save_edmdc(model, out / "edmdc_model.npz")
        print(f"wrote {path}: lifted dimension {model.A.shape[0]}, "
              f"spectral radius {np.abs(np.linalg.eigvals(model.A)).max():.6g}")
        return path
    model = _fit_dcldmd(cfg, S)
    path = core.save_model(model, out / "dcldmd_model.npz")
    print(f"wrote {path}\n{_eig_summary(model)}")
    return path


def _load_any_model(path):
    with np.load(path, allow_pickle=False) as z:
        fmt = str(z["format"]) if "format" in z else ""
    if fmt == "dcldmd-model-v1":
        return "dcldmd", core.load_model(path)
    if fmt == "edmdc-model-v1":
        return "edmdc", edmdc.load_edmdc(path)
    raise ValueError(f"{path}: unrecognized model file")


def cmd_predict(cfg, model_path, out, mode="indirect", truth=True):
    kind, model = _load_any_model(model_path)
    x0 = np.asarray(cfg.x0, dtype=float)
    steps = cfg.steps
    mu = cfg.feedback_law()
    if kind == "dcldmd":
        if mode not in ("direct", "indirect"):
            raise ValueError(f"unknown mode {mode!r}; expected 'direct' or 'indirect'")
        pred = _predictions(model, mu, x0, steps, f"dcldmd-{mode}")
    else:
        pred = edmdc.rollout_edmdc(model, mu, x0, steps)
    series = {}
    n = x0.size
    if truth and n == cfg.system().n:
        series["true"] = _truth(cfg, x0, steps)
    series["pred"] = pred
    path = save_trajectories(_out_dir(out) / f"prediction_{mode if kind == 'dcldmd' else 'edmdc'}.csv",
                             cfg.dt, series)
    print(f"wrote {path}: {len(pred)} rows")
    return path


def cmd_compare(cfg, out, snapshots=None):
    out = _out_dir(out)
    S = load_snapshots(snapshots) if snapshots else generate_snapshots(cfg.system(), cfg.sampling())
    x0 = np.asarray(cfg.x0, dtype=float)
    steps = cfg.steps
    true = _truth(cfg, x0, steps)
    dmodel = _fit_dcldmd(cfg, S)
    emodel = _fit_edmdc(cfg, S)
    pred = core.predict_indirect(dmodel, x0, steps)
    base = edmdc.rollout_edmdc(emodel, cfg.feedback_law(), x0, steps)
    path = save_trajectories(out / "comparison.csv", cfg.dt, {"true": true, "pred": pred, "base": base})
    metrics = {
        "rmse": {
            "dcldmd-indirect": rmse(pred, true).tolist(),
            "edmdc": rmse(base, true).tolist(),
        },
        "steps": steps,
        "dt": cfg.dt,
    }
    (out / "metrics.json").write_text(json.dumps(metrics, indent=2, sort_keys=True) + "\n")
    print(f"wrote {path}")
    for name, vals in metrics["rmse"].items():
        print(f"  RMSE {name:16s} " + "  ".join(f"x{i + 1}={v:.6g}" for i, v in enumerate(vals)))
    return path, metrics


def cmd_reproduce(cfg, exp, out, stamp=True):
    """Full pipeline for experiment ``exp``; returns the run directory."""
    root = Path(out)
    run = root / (f"exp{exp}-" + datetime.now(timezone.utc).strftime("%Y%m%dT%H%M%S%fZ") if stamp else f"exp{exp}")
    run.mkdir(parents=True, exist_ok=True)
    manifest = {
        "experiment": exp,
        "config": cfg.to_dict(),
        "steps": cfg.steps,
        "interpretations": [
            FEEDBACK_INTERPRETATION,
            "integration: fixed-step RK4 with zero-order-hold input at the configured dt",
        ],
    }
    print(f"NOTE: {FEEDBACK_INTERPRETATION}")
    snap = cmd_gen_data(cfg, run)
    S = load_snapshots(snap)
    x0 = np.asarray(cfg.x0, dtype=float)
    steps = cfg.steps
    true = _truth(cfg, x0, steps)
    model = _fit_dcldmd(cfg, S)
    core.save_model(model, run / "dcldmd_model.npz")
    print(_eig_summary(model))
    results = {}
    if exp == 1:
        indirect = core.predict_indirect(model, x0, steps)
        direct = core.predict_direct(model, x0, steps)
        save_trajectories(run / "trajectory_indirect.csv", cfg.dt, {"true": true, "pred": indirect})
        save_trajectories(run / "trajectory_direct.csv", cfg.dt, {"true": true, "pred": direct})
        if indirect.shape == true.shape:
            save_trajectories(run / "error_indirect.csv", cfg.dt, {"err": indirect - true})
        results = {
            "rmse": {"dcldmd-indirect": rmse(indirect, true).tolist(), "dcldmd-direct": rmse(direct, true).tolist()},
            "max_abs_error_indirect": np.max(np.abs(indirect - true), axis=0).tolist()
            if indirect.shape == true.shape else None,
        }
    else:
        emodel = _fit_edmdc(cfg, S)
        edmdc.save_edmdc(emodel, run / "edmdc_model.npz")
        indirect = core.predict_indirect(model, x0, steps)
        base = edmdc.rollout_edmdc(emodel, cfg.feedback_law(), x0, steps)
        save_trajectories(run / "comparison.csv", cfg.dt, {"true": true, "pred": indirect, "base": base})
        results = {"rmse": {"dcldmd-indirect": rmse(indirect, true).tolist(), "edmdc": rmse(base, true).tolist()}}
    for name, vals in results["rmse"].items():
        print(f"  RMSE {name:16s} " + "  ".join(f"x{i + 1}={v:.6g}" for i, v in enumerate(vals)))
    manifest["results"] = results
    manifest["files"] = sorted(p.name for p in run.iterdir())
    (run / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    print(f"run directory: {run}")
    return run


# -- argument parsing --------------------------------------------------------


def _common(parser):
    g = parser.add_argument_group("configuration")
    g.add_argument("--config", type=Path, help="JSON config file")
    g.add_argument("--exp", type=int, choices=(1, 2), default=1, help="parameter preset (default 1)")
    g.add_argument("--seed", type=int)
    g.add_argument("--out", type=Path, default=Path("."), help="output directory")
    g.add_argument("--kernel", choices=("gaussian", "expdot", "linear"))
    g.add_argument("--sigma", type=float)
    g.add_argument("--epsilon", type=float)
    g.add_argument("--dt", type=float)
    g.add_argument("--horizon", type=float, help="prediction horizon in seconds")
    g.add_argument("--feedback", help='row-major gain "k11,k12,..."')
    g.add_argument("--x0", help='initial state "x1,x2,..."')
    g.add_argument("--solver", choices=core.SOLVERS)
    g.add_argument("--print-config", action="store_true", help="print the effective configuration")


def build_parser():
    parser = argparse.ArgumentParser(prog="dcldmd", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="simulate and write a snapshot CSV")
    _common(p)

    p = sub.add_parser("fit", help="fit a DCLDMD (or EDMDc) model to a snapshot CSV")
    p.add_argument("snapshots", type=Path)
    p.add_argument("--baseline", action="store_true", help="fit the EDMDc baseline instead")
    _common(p)

    p = sub.add_parser("predict", help="roll out a fitted model")
    p.add_argument("model", type=Path)
    p.add_argument("--mode", default="indirect", help="direct or indirect (DCLDMD models)")
    p.add_argument("--no-truth", action="store_true", help="omit ground-truth columns")
    _common(p)

    p = sub.add_parser("compare", help="DCLDMD-indirect vs EDMDc against ground truth")
    p.add_argument("--snapshots", type=Path, help="use this snapshot CSV instead of simulating")
    _common(p)

    p = sub.add_parser("reproduce", help="run a full experiment into a timestamped directory")
    p.add_argument("experiment", type=int, choices=(1, 2))
    p.add_argument("--no-timestamp", action="store_true", help="write into <out>/exp<N> instead")
    _common(p)
    return parser


def _config_from_args(args):
    exp = args.experiment if args.command == "reproduce" else args.exp
    overrides = {
        "seed": args.seed,
        "kernel": args.kernel,
        "sigma": args.sigma,
        "epsilon": args.epsilon,
        "dt": args.dt,
        "horizon": args.horizon,
        "solver": args.solver,
        "feedback": parse_gain(args.feedback, n=2) if args.feedback else None,
        "x0": parse_vector(args.x0) if args.x0 else None,
    }
    return load_config(args.config, exp, overrides)


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _config_from_args(args)
        if args.print_config:
            print(cfg.dumps())
        with warnings.catch_warnings():
            warnings.simplefilter("always", DivergenceWarning)
            if args.command == "gen-data":
                cmd_gen_data(cfg, args.out)
            elif args.command == "fit":
                cmd_fit(cfg, args.snapshots, args.out, args.baseline)
            elif args.command == "predict":
                if args.mode not in ("direct", "indirect"):
                    parser.error(f"unknown --mode {args.mode!r}; expected direct or indirect")
                cmd_predict(cfg, args.model, args.out, args.mode, not args.no_truth)
            elif args.command == "compare":
                cmd_compare(cfg, args.out, args.snapshots)
            else:
                cmd_reproduce(cfg, args.experiment, args.out, stamp=not args.no_timestamp)
    except (ValueError, OSError, SnapshotFormatError, SingularMatrixError, IntegrationError,
            np.linalg.LinAlgError, RuntimeError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())

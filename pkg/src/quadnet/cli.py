"""Command line entry point: ``quadnet <command> [options]``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import ati_checker as ati
from .experiments import (
    CLUSTER_SETS,
    REGRESSION_SETS,
    SUITES,
    ExperimentConfig,
    SuiteConfig,
    compare_suite,
    dump_json,
    fmt,
    load_config_file,
    make_dataset,
    run_experiment,
    write_text,
)
from .frame import (
    expansion_box,
    greedy_n_term,
    l1_frame_norm,
    l2_error,
    normalize_mother,
    rate_experiment,
    synthetic_target,
)
from .network import LAYER_KINDS, from_json
from .optimizer import evaluate

log = logging.getLogger("quadnet")

# flags that map one-to-one onto ExperimentConfig fields
_RUN_FLAGS = ("dataset", "kind", "output_kind", "output_activation", "epochs", "data_seed", "loss",
              "init_scheme", "init_mean", "init_stddev", "lr", "batch_size", "name")


def _widths(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc


def _experiment_config(args) -> ExperimentConfig:
    data = load_config_file(args.config) if args.config else {}
    for key in _RUN_FLAGS:
        value = getattr(args, key, None)
        if value is not None:
            data[key] = value
    if getattr(args, "hidden", None) is not None:
        data["hidden"] = args.hidden
    if getattr(args, "even_grid", False):
        data["even_grid"] = True
    if args.seed is not None:
        data["seed"] = args.seed
    return ExperimentConfig.from_dict(data)


def cmd_generate_data(args) -> int:
    cfg = _experiment_config(args)
    data = make_dataset(cfg)
    out = Path(args.out_dir)
    write_text(out / f"{cfg.dataset}_data.csv", data.to_csv())
    write_text(out / f"{cfg.dataset}_data.json", dump_json({
        "dataset": cfg.dataset,
        "seed": data.seed,
        "n_points": len(data),
        "n_train": int(data.train_idx.size),
        "n_test": int(data.test_idx.size),
        "sha256": data.digest(),
    }))
    print(f"{cfg.dataset}: {len(data)} points, digest {data.digest()}")
    return 0


def cmd_train(args) -> int:
    cfg = _experiment_config(args)
    out = Path(args.out_dir) / cfg.name
    result = run_experiment(cfg, out)
    if not result.ok:
        print(f"training failed: {result.error}", file=sys.stderr)
        return 1
    rep = result.report
    line = f"{cfg.name}: test mse {fmt(rep.test_mse)}, mae {fmt(rep.test_mae)}"
    if rep.test_accuracy is not None:
        line += f", accuracy {fmt(rep.test_accuracy)}"
    print(line)
    return 0


def cmd_eval(args) -> int:
    net = from_json(Path(args.network).read_text())
    cfg = _experiment_config(args)
    data = make_dataset(cfg)
    metrics = evaluate(net, data, cfg.loss_kind)
    text = dump_json({"dataset": cfg.dataset, "sha256": data.digest(), "metrics": metrics})
    write_text(Path(args.out_dir) / "eval.json", text)
    print(text, end="")
    return 0


def cmd_frame_approx(args) -> int:
    mother = normalize_mother(args.r, 1)
    target = synthetic_target(mother, args.seed or 0)
    approx = greedy_n_term(target, args.N)
    lo, hi = expansion_box(target)
    err = l2_error(target, approx, lo, hi)
    bound = l1_frame_norm(target) * (args.N + 1) ** -0.5
    x = np.linspace(lo[0], hi[0], args.points)
    pts = x.reshape(-1, 1)
    f, fn = target(pts), approx(pts)
    lines = ["x,f,f_N"] + [f"{fmt(a)},{fmt(b)},{fmt(c)}" for a, b, c in zip(x, f, fn)]
    out = Path(args.out_dir)
    write_text(out / f"frame_approx_N{args.N}.csv", "\n".join(lines) + "\n")
    write_text(out / f"frame_approx_N{args.N}.json", dump_json({
        "N": args.N, "atoms": len(target), "l1_norm": l1_frame_norm(target), "l2_error": err, "bound": bound,
    }))
    print(f"N={args.N}: L2 error {fmt(err)}, bound {fmt(bound)}")
    return 0 if err <= bound * (1 + 1e-6) + 1e-5 else 1


def cmd_rate_plot(args) -> int:
    mother = normalize_mother(args.r, 1)
    target = synthetic_target(mother, args.seed or 0)
    result = rate_experiment(mother, target, [2**i for i in range(args.max_log2 + 1)])
    write_text(Path(args.out_dir) / "rate.csv", result.to_csv())
    ok = all(row.error <= row.bound * (1 + 1e-6) + 1e-5 for row in result.rows)
    ok = ok and all(row.log_ratio <= -0.5 + 1e-6 for row in result.rows if row.N >= 1)
    print(result.to_csv(), end="")
    return 0 if ok else 1


def cmd_ati_check(args) -> int:
    mother = normalize_mother(args.r, 1)
    reports = ati.run_all(mother, args.samples, args.seed or 0, args.c_sigma)
    out = Path(args.out_dir)
    write_text(out / "ati_checks.csv", ati.reports_csv(reports))
    for i in (0, 1, 2):
        t, lhs, rhs = ati.sigma_decay_curves(i, args.c_sigma, n=5, r=4.0)
        write_text(out / f"sigma_decay_i{i}.csv", ati.sigma_curve_csv(t, lhs, rhs))
    failed = [r for r in reports if not r.passed]
    for r in failed:
        print(f"violation: {r.condition} ({r.violations} of {r.samples}), worst sample {r.worst_sample}",
              file=sys.stderr)
    print(f"{len(reports) - len(failed)} of {len(reports)} checks passed")
    return 0 if not failed else 1


def cmd_suite(args) -> int:
    sc = SuiteConfig.from_dict(load_config_file(args.config)) if args.config else SuiteConfig()
    seed = 42 if args.seed is None else args.seed
    ok = True
    for name in args.only or SUITES:
        res = compare_suite(name, seed, args.out_dir, sc)
        status = "ok" if res.ok else "FAILED"
        print(f"{name}: {status} ({res.failures} failed runs)")
        for c in res.claims:
            print(f"  {c.name}: {fmt(c.value)} (threshold {fmt(c.threshold)}) {'pass' if c.passed else 'fail'}")
        ok = ok and res.ok
    return 0 if ok else 1


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--dataset", choices=REGRESSION_SETS + CLUSTER_SETS)
    p.add_argument("--kind", choices=LAYER_KINDS)
    p.add_argument("--hidden", type=_widths, help="hidden widths, e.g. 5 or 30,30,30")
    p.add_argument("--output-kind", dest="output_kind", choices=LAYER_KINDS)
    p.add_argument("--output-activation", dest="output_activation", choices=("identity", "sigmoid"))
    p.add_argument("--epochs", type=int)
    p.add_argument("--data-seed", dest="data_seed", type=int)
    p.add_argument("--loss", choices=("mse", "binary_cross_entropy"))
    p.add_argument("--init-scheme", dest="init_scheme", choices=("gaussian", "paper_constant"))
    p.add_argument("--init-mean", dest="init_mean", type=float)
    p.add_argument("--init-stddev", dest="init_stddev", type=float)
    p.add_argument("--lr", type=float)
    p.add_argument("--batch-size", dest="batch_size", type=int)
    p.add_argument("--name")
    p.add_argument("--even-grid", dest="even_grid", action="store_true",
                   help="evenly spaced regression inputs instead of uniform draws")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--config", help="JSON or TOML file with config fields")
    common.add_argument("--out-dir", dest="out_dir", default="results")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="quadnet", description="Quadratic-neuron networks and frame experiments.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate-data", parents=[common], help="write a dataset as CSV")
    _add_run_flags(p)
    p.set_defaults(func=cmd_generate_data)

    p = sub.add_parser("train", parents=[common], help="train one network and write its artifacts")
    _add_run_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", parents=[common], help="evaluate a saved network on a dataset's test split")
    p.add_argument("--network", required=True, help="network JSON written by train")
    _add_run_flags(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("frame-approx", parents=[common], help="greedy N-term approximation of a random expansion")
    p.add_argument("--N", type=int, default=16)
    p.add_argument("--r", type=float, default=4.0)
    p.add_argument("--points", type=int, default=2001)
    p.set_defaults(func=cmd_frame_approx)

    p = sub.add_parser("rate-plot", parents=[common], help="N-term error curve against the rate bound")
    p.add_argument("--r", type=float, default=4.0)
    p.add_argument("--max-log2", dest="max_log2", type=int, default=8)
    p.set_defaults(func=cmd_rate_plot)

    p = sub.add_parser("ati-check", parents=[common], help="sampled checks of the kernel conditions")
    p.add_argument("--samples", type=int, default=10_000)
    p.add_argument("--r", type=float, default=4.0)
    p.add_argument("--c-sigma", dest="c_sigma", type=float, default=ati.C_SIGMA)
    p.set_defaults(func=cmd_ati_check)

    p = sub.add_parser("suite", parents=[common], help="run the comparison suites")
    p.add_argument("--only", action="append", choices=SUITES)
    p.set_defaults(func=cmd_suite)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

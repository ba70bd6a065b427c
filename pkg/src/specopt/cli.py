"""Command-line front end.

    specopt decompose --config graph.json  [--out DIR]
    specopt train     --config config.json [--out DIR] [--no-plots]
    specopt sweep     --config config.json [--out DIR] [--no-plots]
    specopt denoise   --config config.json [--out DIR] [--no-plots]

Exit codes: 0 success, 1 runtime failure (divergence or eigensolver),
2 configuration/parse error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .config import ConfigError, cross_validate, load_config
from .param_graph import graph_from_dict
from .reports import (
    DENOISE_HEADER,
    SWEEP_HEADER,
    TRACE_HEADER,
    fmt_cell,
    write_csv,
    write_json,
)
from .runner import build_task, derived_seed, run_denoise, run_experiment, run_sweep
from .spectral_engine import JacobiConvergenceError, basis_to_dict, eigendecompose

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_CONFIG = 2


def _out_dir(args, cfg=None) -> str:
    out = args.out or (cfg.out if cfg is not None else None) or "."
    os.makedirs(out, exist_ok=True)
    return out


def _fail(message: str, code: int) -> int:
    print(f"specopt: error: {message}", file=sys.stderr)
    return code


def cmd_decompose(args) -> int:
    try:
        with open(args.config, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
        graph = graph_from_dict(doc)
    except (OSError, json.JSONDecodeError, ValueError) as exc:
        return _fail(f"graph file {args.config}: {exc}", EXIT_CONFIG)
    try:
        basis = eigendecompose(graph.laplacian)
    except JacobiConvergenceError as exc:
        return _fail(str(exc), EXIT_RUNTIME)
    out = _out_dir(args)
    write_json(os.path.join(out, "basis.json"), basis_to_dict(basis))
    print(" ".join(fmt_cell(float(v)) for v in basis.eigenvalues))
    return EXIT_OK


def _trace_rows(trace):
    return [
        (r.step, r.task_loss, r.spec_loss, r.joint_loss,
         r.grad_norm_pre, r.grad_norm_post, r.dirichlet_energy)
        for r in trace.records
    ]


def cmd_train(args) -> int:
    try:
        cfg = load_config(args.config, need=("train",))
        cross_validate(cfg, cfg.build_graph(), need=("train",))
    except (OSError, json.JSONDecodeError) as exc:
        return _fail(f"config {args.config}: {exc}", EXIT_CONFIG)
    except (ConfigError, ValueError) as exc:
        return _fail(str(exc), EXIT_CONFIG)
    out = _out_dir(args, cfg)
    try:
        g, reports = run_experiment(cfg)
    except (JacobiConvergenceError, ValueError) as exc:
        return _fail(str(exc), EXIT_RUNTIME)

    run_docs = []
    for report in reports:
        csv_name = f"trace_{report.variant}_seed{report.seed}.csv"
        write_csv(os.path.join(out, csv_name), TRACE_HEADER, _trace_rows(report.trace))
        doc = report.summary(cfg.threshold)
        doc["trace_csv"] = csv_name
        run_docs.append(doc)
    summary = {
        "command": "train",
        "threshold": cfg.threshold,
        "variants": cfg.variants,
        "seeds": cfg.seeds,
        "runs": run_docs,
    }
    write_json(os.path.join(out, "summary.json"), summary)
    if cfg.dump_datasets:
        basis = eigendecompose(g.laplacian)
        for seed in cfg.seeds:
            task = build_task(cfg, basis, seed)
            if hasattr(task, "audit_dict"):
                write_json(os.path.join(out, f"dataset_seed{seed}.json"), task.audit_dict())
    if not args.no_plots:
        from .plots import plot_loss_curves

        plot_loss_curves(reports, os.path.join(out, "loss_curves.png"))
    if any(r.trace.status == "diverged" for r in reports):
        return _fail("one or more runs diverged (see summary.json)", EXIT_RUNTIME)
    return EXIT_OK


def cmd_sweep(args) -> int:
    try:
        cfg = load_config(args.config, need=("train", "sweep"))
        cross_validate(cfg, cfg.build_graph(), need=("train", "sweep"))
    except (OSError, json.JSONDecodeError) as exc:
        return _fail(f"config {args.config}: {exc}", EXIT_CONFIG)
    except (ConfigError, ValueError) as exc:
        return _fail(str(exc), EXIT_CONFIG)
    out = _out_dir(args, cfg)
    try:
        _g, rows = run_sweep(cfg)
    except (JacobiConvergenceError, ValueError) as exc:
        return _fail(str(exc), EXIT_RUNTIME)
    write_csv(os.path.join(out, "sweep.csv"), SWEEP_HEADER, rows)
    if not args.no_plots:
        from .plots import plot_sweep

        plot_sweep(rows, cfg.sweep["axis"], os.path.join(out, "sweep.png"))
    return EXIT_OK


def cmd_denoise(args) -> int:
    try:
        cfg = load_config(args.config, need=("denoise",))
        cross_validate(cfg, cfg.build_graph(), need=("denoise",))
    except (OSError, json.JSONDecodeError) as exc:
        return _fail(f"config {args.config}: {exc}", EXIT_CONFIG)
    except (ConfigError, ValueError) as exc:
        return _fail(str(exc), EXIT_CONFIG)
    out = _out_dir(args, cfg)
    try:
        _g, rows = run_denoise(cfg)
    except (JacobiConvergenceError, ValueError) as exc:
        return _fail(str(exc), EXIT_RUNTIME)
    write_csv(os.path.join(out, "denoise.csv"), DENOISE_HEADER, rows)
    if not args.no_plots:
        from .plots import plot_denoise

        plot_denoise(rows, os.path.join(out, "denoise.png"))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="specopt",
        description="Graph-spectral collaborative optimization experiments.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, func, with_plots in (
        ("decompose", cmd_decompose, False),
        ("train", cmd_train, True),
        ("sweep", cmd_sweep, True),
        ("denoise", cmd_denoise, True),
    ):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="path to the JSON config")
        p.add_argument("--out", default=None, help="output directory (default: config 'out' or cwd)")
        if with_plots:
            p.add_argument("--no-plots", action="store_true", help="skip figure rendering")
        p.set_defaults(func=func)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())

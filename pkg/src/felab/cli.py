"""Command line entry point: ``felab run|table1|table2|prefs|model dump|env render``."""
from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

from .env import LakeConfig, render
from .harness import (
    ConfigError,
    RunConfig,
    emit_report,
    run_experiment,
    run_preference_learning,
    run_table1,
    run_table2,
)
from .model import FrozenLakeModelConfig, ModelError, build_frozenlake_model


def _progress(summary):
    row = "" if summary.row is None else " " + "/".join(f"{v:g}" for v in summary.row)
    print(f"  {summary.label:<40}{row:>14}  {summary.mean:7.2f}  "
          f"[{summary.ci_low:6.2f}, {summary.ci_high:6.2f}]  moves {summary.moves:5.2f}", file=sys.stderr)


def _emit(report, out):
    files = emit_report(report, out)
    print(f"{report.experiment}: wrote {len(files)} files to {out}", file=sys.stderr)


def _common(p, trials=True):
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=None, help="worker processes (default: all cores)")
    p.add_argument("--out", default="results")
    p.add_argument("--trace", action="store_true", help="write per-step traces for the first trial")
    if trials:
        p.add_argument("--trials", type=int, default=None)
        p.add_argument("--episodes", type=int, default=None)


def _overrides(args):
    kw = {"seed": args.seed, "jobs": args.jobs, "trace": args.trace}
    for name in ("trials", "episodes"):
        if getattr(args, name, None) is not None:
            kw[name] = getattr(args, name)
    return kw


def cmd_run(args):
    cfg = RunConfig.from_json(args.config)
    d = cfg.to_dict()
    d.update(_overrides(args))
    d["out"] = args.out if args.out is not None else cfg.out
    cfg = RunConfig.from_dict(d)
    t0 = time.perf_counter()
    report = run_experiment(cfg, progress=_progress)
    print(f"{cfg.experiment}: {time.perf_counter() - t0:.1f} s", file=sys.stderr)
    _emit(report, cfg.out)


def cmd_table1(args):
    for exp, report in run_table1(**_overrides(args)).items():
        for s in report.summaries:
            _progress(s)
        _emit(report, Path(args.out) / exp)


def cmd_table2(args):
    report = run_table2(**_overrides(args), out=args.out)
    for s in report.summaries:
        _progress(s)
    _emit(report, args.out)


def cmd_prefs(args):
    for exp, report in run_preference_learning(**_overrides(args)).items():
        for s in report.summaries:
            _progress(s)
        _emit(report, Path(args.out) / exp)


def cmd_model_dump(args):
    cfg = FrozenLakeModelConfig.from_json(args.config) if args.config else FrozenLakeModelConfig()
    model = build_frozenlake_model(cfg)
    text = json.dumps(model.to_dict(), indent=1)
    if args.output:
        Path(args.output).write_text(text + "\n")
    else:
        print(text)


def cmd_env_render(args):
    print(render(LakeConfig(rows=args.rows, cols=args.cols), context=args.context))


def build_parser():
    parser = argparse.ArgumentParser(prog="felab", description="Frozen-lake active inference experiments.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run one experiment from a JSON config")
    p.add_argument("--config", required=True)
    _common(p)
    p.set_defaults(func=cmd_run, out=None)

    for name, func, doc in (("table1", cmd_table1, "stationary and non-stationary five-agent comparison"),
                            ("table2", cmd_table2, "reward and preference grid"),
                            ("prefs", cmd_prefs, "likelihood and preference learning runs")):
        p = sub.add_parser(name, help=doc)
        _common(p)
        p.set_defaults(func=func)

    model = sub.add_parser("model", help="generative model utilities")
    msub = model.add_subparsers(dest="action", required=True)
    p = msub.add_parser("dump", help="write the expanded A/B/C/D arrays as JSON")
    p.add_argument("--config", default=None, help="model config JSON (default: the standard 3x3 lake)")
    p.add_argument("--output", "-o", default=None)
    p.set_defaults(func=cmd_model_dump)

    env = sub.add_parser("env", help="environment utilities")
    esub = env.add_subparsers(dest="action", required=True)
    p = esub.add_parser("render", help="print the lake as S/F/H/G letters")
    p.add_argument("--context", type=int, choices=(1, 2), default=2)
    p.add_argument("--rows", type=int, default=3)
    p.add_argument("--cols", type=int, default=3)
    p.set_defaults(func=cmd_env_render)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except (ConfigError, ModelError, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"felab: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())

"""Command-line entry point.

Subcommands mirror the pipeline stages. Exit codes: 0 success, 2 bad
configuration or arguments, 3 data problems (parsing, splits, calibration),
4 model fitting or training failures.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

from . import pipeline
from .counterfactual import write_counterfactuals
from .errors import ConfigError, DataError, FitError, TrainingError
from .eventlog import write_log
from .synthetic import PRESETS, SyntheticSpec, gen_synthetic


def _parse_resources(text: str) -> tuple:
    out = []
    for part in text.split(","):
        part = part.strip().lower()
        if part in ("inf", "none", "unbounded"):
            out.append(None)
        else:
            try:
                out.append(int(part))
            except ValueError as err:
                raise ConfigError(f"bad resource count {part!r}") from err
    if not out:
        raise ConfigError("empty resource list")
    return tuple(out)


def _load_run_config(out_dir: str) -> pipeline.RunConfig:
    return pipeline.load_config(pipeline.RunPaths(out_dir).config)


def _cmd_prepare(args) -> int:
    config = pipeline.load_config(args.config)
    if args.seed is not None:
        config = dataclasses.replace(config, seed=args.seed)
    meta = pipeline.prepare(config, args.out)
    print(json.dumps(meta, sort_keys=True))
    return 0


def _cmd_train(args) -> int:
    config = _load_run_config(args.out)
    metrics = pipeline.train(config, args.out)
    print(json.dumps(metrics, sort_keys=True))
    return 0


def _cmd_simulate(args) -> int:
    config = _load_run_config(args.out)
    overrides = {}
    if args.variant:
        overrides["variants"] = tuple(args.variant)
    if args.resources:
        overrides["resources"] = _parse_resources(args.resources)
    if args.replications is not None:
        overrides["replications"] = args.replications
    if overrides:
        config = dataclasses.replace(config, **overrides)
    result = pipeline.simulate(config, args.out)
    summary = {rid: {"total_gain": info["total_gain"], "c_star": info["c_star"]}
               for rid, info in result["runs"].items()}
    print(json.dumps(summary, sort_keys=True))
    return 0


def _cmd_report(args) -> int:
    config = _load_run_config(args.out)
    out = pipeline.report(config, args.out)
    print(json.dumps({"audit_ok": out["audit"]["ok"],
                      "boundaries": out["boundaries"],
                      "medians": out["medians"]}, sort_keys=True))
    return 0 if out["audit"]["ok"] else 3


def _cmd_gen_synthetic(args) -> int:
    if args.spec is not None:
        spec_path = Path(args.spec)
        if not spec_path.exists():
            raise ConfigError(f"spec file not found: {spec_path}")
        spec = SyntheticSpec.from_dict(json.loads(spec_path.read_text()))
    else:
        spec = PRESETS[args.preset]()
    log, truth = gen_synthetic(spec, args.seed)
    write_log(log, args.log)
    if args.truth:
        write_counterfactuals(truth, args.truth)
    print(json.dumps({"cases": len(log), "events": log.n_events,
                      "truth": args.truth is not None}, sort_keys=True))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="presmon",
        description="Resource-constrained intervention policies for "
                    "event-log processes: prepare data, fit models, replay "
                    "policies, report gains.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("prepare", help="split a log and fit the feature schema")
    p.add_argument("--config", required=True, help="run configuration JSON")
    p.add_argument("--out", required=True, help="run directory")
    p.add_argument("--seed", type=int, default=None, help="override config seed")
    p.set_defaults(func=_cmd_prepare)

    p = sub.add_parser("train", help="fit and calibrate models")
    p.add_argument("--out", required=True, help="run directory (after prepare)")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("simulate", help="replay policies over the test split")
    p.add_argument("--out", required=True, help="run directory (after train)")
    p.add_argument("--variant", action="append", default=None,
                   help="state variant to run (repeatable)")
    p.add_argument("--resources", default=None,
                   help="comma-separated pool sizes, e.g. 1,2,6 or inf")
    p.add_argument("--replications", type=int, default=None)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("report", help="summarize and audit simulation outputs")
    p.add_argument("--out", required=True, help="run directory (after simulate)")
    p.set_defaults(func=_cmd_report)

    p = sub.add_parser("gen-synthetic", help="write a synthetic log with truth")
    p.add_argument("--preset", choices=sorted(PRESETS), default="small")
    p.add_argument("--spec", default=None, help="synthetic spec JSON file")
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--log", required=True, help="output log CSV path")
    p.add_argument("--truth", default=None, help="output truth CSV path")
    p.set_defaults(func=_cmd_gen_synthetic)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except DataError as err:
        print(f"error: {err}", file=sys.stderr)
        return 3
    except (FitError, TrainingError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())

"""Command-line front end.

Subcommands:
    run <config.toml>     execute a scenario config
    preset <name>         execute a built-in benchmark preset
    plan                  print a one-shot step plan as a CSV row

Exit codes: 0 completed, 2 fell, 3 infeasible step, 64 usage error.
The STRIDE_LAB_SEED environment variable supplies the default seed.
"""

from __future__ import annotations

import argparse
import dataclasses
import os
import sys

from .scenarios import (
    PRESET_SUMMARIES,
    ParseError,
    ScenarioConfig,
    ValidationError,
    parse_config,
    plan_once_row,
    preset_config,
    run_scenario,
    _fmt,
)

EXIT_USAGE = 64


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _default_seed() -> int:
    raw = os.environ.get("STRIDE_LAB_SEED", "0")
    try:
        return int(raw)
    except ValueError:
        return 0


def _apply_overrides(cfg: ScenarioConfig, pairs) -> ScenarioConfig:
    fields = {f.name: f for f in dataclasses.fields(ScenarioConfig)}
    updates = {}
    for pair in pairs:
        if "=" not in pair:
            raise _UsageError(f"override {pair!r} is not key=value")
        key, _, value = pair.partition("=")
        if key not in fields:
            raise _UsageError(f"unknown config key {key!r}")
        current = getattr(cfg, key)
        if isinstance(current, bool):
            updates[key] = value.lower() in ("1", "true", "yes")
        elif isinstance(current, int):
            updates[key] = int(value)
        elif isinstance(current, float) or current is None:
            updates[key] = float(value)
        elif isinstance(current, tuple):
            updates[key] = tuple(float(v) for v in value.split(","))
        else:
            updates[key] = value
    return dataclasses.replace(cfg, **updates)


def _build_parser() -> _Parser:
    presets = "\n".join(f"  {name:<12} {desc}" for name, desc in PRESET_SUMMARIES.items())
    parser = _Parser(
        prog="stride-lab",
        description="Reduced-order bipedal gait benchmarks on a 3D-LIP simulator.",
        epilog="presets:\n" + presets,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command")

    p_run = sub.add_parser("run", help="run a TOML scenario config")
    p_run.add_argument("config", help="path to scenario TOML")
    p_run.add_argument("--out", default=None, help="output directory override")
    p_run.add_argument("--seed", type=int, default=None)

    p_preset = sub.add_parser("preset", help="run a built-in benchmark preset")
    p_preset.add_argument("name", help="preset name (see --help epilog)")
    p_preset.add_argument("--out", default=None)
    p_preset.add_argument("--seed", type=int, default=None)
    p_preset.add_argument("--set", dest="overrides", action="append", default=[],
                          metavar="KEY=VALUE", help="override a config key")

    p_plan = sub.add_parser("plan", help="print one step plan from rest as CSV")
    p_plan.add_argument("--planner", choices=("ls", "lipm"), default="ls")
    p_plan.add_argument("--vx", type=float, default=0.0)
    p_plan.add_argument("--vy", type=float, default=0.0)
    p_plan.add_argument("--td", type=float, default=0.25)
    return parser


def cli_main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise _UsageError("missing subcommand (run, preset, plan)")

        if args.command == "plan":
            cfg = ScenarioConfig(scenario="plan-once", planner=args.planner,
                                 vx=args.vx, vy=args.vy, step_duration=args.td)
            header, row = plan_once_row(cfg)
            print(header)
            print(",".join(_fmt(v) for v in row))
            print(f"x_step={row[1]:g}")
            return 0

        if args.command == "run":
            try:
                with open(args.config, "rb") as fh:
                    text = fh.read().decode("utf-8")
            except OSError as err:
                print(f"stride-lab: cannot read config: {err}", file=sys.stderr)
                return 1
            cfg = parse_config(text)
        else:
            cfg = preset_config(args.name, seed=_default_seed())
            cfg = _apply_overrides(cfg, args.overrides)

        seed = args.seed if args.seed is not None else _default_seed()
        if args.seed is not None or "STRIDE_LAB_SEED" in os.environ:
            cfg = dataclasses.replace(cfg, seed=seed)
        result = run_scenario(cfg, out_dir=args.out)
        for metric, value, units in result.summary:
            print(f"{metric} = {_fmt(value)}" + (f" [{units}]" if units else ""))
        for path in result.artifacts:
            print(f"wrote {path}")
        return result.exit_code

    except _UsageError as err:
        print(f"stride-lab: {err}", file=sys.stderr)
        return EXIT_USAGE
    except KeyError as err:
        print(f"stride-lab: {err.args[0]}", file=sys.stderr)
        return EXIT_USAGE
    except (ParseError, ValidationError) as err:
        print(f"stride-lab: {err}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(cli_main())


if __name__ == "__main__":
    main()

"""Command-line entry point: ``smartcrowd {run,simulate,verify,example}``."""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from .estimators import MSensing, OnlineSMART, SMART, random_arrival_order
from .fixtures import walkthrough_instance
from .model import InstanceError, load_instance
from .msensing import run_msensing
from .seeding import seed_from_env
from .simulation import PRESETS, ConfigError, ExperimentConfig, rows_to_csv, run_experiment
from .smart import run_smart, screen_users, user_entry_payment
from .verification import run_battery

EXIT_OK, EXIT_VIOLATION, EXIT_ERROR = 0, 1, 2


def _write(text: str, out) -> None:
    if out is None or str(out) == "-":
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8", newline="\n")


def _fraction(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not 0 < value < 1:
        raise argparse.ArgumentTypeError(f"must lie in (0, 1): {value}")
    return value


def _nonneg_int(text: str) -> int:
    try:
        value = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if value < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0: {value}")
    return value


def _positive_int(text: str) -> int:
    value = _nonneg_int(text)
    if value == 0:
        raise argparse.ArgumentTypeError("must be >= 1")
    return value


def cmd_run(args) -> int:
    instance = load_instance(args.instance)
    if args.mechanism == "smart":
        mech = SMART()
    elif args.mechanism == "msensing":
        mech = MSensing()
    else:
        mech = OnlineSMART(observe_fraction=args.observe_fraction, arrival_seed=args.arrival_seed)
    outcome = mech.fit(instance).outcome_
    result = {"mechanism": args.mechanism, **outcome.to_dict()}
    if args.mechanism == "online":
        result["observe_fraction"] = args.observe_fraction
        result["arrival_seed"] = args.arrival_seed
        result["arrival_order"] = list(random_arrival_order(instance, args.arrival_seed))
    _write(json.dumps(result, sort_keys=True, indent=1) + "\n", args.out)
    return EXIT_OK


def cmd_simulate(args) -> int:
    if args.preset:
        config = PRESETS[args.preset]
    else:
        try:
            data = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{args.config}: invalid JSON ({exc.msg} at line {exc.lineno})") from None
        config = ExperimentConfig.from_dict(data)
    if args.trials is not None:
        config = replace(config, trials=args.trials)
    config = config.with_seed(seed_from_env(config.generator.seed))
    rows = run_experiment(config)
    _write(rows_to_csv(rows, ratio=config.kind == "ratio"), args.out)
    return EXIT_OK


def cmd_verify(args) -> int:
    seed = args.seed if args.seed is not None else seed_from_env(1)
    report = run_battery(seed, args.count, args.max_users, args.max_tasks)
    if args.out:
        _write(report.to_jsonl(), args.out)
    print(json.dumps(report.summary(), sort_keys=True, indent=1))
    return EXIT_OK if report.ok else EXIT_VIOLATION


def _fmt_crit(value) -> str:
    return "inf" if value is None else str(value)


def cmd_example(args) -> int:
    instance = walkthrough_instance()
    lines = ["Walk-through instance: 5 users, 6 tasks"]
    for u in instance.users:
        lines.append(f"  user {u.user_id}: tasks {sorted(u.tasks)} bid {u.bid} value {instance.user_value(u.user_id)}")
    screening = screen_users(instance)
    lines.append(f"Screening order S = {list(screening.order)}")
    trace = []
    smart = run_smart(instance, trace)
    lines.append("Winner selection:")
    for step in trace:
        line = (f"  i={step.user}: next best {step.candidate}, gamma={_fmt_crit(step.gamma)}, "
                f"sigma={step.sigma}, beta={_fmt_crit(step.beta)} -> Cond {step.rule}")
        if step.paid_user is not None:
            line += f", p_{step.paid_user}={step.payment}"
        lines.append(line)
    lines.append(f"SMART: T={{{', '.join(map(str, sorted(smart.winners)))}}} "
                 f"payments {' '.join(f'p_{i}={p}' for i, p in smart.payments.items())} "
                 f"utility {smart.utility}")
    ms = run_msensing(instance)
    betas = {i: user_entry_payment(instance, i) for i in screening.order}
    lines.append(f"M-Sensing: winners {{{', '.join(map(str, screening.order))}}} "
                 f"payments {' '.join(f'p_{i}={betas[i]}' for i in sorted(betas))} "
                 f"utility {ms.utility}")
    _write("\n".join(lines) + "\n", None)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="smartcrowd", description="Truthful crowd-sourcing auctions.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run one auction on an instance file")
    p.add_argument("instance", help="instance JSON file")
    p.add_argument("--mechanism", choices=["smart", "msensing", "online"], default="smart")
    p.add_argument("--observe-fraction", type=_fraction, default=1 / 3)
    p.add_argument("--arrival-seed", type=_nonneg_int, default=0)
    p.add_argument("--out", help="output JSON file (default: stdout)")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("simulate", help="run an experiment sweep and write CSV")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("config", nargs="?", help="experiment config JSON file")
    src.add_argument("--preset", choices=sorted(PRESETS))
    p.add_argument("--trials", type=_positive_int, help="override trials per point")
    p.add_argument("--out", help="output CSV file (default: stdout)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("verify", help="run the property battery")
    p.add_argument("--seed", type=_nonneg_int)
    p.add_argument("--count", type=_nonneg_int, default=1000)
    p.add_argument("--max-users", type=_positive_int, default=10)
    p.add_argument("--max-tasks", type=_positive_int, default=8)
    p.add_argument("--out", help="write violations as JSON lines to this file")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("example", help="trace the built-in worked example")
    p.set_defaults(func=cmd_example)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (InstanceError, ConfigError, ValueError) as exc:
        print(f"smartcrowd {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except OSError as exc:
        print(f"smartcrowd {args.command}: error: {exc.strerror or exc}: {exc.filename}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())

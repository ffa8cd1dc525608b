"""Command-line entry point: ``congestion-lab {run,gen-random,gen-routing,verify}``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .experiment import ConfigError, ExperimentConfig, multiplier_for, run_experiment
from .game import FEEDBACK_MODES, GameSpecError
from .generators import RoutingGameSpec, generate_random_game, generate_routing_game, parse_players
from .trace import verify_trace


def _write(text: str, out: str | None) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def cmd_run(args) -> int:
    cfg = ExperimentConfig.load(args.config)
    summary = run_experiment(cfg)
    print(f"wrote {len(summary['seeds'])} trace(s) and summary.json to {cfg.output_dir}")
    print(f"median final regret {summary['median_final_regret']:.6g}, "
          f"median best-iterate gap {summary['best_iterate_gap']:.6g}")
    return 0


def cmd_gen_random(args) -> int:
    game = generate_random_game(args.m, args.F, args.actions, args.monotone, args.seed, feedback=args.feedback)
    _write(game.dumps(), args.out)
    return 0


def _parse_grid(text: str) -> tuple[int, int]:
    try:
        w, h = text.lower().split("x")
        return int(w), int(h)
    except ValueError:
        raise argparse.ArgumentTypeError(f"grid must look like WxH, got {text!r}") from None


def cmd_gen_routing(args) -> int:
    width, height = args.grid
    rewards = [float(x) for x in args.rewards.split(",")] if args.rewards else None
    spec = RoutingGameSpec(width, height, parse_players(args.players), args.cap, rewards)
    game = generate_routing_game(spec, args.seed, feedback=args.feedback)
    _write(game.dumps(), args.out)
    return 0


def cmd_verify(args) -> int:
    status = 0
    for path in args.trace:
        mult = args.tau if args.tau is not None else multiplier_for(path)
        problems = verify_trace(path, mult)
        if problems:
            status = 1
            for p in problems:
                print(f"{path}: FAIL {p}")
        else:
            print(f"{path}: ok")
    return status


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="congestion-lab", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run an experiment config")
    p.add_argument("--config", required=True, help="JSON experiment config")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("gen-random", help="write a random congestion game as JSON")
    p.add_argument("--m", type=int, required=True, help="number of players")
    p.add_argument("--F", type=int, required=True, help="number of facilities")
    p.add_argument("--actions", type=int, required=True, help="actions per player")
    p.add_argument("--monotone", action="store_true", help="make rewards non-increasing in load")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--feedback", choices=FEEDBACK_MODES, default="semi")
    p.add_argument("--out", default=None, help="output path (default stdout)")
    p.set_defaults(func=cmd_gen_random)

    p = sub.add_parser("gen-routing", help="write a grid routing game as JSON")
    p.add_argument("--grid", type=_parse_grid, required=True, help="WxH node grid")
    p.add_argument("--players", required=True, help='routes like "0>3,1>3"')
    p.add_argument("--cap", type=int, default=8, help="max paths per player")
    p.add_argument("--rewards", default=None, help="shared per-edge curve r(1),...,r(m)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--feedback", choices=FEEDBACK_MODES, default="semi")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_gen_routing)

    p = sub.add_parser("verify", help="re-check trace integrity")
    p.add_argument("--trace", required=True, nargs="+", help="trace CSV file(s)")
    p.add_argument("--tau", type=float, default=None, help="regret multiplier (default: from summary.json)")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (ConfigError, GameSpecError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

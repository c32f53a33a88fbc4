"""Command-line entry point: ``pbdplan {run,episode,bound,plotdata}``."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from ..errors import ConfigError, InvalidInput, PlanningError
from ..planner.bound import BoundInputs, epsilon_bound
from ..planner.search import PlannerConfig, PlannerKind
from .config import check_planner_for_domain, load_experiment, load_scenario
from .experiment import emit_plot_data, format_table, read_summary_json, run_experiment
from .runner import run_episode


def _add_planner_flags(p: argparse.ArgumentParser, required: bool = False) -> None:
    p.add_argument("--planner", type=str.upper, choices=[k.value for k in PlannerKind], required=required)
    p.add_argument("--depth", type=int)
    p.add_argument("--samples", type=int)


def _cmd_run(args) -> int:
    cfg = load_experiment(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
    planners = cfg.planners
    if args.planner:
        planners = [PlannerConfig(args.planner, gamma=cfg.domain.gamma)]
    overrides = {k: v for k, v in (("depth", args.depth), ("samples", args.samples)) if v is not None}
    try:
        cfg.planners = [p.with_(**overrides) for p in planners]
    except InvalidInput as exc:
        raise ConfigError(str(exc)) from exc
    for p in cfg.planners:
        check_planner_for_domain(p, cfg.domain)
    out = Path(args.out) if args.out else cfg.output
    rows, _ = run_experiment(cfg, out, progress=lambda r: print(f"done {r.planner}", file=sys.stderr))
    print(format_table(rows))
    if out is not None:
        print(f"results written to {out}")
    return 0


def _cmd_episode(args) -> int:
    domain = load_scenario(args.scenario)
    try:
        cfg = PlannerConfig(
            args.planner or "PBD",
            gamma=domain.gamma,
            depth=args.depth if args.depth is not None else 2,
            samples=args.samples if args.samples is not None else 10,
        )
    except InvalidInput as exc:
        raise ConfigError(str(exc)) from exc
    check_planner_for_domain(cfg, domain)

    def log(t, rec, state, belief):
        print(f"t={t:3d} action={rec.action:<24} reward={rec.reward:9.3f} plan={rec.plan_time * 1e3:8.2f}ms")

    res = run_episode(domain, cfg, args.seed if args.seed is not None else 0, args.scenario_index, 0, args.max_steps, log)
    print(f"discounted return {res.discounted_return:.6f} over {len(res.steps)} steps")
    return 0


def _cmd_bound(args) -> int:
    try:
        if args.max_reward is not None:
            b = BoundInputs.with_reward_cap(args.gamma, args.depth, args.samples, args.macros, args.delta, args.max_reward)
        else:
            b = BoundInputs(args.gamma, args.depth, args.samples, args.macros, args.delta, args.v_max)
    except InvalidInput as exc:
        raise ConfigError(str(exc)) from exc
    print(repr(epsilon_bound(b)))
    return 0


def _cmd_plotdata(args) -> int:
    src = Path(args.summary)
    if src.is_dir():
        src = src / "summary.json"
    try:
        rows = read_summary_json(src)
    except (OSError, ValueError, KeyError) as exc:
        raise ConfigError(f"cannot read summary {src}: {exc}") from exc
    out = Path(args.out) if args.out else src.with_name("plot.csv")
    emit_plot_data(rows, out)
    print(f"{len(rows)} rows written to {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="pbdplan", description="Macro-action belief-space planning benchmarks.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run an experiment config")
    p.add_argument("config")
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    _add_planner_flags(p)
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("episode", help="run one seeded episode with a step log")
    p.add_argument("scenario")
    p.add_argument("--seed", type=int)
    p.add_argument("--scenario-index", type=int, default=0, help="initial condition index")
    p.add_argument("--max-steps", type=int)
    _add_planner_flags(p)
    p.set_defaults(func=_cmd_episode)

    p = sub.add_parser("bound", help="sampling error bound of the forward search")
    p.add_argument("--gamma", type=float, default=0.9)
    p.add_argument("--depth", type=int, default=2)
    p.add_argument("--samples", type=int, default=10)
    p.add_argument("--macros", type=int, default=5)
    p.add_argument("--delta", type=float, default=0.1)
    g = p.add_mutually_exclusive_group()
    g.add_argument("--v-max", type=float, default=10.0)
    g.add_argument("--max-reward", type=float, help="derive V_max as max|r| / (1 - gamma)")
    p.set_defaults(func=_cmd_bound)

    p = sub.add_parser("plotdata", help="turn a summary.json into long-format plot CSV")
    p.add_argument("summary", help="summary.json or a results directory")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_plotdata)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, PlanningError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

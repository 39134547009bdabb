"""Command line entry point: ``climate-clubs {run,experiment,validate}``.

Exit codes: 0 success, 1 validation error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import logging
import sys

from .config import dump_yaml, load_config
from .harness import EpisodeError, export_results, run_episode, run_experiment, run_summary
from .scenarios import SCENARIOS, load_calibration, rank_regions
from .state import ValidationError, new_world

log = logging.getLogger("climate_clubs")


def parse_seeds(text):
    """``"0,3,7"`` or ``"0-19"`` or a mix of both."""
    seeds = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if "-" in part:
            lo, hi = part.split("-", 1)
            seeds.extend(range(int(lo), int(hi) + 1))
        else:
            seeds.append(int(part))
    if not seeds:
        raise argparse.ArgumentTypeError("empty seed list")
    return seeds


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML config file (all keys optional)")
    common.add_argument("--scenario", choices=SCENARIOS)
    common.add_argument("--seeds", type=parse_seeds, help="e.g. 0-19 or 1,2,5")
    common.add_argument("--steps", type=int)
    common.add_argument("--out", help="output directory")
    common.add_argument("--calibration", help="region calibration CSV")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="climate-clubs", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("run", parents=[common], help="run one episode")
    exp = sub.add_parser("experiment", parents=[common], help="compare scenarios across seeds")
    exp.add_argument("--jobs", type=int, default=1, help="parallel episodes")
    sub.add_parser("validate", parents=[common], help="check config and calibration")
    return parser


def _config(args):
    cfg = load_config(args.config)
    if args.scenario:
        cfg.scenario = args.scenario
    if args.seeds:
        cfg.seeds = args.seeds
    if args.steps is not None:
        cfg.steps = args.steps
    if args.out:
        cfg.output_dir = args.out
    if args.calibration:
        cfg.calibration = args.calibration
    return cfg.validate()


def cmd_validate(cfg):
    params = load_calibration(cfg.calibration)
    world = new_world(params, config=cfg)
    world.validate()
    ranking = rank_regions(params, cfg.ranking_emission_weight, cfg.dynamics.capital_elasticity)
    print(f"config ok; calibration ok: {world.n_agents} regions")
    print("top-5 by emissions/output:", ", ".join(params[i].name for i in ranking[:5]))
    return 0


def cmd_run(cfg):
    seed = cfg.seeds[0]
    traj = run_episode(cfg, seed)
    paths = export_results(traj, run_summary(traj, cfg), cfg.output_dir)
    last = traj.metrics[-1]
    print(f"{traj.scenario} seed {seed}: year {last.year:g} temp rise {last.temp_rise:.3f} C, "
          f"largest group {last.largest_group_size}")
    for p in paths:
        print(f"  wrote {p}")
    return 0


def cmd_experiment(cfg, jobs):
    summary, _ = run_experiment(cfg, outdir=cfg.output_dir, jobs=jobs)
    brief = {sc: {k: v for k, v in s.items() if k.startswith("mean_") and k != "mean_mitigation_by_step"}
             for sc, s in summary["scenarios"].items()}
    print(dump_yaml(brief), end="")
    if "paired_deltas" in summary:
        pd = summary["paired_deltas"]
        print(dump_yaml({k: v for k, v in pd.items() if k != "per_seed"}), end="")
    print(f"wrote results to {cfg.output_dir}")
    return 0


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _config(args)
        if args.command == "validate":
            return cmd_validate(cfg)
        if args.command == "run":
            return cmd_run(cfg)
        return cmd_experiment(cfg, args.jobs)
    except ValidationError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return 1
    except EpisodeError as exc:
        if isinstance(exc.__cause__, ValidationError):
            print(f"validation error: {exc}", file=sys.stderr)
            return 1
        print(f"runtime error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001
        print(f"runtime error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

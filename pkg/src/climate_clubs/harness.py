"""Per-step stage pipeline, seeded episodes, scenario experiments and file export.

One step runs, in order: club choice, proposals, evaluations, economic levers
and tariffs, trade, economy/climate update, co-membership counters. Agents are
always visited in ascending id order, so (config, seed) fixes every output.
"""

from __future__ import annotations

import csv
import io
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import clubs, dynamics
from .config import SimConfig, dump_yaml
from .policies import Observation, assign_archetypes, clamp_action, make_policy
from .scenarios import initial_groups, load_calibration, rank_regions
from .state import AgentAction, ValidationError, new_world

log = logging.getLogger(__name__)

METRICS_HEADER = ("step", "year", "temp_rise", "total_gross_output", "mean_mitigation",
                  "group_count", "largest_group_size", "top5_in_largest")


class EpisodeError(RuntimeError):
    def __init__(self, scenario, seed, cause):
        self.scenario = scenario
        self.seed = seed
        super().__init__(f"episode scenario={scenario} seed={seed} failed: {cause}")


@dataclass
class MetricsRow:
    step: int
    year: float
    temp_rise: float
    total_gross_output: float
    mean_mitigation: float
    group_count: int
    largest_group_size: int
    top5_in_largest: int


@dataclass
class StepInfo:
    gross_output: np.ndarray
    net_output: np.ndarray
    emissions_total: float  # GtC injected into the atmosphere this step
    floors: np.ndarray
    effective_tariffs: np.ndarray
    trade: dynamics.TradeOutcome
    consumption: np.ndarray
    rewards: np.ndarray
    proposals: list
    diagnostics: list = field(default_factory=list)


@dataclass
class EpisodeTrajectory:
    scenario: str
    seed: int
    ranking: list
    archetypes: list
    snapshots: list
    metrics: list
    steps: list  # StepInfo per step
    diagnostics: list

    @property
    def final_groups(self):
        return self.snapshots[-1].club.membership.copy()

    def to_json(self):
        """Canonical serialisation of states and metrics (byte-stable for a given run)."""
        def snap(w):
            return {
                "step": w.step,
                "capital": w.capital.tolist(),
                "labor": w.labor.tolist(),
                "tfp": w.tfp.tolist(),
                "carbon_intensity": w.carbon_intensity.tolist(),
                "saving_rate": w.saving_rate.tolist(),
                "mitigation_rate": w.mitigation_rate.tolist(),
                "export_cap": w.export_cap.tolist(),
                "base_tariffs": w.base_tariffs.tolist(),
                "carbon_masses": w.climate.carbon_masses.tolist(),
                "temp_atmosphere": w.climate.temp_atmosphere,
                "temp_ocean": w.climate.temp_ocean,
                "membership": w.club.membership.tolist(),
                "co_membership_steps": w.club.co_membership_steps.tolist(),
            }
        doc = {
            "scenario": self.scenario,
            "seed": self.seed,
            "ranking": list(self.ranking),
            "archetypes": list(self.archetypes),
            "snapshots": [snap(w) for w in self.snapshots],
            "metrics": [asdict(m) for m in self.metrics],
            "diagnostics": list(self.diagnostics),
        }
        return json.dumps(doc, sort_keys=True, separators=(",", ":"))


def import_bids(Q, demand_share):
    """Each importer spends ``demand_share`` of its net output, split by partner size."""
    Q = np.asarray(Q, dtype=float)
    n = len(Q)
    if n < 2:
        return np.zeros((n, n))
    others = Q.sum() - Q
    weights = np.divide(Q[None, :], others[:, None], out=np.zeros((n, n)), where=others[:, None] > 0)
    np.fill_diagonal(weights, 0.0)
    return demand_share * Q[:, None] * weights


def step_episode(world, policies, config, major_agents=frozenset()):
    """Advance ``world`` by one step; returns ``(new_world, StepInfo)``."""
    n = world.n_agents
    t = world.step
    dp = config.dynamics
    bounds = config.bounds
    diag = []

    def obs(i, membership, incoming=None):
        return Observation(i, t, membership, major_agents, incoming or {}, bounds)

    try:
        # 1. club choice, seen against last step's membership
        prev = world.club.membership.copy()
        choices = [policies[i].choose_group(obs(i, prev)) for i in range(n)]
        membership = clubs.resolve_group_choices(prev, choices, diag)

        # 2. proposals between co-members only
        raw = {i: policies[i].propose(obs(i, membership)) for i in range(n)}
        proposals = clubs.collect_proposals(membership, raw, diag)

        # 3. evaluations -> mitigation floors
        incoming = {i: {} for i in range(n)}
        for p in proposals:
            incoming[p.recipient][p.proposer] = p.requested_mitigation
        evaluations = {i: policies[i].evaluate(obs(i, membership, incoming[i])) for i in range(n)}
        floors = clubs.apply_evaluations(proposals, evaluations, n, diag)

        # 4. economic levers, clamped; tariffs composed from club state
        actions = []
        for i in range(n):
            raw_action = AgentAction(
                group_choice=int(membership[i]),
                proposals=raw[i],
                evaluations=evaluations[i],
                **policies[i].economic(obs(i, membership, incoming[i])),
            )
            actions.append(clamp_action(raw_action, bounds))
        saving = np.array([a.saving_rate for a in actions])
        chosen_mu = np.array([a.mitigation_rate for a in actions])
        export_cap = np.array([a.export_cap for a in actions])
        base = np.zeros((n, n))
        for i, a in enumerate(actions):
            if a.base_tariffs is not None:
                base[i] = a.base_tariffs
        np.fill_diagonal(base, 0.0)
        mu = clubs.realized_mitigation(chosen_mu, floors)
        tau = clubs.effective_tariff_matrix(base, membership, world.club.co_membership_steps, config.club)

        # 5. production and trade
        theta1 = np.array([p.abatement_cost_coeff for p in world.params])
        Y = dynamics.gross_output(world.tfp, world.capital, world.labor, dp.capital_elasticity)
        T_AT = world.climate.temp_atmosphere
        Q = dynamics.net_output(Y, T_AT, mu, theta1, dp)
        trade = dynamics.settle_trade(Q, export_cap, import_bids(Q, config.import_demand), tau)
        C = dynamics.consumption(Q, saving, trade)
        rewards, clamped = dynamics.step_reward(C, world.labor, dp.utility_elasticity)
        for i in np.flatnonzero(clamped):
            diag.append(f"step {t}: agent {i} consumption {C[i]!r} clamped to {dynamics.C_FLOOR}")

        # 6. economy and climate
        years = config.years_per_step
        e_total = years * float(np.sum(dynamics.emissions(world.carbon_intensity, mu, Y))) + dp.land_emissions(t)
        M = dynamics.carbon_cycle_step(world.climate.carbon_masses, e_total, dp.transfer_matrix)
        T_next = dynamics.temperature_step(T_AT, world.climate.temp_ocean, M[0], dp, t + 1)
        K = dynamics.capital_step(world.capital, saving, Q, dp.capital_depreciation, years)
        col = lambda name: np.array([getattr(p, name) for p in world.params])  # noqa: E731
        A, sigma, L = dynamics.exogenous_step(
            world.tfp, world.carbon_intensity, world.labor,
            col("tfp_growth_initial"), col("tfp_growth_decline"), col("carbon_intensity_decline"),
            col("labor_asymptote"), col("labor_convergence"), t, years,
        )

        # 7. co-membership counters
        counters = clubs.update_co_membership(world.club.co_membership_steps, membership)
    except ValidationError:
        raise
    except (ValueError, FloatingPointError) as exc:
        raise ValidationError([str(exc)], context=f"step {t}") from exc

    new = world.copy()
    new.step = t + 1
    new.capital, new.labor, new.tfp, new.carbon_intensity = K, L, A, sigma
    new.saving_rate, new.mitigation_rate, new.export_cap = saving, mu, export_cap
    new.base_tariffs = base
    new.climate.carbon_masses = M
    new.climate.temp_atmosphere, new.climate.temp_ocean = float(T_next[0]), float(T_next[1])
    new.club.membership = membership
    new.club.co_membership_steps = counters
    info = StepInfo(Y, Q, e_total, floors, tau, trade, C, rewards, proposals, diag)
    return new, info


def largest_group_stats(membership, top_agents):
    """(group count, largest size, most top agents found in any largest group)."""
    sizes = clubs.group_sizes(membership)
    if not sizes:
        return 0, 0, 0
    largest = max(sizes.values())
    top = max(
        sum(1 for j in top_agents if membership[j] == g)
        for g, s in sizes.items() if s == largest
    )
    return len(sizes), largest, top


def metrics_row(world, initial_temp, config, top_agents):
    Y = dynamics.gross_output(world.tfp, world.capital, world.labor, config.dynamics.capital_elasticity)
    count, largest, top = largest_group_stats(world.club.membership, top_agents)
    return MetricsRow(
        step=world.step,
        year=world.step * config.years_per_step,
        temp_rise=world.climate.temp_atmosphere - initial_temp,
        total_gross_output=float(np.sum(Y)),
        mean_mitigation=float(np.mean(world.mitigation_rate)),
        group_count=count,
        largest_group_size=largest,
        top5_in_largest=top,
    )


def build_policies(config, ranking, assign_rng, agent_seeds):
    pc = config.policies
    archetypes = assign_archetypes(pc.preset, ranking, assign_rng, pc.freerider_share, pc.top_k)
    overrides = {}
    for agent, entry in pc.agents.items():
        entry = dict(entry)
        archetypes[agent] = entry.pop("archetype")
        overrides[agent] = entry
    policies = []
    for i, name in enumerate(archetypes):
        params = dict(pc.params.get(name, {}))
        params.update(overrides.get(i, {}))
        policies.append(make_policy(name, np.random.default_rng(agent_seeds[i]), **params))
    return archetypes, policies


def run_episode(config, seed, scenario=None, calibration=None):
    scenario = scenario or config.scenario
    config.validate()
    params = calibration if calibration is not None else load_calibration(config.calibration)
    world = new_world(params, config=config)
    ranking = rank_regions(params, config.ranking_emission_weight, config.dynamics.capital_elasticity)
    init_seq, assign_seq, agents_seq = np.random.SeedSequence(seed).spawn(3)
    world.club.membership = initial_groups(scenario, ranking, np.random.default_rng(init_seq))
    world.validate()
    archetypes, policies = build_policies(
        config, ranking, np.random.default_rng(assign_seq), agents_seq.spawn(world.n_agents)
    )
    top = frozenset(ranking[:config.policies.top_k])

    t0 = world.climate.temp_atmosphere
    snapshots = [world]
    metrics = [metrics_row(world, t0, config, top)]
    infos, diagnostics = [], []
    for _ in range(config.steps):
        world, info = step_episode(world, policies, config, top)
        world.validate()
        snapshots.append(world)
        metrics.append(metrics_row(world, t0, config, top))
        infos.append(info)
        diagnostics += info.diagnostics
    return EpisodeTrajectory(scenario, seed, ranking, archetypes, snapshots, metrics, infos, diagnostics)


def cumulative_gross_output(traj, years_per_step):
    """Output produced over the episode (steps 0..T-1), in trillion USD."""
    return years_per_step * sum(m.total_gross_output for m in traj.metrics[:-1])


def episode_summary(traj, config):
    last = traj.metrics[-1]
    return {
        "final_temp_rise": last.temp_rise,
        "cumulative_gross_output": cumulative_gross_output(traj, config.years_per_step),
        "final_mean_mitigation": last.mean_mitigation,
        "largest_group_size": last.largest_group_size,
        "top5_in_largest": last.top5_in_largest,
        "final_group_sizes": sorted(clubs.group_sizes(traj.final_groups).values(), reverse=True),
        "clamped_consumption_steps": sum(1 for d in traj.diagnostics if "clamped" in d),
    }


def _run_one(args):
    config, scenario, seed, calibration = args
    try:
        return run_episode(config, seed, scenario, calibration)
    except Exception as exc:  # noqa: BLE001 - re-raised with (scenario, seed) context
        raise EpisodeError(scenario, seed, exc) from exc


def run_experiment(config, seeds=None, outdir=None, jobs=1):
    """Run every configured scenario for every seed; returns ``(summary, trajectories)``.

    When ``outdir`` is given, per-run metrics/group files and ``summary.yaml``
    are written there.
    """
    config.validate()
    seeds = list(seeds if seeds is not None else config.seeds)
    calibration = load_calibration(config.calibration)
    tasks = [(config, sc, s, calibration) for sc in config.scenarios for s in seeds]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            trajs = list(pool.map(_run_one, tasks))
    else:
        trajs = [_run_one(t) for t in tasks]
    by_key = {(t.scenario, t.seed): t for t in trajs}
    summary = summarize(config, seeds, by_key)
    if outdir is not None:
        for t in trajs:
            export_results(t, None, outdir)
        write_summary(summary, outdir)
    return summary, by_key


def summarize(config, seeds, by_key):
    per_scenario = {}
    for sc in config.scenarios:
        runs = {s: episode_summary(by_key[(sc, s)], config) for s in seeds}
        hist = {}
        for r in runs.values():
            for size in r["final_group_sizes"]:
                hist[size] = hist.get(size, 0) + 1
        mitig = np.mean([[m.mean_mitigation for m in by_key[(sc, s)].metrics] for s in seeds], axis=0)
        per_scenario[sc] = {
            "mean_final_temp_rise": float(np.mean([r["final_temp_rise"] for r in runs.values()])),
            "mean_cumulative_gross_output": float(np.mean([r["cumulative_gross_output"] for r in runs.values()])),
            "mean_final_largest_group": float(np.mean([r["largest_group_size"] for r in runs.values()])),
            "mean_final_top5_in_largest": float(np.mean([r["top5_in_largest"] for r in runs.values()])),
            "mean_mitigation_by_step": [float(x) for x in mitig],
            "final_group_size_histogram": dict(sorted(hist.items())),
            "per_seed": runs,
        }
    summary = {"config": config.to_dict(), "seeds": seeds, "scenarios": per_scenario}
    if "hc" in per_scenario and "hc_lc" in per_scenario:
        summary["paired_deltas"] = paired_deltas(per_scenario["hc"]["per_seed"], per_scenario["hc_lc"]["per_seed"])
    return summary


def paired_deltas(hc, hc_lc):
    rows = {}
    for s in hc:
        a, b = hc[s], hc_lc[s]
        rows[s] = {
            "temp_rise_hc_minus_hc_lc": a["final_temp_rise"] - b["final_temp_rise"],
            "cumulative_output_rel_diff": (b["cumulative_gross_output"] - a["cumulative_gross_output"])
            / a["cumulative_gross_output"],
            "largest_group_hc_lc_minus_hc": b["largest_group_size"] - a["largest_group_size"],
            "top5_in_largest_hc_lc_minus_hc": b["top5_in_largest"] - a["top5_in_largest"],
        }
    n = len(rows)
    return {
        "per_seed": rows,
        "share_hc_lc_cooler": sum(r["temp_rise_hc_minus_hc_lc"] > 0 for r in rows.values()) / n,
        "max_abs_output_rel_diff": max(abs(r["cumulative_output_rel_diff"]) for r in rows.values()),
        "share_hc_lc_clusters_at_least_as_much": sum(
            r["largest_group_hc_lc_minus_hc"] >= 0 and r["top5_in_largest_hc_lc_minus_hc"] >= 0
            for r in rows.values()
        ) / n,
    }


def run_prefix(traj):
    return f"{traj.scenario}_seed{traj.seed}"


def metrics_csv(traj):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(METRICS_HEADER)
    for m in traj.metrics:
        w.writerow([m.step, repr(float(m.year)), repr(m.temp_rise), repr(m.total_gross_output),
                    repr(m.mean_mitigation), m.group_count, m.largest_group_size, m.top5_in_largest])
    return buf.getvalue()


def groups_csv(traj):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("agent_id", "group_id"))
    for i, g in enumerate(traj.final_groups):
        w.writerow((i, int(g)))
    return buf.getvalue()


def _write(path, text):
    try:
        path.write_text(text, encoding="utf-8")
    except OSError as exc:
        raise OSError(exc.errno, f"cannot write {path}: {exc.strerror}") from exc
    return path


def export_results(traj, summary, outdir):
    """Write ``<scenario>_seed<k>_metrics.csv``, ``..._groups.csv`` and, if given, ``summary.yaml``."""
    outdir = Path(outdir)
    try:
        outdir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(exc.errno, f"cannot create {outdir}: {exc.strerror}") from exc
    prefix = run_prefix(traj)
    paths = [
        _write(outdir / f"{prefix}_metrics.csv", metrics_csv(traj)),
        _write(outdir / f"{prefix}_groups.csv", groups_csv(traj)),
    ]
    if summary is not None:
        paths.append(write_summary(summary, outdir))
    return paths


def write_summary(summary, outdir):
    return _write(Path(outdir) / "summary.yaml", dump_yaml(summary))


def run_summary(traj, config):
    return {
        "config": config.to_dict(),
        "scenario": traj.scenario,
        "seed": traj.seed,
        "ranking": list(traj.ranking),
        "archetypes": list(traj.archetypes),
        "result": episode_summary(traj, config),
        "diagnostics": list(traj.diagnostics),
    }


__all__ = [
    "EpisodeError", "EpisodeTrajectory", "METRICS_HEADER", "MetricsRow", "SimConfig", "StepInfo",
    "export_results", "run_episode", "run_experiment", "step_episode",
]

import csv

import numpy as np
import pytest

from climate_clubs import cli, clubs, dynamics
from climate_clubs.config import PolicyConfig, SimConfig, config_from_dict, load_config
from climate_clubs.dynamics import DynamicsParams
from climate_clubs.harness import (
    import_bids, largest_group_stats, metrics_row, run_episode, run_experiment, step_episode,
)
from climate_clubs.policies import RandomPolicy, StaticPolicy
from climate_clubs.state import ValidationError, new_world

from conftest import make_region, region_row, write_calibration


def small_config(**kw):
    return SimConfig(steps=kw.pop("steps", 3), **kw)


# single step ----------------------------------------------------------------

def test_two_agent_member_tariff_at_counter_zero():
    w = new_world([make_region("a"), make_region("b")])
    w.club.membership[:] = 1
    pols = [StaticPolicy(tariff=0.3, export_cap=0.2) for _ in range(2)]
    cfg = small_config()
    w1, info = step_episode(w, pols, cfg)
    assert info.effective_tariffs[0, 1] == pytest.approx(0.05)
    assert w1.club.co_membership_steps[0, 1] == 1
    _, info2 = step_episode(w1, pols, cfg)
    assert info2.effective_tariffs[0, 1] == pytest.approx(0.05 * 2 / 3)


def test_zero_emission_world_only_land_carbon():
    dp = DynamicsParams(land_emissions_initial=0.0)
    cfg = small_config(dynamics=dp)
    w = new_world([make_region(str(i), carbon_intensity_initial=0.0) for i in range(3)])
    total0 = w.climate.carbon_masses.sum()
    w1, info = step_episode(w, [StaticPolicy() for _ in range(3)], cfg)
    assert info.emissions_total == 0.0
    assert w1.climate.carbon_masses.sum() == pytest.approx(total0, rel=1e-15)


def test_step_does_not_mutate_input():
    w = new_world([make_region(str(i)) for i in range(3)])
    before = w.copy()
    step_episode(w, [RandomPolicy(np.random.default_rng(i)) for i in range(3)], small_config())
    assert np.array_equal(w.capital, before.capital)
    assert np.array_equal(w.club.membership, before.club.membership)
    assert np.array_equal(w.climate.carbon_masses, before.climate.carbon_masses)


def test_step_deterministic():
    w = new_world([make_region(str(i)) for i in range(4)])
    outs = []
    for _ in range(2):
        pols = [RandomPolicy(np.random.default_rng(i)) for i in range(4)]
        w1, _ = step_episode(w, pols, small_config())
        outs.append(w1)
    assert np.array_equal(outs[0].capital, outs[1].capital)
    assert np.array_equal(outs[0].club.membership, outs[1].club.membership)


def test_realized_mitigation_respects_floors():
    w = new_world([make_region(str(i)) for i in range(5)])
    w.club.membership[:] = 1
    pols = [RandomPolicy(np.random.default_rng(i)) for i in range(5)]
    for _ in range(10):
        w, info = step_episode(w, pols, small_config())
        assert np.all(w.mitigation_rate >= info.floors)


def test_import_bids_shape():
    bids = import_bids([1.0, 1.0, 2.0], 0.2)
    assert np.all(np.diag(bids) == 0)
    assert bids.sum(axis=1) == pytest.approx([0.2, 0.2, 0.4])
    assert import_bids([3.0], 0.2).tolist() == [[0.0]]


def test_largest_group_stats():
    assert largest_group_stats(np.array([1, 1, 2, 2, 0]), {0, 2, 3}) == (2, 2, 2)
    assert largest_group_stats(np.zeros(3, dtype=int), {0}) == (0, 0, 0)


# episodes -------------------------------------------------------------------

@pytest.fixture(scope="module")
def hc_run():
    return run_episode(SimConfig(), 0, "hc")


def test_episode_length_and_years(hc_run):
    assert len(hc_run.metrics) == 21
    assert hc_run.metrics[-1].year == 100.0
    assert hc_run.metrics[0].temp_rise == 0.0


def test_episode_deterministic(hc_run):
    assert run_episode(SimConfig(), 0, "hc").to_json() == hc_run.to_json()


def test_none_scenario_starts_ungrouped():
    traj = run_episode(small_config(), 0, "none")
    assert not traj.snapshots[0].club.membership.any()


def test_hc_lc_top5_distinct_at_start():
    traj = run_episode(small_config(), 0, "hc_lc")
    g0 = traj.snapshots[0].club.membership
    assert len({int(g0[a]) for a in traj.ranking[:5]}) == 5


def test_metrics_recomputed_from_snapshots(hc_run):
    cfg = SimConfig()
    top = frozenset(hc_run.ranking[:5])
    t0 = hc_run.snapshots[0].climate.temp_atmosphere
    for w, m in zip(hc_run.snapshots, hc_run.metrics):
        assert metrics_row(w, t0, cfg, top) == m
        Y = dynamics.gross_output(w.tfp, w.capital, w.labor, 0.3)
        assert m.total_gross_output == pytest.approx(Y.sum(), rel=1e-12)
        sizes = clubs.group_sizes(w.club.membership)
        assert m.largest_group_size == max(sizes.values(), default=0)


def test_carbon_conserved_over_episode(hc_run):
    m0 = hc_run.snapshots[0].climate.carbon_masses.sum()
    injected = sum(info.emissions_total for info in hc_run.steps)
    mT = hc_run.snapshots[-1].climate.carbon_masses.sum()
    assert abs(mT - m0 - injected) / m0 < 1e-12


def test_every_snapshot_valid(hc_run):
    for w in hc_run.snapshots:
        w.validate()


def test_all_freeriders_scenarios_match_on_climate():
    cfg = small_config(steps=10, policies=PolicyConfig(preset="freerider"))
    a = run_episode(cfg, 2, "hc")
    b = run_episode(cfg, 2, "hc_lc")
    assert a.metrics[-1].temp_rise == pytest.approx(b.metrics[-1].temp_rise, abs=1e-9)


def test_per_agent_override():
    cfg = config_from_dict({"steps": 2, "policies": {"agents": {0: {"archetype": "static", "mitigation_rate": 0.4}}}})
    traj = run_episode(cfg, 0)
    assert traj.archetypes[0] == "static"
    assert traj.snapshots[-1].mitigation_rate[0] >= 0.4


def test_bad_calibration_in_episode(tmp_path):
    rows = [region_row(make_region(f"x{i}")) for i in range(10)]
    rows[3]["labor_initial"] = "-1"
    path = write_calibration(tmp_path / "c.csv", rows)
    with pytest.raises(ValidationError, match="row 4"):
        run_episode(small_config(calibration=str(path)), 0)


# experiment and export ------------------------------------------------------

def test_experiment_files(tmp_path):
    summary, by_key = run_experiment(small_config(seeds=[0]), outdir=tmp_path)
    names = sorted(p.name for p in tmp_path.iterdir())
    assert names == ["hc_lc_seed0_groups.csv", "hc_lc_seed0_metrics.csv",
                     "hc_seed0_groups.csv", "hc_seed0_metrics.csv", "summary.yaml"]
    with open(tmp_path / "hc_seed0_metrics.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 4 and float(rows[-1]["year"]) == 15.0
    assert "paired_deltas" in summary
    assert set(by_key) == {("hc", 0), ("hc_lc", 0)}


def test_experiment_rerun_byte_identical(tmp_path):
    cfg = small_config(seeds=[0, 1])
    run_experiment(cfg, outdir=tmp_path / "a")
    run_experiment(cfg, outdir=tmp_path / "b")
    for p in (tmp_path / "a").iterdir():
        assert p.read_bytes() == (tmp_path / "b" / p.name).read_bytes()


def test_parallel_matches_serial(tmp_path):
    cfg = small_config(seeds=[0, 1])
    s1, _ = run_experiment(cfg, jobs=1)
    s2, _ = run_experiment(cfg, jobs=2)
    assert s1 == s2


# config ---------------------------------------------------------------------

def test_config_roundtrip(tmp_path):
    p = tmp_path / "c.yaml"
    p.write_text("steps: 4\nseeds: [1, 2]\nclub: {surcharge: 0.2}\npolicies: {preset: cooperative}\n")
    cfg = load_config(p)
    assert cfg.steps == 4 and cfg.club.surcharge == 0.2 and cfg.policies.preset == "cooperative"
    assert config_from_dict(cfg.to_dict()).to_dict() == cfg.to_dict()


@pytest.mark.parametrize("data, needle", [
    ({"stepz": 3}, "unknown key"),
    ({"steps": 0}, "steps"),
    ({"scenario": "x"}, "unknown scenario"),
    ({"club": {"decay_horizon": 0}}, "club"),
    ({"policies": {"preset": "nope"}}, "preset"),
])
def test_config_rejects(data, needle):
    with pytest.raises(ValidationError, match=needle):
        config_from_dict(data).validate()


# CLI ------------------------------------------------------------------------

def test_cli_validate_ok(capsys):
    assert cli.main(["validate"]) == 0
    assert "27 regions" in capsys.readouterr().out


def test_cli_run_and_experiment(tmp_path):
    assert cli.main(["run", "--steps", "2", "--out", str(tmp_path / "r")]) == 0
    assert (tmp_path / "r" / "hc_seed0_metrics.csv").exists()
    assert cli.main(["experiment", "--steps", "2", "--seeds", "0-1", "--out", str(tmp_path / "e")]) == 0
    assert len(list((tmp_path / "e").glob("*_metrics.csv"))) == 4


def test_cli_validation_error(tmp_path, capsys):
    assert cli.main(["validate", "--calibration", str(tmp_path / "missing.csv")]) == 1
    assert "validation error" in capsys.readouterr().err


def test_cli_runtime_error(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert cli.main(["run", "--steps", "1", "--out", str(blocker / "sub")]) == 2


def test_parse_seeds():
    assert cli.parse_seeds("0-2,7") == [0, 1, 2, 7]

"""Region calibration, emission/output ranking and initial club layouts."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .dynamics import gross_output
from .state import RegionParams, ValidationError

CALIBRATION_COLUMNS = (
    "region",
    "tfp_initial",
    "tfp_growth_initial",
    "tfp_growth_decline",
    "capital_initial",
    "labor_initial",
    "labor_asymptote",
    "labor_convergence",
    "carbon_intensity_initial",
    "carbon_intensity_decline",
    "abatement_cost_coeff",
    "emissions_initial",
)

SCENARIOS = ("hc", "hc_lc", "none")
TOP_K = 5
HC_OTHER_GROUPS = (2, 3, 4, 5)


class CalibrationError(ValidationError):
    pass


class ScenarioError(ValueError):
    pass


def default_calibration_path():
    return Path(str(resources.files("climate_clubs") / "data" / "regions.csv"))


def load_calibration(path=None):
    """Read a calibration CSV; row order defines agent ids 0..N-1.

    Errors name the 1-based data row (header excluded) and the column.
    """
    path = Path(path) if path is not None else default_calibration_path()
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise CalibrationError([f"cannot open {path}: {exc.strerror}"], context="calibration") from exc
    with fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [c for c in CALIBRATION_COLUMNS if c not in header]
        if missing:
            raise CalibrationError([f"missing column {c}" for c in missing], context=str(path))
        issues = []
        params = []
        seen = {}
        for row_no, row in enumerate(reader, start=1):
            name = (row.get("region") or "").strip()
            if not name:
                issues.append(f"row {row_no}, column region: empty region name")
            elif name in seen:
                issues.append(f"row {row_no}, column region: duplicate region name {name!r} (first at row {seen[name]})")
            else:
                seen[name] = row_no
            values = {}
            for col in CALIBRATION_COLUMNS[1:]:
                cell = (row.get(col) or "").strip()
                try:
                    values[col] = float(cell)
                except ValueError:
                    issues.append(f"row {row_no}, column {col}: not a number ({cell!r})")
                    continue
                if not math.isfinite(values[col]):
                    issues.append(f"row {row_no}, column {col}: not finite ({cell!r})")
            if len(values) == len(CALIBRATION_COLUMNS) - 1:
                p = RegionParams(name=name, **values)
                issues += [f"row {row_no} ({name}): {msg}" for msg in p.problems()]
                params.append(p)
    if not params and not issues:
        issues.append("no data rows")
    if issues:
        raise CalibrationError(issues, context=str(path))
    return params


@dataclass(frozen=True)
class RankingScore:
    agent_id: int
    emissions_initial: float
    output_initial: float
    composite_score: float


def _minmax(x):
    x = np.asarray(x, dtype=float)
    span = x.max() - x.min()
    if span == 0:
        return np.zeros_like(x)
    return (x - x.min()) / span


def ranking_scores(calibration, emission_weight=0.5, capital_elasticity=0.3):
    emis = np.array([p.emissions_initial for p in calibration])
    out = np.array([
        gross_output(p.tfp_initial, p.capital_initial, p.labor_initial, capital_elasticity)
        for p in calibration
    ])
    score = emission_weight * _minmax(emis) + (1.0 - emission_weight) * _minmax(out)
    return [RankingScore(i, float(emis[i]), float(out[i]), float(score[i])) for i in range(len(calibration))]


def rank_regions(calibration, emission_weight=0.5, capital_elasticity=0.3):
    """Agent ids by descending composite score; ties go to the lower id."""
    if not calibration:
        raise ScenarioError("cannot rank an empty calibration")
    scores = ranking_scores(calibration, emission_weight, capital_elasticity)
    # rounding keeps mathematically equal scores tied despite float noise
    return [s.agent_id for s in sorted(scores, key=lambda s: (-round(s.composite_score, 12), s.agent_id))]


def _as_generator(rng):
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


def init_hc(ranking, rng):
    """Top five in group 1; everyone else uniformly in groups 2-5 (may leave some empty)."""
    n = len(ranking)
    if n < TOP_K + len(HC_OTHER_GROUPS):
        raise ScenarioError(f"hc scenario needs at least {TOP_K + len(HC_OTHER_GROUPS)} agents, got {n}")
    rng = _as_generator(rng)
    groups = np.zeros(n, dtype=np.int64)
    groups[list(ranking[:TOP_K])] = 1
    rest = list(ranking[TOP_K:])
    draws = rng.integers(0, len(HC_OTHER_GROUPS), size=len(rest))
    for agent, d in zip(rest, draws):
        groups[agent] = HC_OTHER_GROUPS[d]
    return groups


def init_hc_lc(ranking):
    """Top five seed groups 1-5; the rest are dealt round-robin in rank order."""
    n = len(ranking)
    if n < TOP_K:
        raise ScenarioError(f"hc_lc scenario needs at least {TOP_K} agents, got {n}")
    groups = np.zeros(n, dtype=np.int64)
    for pos, agent in enumerate(ranking):
        groups[agent] = pos % TOP_K + 1
    return groups


def initial_groups(scenario, ranking, rng):
    if scenario == "hc":
        return init_hc(ranking, rng)
    if scenario == "hc_lc":
        return init_hc_lc(ranking)
    if scenario == "none":
        return np.zeros(len(ranking), dtype=np.int64)
    raise ScenarioError(f"unknown scenario {scenario!r}; expected one of {SCENARIOS}")

"""Run configuration and its YAML representation."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np
import yaml

from .clubs import ClubParams
from .dynamics import DynamicsParams
from .policies import ARCHETYPES, PRESETS, ActionBounds
from .scenarios import SCENARIOS
from .state import ValidationError


def default_archetype_params():
    return {
        "cooperative": {"p_consolidate": 0.2},
        "conditional": {"p_consolidate": 0.2, "p_exit": 0.5},
        "freerider": {"p_exit": 0.5},
    }


@dataclass
class PolicyConfig:
    preset: str = "mixed"
    freerider_share: float = 0.25
    top_k: int = 5
    params: dict = field(default_factory=default_archetype_params)
    agents: dict = field(default_factory=dict)  # agent id -> {"archetype": ..., **params}

    def problems(self, n_agents=None):
        out = []
        if self.preset not in PRESETS:
            out.append(f"policies.preset {self.preset!r} not in {PRESETS}")
        if not 0.0 <= self.freerider_share <= 1.0:
            out.append("policies.freerider_share must lie in [0, 1]")
        if self.top_k < 0:
            out.append("policies.top_k must be >= 0")
        for name in self.params:
            if name not in ARCHETYPES:
                out.append(f"policies.params: unknown archetype {name!r}")
        for agent, entry in self.agents.items():
            if not isinstance(agent, int) or (n_agents is not None and not 0 <= agent < n_agents):
                out.append(f"policies.agents: bad agent id {agent!r}")
            if not isinstance(entry, dict) or entry.get("archetype") not in ARCHETYPES:
                out.append(f"policies.agents[{agent}]: archetype must be one of {sorted(ARCHETYPES)}")
        return out


@dataclass
class SimConfig:
    steps: int = 20
    years_per_step: float = 5.0
    scenario: str = "hc"
    scenarios: list = field(default_factory=lambda: ["hc", "hc_lc"])
    seeds: list = field(default_factory=lambda: [0])
    calibration: str | None = None
    n_agents: int | None = None  # defaults to the calibration's row count
    output_dir: str = "results"
    import_demand: float = 0.2  # share of net output each region bids on imports
    ranking_emission_weight: float = 0.5
    club: ClubParams = field(default_factory=ClubParams)
    dynamics: DynamicsParams = field(default_factory=DynamicsParams)
    bounds: ActionBounds = field(default_factory=ActionBounds)
    policies: PolicyConfig = field(default_factory=PolicyConfig)

    def problems(self):
        out = []
        if not isinstance(self.steps, int) or self.steps < 1:
            out.append(f"steps must be an integer >= 1 ({self.steps!r})")
        if self.years_per_step <= 0:
            out.append("years_per_step must be > 0")
        for s in [self.scenario, *self.scenarios]:
            if s not in SCENARIOS:
                out.append(f"unknown scenario {s!r}; expected one of {SCENARIOS}")
        if not self.seeds:
            out.append("seeds must be nonempty")
        for s in self.seeds:
            if not isinstance(s, int) or s < 0:
                out.append(f"seed {s!r} must be a nonnegative integer")
        if not 0.0 <= self.import_demand <= 1.0:
            out.append("import_demand must lie in [0, 1]")
        if not 0.0 <= self.ranking_emission_weight <= 1.0:
            out.append("ranking_emission_weight must lie in [0, 1]")
        out += [f"club: {m}" for m in self.club.problems()]
        out += [f"dynamics: {m}" for m in self.dynamics.problems()]
        out += [f"bounds: {m}" for m in self.bounds.problems()]
        out += self.policies.problems(self.n_agents)
        return out

    def validate(self):
        issues = self.problems()
        if issues:
            raise ValidationError(issues, context="config")
        return self

    def to_dict(self):
        d = {}
        for f in fields(self):
            v = getattr(self, f.name)
            if f.name == "club":
                v = {k: getattr(v, k) for k in ("surcharge", "member_tariff_initial", "decay_horizon")}
            elif f.name in ("dynamics", "bounds", "policies"):
                v = asdict(v)
            d[f.name] = _plain(v)
        return d


def _plain(v):
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, dict):
        return {k: _plain(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_plain(x) for x in v]
    if isinstance(v, np.generic):
        return v.item()
    return v


def _build(cls, data, section):
    if data is None:
        return cls()
    if not isinstance(data, dict):
        raise ValidationError([f"{section} must be a mapping"], context="config")
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ValidationError([f"{section}: unknown key {k!r}" for k in unknown], context="config")
    kwargs = dict(data)
    if cls is DynamicsParams:
        if "transfer_matrix" in kwargs:
            kwargs["transfer_matrix"] = np.array(kwargs["transfer_matrix"], dtype=float)
        if "temp_coeffs" in kwargs:
            kwargs["temp_coeffs"] = tuple(kwargs["temp_coeffs"])
    if cls is PolicyConfig and "params" in kwargs:
        merged = default_archetype_params()
        for name, p in (kwargs["params"] or {}).items():
            merged[name] = dict(p or {})
        kwargs["params"] = merged
    try:
        return cls(**kwargs)
    except TypeError as exc:
        raise ValidationError([f"{section}: {exc}"], context="config") from exc


def config_from_dict(data):
    data = dict(data or {})
    sections = {"club": ClubParams, "dynamics": DynamicsParams, "bounds": ActionBounds, "policies": PolicyConfig}
    kwargs = {name: _build(cls, data.pop(name, None), name) for name, cls in sections.items()}
    known = {f.name for f in fields(SimConfig)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ValidationError([f"unknown key {k!r}" for k in unknown], context="config")
    if "seeds" in data and isinstance(data["seeds"], int):
        data["seeds"] = [data["seeds"]]
    return SimConfig(**data, **kwargs)


def load_config(path=None):
    if path is None:
        return SimConfig()
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ValidationError([f"cannot read {path}: {exc.strerror}"], context="config") from exc
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ValidationError([f"cannot parse {path}: {exc}"], context="config") from exc
    if data is not None and not isinstance(data, dict):
        raise ValidationError([f"{path}: top level must be a mapping"], context="config")
    return config_from_dict(data)


def dump_yaml(data):
    return yaml.safe_dump(_plain(data), sort_keys=False, default_flow_style=None)

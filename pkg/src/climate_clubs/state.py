"""Shared domain types and the world-state container.

Regional quantities are stored column-wise (one numpy array per field) so the
dynamics can be evaluated for every region at once; :meth:`WorldState.region`
gives the per-region view.
"""

from __future__ import annotations

import copy
import math
from dataclasses import dataclass, field, fields

import numpy as np


class ValidationError(ValueError):
    """Raised when a calibration, config or world snapshot violates an invariant.

    ``issues`` holds one human readable line per offending region/field.
    """

    def __init__(self, issues, context=None):
        self.issues = list(issues)
        self.context = context
        head = f"{context}: " if context else ""
        super().__init__(head + "; ".join(self.issues))


@dataclass(frozen=True)
class RegionParams:
    """Calibration of one region. Rates are per year unless noted."""

    name: str
    tfp_initial: float
    tfp_growth_initial: float
    tfp_growth_decline: float
    capital_initial: float
    labor_initial: float
    labor_asymptote: float
    labor_convergence: float
    carbon_intensity_initial: float
    carbon_intensity_decline: float
    abatement_cost_coeff: float
    emissions_initial: float

    NUMERIC_FIELDS = (
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

    def problems(self):
        out = []
        for name in self.NUMERIC_FIELDS:
            value = getattr(self, name)
            if not isinstance(value, (int, float)) or not math.isfinite(value):
                out.append(f"{name} is not a finite number ({value!r})")
            elif name != "carbon_intensity_decline" and value < 0:
                out.append(f"{name} is negative ({value!r})")
        if math.isfinite(self.carbon_intensity_decline) and self.carbon_intensity_decline > 0:
            out.append(f"carbon_intensity_decline must be <= 0 ({self.carbon_intensity_decline!r})")
        if math.isfinite(self.abatement_cost_coeff) and self.abatement_cost_coeff > 1:
            out.append(f"abatement_cost_coeff must lie in [0, 1] ({self.abatement_cost_coeff!r})")
        if math.isfinite(self.labor_initial) and self.labor_initial == 0:
            out.append("labor_initial must be > 0")
        return out


@dataclass
class RegionState:
    capital: float
    labor: float
    tfp: float
    carbon_intensity: float
    saving_rate: float
    mitigation_rate: float
    export_cap: float
    group_id: int
    base_tariffs: np.ndarray


@dataclass
class ClimateState:
    carbon_masses: np.ndarray  # (M_AT, M_UP, M_LO), GtC
    temp_atmosphere: float
    temp_ocean: float

    @classmethod
    def dice2016(cls):
        return cls(np.array([851.0, 460.0, 1740.0]), 0.85, 0.0068)

    def problems(self):
        out = []
        m = np.asarray(self.carbon_masses, dtype=float)
        if m.shape != (3,):
            out.append(f"carbon_masses must have 3 reservoirs, got shape {m.shape}")
        elif not np.all(np.isfinite(m)) or np.any(m <= 0):
            out.append(f"carbon_masses must be finite and > 0 ({m.tolist()})")
        for name in ("temp_atmosphere", "temp_ocean"):
            if not math.isfinite(getattr(self, name)):
                out.append(f"{name} is not finite")
        return out

    def copy(self):
        return ClimateState(np.array(self.carbon_masses, dtype=float), self.temp_atmosphere, self.temp_ocean)


@dataclass
class ClubState:
    membership: np.ndarray  # group id per agent, 0 = no group
    co_membership_steps: np.ndarray  # symmetric counters, zero diagonal

    @classmethod
    def empty(cls, n):
        return cls(np.zeros(n, dtype=np.int64), np.zeros((n, n), dtype=np.int64))

    def copy(self):
        return ClubState(self.membership.copy(), self.co_membership_steps.copy())


@dataclass
class AgentAction:
    group_choice: int = 0
    proposals: dict = field(default_factory=dict)  # recipient -> requested mitigation
    evaluations: dict = field(default_factory=dict)  # proposer -> accept?
    saving_rate: float = 0.25
    mitigation_rate: float = 0.0
    export_cap: float = 0.0
    base_tariffs: np.ndarray | None = None


_REGION_ARRAYS = ("capital", "labor", "tfp", "carbon_intensity", "saving_rate",
                  "mitigation_rate", "export_cap")


@dataclass
class WorldState:
    params: tuple  # RegionParams per agent
    step: int
    capital: np.ndarray
    labor: np.ndarray
    tfp: np.ndarray
    carbon_intensity: np.ndarray
    saving_rate: np.ndarray
    mitigation_rate: np.ndarray
    export_cap: np.ndarray
    base_tariffs: np.ndarray  # [importer, exporter]
    climate: ClimateState
    club: ClubState

    @property
    def n_agents(self):
        return len(self.params)

    @property
    def group_id(self):
        return self.club.membership

    def region(self, i):
        return RegionState(
            capital=float(self.capital[i]),
            labor=float(self.labor[i]),
            tfp=float(self.tfp[i]),
            carbon_intensity=float(self.carbon_intensity[i]),
            saving_rate=float(self.saving_rate[i]),
            mitigation_rate=float(self.mitigation_rate[i]),
            export_cap=float(self.export_cap[i]),
            group_id=int(self.club.membership[i]),
            base_tariffs=self.base_tariffs[i].copy(),
        )

    def copy(self):
        new = copy.copy(self)
        for name in _REGION_ARRAYS + ("base_tariffs",):
            setattr(new, name, getattr(self, name).copy())
        new.climate = self.climate.copy()
        new.club = self.club.copy()
        return new

    def validate(self):
        """Check every type invariant; raise :class:`ValidationError` listing all breaches."""
        issues = []
        n = self.n_agents
        for name in _REGION_ARRAYS:
            arr = getattr(self, name)
            if arr.shape != (n,):
                issues.append(f"{name} has shape {arr.shape}, expected ({n},)")
                continue
            for i in np.flatnonzero(~np.isfinite(arr)):
                issues.append(f"region {i}: {name} is not finite")
        for i in np.flatnonzero(self.capital < 0):
            issues.append(f"region {i}: capital is negative ({self.capital[i]!r})")
        for i in np.flatnonzero(self.labor <= 0):
            issues.append(f"region {i}: labor must be > 0 ({self.labor[i]!r})")
        for name in ("saving_rate", "mitigation_rate", "export_cap"):
            arr = getattr(self, name)
            for i in np.flatnonzero((arr < 0) | (arr > 1)):
                issues.append(f"region {i}: {name} outside [0, 1] ({arr[i]!r})")
        if self.base_tariffs.shape != (n, n):
            issues.append(f"base_tariffs has shape {self.base_tariffs.shape}, expected ({n}, {n})")
        elif np.any((self.base_tariffs < 0) | (self.base_tariffs > 1)) or not np.all(np.isfinite(self.base_tariffs)):
            issues.append("base_tariffs outside [0, 1]")
        issues += self.climate.problems()
        m = self.club.membership
        for i in np.flatnonzero((m < 0) | (m > n)):
            issues.append(f"region {i}: group_id {m[i]} outside [0, {n}]")
        c = self.club.co_membership_steps
        if c.shape != (n, n):
            issues.append(f"co_membership_steps has shape {c.shape}")
        else:
            if not np.array_equal(c, c.T):
                issues.append("co_membership_steps is not symmetric")
            if np.any(c < 0):
                issues.append("co_membership_steps has negative entries")
            if np.any(np.diag(c) != 0):
                issues.append("co_membership_steps diagonal must be 0")
            shared = (m[:, None] == m[None, :]) & (m[:, None] != 0)
            bad = (c > 0) & ~shared
            for i, j in zip(*np.nonzero(bad)):
                if i < j:
                    issues.append(f"co_membership_steps[{i}][{j}] > 0 but agents are not co-members")
        if issues:
            raise ValidationError(issues, context=f"world at step {self.step}")
        return self


def new_world(params, climate_init=None, config=None):
    """Build the step-0 world from per-region calibration.

    ``config`` only needs an optional ``n_agents`` attribute; when present the
    calibration length must match it.
    """
    params = tuple(params)
    issues = []
    expected = getattr(config, "n_agents", None)
    if expected is not None and len(params) != expected:
        issues.append(f"expected {expected} regions, got {len(params)}")
    if not params:
        issues.append("at least one region is required")
    for i, p in enumerate(params):
        issues += [f"region {i} ({p.name}): {msg}" for msg in p.problems()]
    climate = (climate_init or ClimateState.dice2016()).copy()
    issues += climate.problems()
    if issues:
        raise ValidationError(issues, context="calibration")

    n = len(params)

    def col(name):
        return np.array([getattr(p, name) for p in params], dtype=float)

    return WorldState(
        params=params,
        step=0,
        capital=col("capital_initial"),
        labor=col("labor_initial"),
        tfp=col("tfp_initial"),
        carbon_intensity=col("carbon_intensity_initial"),
        saving_rate=np.full(n, 0.25),
        mitigation_rate=np.zeros(n),
        export_cap=np.zeros(n),
        base_tariffs=np.zeros((n, n)),
        climate=climate,
        club=ClubState.empty(n),
    )


def region_params_fields():
    return [f.name for f in fields(RegionParams)]

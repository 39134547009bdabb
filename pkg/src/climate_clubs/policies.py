"""Scripted agent behaviour and the action bounds every policy is held to.

A policy answers four questions each step, in the order the harness asks them:
which club to be in, what to request from co-members, which incoming requests
to accept, and the economic levers (saving, mitigation, export cap, tariffs).
Calling a policy on one observation answers all four at once.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .state import AgentAction


@dataclass(frozen=True)
class ActionBounds:
    saving_min: float = 0.15
    saving_max: float = 0.35
    export_cap_max: float = 0.30
    tariff_max: float = 1.0
    mitigation_min: float = 0.0
    mitigation_max: float = 1.0

    def problems(self):
        out = []
        pairs = [("saving_min", "saving_max"), ("mitigation_min", "mitigation_max")]
        for lo, hi in pairs:
            a, b = getattr(self, lo), getattr(self, hi)
            if not 0.0 <= a <= b <= 1.0:
                out.append(f"need 0 <= {lo} <= {hi} <= 1 (got {a}, {b})")
        for name in ("export_cap_max", "tariff_max"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                out.append(f"{name} must lie in [0, 1] (got {v})")
        return out


@dataclass
class Observation:
    agent_id: int
    step: int
    membership: np.ndarray  # previous step's during group choice, current afterwards
    major_agents: frozenset = frozenset()
    incoming: dict = field(default_factory=dict)  # proposer -> requested mitigation
    bounds: ActionBounds = field(default_factory=ActionBounds)

    @property
    def n_agents(self):
        return len(self.membership)

    @property
    def group_id(self):
        return int(self.membership[self.agent_id])

    def co_members(self):
        g = self.group_id
        if g == 0:
            return []
        return [int(j) for j in np.flatnonzero(self.membership == g) if j != self.agent_id]

    def club_has_critical_mass(self):
        g = self.group_id
        return g != 0 and any(self.membership[j] == g for j in self.major_agents)


def _clip(x, lo, hi):
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return lo
    return float(min(hi, max(lo, x)))


def clamp_action(raw, bounds):
    """Project every economic lever into ``bounds``; club choices pass through."""
    tariffs = raw.base_tariffs
    if tariffs is not None:
        tariffs = np.clip(np.nan_to_num(np.asarray(tariffs, dtype=float), nan=0.0), 0.0, bounds.tariff_max)
    return replace(
        raw,
        proposals={j: _clip(r, 0.0, 1.0) for j, r in raw.proposals.items()},
        saving_rate=_clip(raw.saving_rate, bounds.saving_min, bounds.saving_max),
        mitigation_rate=_clip(raw.mitigation_rate, bounds.mitigation_min, bounds.mitigation_max),
        export_cap=_clip(raw.export_cap, 0.0, bounds.export_cap_max),
        base_tariffs=tariffs,
    )


class Policy:
    archetype = "base"

    def __init__(self, rng=None):
        self.rng = rng if rng is not None else np.random.default_rng(0)

    def choose_group(self, obs):
        return obs.group_id

    def propose(self, obs):
        return {}

    def evaluate(self, obs):
        return {p: False for p in obs.incoming}

    def economic(self, obs):
        raise NotImplementedError

    def __call__(self, obs):
        levers = self.economic(obs)
        return AgentAction(
            group_choice=self.choose_group(obs),
            proposals=self.propose(obs),
            evaluations=self.evaluate(obs),
            **levers,
        )


def _uniform_tariffs(n, agent_id, rate):
    t = np.full(n, float(rate))
    t[agent_id] = 0.0
    return t


class CooperativePolicy(Policy):
    """Keeps its club, ramps mitigation up and asks co-members to match it.

    With ``p_consolidate > 0`` the agent may instead move to the biggest club
    that holds a major economy, when that club is strictly bigger than its own.
    """

    archetype = "cooperative"

    def __init__(self, rng=None, ramp_start=0.1, ramp_slope=0.05, accept_slack=0.1,
                 saving_rate=0.25, tariff=0.05, p_consolidate=0.0):
        super().__init__(rng)
        self.ramp_start = ramp_start
        self.ramp_slope = ramp_slope
        self.accept_slack = accept_slack
        self.saving_rate = saving_rate
        self.tariff = tariff
        self.p_consolidate = p_consolidate

    def target(self, t):
        return min(1.0, self.ramp_start + self.ramp_slope * t)

    def choose_group(self, obs):
        g = obs.group_id
        if self.p_consolidate <= 0 or g == 0 or self.rng.random() >= self.p_consolidate:
            return g
        best = consolidation_target(obs.membership, obs.major_agents)
        if best is None:
            return g
        own_size = int(np.sum(obs.membership == g))
        best_size = int(np.sum(obs.membership == best))
        return best if best_size > own_size else g

    def propose(self, obs):
        rate = self.target(obs.step)
        return {j: rate for j in obs.co_members()}

    def evaluate(self, obs):
        limit = self.target(obs.step) + self.accept_slack
        return {p: r <= limit for p, r in obs.incoming.items()}

    def economic(self, obs):
        return dict(
            saving_rate=self.saving_rate,
            mitigation_rate=self.target(obs.step),
            export_cap=obs.bounds.export_cap_max,
            base_tariffs=_uniform_tariffs(obs.n_agents, obs.agent_id, self.tariff),
        )


def consolidation_target(membership, major_agents):
    """Largest club containing a major economy; ties go to the lower id."""
    sizes = {}
    for j in major_agents:
        g = int(membership[j])
        if g != 0:
            sizes[g] = int(np.sum(membership == g))
    if not sizes:
        return None
    return min(sizes, key=lambda g: (-sizes[g], g))


class FreeriderPolicy(Policy):
    """Leaves its club with probability ``p_exit`` each step and never commits."""

    archetype = "freerider"

    def __init__(self, rng=None, p_exit=0.5, saving_rate=0.25, tariff=0.0):
        super().__init__(rng)
        self.p_exit = p_exit
        self.saving_rate = saving_rate
        self.tariff = tariff

    def choose_group(self, obs):
        return 0 if self.rng.random() < self.p_exit else obs.group_id

    def economic(self, obs):
        return dict(
            saving_rate=self.saving_rate,
            mitigation_rate=obs.bounds.mitigation_min,
            export_cap=obs.bounds.export_cap_max,
            base_tariffs=_uniform_tariffs(obs.n_agents, obs.agent_id, self.tariff),
        )


class ConditionalPolicy(Policy):
    """Cooperates only while its club includes a major economy.

    Without one it behaves exactly like :class:`FreeriderPolicy`.
    """

    archetype = "conditional"

    def __init__(self, rng=None, p_exit=0.5, p_consolidate=0.0, **cooperative_params):
        super().__init__(rng)
        self.cooperative = CooperativePolicy(self.rng, p_consolidate=p_consolidate, **cooperative_params)
        self.freerider = FreeriderPolicy(self.rng, p_exit=p_exit, saving_rate=self.cooperative.saving_rate)

    def _mode(self, obs):
        return self.cooperative if obs.club_has_critical_mass() else self.freerider

    def choose_group(self, obs):
        return self._mode(obs).choose_group(obs)

    def propose(self, obs):
        return self._mode(obs).propose(obs)

    def evaluate(self, obs):
        return self._mode(obs).evaluate(obs)

    def economic(self, obs):
        return self._mode(obs).economic(obs)


class StaticPolicy(Policy):
    """Fixed levers and a fixed club; used for baselines."""

    archetype = "static"

    def __init__(self, rng=None, group="keep", mitigation_rate=0.0, saving_rate=0.25,
                 export_cap=0.0, tariff=0.0):
        super().__init__(rng)
        self.group = group
        self.mitigation_rate = mitigation_rate
        self.saving_rate = saving_rate
        self.export_cap = export_cap
        self.tariff = tariff

    def choose_group(self, obs):
        return obs.group_id if self.group == "keep" else int(self.group)

    def economic(self, obs):
        return dict(
            saving_rate=self.saving_rate,
            mitigation_rate=self.mitigation_rate,
            export_cap=self.export_cap,
            base_tariffs=_uniform_tariffs(obs.n_agents, obs.agent_id, self.tariff),
        )


class RandomPolicy(Policy):
    """Uniform draws over the whole (bounded) action space."""

    archetype = "random"

    def __init__(self, rng=None, p_propose=0.5):
        super().__init__(rng)
        self.p_propose = p_propose

    def choose_group(self, obs):
        return int(self.rng.integers(0, obs.n_agents + 1))

    def propose(self, obs):
        b = obs.bounds
        out = {}
        for j in obs.co_members():
            if self.rng.random() < self.p_propose:
                out[j] = float(self.rng.uniform(b.mitigation_min, b.mitigation_max))
        return out

    def evaluate(self, obs):
        return {p: bool(self.rng.random() < 0.5) for p in sorted(obs.incoming)}

    def economic(self, obs):
        b = obs.bounds
        tariffs = self.rng.uniform(0.0, b.tariff_max, size=obs.n_agents)
        tariffs[obs.agent_id] = 0.0
        return dict(
            saving_rate=float(self.rng.uniform(b.saving_min, b.saving_max)),
            mitigation_rate=float(self.rng.uniform(b.mitigation_min, b.mitigation_max)),
            export_cap=float(self.rng.uniform(0.0, b.export_cap_max)),
            base_tariffs=tariffs,
        )


ARCHETYPES = {
    cls.archetype: cls
    for cls in (CooperativePolicy, FreeriderPolicy, ConditionalPolicy, StaticPolicy, RandomPolicy)
}


def make_policy(archetype, rng=None, **params):
    try:
        cls = ARCHETYPES[archetype]
    except KeyError:
        raise ValueError(f"unknown policy archetype {archetype!r}; expected one of {sorted(ARCHETYPES)}") from None
    return cls(rng, **params)


def cooperative_policy(observation, **params):
    return CooperativePolicy(**params)(observation)


def freerider_policy(observation, rng=None, **params):
    return FreeriderPolicy(rng, **params)(observation)


def random_policy(observation, rng):
    return RandomPolicy(rng)(observation)


PRESETS = ("mixed", "cooperative", "freerider", "conditional", "random", "static")


def assign_archetypes(preset, ranking, rng, freerider_share=0.25, top_k=5):
    """Archetype name per agent id.

    ``mixed``: the ``top_k`` ranked agents cooperate, a seeded
    ``freerider_share`` of the others free-ride, the rest are conditional.
    Any other preset gives every agent that archetype.
    """
    n = len(ranking)
    if preset != "mixed":
        if preset not in ARCHETYPES:
            raise ValueError(f"unknown policy preset {preset!r}; expected one of {PRESETS}")
        return [preset] * n
    out = ["conditional"] * n
    for agent in ranking[:top_k]:
        out[agent] = "cooperative"
    others = sorted(ranking[top_k:])
    k = math.floor(freerider_share * len(others) + 0.5)
    for agent in rng.choice(others, size=k, replace=False) if k else []:
        out[int(agent)] = "freerider"
    return out

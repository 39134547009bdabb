"""Club membership, in-club mitigation negotiation and club tariff rules.

Group id 0 means "no club". Two agents are co-members iff they hold the same
nonzero id.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

log = logging.getLogger(__name__)


def linear_decay(counter, horizon):
    """Fraction of the initial member tariff still charged after ``counter`` steps."""
    return np.maximum(0.0, 1.0 - np.asarray(counter, dtype=float) / horizon)


@dataclass
class ClubParams:
    surcharge: float = 0.10
    member_tariff_initial: float = 0.05
    decay_horizon: int = 3
    schedule: Callable = field(default=linear_decay, repr=False, compare=False)

    def problems(self):
        out = []
        for name in ("surcharge", "member_tariff_initial"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                out.append(f"{name} must lie in [0, 1] ({v!r})")
        if self.decay_horizon < 1:
            out.append(f"decay_horizon must be >= 1 ({self.decay_horizon!r})")
        return out


@dataclass(frozen=True)
class Proposal:
    proposer: int
    recipient: int
    requested_mitigation: float


def _note(diagnostics, msg):
    log.debug(msg)
    if diagnostics is not None:
        diagnostics.append(msg)


def co_members(membership):
    m = np.asarray(membership)
    return (m[:, None] == m[None, :]) & (m[:, None] != 0)


def resolve_group_choices(prev_membership, choices, diagnostics=None):
    """Membership for this step: each agent's choice taken verbatim.

    ``prev_membership`` is unused by the rule itself (any id may be joined or
    created) but fixes the agent count. Out-of-range ids fall back to 0.
    """
    n = len(prev_membership)
    if len(choices) != n:
        raise ValueError(f"expected {n} group choices, got {len(choices)}")
    out = np.zeros(n, dtype=np.int64)
    for i, c in enumerate(choices):
        if isinstance(c, (bool, np.bool_)) or not isinstance(c, (int, np.integer)) or not 0 <= c <= n:
            _note(diagnostics, f"agent {i}: group choice {c!r} outside [0, {n}], using 0")
            continue
        out[i] = c
    return out


def update_co_membership(counters, membership):
    shared = co_members(membership)
    out = np.where(shared, np.asarray(counters) + 1, 0).astype(np.int64)
    np.fill_diagonal(out, 0)
    return out


def effective_tariff(i, j, base, membership, counters, params):
    gi, gj = membership[i], membership[j]
    if gi != 0 and gi == gj:
        return float(params.member_tariff_initial * params.schedule(counters[i][j], params.decay_horizon))
    if gi != 0:
        return min(1.0, base + params.surcharge)
    return float(base)


def effective_tariff_matrix(base_tariffs, membership, counters, params):
    """Vectorised :func:`effective_tariff` over all (importer, exporter) pairs."""
    m = np.asarray(membership)
    shared = co_members(m)
    grouped = (m != 0)[:, None]
    member = params.member_tariff_initial * params.schedule(counters, params.decay_horizon)
    out = np.where(grouped, np.minimum(1.0, base_tariffs + params.surcharge), base_tariffs)
    out = np.where(shared, member, out)
    np.fill_diagonal(out, 0.0)
    return out


def collect_proposals(membership, raw_proposals, diagnostics=None):
    """Keep only in-club proposals.

    ``raw_proposals`` maps proposer -> {recipient: requested mitigation}.
    Output is ordered by (proposer, recipient).
    """
    n = len(membership)
    kept = []
    for proposer in sorted(raw_proposals):
        for recipient in sorted(raw_proposals[proposer]):
            rate = raw_proposals[proposer][recipient]
            if not (0 <= proposer < n and 0 <= recipient < n):
                _note(diagnostics, f"proposal {proposer}->{recipient}: unknown agent, dropped")
            elif proposer == recipient:
                _note(diagnostics, f"proposal {proposer}->{recipient}: self-proposal, dropped")
            elif membership[proposer] == 0 or membership[proposer] != membership[recipient]:
                _note(diagnostics, f"proposal {proposer}->{recipient}: not co-members, dropped")
            elif not 0.0 <= rate <= 1.0:
                _note(diagnostics, f"proposal {proposer}->{recipient}: rate {rate!r} outside [0, 1], dropped")
            else:
                kept.append(Proposal(int(proposer), int(recipient), float(rate)))
    return kept


def apply_evaluations(proposals, evaluations, n_agents, diagnostics=None):
    """Mitigation floor per agent: the largest request it accepted, else 0.

    ``evaluations`` maps recipient -> {proposer: accepted}.
    """
    received = {(p.recipient, p.proposer): p for p in proposals}
    floor = np.zeros(n_agents)
    for recipient in sorted(evaluations):
        for proposer, accepted in sorted(evaluations[recipient].items()):
            p = received.get((recipient, proposer))
            if p is None:
                _note(diagnostics, f"agent {recipient}: evaluation of missing proposal from {proposer} ignored")
                continue
            if accepted:
                floor[recipient] = max(floor[recipient], p.requested_mitigation)
    return floor


def realized_mitigation(chosen, floor):
    return np.maximum(np.asarray(chosen, dtype=float), floor)


def group_sizes(membership):
    """{group id: member count} for nonzero groups."""
    ids, counts = np.unique(np.asarray(membership)[np.asarray(membership) != 0], return_counts=True)
    return {int(g): int(c) for g, c in zip(ids, counts)}

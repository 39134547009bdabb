"""DICE-2016 style climate-economy recursion.

Every function here is pure and accepts scalars or numpy arrays (one entry per
region). Time ``t`` is the step index; one step spans ``years_per_step`` years.
Output is in trillion USD per year, emissions rates in GtC per year, carbon
masses in GtC.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

C_FLOOR = 1e-6


def dice2016_transfer_matrix(b12=0.12, b23=0.007, m_at_eq=588.0, m_up_eq=360.0, m_lo_eq=1720.0):
    """Column-stochastic 3-reservoir transfer matrix (rows: destination)."""
    b21 = b12 * m_at_eq / m_up_eq
    b32 = b23 * m_up_eq / m_lo_eq
    return np.array([
        [1.0 - b12, b21, 0.0],
        [b12, 1.0 - b21 - b23, b32],
        [0.0, b23, 1.0 - b32],
    ])


@dataclass
class DynamicsParams:
    capital_elasticity: float = 0.3
    capital_depreciation: float = 0.1  # per year
    damage_coeff: float = 0.00236  # per degC^2
    abatement_exponent: float = 2.6
    transfer_matrix: np.ndarray = field(default_factory=dice2016_transfer_matrix)
    preindustrial_carbon: float = 588.0
    forcing_per_doubling: float = 3.6813
    climate_feedback: float = 1.1875  # = 3.6813 / 3.1 degC ECS
    temp_coeffs: tuple = (0.1005, 0.088, 0.025)  # xi1, xi2, xi3
    forcing_exogenous_initial: float = 0.5
    forcing_exogenous_final: float = 1.0
    forcing_exogenous_ramp_steps: int = 17
    land_emissions_initial: float = 2.6 / 3.666 * 5  # GtC per period
    land_emissions_decline: float = 0.115  # per period
    utility_elasticity: float = 1.45

    def exogenous_forcing(self, t):
        frac = min(1.0, t / self.forcing_exogenous_ramp_steps) if self.forcing_exogenous_ramp_steps > 0 else 1.0
        return self.forcing_exogenous_initial + (self.forcing_exogenous_final - self.forcing_exogenous_initial) * frac

    def land_emissions(self, t):
        return self.land_emissions_initial * (1.0 - self.land_emissions_decline) ** t

    def problems(self):
        out = []
        phi = np.asarray(self.transfer_matrix, dtype=float)
        if phi.shape != (3, 3):
            out.append(f"transfer_matrix must be 3x3, got {phi.shape}")
        elif np.any(np.abs(phi.sum(axis=0) - 1.0) > 1e-12) or np.any(phi < 0):
            out.append("transfer_matrix columns must be nonnegative and sum to 1")
        if not 0 < self.capital_elasticity < 1:
            out.append("capital_elasticity must lie in (0, 1)")
        if self.climate_feedback <= 0:
            out.append("climate_feedback must be > 0")
        if self.abatement_exponent <= 1:
            out.append("abatement_exponent must be > 1")
        if self.utility_elasticity == 1:
            out.append("utility_elasticity must differ from 1")
        return out


@dataclass
class TradeOutcome:
    flows: np.ndarray  # [importer, exporter]
    tariff_revenue: np.ndarray
    effective_imports: np.ndarray
    shipped: np.ndarray  # per exporter
    paid: np.ndarray  # per importer


def gross_output(A, K, L, gamma):
    return A * np.power(K, gamma) * np.power(L, 1.0 - gamma)


def damage_fraction(T_AT, damage_coeff):
    return np.clip(damage_coeff * np.square(np.maximum(T_AT, 0.0)), 0.0, 1.0)


def abatement_fraction(mu, theta1, theta2):
    return theta1 * np.power(mu, theta2)


def net_output(Y, T_AT, mu, theta1, params):
    """Output after climate damages and abatement spending."""
    damage = damage_fraction(T_AT, params.damage_coeff)
    abate = abatement_fraction(mu, theta1, params.abatement_exponent)
    return Y * (1.0 - damage) * (1.0 - abate)


def emissions(sigma, mu, Y):
    return sigma * (1.0 - mu) * Y


def check_transfer_matrix(phi):
    phi = np.asarray(phi, dtype=float)
    col_err = np.abs(phi.sum(axis=0) - 1.0)
    if phi.shape != (3, 3) or np.any(col_err > 1e-12):
        raise ValueError(f"transfer matrix columns must sum to 1 (errors {col_err})")
    return phi


def carbon_cycle_step(M, E_total, phi):
    phi = check_transfer_matrix(phi)
    out = phi @ np.asarray(M, dtype=float)
    out[0] += E_total
    return out


def radiative_forcing(M_AT, params, t):
    return params.forcing_per_doubling * np.log2(M_AT / params.preindustrial_carbon) + params.exogenous_forcing(t)


def temperature_step(T_AT, T_LO, M_AT, params, t):
    xi1, xi2, xi3 = params.temp_coeffs
    F = radiative_forcing(M_AT, params, t)
    T_AT_next = T_AT + xi1 * (F - params.climate_feedback * T_AT - xi2 * (T_AT - T_LO))
    T_LO_next = T_LO + xi3 * (T_AT - T_LO)
    return T_AT_next, T_LO_next


def exogenous_step(A, sigma, L, tfp_growth, tfp_decline, sigma_growth, labor_asymptote,
                   labor_convergence, t, years_per_step):
    """Advance productivity, carbon intensity and labor by one step.

    ``t`` counts steps from the start; growth rates are per year.
    """
    years = t * years_per_step
    g_A = tfp_growth * np.exp(-tfp_decline * years)
    A_next = A * np.exp(g_A * years_per_step)
    sigma_next = sigma * np.exp(sigma_growth * years_per_step)
    L_next = L * np.power(labor_asymptote / L, labor_convergence)
    return A_next, sigma_next, L_next


def capital_step(K, s, Q, depreciation, years_per_step):
    return K * (1.0 - depreciation) ** years_per_step + years_per_step * s * Q


def _exact_scale(bids, budget):
    """Scale a column of bids so its sum never exceeds ``budget``, exactly."""
    demand = bids.sum()
    if demand <= budget:
        return bids.copy()
    scale = budget / demand
    flows = bids * scale
    while flows.sum() > budget:
        scale = np.nextafter(scale, 0.0)
        flows = bids * scale
    return flows


def settle_trade(net_outputs, export_caps, import_bids, tau_eff):
    """Ration bids against export budgets and apply effective tariffs.

    Over-subscribed exporters scale every bid on them by the same factor.
    """
    Q = np.asarray(net_outputs, dtype=float)
    bids = np.array(import_bids, dtype=float)
    tau = np.asarray(tau_eff, dtype=float)
    n = Q.shape[0]
    np.fill_diagonal(bids, 0.0)
    bids = np.maximum(bids, 0.0)
    budgets = np.asarray(export_caps, dtype=float) * Q
    flows = np.empty_like(bids)
    for j in range(n):
        flows[:, j] = _exact_scale(bids[:, j], budgets[j])
    revenue = (flows * tau).sum(axis=1)
    effective = (flows * (1.0 - tau)).sum(axis=1)
    return TradeOutcome(
        flows=flows,
        tariff_revenue=revenue,
        effective_imports=effective,
        shipped=flows.sum(axis=0),
        paid=flows.sum(axis=1),
    )


def consumption(Q, s, trade):
    """Budget identity: domestic absorption plus trade settlement."""
    received = trade.shipped  # exporters are paid for what they ship
    return (Q - s * Q - trade.shipped + received - trade.paid
            + trade.effective_imports + trade.tariff_revenue)


def step_reward(C, L, alpha):
    """Isoelastic utility. Returns ``(utility, clamped)``; nonpositive C is floored."""
    C = np.asarray(C, dtype=float)
    clamped = C <= 0
    C = np.where(clamped, C_FLOOR, C)
    u = L * (np.power(C / L, 1.0 - alpha) - 1.0) / (1.0 - alpha)
    if u.ndim == 0:
        return float(u), bool(clamped)
    return u, clamped

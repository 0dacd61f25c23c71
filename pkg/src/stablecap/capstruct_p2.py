"""Capital structure with a governance attack vector.

A coalition holding a ``zeta`` share of GOV (``zeta < 0.5``) steals a ``gamma``
share of locked collateral whenever ``gamma N (1+R) > zeta (delta F + kappa) + alpha``;
the indicator is resolved per realised return. The non-attacking majority
chooses ``delta``; the vault chooses how much collateral to lock and how much
to issue.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from . import __version__
from .capstruct_p1 import per_coin_payoff, solve_p1
from .core import (EquilibriumReport, GovTokenPath, GridSpec, ReturnModel, ScenarioParams,
                   ValidationError, validate)
from .stochastics import DEFAULT_SAMPLES, SampleSet, expect, sample_returns, utility_expectation
from .utility import UtilityFunction

_GRID_SLACK = 1e-12

KAPPA_DAMPING = 0.5
KAPPA_MAX_ITER = 100
KAPPA_RTOL = 1e-6


@dataclass(frozen=True)
class AttackOutcome:
    d: np.ndarray
    probability: float
    proceeds: np.ndarray
    opportunity_cost: float


@dataclass(frozen=True)
class VaultDecisionP2:
    n: float
    f: float
    participates: bool
    objective: float
    b_price: float
    attack_probability: float


def attack_indicator(r_realized, n: float, f: float, delta: float, params: ScenarioParams):
    """1 iff ``gamma n (1+r) > zeta (delta f + kappa) + alpha`` (strict)."""
    hit = params.gamma * n * (1.0 + np.asarray(r_realized, dtype=float)) > (
        params.zeta * (delta * f + params.kappa) + params.alpha)
    return int(hit) if hit.ndim == 0 else hit.astype(int)


def attack_outcome(n: float, f: float, delta: float, params: ScenarioParams,
                   samples: SampleSet) -> AttackOutcome:
    d = attack_indicator(samples.values, n, f, delta, params)
    return AttackOutcome(
        d=d,
        probability=expect(d, samples),
        proceeds=params.gamma * n * (1.0 + samples.values),
        opportunity_cost=params.zeta * (delta * f + params.kappa) + params.alpha,
    )


def _check_zeta(params: ScenarioParams) -> None:
    if params.zeta >= 0.5:
        raise ValidationError([
            "zeta >= 0.5 lets the attacking group also set delta; only the zeta < 0.5 "
            "formulation is solved"])


def _tables(delta, params, samples, holder_u, n_values, f_values):
    """Objective, participation margin, price and attack probability on the (N, F) grid."""
    r = samples.values
    n = n_values[:, None, None]
    f = f_values[None, :, None]
    d = (params.gamma * n * (1.0 + r) > params.zeta * (delta * f + params.kappa)
         + params.alpha).astype(float)
    x = per_coin_payoff(f, n, delta, r, haircut=1.0 - params.gamma * d)
    b_price = utility_expectation(holder_u, x, samples)
    f2 = f_values[None, :]
    risk = expect((params.n_bar - n) * r + (1.0 - d) * n * r - d * n * (1.0 + r), samples)
    leverage = f2 * (b_price * params.b - delta)
    objective = risk + leverage
    margin = leverage - params.gamma * expect(d * n * (1.0 + r), samples)
    return objective, margin, b_price, expect(d, samples)


def vault_best_response_p2(delta: float, params: ScenarioParams, samples: SampleSet,
                           holder_u: UtilityFunction, grid: GridSpec = GridSpec()
                           ) -> VaultDecisionP2:
    """Joint (N, F) choice; ties go to the smallest F, then the largest N.

    ``N = 0`` is always feasible, so a best response exists on any grid.
    """
    if grid.n_points < 1 or grid.f_points < 1:
        raise ValueError("empty (N, F) grid")
    n_values = np.linspace(0.0, params.n_bar, grid.n_points)
    f_values = np.linspace(0.0, params.beta * params.n_bar, grid.f_points)
    obj, margin, b_price, p_att = _tables(delta, params, samples, holder_u, n_values, f_values)

    nn = n_values[:, None]
    feasible = f_values[None, :] <= params.beta * nn * (1 + _GRID_SLACK)
    feasible &= (nn == 0) | (params.u <= margin)
    masked = np.where(feasible, obj, -np.inf)
    best = masked.max()
    cand = np.argwhere(masked == best)
    # smallest F index first, then largest N index
    i, j = min(cand.tolist(), key=lambda ij: (ij[1], -ij[0]))
    n_star = float(n_values[i])
    return VaultDecisionP2(n=n_star, f=float(f_values[j]), participates=n_star > 0,
                           objective=float(obj[i, j]), b_price=float(b_price[i, j]),
                           attack_probability=float(p_att[i, j]))


def solve_p2(params: ScenarioParams, return_model: ReturnModel, holder_u: UtilityFunction,
             seed: int = 0, *, grid: GridSpec = GridSpec(), samples: SampleSet | None = None,
             count: int = DEFAULT_SAMPLES, mode: str = "auto") -> EquilibriumReport:
    """Non-attack governors maximise ``E[(1-d)(delta F + kappa)]``; smallest delta on ties."""
    validate(params, return_model, holder_u, grid)
    _check_zeta(params)
    if samples is None:
        samples = sample_returns(return_model, count=count, seed=seed, mode=mode)
    deltas = grid.deltas()
    decisions = [vault_best_response_p2(d, params, samples, holder_u, grid) for d in deltas]
    gov = np.array([(d * v.f + params.kappa) * (1.0 - v.attack_probability)
                    for d, v in zip(deltas, decisions)])
    k = int(np.argmax(gov))
    delta, v = float(deltas[k]), decisions[k]
    outcome = attack_outcome(v.n, v.f, delta, params, samples)
    p2 = delta * v.f + params.kappa
    return EquilibriumReport(
        problem="p2",
        delta_star=delta,
        f_star=v.f,
        n_star=v.n,
        b_price=v.b_price,
        participates=v.participates,
        gov_path=GovTokenPath(p0=float(gov[k]), p1=p2, p2=p2,
                              p2_expected=p2 * (1.0 - v.attack_probability)),
        attack={"probability": v.attack_probability},
        objectives={"governance": float(gov[k]), "vault": v.objective},
        diagnostics={
            "converged": True,
            "iterations": len(deltas),
            "grid": grid.describe(),
            "samples": samples.describe(),
            "attack_opportunity_cost": outcome.opportunity_cost,
            "attack_expected_proceeds": expect(outcome.proceeds, samples),
            "version": __version__,
        },
    )


def analytic_secure(gamma: float, r: float, zeta: float, delta: float, beta: float) -> bool:
    """Necessary condition for security with no outside cost: ``gamma r / (zeta delta) < beta``."""
    if zeta * delta == 0:
        raise ZeroDivisionError("zeta * delta must be non-zero")
    return gamma * r / (zeta * delta) < beta


@dataclass(frozen=True)
class RegionPoint:
    gamma: float
    zeta: float
    delta: float
    beta: float
    r: float
    analytic_secure: bool
    empirical_secure: bool
    kappa: float
    kappa_converged: bool


def self_consistent_kappa(delta: float, params: ScenarioParams, samples: SampleSet,
                          holder_u: UtilityFunction, grid: GridSpec = GridSpec()
                          ) -> tuple[float, VaultDecisionP2, bool]:
    """Iterate ``kappa <- delta F / (1 - r)`` (damped) against the vault's best response.

    Starts from the full-issuance value ``delta beta N / (1 - r)``. Returns the
    final kappa, the vault decision at it and whether the tolerance was met.
    """
    r = params.r_discount
    kappa = delta * params.beta * params.n_bar / (1.0 - r)
    for _ in range(KAPPA_MAX_ITER):
        dec = vault_best_response_p2(delta, params.replace(kappa=kappa), samples, holder_u, grid)
        target = delta * dec.f / (1.0 - r)
        new = KAPPA_DAMPING * kappa + (1.0 - KAPPA_DAMPING) * target
        if abs(new - kappa) <= KAPPA_RTOL * abs(new) + 1e-12:
            kappa = new
            dec = vault_best_response_p2(delta, params.replace(kappa=kappa), samples,
                                         holder_u, grid)
            return kappa, dec, True
        kappa = new
    dec = vault_best_response_p2(delta, params.replace(kappa=kappa), samples, holder_u, grid)
    return kappa, dec, False


def incentive_security_region(gammas, zetas, deltas, betas, rs, params: ScenarioParams,
                              return_model: ReturnModel, holder_u: UtilityFunction,
                              seed: int = 0, *, grid: GridSpec = GridSpec(),
                              count: int = DEFAULT_SAMPLES, mode: str = "auto"
                              ) -> list[RegionPoint]:
    """Analytic and empirical security flags over the product grid, with ``alpha = 0``.

    A point is empirically secure when the kappa iteration converges and the
    vault then locks collateral (``N > 0``) with zero attack probability.
    Points are emitted in lexicographic (gamma, zeta, delta, beta, r) order.
    """
    validate(params, return_model, holder_u, grid)
    samples = sample_returns(return_model, count=count, seed=seed, mode=mode)
    out = []
    for g, z, d, b, r in itertools.product(gammas, zetas, deltas, betas, rs):
        g, z, d, b, r = map(float, (g, z, d, b, r))
        analytic = analytic_secure(g, r, z, d, b)
        p = params.replace(gamma=g, zeta=z, beta=b, r_discount=r, alpha=0.0)
        validate(p)
        _check_zeta(p)
        kappa, dec, ok = self_consistent_kappa(d, p, samples, holder_u, grid)
        secure = ok and dec.participates and dec.attack_probability == 0.0
        out.append(RegionPoint(g, z, d, b, r, analytic, secure, kappa, ok))
    return out


@dataclass(frozen=True)
class AnarchyResult:
    ratio: float
    decentralized_welfare: float
    centralized_welfare: float
    decentralized: EquilibriumReport
    centralized: EquilibriumReport

    def to_dict(self) -> dict:
        return {
            "ratio": self.ratio,
            "decentralized_welfare": self.decentralized_welfare,
            "centralized_welfare": self.centralized_welfare,
            "decentralized": self.decentralized.to_dict(),
            "centralized": self.centralized.to_dict(),
        }


def welfare(report: EquilibriumReport) -> float:
    return report.objectives["governance"] + report.objectives["vault"]


def price_of_anarchy(params: ScenarioParams, return_model: ReturnModel,
                     holder_u: UtilityFunction, seed: int = 0, *, grid: GridSpec = GridSpec(),
                     count: int = DEFAULT_SAMPLES, mode: str = "auto") -> AnarchyResult:
    """Welfare of the attack-exposed equilibrium over the attack-free benchmark."""
    samples = sample_returns(return_model, count=count, seed=seed, mode=mode)
    dec = solve_p2(params, return_model, holder_u, grid=grid, samples=samples)
    cen = solve_p1(params, return_model, holder_u, grid=grid, samples=samples)
    w_dec, w_cen = welfare(dec), welfare(cen)
    if not w_cen > 0 or not math.isfinite(w_cen):
        raise ValueError("centralized welfare must be > 0 for the ratio to be defined")
    return AnarchyResult(w_dec / w_cen, w_dec, w_cen, dec, cen)

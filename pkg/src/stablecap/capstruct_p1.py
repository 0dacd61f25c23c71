"""Capital structure without attack vectors (Stackelberg governance/vault game).

Governance picks the interest rate ``delta`` on a grid, anticipating the
vault's issuance ``F``; the vault maximises ``E[N R + F (B b - delta)]`` over
``F in [0, beta N]`` where the stablecoin price ``B`` is the holder's expected
utility of one coin's redemption value.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import __version__
from .core import (EquilibriumReport, GovTokenPath, GridSpec, ReturnModel, ScenarioParams,
                   validate)
from .stochastics import (DEFAULT_SAMPLES, SampleSet, expect, expected_value, sample_returns,
                          utility_expectation)
from .utility import UtilityFunction

TIMINGS = ("sequential", "concurrent")


@dataclass(frozen=True)
class VaultDecisionP1:
    f: float
    participates: bool
    objective: float
    b_price: float


def per_coin_payoff(f, n, delta, r, haircut=1.0):
    """Redemption value of one coin, ``min(F, h (N(1+R) - delta F)) / F``, floored at 0.

    ``F = 0`` maps to full repayment (value 1). Broadcasts over all arguments.
    """
    f = np.asarray(f, dtype=float)
    backing = haircut * (n * (1.0 + r) - delta * f)
    with np.errstate(divide="ignore", invalid="ignore"):
        x = np.minimum(f, backing) / f
    x = np.where(f > 0, x, 1.0)
    return np.maximum(x, 0.0)


def stbl_price_p1(f: float, n: float, delta: float, samples: SampleSet,
                  holder_u: UtilityFunction) -> float:
    """Issuance price ``B = E[U(min(F, N(1+R) - delta F) / F)]``."""
    if not n > 0:
        raise ValueError("n must be > 0")
    if f < 0 or not 0 <= delta < 1:
        raise ValueError("need f >= 0 and delta in [0, 1)")
    x = per_coin_payoff(np.array([[float(f)]]), n, delta, samples.values)
    return float(utility_expectation(holder_u, x, samples)[0])


def _f_grid(beta: float, n: float, points: int) -> np.ndarray:
    if points < 1:
        raise ValueError("empty F grid")
    return np.linspace(0.0, beta * n, points)


def _vault_table(delta, params, n, samples, holder_u, f_values):
    x = per_coin_payoff(f_values[:, None], n, delta, samples.values)
    b_price = utility_expectation(holder_u, x, samples)
    objective = expect(n * samples.values, samples) + f_values * (b_price * params.b - delta)
    return b_price, objective


def vault_best_response_p1(delta: float, params: ScenarioParams, n: float, samples: SampleSet,
                           holder_u: UtilityFunction, f_points: int = 51) -> VaultDecisionP1:
    """Vault issuance maximising expected leverage profit at interest rate ``delta``.

    Smallest F wins ties. If no grid point meets the participation constraint
    ``u <= E[N R + F(B b - delta)]`` the vault stays out with ``F = 0``.
    """
    f_values = _f_grid(params.beta, n, f_points)
    b_price, obj = _vault_table(delta, params, n, samples, holder_u, f_values)
    feasible = obj >= params.u
    if not feasible.any():
        return VaultDecisionP1(0.0, False, float(obj[0]), float(b_price[0]))
    masked = np.where(feasible, obj, -np.inf)
    i = int(np.argmax(masked))
    return VaultDecisionP1(float(f_values[i]), True, float(obj[i]), float(b_price[i]))


def _gov_objective(delta: float, f: float, kappa: float) -> float:
    return delta * f + kappa


def _resolve_samples(return_model, seed, samples, count, mode):
    if samples is not None:
        return samples
    return sample_returns(return_model, count=count, seed=seed, mode=mode)


def solve_p1(params: ScenarioParams, return_model: ReturnModel, holder_u: UtilityFunction,
             seed: int = 0, *, grid: GridSpec = GridSpec(), samples: SampleSet | None = None,
             count: int = DEFAULT_SAMPLES, mode: str = "auto",
             timing: str = "sequential", max_iterations: int = 200) -> EquilibriumReport:
    """Solve the no-attack game on the grid.

    ``timing="sequential"`` (default) is the Stackelberg solution: governance
    maximises ``delta * F(delta) + kappa`` over the full delta grid, smallest
    delta on ties. ``timing="concurrent"`` searches for a pure Nash point by
    best-response iteration and flags non-convergence in the diagnostics.
    """
    validate(params, return_model, holder_u, grid)
    if timing not in TIMINGS:
        raise ValueError(f"timing must be one of {TIMINGS}")
    samples = _resolve_samples(return_model, seed, samples, count, mode)
    n = params.n_bar
    if not n > 0:
        raise ValueError("n_bar must be > 0 for the attack-free game")
    deltas = grid.deltas()

    if timing == "sequential":
        decisions = [vault_best_response_p1(d, params, n, samples, holder_u, grid.f_points)
                     for d in deltas]
        gov = np.array([_gov_objective(d, v.f, params.kappa) for d, v in zip(deltas, decisions)])
        k = int(np.argmax(gov))
        converged, iterations = True, len(deltas)
    else:
        k, decisions, converged, iterations = _best_response_iteration(
            deltas, params, n, samples, holder_u, grid.f_points, max_iterations)

    delta, vault = float(deltas[k]), decisions[k]
    return _report(params, samples, grid, delta, vault, n, holder_u,
                   converged=converged, iterations=iterations, timing=timing)


def _best_response_iteration(deltas, params, n, samples, holder_u, f_points, max_iterations):
    cache: dict[int, VaultDecisionP1] = {}

    def vault(k):
        if k not in cache:
            cache[k] = vault_best_response_p1(deltas[k], params, n, samples, holder_u, f_points)
        return cache[k]

    k, visited, it = 0, {0}, 0
    converged = False
    while it < max_iterations:
        it += 1
        f = vault(k).f
        gov = np.array([_gov_objective(d, f, params.kappa) for d in deltas])
        k_new = int(np.argmax(gov))
        if k_new == k:
            converged = True
            break
        k = k_new
        if k in visited:  # best responses cycle
            break
        visited.add(k)
    decisions = {k: vault(k)}
    return k, decisions, converged, it


def _report(params, samples, grid, delta, vault, n, holder_u, *, converged, iterations, timing):
    gov_value = _gov_objective(delta, vault.f, params.kappa)
    payoff = n * samples.values + vault.f * (vault.b_price * params.b - delta)
    _, se = expected_value(payoff, samples)
    return EquilibriumReport(
        problem="p1",
        delta_star=delta,
        f_star=vault.f,
        n_star=float(n),
        b_price=vault.b_price,
        participates=vault.participates,
        gov_path=GovTokenPath(p0=gov_value, p1=gov_value, p2=gov_value, p2_expected=gov_value),
        attack={"probability": 0.0},
        objectives={"governance": gov_value, "vault": vault.objective},
        diagnostics={
            "converged": converged,
            "iterations": iterations,
            "timing": timing,
            "grid": grid.describe(),
            "samples": samples.describe(),
            "vault_objective_std_error": se,
            "version": __version__,
        },
    )

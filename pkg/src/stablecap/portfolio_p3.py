"""Portfolio selection with a collusion attack vector.

Three agents move on finite grids:

* the outside governor (GOV share ``epsilon``) sets ``delta`` and decides
  whether to collude with the vault (``d_v``), the holder (``d_s``) or nobody
  (``d_n``);
* the vault splits ``x_bar`` between COL and GOV, locks ``N <= x_C``, issues
  ``F <= beta N`` and offers a bribe ``gamma_v``;
* the stablecoin holder splits ``y_bar`` between COL, GOV and STBL and offers
  a bribe ``gamma_s``.

GOV and STBL prices are endogenous through pluggable :class:`PriceFunctions`.
The objectives are implemented term by term as written, including their
accounting (COL enters through its return ``R``; GOV and STBL through their
settlement values). :func:`solve_p3` runs damped best-response sweeps in the
fixed order governor, vault, holder.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import __version__
from .core import (EquilibriumReport, GovTokenPath, ReturnModel, ScenarioParams, ValidationError,
                   validate)
from .stochastics import DEFAULT_SAMPLES, SampleSet, expect, sample_returns, utility_expectation
from .utility import UtilityFunction

ASSETS_VAULT = ("COL", "GOV")
ASSETS_HOLDER = ("COL", "GOV", "STBL")
ATTACK_LABELS = ("n", "v", "s")


class InfeasibleCollusionError(ValueError):
    """No one-hot attack assignment satisfies the GOV-share feasibility bounds."""


# --------------------------------------------------------------------------- prices

def gov_price_default(x_g, y_g, delta, f, kappa: float, pressure: float):
    """``P1 = delta F + kappa + pressure (x_G + y_G)``."""
    return delta * np.asarray(f, dtype=float) + kappa + pressure * (
        np.asarray(x_g, dtype=float) + np.asarray(y_g, dtype=float))


def stbl_price_default(f, y_s, b_max: float):
    """``B = min(b_max, y_S / F)`` for ``F > 0`` and ``b_max`` when nothing is issued."""
    f = np.asarray(f, dtype=float)
    y_s = np.asarray(y_s, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):  # inf is capped
        ratio = np.where(f > 0, y_s / np.where(f > 0, f, 1.0), b_max)
    return np.minimum(b_max, ratio)


@dataclass(frozen=True)
class PriceFunctions:
    """GOV price ``P(x_G, y_G, delta, F)`` and STBL price ``B(F, y_S)``.

    Both callables must accept numpy arrays and broadcast.
    """

    gov_price: Callable
    stbl_price: Callable
    name: str = "custom"
    params: dict = field(default_factory=dict)


def linear_price_functions(kappa: float, pressure: float = 0.0,
                           b_max: float = 1.0) -> PriceFunctions:
    return PriceFunctions(
        gov_price=lambda x_g, y_g, delta, f: gov_price_default(x_g, y_g, delta, f, kappa, pressure),
        stbl_price=lambda f, y_s: stbl_price_default(f, y_s, b_max),
        name="linear", params={"kappa": kappa, "pressure": pressure, "b_max": b_max})


def fixed_stbl_price_functions(kappa: float, pressure: float = 0.0,
                               b_price: float = 1.0) -> PriceFunctions:
    """Linear GOV price with a price-taking STBL market at ``b_price``."""
    return PriceFunctions(
        gov_price=lambda x_g, y_g, delta, f: gov_price_default(x_g, y_g, delta, f, kappa, pressure),
        stbl_price=lambda f, y_s: np.broadcast_to(
            np.float64(b_price), np.broadcast(np.asarray(f), np.asarray(y_s)).shape) * 1.0,
        name="fixed-stbl", params={"kappa": kappa, "pressure": pressure, "b_price": b_price})


PRICE_MODELS: dict[str, Callable[..., PriceFunctions]] = {
    "linear": lambda params, pressure=0.0, b_max=1.0: linear_price_functions(
        params.kappa, pressure, b_max),
    "fixed-stbl": lambda params, pressure=0.0, b_max=1.0: fixed_stbl_price_functions(
        params.kappa, pressure, b_max),
}


def price_functions(name: str, params: ScenarioParams, **options) -> PriceFunctions:
    try:
        builder = PRICE_MODELS[name]
    except KeyError:
        raise ValidationError([f"unknown price model {name!r}; known: {sorted(PRICE_MODELS)}"])
    return builder(params, **options)


# --------------------------------------------------------------------------- types

@dataclass(frozen=True)
class Portfolio:
    components: dict
    endowment: float

    def __post_init__(self):
        if any(v < 0 for v in self.components.values()):
            raise ValueError("portfolio components must be >= 0")
        total = math.fsum(self.components.values())
        if abs(total - self.endowment) > 1e-9 * max(1.0, abs(self.endowment)):
            raise ValueError("portfolio components must sum to the endowment")

    def __getitem__(self, asset: str) -> float:
        return self.components.get(asset, 0.0)


@dataclass(frozen=True)
class CollusionOutcome:
    d_n: int
    d_v: int
    d_s: int
    gamma_v: float
    gamma_s: float
    colluding_share: float

    @property
    def label(self) -> str:
        return "n" if self.d_n else ("v" if self.d_v else "s")


@dataclass(frozen=True)
class GovDecisionP3:
    delta: float
    outcome: CollusionOutcome
    objective: float
    p1: float


@dataclass(frozen=True)
class VaultDecisionP3:
    portfolio: Portfolio
    n: float
    f: float
    gamma_v: float
    participates: bool
    objective: float


@dataclass(frozen=True)
class HolderDecisionP3:
    portfolio: Portfolio
    gamma_s: float
    objective: float


@dataclass(frozen=True)
class P3Grid:
    """Decision grids. Shares are fractions: GOV share of the endowment, locked
    share of COL, issuance as a share of ``beta N``."""

    delta_values: tuple[float, ...] = tuple(round(0.1 * k, 10) for k in range(10))
    alloc_points: int = 5
    n_points: int = 5
    f_points: int = 5
    bribe_values: tuple[float, ...] = tuple(round(0.1 * k, 10) for k in range(10))
    max_iterations: int = 200
    damping: float = 0.5

    def problems(self) -> list[str]:
        errs = []
        if not self.delta_values or any(not 0 <= d < 1 for d in self.delta_values):
            errs.append("p3 delta grid must be non-empty inside [0, 1)")
        if not self.bribe_values or any(not 0 <= g < 1 for g in self.bribe_values):
            errs.append("bribe grid must be non-empty inside [0, 1)")
        for name in ("alloc_points", "n_points", "f_points"):
            if getattr(self, name) < 1:
                errs.append(f"{name} must be >= 1")
        if self.max_iterations < 1:
            errs.append("max_iterations must be >= 1")
        if not 0 < self.damping <= 1:
            errs.append("damping must be in (0, 1]")
        return errs

    def describe(self) -> dict:
        return {"delta_values": list(self.delta_values), "alloc_points": self.alloc_points,
                "n_points": self.n_points, "f_points": self.f_points,
                "bribe_values": list(self.bribe_values), "max_iterations": self.max_iterations,
                "damping": self.damping}


def _fractions(points: int) -> np.ndarray:
    return np.linspace(0.0, 1.0, points)


# --------------------------------------------------------------------------- grids

class _Grids:
    """Enumerates every agent's decision grid once, in lexicographic index order."""

    def __init__(self, params: ScenarioParams, grid: P3Grid):
        self.grid = grid
        self.deltas = np.asarray(grid.delta_values, dtype=float)
        a = _fractions(grid.alloc_points)
        nf = _fractions(grid.n_points)
        ff = _fractions(grid.f_points)
        bribes = np.asarray(grid.bribe_values, dtype=float)

        self.vault_index = list(itertools.product(range(a.size), range(nf.size), range(ff.size),
                                                  range(bribes.size)))
        vi = np.array(self.vault_index).reshape(-1, 4)
        self.x_g = a[vi[:, 0]] * params.x_bar
        self.x_c = np.maximum(params.x_bar - self.x_g, 0.0)
        self.n = nf[vi[:, 1]] * self.x_c
        self.f = ff[vi[:, 2]] * params.beta * self.n
        self.gamma_v = bribes[vi[:, 3]]

        m = a.size - 1
        simplex = [(g, s) for g in range(a.size) for s in range(a.size) if g + s <= m]
        self.holder_index = [(g, s, b) for (g, s) in simplex for b in range(bribes.size)]
        hi = np.array(self.holder_index).reshape(-1, 3)
        self.y_g = a[hi[:, 0]] * params.y_bar
        self.y_s = a[hi[:, 1]] * params.y_bar
        self.y_c = np.maximum(params.y_bar - self.y_g - self.y_s, 0.0)
        self.gamma_s = bribes[hi[:, 2]]
        self._vpos = {ix: k for k, ix in enumerate(self.vault_index)}
        self._hpos = {ix: k for k, ix in enumerate(self.holder_index)}

    def vault_decision(self, k: int, objective: float) -> VaultDecisionP3:
        port = Portfolio({"COL": float(self.x_c[k]), "GOV": float(self.x_g[k])},
                         float(self.x_c[k] + self.x_g[k]))
        return VaultDecisionP3(port, float(self.n[k]), float(self.f[k]), float(self.gamma_v[k]),
                               bool(self.n[k] > 0), float(objective))

    def holder_decision(self, k: int, objective: float) -> HolderDecisionP3:
        port = Portfolio({"COL": float(self.y_c[k]), "GOV": float(self.y_g[k]),
                          "STBL": float(self.y_s[k])},
                         float(self.y_c[k] + self.y_g[k] + self.y_s[k]))
        return HolderDecisionP3(port, float(self.gamma_s[k]), float(objective))


def _gov_fraction(holding, p1):
    holding = np.asarray(holding, dtype=float)
    p1 = np.asarray(p1, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(p1 > 0, holding / np.where(p1 > 0, p1, 1.0),
                        np.where(holding > 0, np.inf, 0.0))


def _gov_value(holding, p1, delta, f):
    """Settlement value ``(holding / P1) (delta F + P1)`` of a GOV position."""
    holding = np.asarray(holding, dtype=float)
    p1 = np.asarray(p1, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        dividend = np.where(p1 > 0, holding * (delta * f) / np.where(p1 > 0, p1, 1.0), 0.0)
    return holding + dividend


# --------------------------------------------------------------------------- governor

def _gov_options(delta, vault: VaultDecisionP3, holder: HolderDecisionP3,
                 params: ScenarioParams, price_fns: PriceFunctions):
    x_g, y_g = vault.portfolio["GOV"], holder.portfolio["GOV"]
    p1 = float(price_fns.gov_price(x_g, y_g, delta, vault.f))
    fv, fs = float(_gov_fraction(x_g, p1)), float(_gov_fraction(y_g, p1))
    lo_v, hi_v = fv >= params.zeta, params.epsilon + fv >= params.zeta
    lo_s, hi_s = fs >= params.zeta, params.epsilon + fs >= params.zeta
    opts = []
    if not lo_v and not lo_s:
        opts.append(("n", params.epsilon * (delta * vault.f + p1), 0.0))
    if hi_v and not lo_s:
        opts.append(("v", vault.gamma_v * (vault.f - x_g) - params.alpha, params.epsilon + fv))
    if hi_s and not lo_v:
        opts.append(("s", holder.gamma_s * (vault.n - y_g) - params.alpha, params.epsilon + fs))
    return p1, opts


def _outcome(label: str, vault, holder, share) -> CollusionOutcome:
    return CollusionOutcome(int(label == "n"), int(label == "v"), int(label == "s"),
                            vault.gamma_v, holder.gamma_s, float(share))


def _best_option(opts):
    # highest payoff; ties prefer no attack, then vault collusion
    return max(opts, key=lambda o: (o[1], -ATTACK_LABELS.index(o[0])))


def outside_gov_choice(vault: VaultDecisionP3, holder: HolderDecisionP3, params: ScenarioParams,
                       price_fns: PriceFunctions, samples: SampleSet | None = None,
                       grid: P3Grid = P3Grid()) -> GovDecisionP3:
    """Best (delta, attack assignment) for the outside governor.

    Ties resolve to no attack first, then to the smallest delta. Raises
    :class:`InfeasibleCollusionError` when no delta admits a feasible one-hot
    assignment.
    """
    k, dec = _gov_br(np.asarray(grid.delta_values, dtype=float), vault, holder, params, price_fns)
    return dec


def _gov_at(delta, vault, holder, params, price_fns) -> GovDecisionP3 | None:
    p1, opts = _gov_options(delta, vault, holder, params, price_fns)
    if not opts:
        return None
    label, value, share = _best_option(opts)
    return GovDecisionP3(float(delta), _outcome(label, vault, holder, share), float(value), p1)


def _gov_br(deltas, vault, holder, params, price_fns):
    best, best_key = None, None
    for k, delta in enumerate(deltas):
        dec = _gov_at(delta, vault, holder, params, price_fns)
        if dec is None:
            continue
        key = (dec.objective, dec.outcome.d_n)
        if best is None or key > best_key:
            best, best_key = (k, dec), key
    if best is None:
        raise InfeasibleCollusionError(
            "both vault and holder hold at least zeta of GOV; no one-hot attack assignment "
            "is feasible")
    return best


# --------------------------------------------------------------------------- vault

def _vault_tables(gov: GovDecisionP3, holder: HolderDecisionP3, params, price_fns, samples,
                  g: _Grids):
    d = gov.outcome
    delta = gov.delta
    b = np.asarray(price_fns.stbl_price(g.f, holder.portfolio["STBL"]), dtype=float)
    p1 = np.asarray(price_fns.gov_price(g.x_g, holder.portfolio["GOV"], delta, g.f), dtype=float)
    stake = (g.f * (b * params.b - delta)
             + d.d_n * _gov_value(g.x_g, p1, delta, g.f)
             + d.d_v * (1.0 - g.gamma_v) * (g.f - g.x_g)
             - d.d_s * g.n)
    objective = g.x_c * expect(samples.values, samples) + stake
    feasible = (g.n == 0) | (params.u <= stake)
    feasible &= _jointly_feasible(g.x_g, holder.portfolio["GOV"], p1, params)
    return objective, feasible


def _jointly_feasible(x_g, y_g, p1, params):
    # the governor needs at least one admissible one-hot assignment
    return ~((_gov_fraction(x_g, p1) >= params.zeta) & (_gov_fraction(y_g, p1) >= params.zeta))


def _vault_br(gov, holder, params, price_fns, samples, g: _Grids):
    obj, feasible = _vault_tables(gov, holder, params, price_fns, samples, g)
    masked = np.where(feasible, obj, -np.inf)
    k = int(np.argmax(masked))
    return k, g.vault_decision(k, obj[k])


def vault_choice_p3(gov: GovDecisionP3, holder: HolderDecisionP3, params: ScenarioParams,
                    price_fns: PriceFunctions, samples: SampleSet,
                    grid: P3Grid = P3Grid()) -> VaultDecisionP3:
    """Vault best response (portfolio, N, F, bribe) to the governor and holder.

    Ties go to the first grid point in (GOV share, N, F, bribe) order.
    """
    return _vault_br(gov, holder, params, price_fns, samples, _Grids(params, grid))[1]


# --------------------------------------------------------------------------- holder

def _holder_values(gov: GovDecisionP3, vault: VaultDecisionP3, params, price_fns, samples,
                   holder_u, g: _Grids):
    d = gov.outcome
    delta, f, n = gov.delta, vault.f, vault.n
    b = np.asarray(price_fns.stbl_price(f, g.y_s), dtype=float) * np.ones_like(g.y_s)
    if np.any((b <= 0) & (g.y_s > 0)):
        raise ValueError("STBL price is 0 while the holder buys STBL; coin count undefined")
    p1 = np.asarray(price_fns.gov_price(vault.portfolio["GOV"], g.y_g, delta, f), dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        coins = np.where(g.y_s > 0, g.y_s / np.where(b > 0, b, 1.0), 0.0)
    r = samples.values
    claim = np.maximum(n * (1.0 + r) - delta * f, 0.0)
    payoff = (g.y_c[:, None] * r
              + d.d_n * (np.minimum(coins[:, None], claim)
                         + _gov_value(g.y_g, p1, delta, f)[:, None])
              + d.d_s * ((1.0 - g.gamma_s) * (n - g.y_g))[:, None])
    vals = utility_expectation(holder_u, payoff, samples)
    ok = _jointly_feasible(vault.portfolio["GOV"], g.y_g, p1, params)
    return np.where(ok, vals, -np.inf)


def _holder_br(gov, vault, params, price_fns, samples, holder_u, g: _Grids):
    vals = _holder_values(gov, vault, params, price_fns, samples, holder_u, g)
    if not np.isfinite(vals).any():
        raise InfeasibleCollusionError("vault GOV holding leaves the holder no admissible portfolio")
    k = int(np.argmax(vals))
    return k, g.holder_decision(k, vals[k])


def holder_choice_p3(gov: GovDecisionP3, vault: VaultDecisionP3, params: ScenarioParams,
                     price_fns: PriceFunctions, samples: SampleSet, holder_u: UtilityFunction,
                     grid: P3Grid = P3Grid()) -> HolderDecisionP3:
    """Holder best response (portfolio, bribe); ties go to the first grid point."""
    return _holder_br(gov, vault, params, price_fns, samples, holder_u, _Grids(params, grid))[1]


# --------------------------------------------------------------------------- iteration

def _damp(old: tuple, new: tuple, damping: float) -> tuple:
    out = []
    for o, n in zip(old, new):
        step = n - o
        move = math.ceil(abs(step) * damping - 1e-12) if step else 0
        out.append(o + (move if step > 0 else -move))
    return tuple(out)


@dataclass
class P3Solution:
    report: EquilibriumReport
    gov: GovDecisionP3
    vault: VaultDecisionP3
    holder: HolderDecisionP3


def solve_p3(params: ScenarioParams, return_model: ReturnModel, holder_u: UtilityFunction,
             price_fns: PriceFunctions | None = None, seed: int = 0, *,
             grid: P3Grid = P3Grid(), samples: SampleSet | None = None,
             count: int = DEFAULT_SAMPLES, mode: str = "auto") -> EquilibriumReport:
    """Damped best-response iteration; non-convergence is flagged, not raised."""
    return solve_p3_full(params, return_model, holder_u, price_fns, seed, grid=grid,
                         samples=samples, count=count, mode=mode).report


def solve_p3_full(params, return_model, holder_u, price_fns=None, seed=0, *, grid=P3Grid(),
                  samples=None, count=DEFAULT_SAMPLES, mode="auto") -> P3Solution:
    validate(params, return_model, holder_u)
    errs = grid.problems()
    if errs:
        raise ValidationError(errs)
    if price_fns is None:
        price_fns = linear_price_functions(params.kappa)
    if samples is None:
        samples = sample_returns(return_model, count=count, seed=seed, mode=mode)
    g = _Grids(params, grid)

    v_k = g._vpos[(0, 0, 0, 0)]
    h_k = g._hpos[(0, 0, 0)]
    vault = g.vault_decision(v_k, 0.0)
    holder = g.holder_decision(h_k, 0.0)
    d_k = 0
    gov = _gov_at(g.deltas[0], vault, holder, params, price_fns)
    if gov is None:
        _, gov = _gov_br(g.deltas, vault, holder, params, price_fns)

    seen = {}
    converged, reason, it = False, "max_iterations", 0
    try:
        while it < grid.max_iterations:
            it += 1
            state = (d_k, gov.outcome.label, g.vault_index[v_k], g.holder_index[h_k])

            # governor
            br_k, br = _gov_br(g.deltas, vault, holder, params, price_fns)
            new_d_k = _damp((d_k,), (br_k,), grid.damping)[0]
            cand = br if new_d_k == br_k else _gov_at(g.deltas[new_d_k], vault, holder,
                                                      params, price_fns)
            if cand is None:
                new_d_k, cand = br_k, br
            d_k, gov = new_d_k, cand

            # vault
            br_k, _ = _vault_br(gov, holder, params, price_fns, samples, g)
            damped = g._vpos[_damp(g.vault_index[v_k], g.vault_index[br_k], grid.damping)]
            obj, feasible = _vault_tables(gov, holder, params, price_fns, samples, g)
            v_k = damped if feasible[damped] else br_k
            vault = g.vault_decision(v_k, obj[v_k])

            # holder
            br_k, _ = _holder_br(gov, vault, params, price_fns, samples, holder_u, g)
            h_k = g._hpos[_damp(g.holder_index[h_k], g.holder_index[br_k], grid.damping)]
            vals = _holder_values(gov, vault, params, price_fns, samples, holder_u, g)
            holder = g.holder_decision(h_k, vals[h_k])

            new_state = (d_k, gov.outcome.label, g.vault_index[v_k], g.holder_index[h_k])
            if new_state == state:
                converged, reason = True, "fixed_point"
                break
            if new_state in seen:
                reason = "cycle"
                break
            seen[state] = it
    except InfeasibleCollusionError as exc:
        reason = f"infeasible: {exc}"

    # refresh the governor's payoff against the final vault and holder decisions
    final_gov = _gov_at(gov.delta, vault, holder, params, price_fns) or gov
    if final_gov.outcome.label == gov.outcome.label:
        gov = final_gov
    report = _report(params, price_fns, samples, grid, gov, vault, holder,
                     converged=converged, iterations=it, reason=reason)
    return P3Solution(report, gov, vault, holder)


def _report(params, price_fns, samples, grid, gov, vault, holder, *, converged, iterations,
            reason) -> EquilibriumReport:
    d = gov.outcome
    b_price = float(np.asarray(price_fns.stbl_price(vault.f, holder.portfolio["STBL"])))
    p1 = gov.p1
    return EquilibriumReport(
        problem="p3",
        delta_star=gov.delta,
        f_star=vault.f,
        n_star=vault.n,
        b_price=b_price,
        participates=vault.participates,
        gov_path=GovTokenPath(p0=gov.objective, p1=p1, p2=p1, p2_expected=d.d_n * p1),
        attack={"d_n": d.d_n, "d_v": d.d_v, "d_s": d.d_s, "probability": float(1 - d.d_n),
                "colluding_share": d.colluding_share},
        objectives={"governor": gov.objective, "vault": vault.objective,
                    "holder": holder.objective},
        bribes={"gamma_v": vault.gamma_v, "gamma_s": holder.gamma_s},
        portfolios={"vault": dict(vault.portfolio.components),
                    "holder": dict(holder.portfolio.components)},
        diagnostics={
            "converged": converged,
            "iterations": iterations,
            "termination": reason,
            "price_model": price_fns.name,
            "price_params": dict(price_fns.params),
            "grid": grid.describe(),
            "samples": samples.describe(),
            "version": __version__,
        },
    )


# --------------------------------------------------------------------------- audit

def audit_p3(report: EquilibriumReport, params: ScenarioParams, holder_u: UtilityFunction,
             price_fns: PriceFunctions, samples: SampleSet, grid: P3Grid = P3Grid(),
             tol: float = 1e-9) -> list[str]:
    """Structural and fixed-point checks using only the report; returns violations."""
    errs = []
    pv, ph = report.portfolios["vault"], report.portfolios["holder"]
    scale_x, scale_y = max(1.0, params.x_bar), max(1.0, params.y_bar)
    if abs(math.fsum(pv.values()) - params.x_bar) > tol * scale_x:
        errs.append("vault portfolio does not sum to x_bar")
    if abs(math.fsum(ph.values()) - params.y_bar) > tol * scale_y:
        errs.append("holder portfolio does not sum to y_bar")
    n, f = report.n_star, report.f_star
    if not -tol * scale_x <= n <= pv["COL"] + tol * scale_x:
        errs.append("N outside [0, x_C]")
    if f > params.beta * n + tol * scale_x:
        errs.append("F exceeds beta N")
    a = report.attack
    if a["d_n"] + a["d_v"] + a["d_s"] != 1 or a["d_n"] != (1 - a["d_v"]) * (1 - a["d_s"]):
        errs.append("attack indicators are not one-hot")
    p1 = float(price_fns.gov_price(pv["GOV"], ph["GOV"], report.delta_star, f))
    for key, hold in (("d_v", pv["GOV"]), ("d_s", ph["GOV"])):
        frac = float(_gov_fraction(hold, p1))
        lo, hi = int(frac >= params.zeta), int(params.epsilon + frac >= params.zeta)
        if not lo <= a[key] <= hi:
            errs.append(f"{key} violates its GOV-share feasibility bounds")
    if errs:
        return errs

    vault = VaultDecisionP3(Portfolio(dict(pv), params.x_bar), n, f,
                            report.bribes["gamma_v"], n > 0, report.objectives["vault"])
    holder = HolderDecisionP3(Portfolio(dict(ph), params.y_bar), report.bribes["gamma_s"],
                              report.objectives["holder"])
    gov = GovDecisionP3(report.delta_star,
                        _outcome("n" if a["d_n"] else ("v" if a["d_v"] else "s"), vault, holder,
                                 a["colluding_share"]),
                        report.objectives["governor"], p1)
    g_re = outside_gov_choice(vault, holder, params, price_fns, samples, grid)
    if (g_re.delta, g_re.outcome.label) != (gov.delta, gov.outcome.label):
        errs.append("governor decision is not a best response")
    v_re = vault_choice_p3(gov, holder, params, price_fns, samples, grid)
    if (v_re.portfolio.components, v_re.n, v_re.f, v_re.gamma_v) != (pv, n, f, vault.gamma_v):
        errs.append("vault decision is not a best response")
    h_re = holder_choice_p3(gov, vault, params, price_fns, samples, holder_u, grid)
    if (h_re.portfolio.components, h_re.gamma_s) != (ph, holder.gamma_s):
        errs.append("holder decision is not a best response")
    return errs

"""Miner-absorbed stablecoin: issuance rule, miner block decision, holder rebalancing.

Each round the holder rebalances between STBL and an exogenous stablecoin
(price ``B_A``, held at 1), the issuance rule picks the block reward ``r >= 0``
that keeps the STBL price closest to 1 assuming the block is produced, and the
miner then decides whether producing it is worth the cost.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .core import ReturnModel, ScenarioParams, ValidationError, validate
from .stochastics import DEFAULT_SAMPLES, SampleSet, sample_returns, utility_expectation
from .utility import UtilityFunction

TRAJECTORY_COLUMNS = ("round", "r", "d", "B", "P1", "y_s", "y_a", "F")


@dataclass(frozen=True)
class HolderPortfolioP4:
    y_s: float
    y_a: float
    stage: str = "y0"

    def __post_init__(self):
        if self.y_s < 0 or self.y_a < 0:
            raise ValueError("holdings must be >= 0")
        if self.stage not in ("y0", "y1"):
            raise ValueError("stage must be 'y0' or 'y1'")


@dataclass(frozen=True)
class MarketState:
    """What the price function needs besides the round's decisions."""

    y0_s: float
    supply: float


@dataclass(frozen=True)
class P4PriceModel:
    """``price_fn(r, y1, d, p1, market) -> B`` and ``confidence_fn(y_s, d) -> P1``."""

    price_fn: Callable
    confidence_fn: Callable
    params: dict = field(default_factory=dict)


def linear_price_model(demand_coef: float = 1.0, issuance_coef: float = 1.0,
                       spend_fraction: float = 1.0, confidence_coef: float = 0.0) -> P4PriceModel:
    """Default family.

    ``B = max(0, 1 + demand_coef (y1_S - y0_S)/max(F,1) - issuance_coef spend r d / max(F,1))``
    and ``P1 = confidence_coef y_S d``.
    """
    if demand_coef < 0 or issuance_coef < 0 or confidence_coef < 0:
        raise ValueError("price model coefficients must be >= 0")
    if not 0 <= spend_fraction <= 1:
        raise ValueError("spend_fraction must be in [0, 1]")

    def price(r, y1: HolderPortfolioP4, d, p1, market: MarketState):
        scale = max(market.supply, 1.0)
        b = (1.0 + demand_coef * (y1.y_s - market.y0_s) / scale
             - issuance_coef * spend_fraction * np.asarray(r, dtype=float) * d / scale)
        return np.maximum(b, 0.0)

    def confidence(y_s, d):
        return confidence_coef * y_s * d

    return P4PriceModel(price, confidence, {
        "demand_coef": demand_coef, "issuance_coef": issuance_coef,
        "spend_fraction": spend_fraction, "confidence_coef": confidence_coef})


def issuance_optimize(price_model: P4PriceModel, y1: HolderPortfolioP4, p1: float, r_grid,
                      market: MarketState) -> float:
    """Grid ``r`` minimising ``|B(r, y1, 1, P1) - 1|``; smallest r on ties."""
    r_grid = np.asarray(r_grid, dtype=float)
    if r_grid.size == 0:
        raise ValueError("empty reward grid")
    if np.any(r_grid < 0):
        raise ValueError("rewards must be >= 0")
    r_grid = np.sort(r_grid)
    gap = np.abs(np.asarray(price_model.price_fn(r_grid, y1, 1, p1, market), dtype=float) - 1.0)
    return float(r_grid[int(np.argmin(gap))])


def miner_decision(b_price, b_rate: float, r: float, c: float, p1: float,
                   u_outside: float) -> int:
    """1 iff ``E[B b r - c] >= 0`` and ``u <= E[B b r - c]``.

    ``b_price`` may be a scalar or an array of sampled prices. ``P1`` accrues
    whether or not the block is produced, so it never changes the decision.
    """
    margin = float(np.mean(np.asarray(b_price, dtype=float) * b_rate * r - c))
    return int(margin >= 0 and u_outside <= margin)


def holder_rebalance(y0: HolderPortfolioP4, b_price, b_a: float, delta_cost: float,
                     holder_u: UtilityFunction, grid, b_trade: float = 1.0) -> HolderPortfolioP4:
    """Grid choice of post-block STBL holdings ``y1_S``.

    Holdings are valued at the next price ``b_price``: a scalar, an array of
    equally likely draws or a :class:`SampleSet` of prices. Trades execute at
    ``b_trade``: sales receive ``b_trade (1 - delta)`` per coin and purchases
    cost ``b_trade (1 + delta)``, paid out of ``y_A``. Candidates the holder
    cannot afford are skipped; ties keep the candidate closest to ``y0_S``.
    """
    grid = np.unique(np.asarray(grid, dtype=float))
    if grid.size == 0:
        raise ValueError("empty holding grid")
    if not 0 <= delta_cost < 1:
        raise ValueError("delta_cost must be in [0, 1)")
    if not isinstance(b_price, SampleSet):
        b_price = SampleSet(None, np.atleast_1d(np.asarray(b_price, dtype=float)))
    change = grid - y0.y_s
    unit = np.where(change > 0, b_trade * (1 + delta_cost), b_trade * (1 - delta_cost))
    y_a = y0.y_a - change * unit / b_a
    ok = (grid >= 0) & (y_a >= -1e-12 * max(1.0, y0.y_a))
    if not ok.any():
        raise ValueError("no affordable holding on the grid")
    wealth = grid[:, None] * b_price.values[None, :] + (y_a * b_a)[:, None]
    vals = np.where(ok, utility_expectation(holder_u, wealth, b_price), -np.inf)
    cand = np.flatnonzero(vals == vals.max())
    k = int(cand[np.argmin(np.abs(change[cand]))])
    return HolderPortfolioP4(float(grid[k]), float(max(y_a[k], 0.0)), "y1")


@dataclass(frozen=True)
class P4Config:
    """Simulation settings beyond :class:`ScenarioParams`."""

    y_s: float = 100.0
    y_a: float = 100.0
    inflow: float = 0.0
    initial_supply: float = 1000.0
    r_max: float = 50.0
    r_points: int = 501
    holding_points: int = 41
    b_a: float = 1.0
    count: int = DEFAULT_SAMPLES

    def problems(self) -> list[str]:
        errs = []
        for name in ("y_s", "y_a", "inflow", "initial_supply", "r_max"):
            v = getattr(self, name)
            if not math.isfinite(v) or v < 0:
                errs.append(f"{name} must be finite and >= 0")
        if self.r_points < 1 or self.holding_points < 2:
            errs.append("r_points must be >= 1 and holding_points >= 2")
        if not self.b_a > 0:
            errs.append("b_a must be > 0")
        return errs


@dataclass(frozen=True)
class RoundRecord:
    round: int
    r: float
    d: int
    B: float
    P1: float
    y_s: float
    y_a: float
    F: float
    miner_margin: float


def simulate_p4(params: ScenarioParams, price_model: P4PriceModel, rounds: int, seed: int = 0,
                *, return_model: ReturnModel = ReturnModel.deterministic(0.0),
                holder_u: UtilityFunction = UtilityFunction.risk_neutral(),
                config: P4Config = P4Config(), mode: str = "auto") -> list[RoundRecord]:
    """Run ``rounds`` blocks; one record per round.

    Per round: the holder receives ``inflow`` of the exogenous coin and
    rebalances believing the next STBL price is ``B_prev (1 + R)``; the
    issuance rule sets ``r`` assuming the block is produced; the miner decides;
    then ``P1``, ``B`` and supply ``F <- F + r d`` update. ``params.u_holder``
    is the outside option in the miner constraint and ``params.delta_cost`` the
    STBL trading cost.
    """
    if rounds < 0:
        raise ValueError("rounds must be >= 0")
    validate(params, return_model, holder_u)
    errs = config.problems()
    if errs:
        raise ValidationError(errs)
    samples = sample_returns(return_model, count=config.count, seed=seed, mode=mode)
    r_grid = np.linspace(0.0, config.r_max, config.r_points)

    y = HolderPortfolioP4(config.y_s, config.y_a)
    supply, b_prev = config.initial_supply, 1.0
    out: list[RoundRecord] = []
    for t in range(1, rounds + 1):
        y = HolderPortfolioP4(y.y_s, y.y_a + config.inflow)
        buy_unit = max(b_prev, 1e-12) * (1 + params.delta_cost)
        top = y.y_s + y.y_a * config.b_a / buy_unit
        grid = np.append(np.linspace(0.0, top, config.holding_points), y.y_s)
        belief = SampleSet(samples.seed, b_prev * (1.0 + samples.values), samples.weights)
        y1 = holder_rebalance(y, belief, config.b_a, params.delta_cost, holder_u, grid,
                              b_trade=b_prev)

        market = MarketState(y0_s=y.y_s, supply=supply)
        p1_assumed = float(price_model.confidence_fn(y1.y_s, 1))
        r = issuance_optimize(price_model, y1, p1_assumed, r_grid, market)
        b_if_mined = float(price_model.price_fn(r, y1, 1, p1_assumed, market))
        d = miner_decision(b_if_mined, params.b, r, params.c, p1_assumed, params.u_holder)
        p1 = float(price_model.confidence_fn(y1.y_s, d))
        b_now = float(price_model.price_fn(r, y1, d, p1, market))
        supply += r * d
        out.append(RoundRecord(t, r, d, b_now, p1, y1.y_s, y1.y_a, supply,
                               b_if_mined * params.b * r - params.c))
        y, b_prev = HolderPortfolioP4(y1.y_s, y1.y_a), b_now
    return out


def trajectory_csv(records: list[RoundRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TRAJECTORY_COLUMNS)
    for rec in records:
        w.writerow([rec.round, repr(rec.r), rec.d, repr(rec.B), repr(rec.P1), repr(rec.y_s),
                    repr(rec.y_a), repr(rec.F)])
    return buf.getvalue()

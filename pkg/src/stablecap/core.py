"""Shared parameter, return-model, grid and report types.

Every solver consumes a validated :class:`ScenarioParams` and emits an
:class:`EquilibriumReport`. All types are frozen; validation happens once
through :func:`validate` and the objects are then safe to share between
worker threads.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, fields
from typing import Any

import numpy as np

__all__ = [
    "ScenarioParams",
    "ReturnModel",
    "GovTokenPath",
    "EquilibriumReport",
    "GridSpec",
    "ValidationError",
    "validate",
]


class ValidationError(ValueError):
    """Raised when one or more invariants fail; ``errors`` lists all of them."""

    def __init__(self, errors: list[str]):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


@dataclass(frozen=True)
class ScenarioParams:
    """Model parameters shared by every problem.

    Dollar quantities are plain floats in USD; fractions are unitless.
    ``n_bar`` is the collateral the vault can lock (the attack-free game locks all of it),
    ``x_bar``/``y_bar`` are the vault and holder endowments in the portfolio game and
    ``c``/``delta_cost``/``u_holder`` belong to the miner-absorbed model.
    """

    beta: float = 0.66
    kappa: float = 0.0
    b: float = 0.1
    u: float = 0.0
    u_holder: float = 0.0
    zeta: float = 0.1
    gamma: float = 1.0
    alpha: float = 0.0
    epsilon: float = 0.0
    n_bar: float = 100.0
    x_bar: float = 100.0
    y_bar: float = 100.0
    r_discount: float = 0.05
    c: float = 0.0
    delta_cost: float = 0.0
    r_free: float = 0.0

    def replace(self, **changes: Any) -> "ScenarioParams":
        data = asdict(self)
        unknown = set(changes) - set(data)
        if unknown:
            raise TypeError(f"unknown parameter(s): {sorted(unknown)}")
        data.update(changes)
        return ScenarioParams(**data)

    def problems(self) -> list[str]:
        errs: list[str] = []
        for f in fields(self):
            v = getattr(self, f.name)
            if not isinstance(v, (int, float)) or isinstance(v, bool) or not math.isfinite(v):
                errs.append(f"{f.name} must be a finite number")
        if errs:
            return errs
        if self.beta <= 0:
            errs.append("beta must be > 0")
        elif self.beta > 1:
            errs.append("beta must be <= 1")
        if not 0 < self.zeta < 1:
            errs.append("zeta must be in (0, 1)")
        if not 0 <= self.epsilon < 1:
            errs.append("epsilon must be in [0, 1)")
        if self.gamma < 0:
            errs.append("gamma must be >= 0")
        if not 0 < self.r_discount < 1:
            errs.append("r_discount must be in (0, 1)")
        if not 0 <= self.delta_cost < 1:
            errs.append("delta_cost must be in [0, 1)")
        if self.b <= -1:
            errs.append("b must be > -1")
        if self.r_free <= -1:
            errs.append("r_free must be > -1")
        for name in ("kappa", "u", "u_holder", "alpha", "n_bar", "x_bar", "y_bar", "c"):
            if getattr(self, name) < 0:
                errs.append(f"{name} must be >= 0")
        return errs


RETURN_KINDS = ("deterministic", "two-point", "lognormal")


@dataclass(frozen=True)
class ReturnModel:
    """Distribution of the collateral return ``R`` over one model period.

    ``deterministic`` uses ``values[0]``; ``two-point`` uses ``values`` with
    ``probabilities``; ``lognormal`` sets ``log(1 + R) ~ N(log_mean, log_sd**2)``.
    """

    kind: str = "deterministic"
    values: tuple[float, ...] = (0.0,)
    probabilities: tuple[float, ...] = (1.0,)
    log_mean: float = 0.0
    log_sd: float = 0.0

    @classmethod
    def deterministic(cls, value: float) -> "ReturnModel":
        return cls("deterministic", (float(value),), (1.0,))

    @classmethod
    def two_point(cls, values, probabilities) -> "ReturnModel":
        return cls("two-point", tuple(float(v) for v in values),
                   tuple(float(p) for p in probabilities))

    @classmethod
    def lognormal(cls, log_mean: float, log_sd: float) -> "ReturnModel":
        return cls("lognormal", (), (), float(log_mean), float(log_sd))

    @property
    def finite_support(self) -> bool:
        return self.kind in ("deterministic", "two-point")

    def mean(self) -> float:
        """Analytic E[R]."""
        if self.kind == "lognormal":
            return math.exp(self.log_mean + 0.5 * self.log_sd ** 2) - 1.0
        return float(sum(v * p for v, p in zip(self.values, self.probabilities)))

    def variance(self) -> float:
        """Analytic Var(R)."""
        if self.kind == "lognormal":
            s2 = self.log_sd ** 2
            return (math.exp(s2) - 1.0) * math.exp(2 * self.log_mean + s2)
        m = self.mean()
        return float(sum(p * (v - m) ** 2 for v, p in zip(self.values, self.probabilities)))

    def problems(self) -> list[str]:
        errs: list[str] = []
        if self.kind not in RETURN_KINDS:
            return [f"unknown return model kind {self.kind!r}"]
        if self.kind == "lognormal":
            if not (math.isfinite(self.log_mean) and math.isfinite(self.log_sd)):
                errs.append("lognormal parameters must be finite")
            elif self.log_sd < 0:
                errs.append("log_sd must be >= 0")
            return errs
        expected = 1 if self.kind == "deterministic" else 2
        if len(self.values) != expected:
            errs.append(f"{self.kind} return model needs {expected} value(s)")
        if len(self.probabilities) != len(self.values):
            errs.append("values and probabilities must have equal length")
        if any(not math.isfinite(v) or v <= -1 for v in self.values):
            errs.append("return values must be finite and > -1")
        if any(p < 0 for p in self.probabilities):
            errs.append("probabilities must be >= 0")
        if not math.isclose(sum(self.probabilities), 1.0, rel_tol=0, abs_tol=1e-12):
            errs.append("probabilities must sum to 1")
        return errs


@dataclass(frozen=True)
class GridSpec:
    """Decision grids for the capital-structure solvers.

    The interest-rate grid is ``k * delta_step`` for every k with the value
    below 1, unless ``delta_values`` pins an explicit grid. Issuance and
    locked-collateral grids are evenly spaced including both endpoints.
    """

    delta_step: float = 0.01
    f_points: int = 51
    n_points: int = 21
    delta_values: tuple[float, ...] | None = None

    def deltas(self) -> np.ndarray:
        if self.delta_values is not None:
            out = np.asarray(self.delta_values, dtype=float)
        else:
            n = int(math.ceil(1.0 / self.delta_step - 1e-9))
            out = np.round(np.arange(n) * self.delta_step, 12)
            out = out[out < 1.0]
        if out.size == 0:
            raise ValueError("empty delta grid")
        if np.any(out < 0) or np.any(out >= 1):
            raise ValueError("delta grid must lie inside [0, 1)")
        return out

    def problems(self) -> list[str]:
        errs = []
        if self.delta_values is None and not 0 < self.delta_step < 1:
            errs.append("delta_step must be in (0, 1)")
        if self.f_points < 1:
            errs.append("f_points must be >= 1")
        if self.n_points < 1:
            errs.append("n_points must be >= 1")
        return errs

    def describe(self) -> dict:
        return {
            "delta_step": self.delta_step if self.delta_values is None else None,
            "delta_values": list(self.delta_values) if self.delta_values is not None else None,
            "f_points": self.f_points,
            "n_points": self.n_points,
        }


@dataclass(frozen=True)
class GovTokenPath:
    """GOV valuations at model times 0, 1, 2.

    ``p2`` is the terminal value conditional on no attack (an attack sends it
    to zero); ``p2_expected`` weights it by the no-attack probability.
    """

    p0: float
    p1: float
    p2: float
    p2_expected: float


@dataclass(frozen=True)
class EquilibriumReport:
    problem: str
    delta_star: float
    f_star: float
    n_star: float
    b_price: float
    participates: bool
    gov_path: GovTokenPath
    attack: dict = field(default_factory=dict)
    objectives: dict = field(default_factory=dict)
    bribes: dict | None = None
    portfolios: dict | None = None
    diagnostics: dict = field(default_factory=dict)

    def equilibrium(self) -> dict:
        """Decision, price and objective fields, without solver diagnostics."""
        d = self.to_dict()
        d.pop("problem")
        d.pop("diagnostics")
        return d

    def to_dict(self) -> dict:
        return _plain(asdict(self))


def _plain(obj):
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    return obj


def validate(params: ScenarioParams, returns: ReturnModel | None = None,
             utility=None, grid: GridSpec | None = None) -> ScenarioParams:
    """Check every invariant and return ``params`` unchanged.

    Raises :class:`ValidationError` listing all violations at once.
    """
    errs = list(params.problems())
    if returns is not None:
        errs += returns.problems()
    if utility is not None:
        errs += utility.problems()
    if grid is not None:
        errs += grid.problems()
    if errs:
        raise ValidationError(errs)
    return params

"""Seeded return sampling and expectation estimates.

A :class:`SampleSet` is either a Monte Carlo draw (equal weights) or an
exhaustive enumeration of a finite-support model (``weights`` holds the
probabilities and estimates are exact). Solvers evaluate every candidate
decision on one shared SampleSet, i.e. with common random numbers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .core import ReturnModel, ValidationError
from .utility import UtilityFunction

DEFAULT_SAMPLES = 10_000
SAMPLING_MODES = ("auto", "sample", "enumerate")


@dataclass(frozen=True, eq=False)
class SampleSet:
    seed: int | None
    values: np.ndarray
    weights: np.ndarray | None = None

    @property
    def count(self) -> int:
        return int(self.values.size)

    @property
    def exact(self) -> bool:
        return self.weights is not None

    def __eq__(self, other) -> bool:
        if not isinstance(other, SampleSet):
            return NotImplemented
        same_w = (self.weights is None and other.weights is None) or (
            self.weights is not None and other.weights is not None
            and np.array_equal(self.weights, other.weights))
        return self.seed == other.seed and same_w and np.array_equal(self.values, other.values)

    def describe(self) -> dict:
        return {"seed": self.seed, "count": self.count,
                "mode": "enumerate" if self.exact else "sample"}


def _checked(model: ReturnModel) -> ReturnModel:
    errs = model.problems()
    if errs:
        raise ValidationError(errs)
    return model


def draw_returns(model: ReturnModel, count: int, seed: int) -> SampleSet:
    """Draw ``count`` realisations of R; bit-identical for the same (model, count, seed)."""
    _checked(model)
    if count < 1:
        raise ValueError("count must be >= 1")
    if model.kind == "deterministic":
        vals = np.full(count, model.values[0], dtype=float)
    else:
        rng = np.random.default_rng(seed)
        if model.kind == "two-point":
            idx = rng.choice(len(model.values), size=count, p=np.asarray(model.probabilities))
            vals = np.asarray(model.values, dtype=float)[idx]
        else:
            vals = np.expm1(rng.normal(model.log_mean, model.log_sd, size=count))
    vals.setflags(write=False)
    return SampleSet(seed=seed, values=vals)


def enumerate_returns(model: ReturnModel) -> SampleSet:
    """Exact support of a finite-support model, weighted by its probabilities."""
    _checked(model)
    if not model.finite_support:
        raise ValueError(f"{model.kind} model has no finite support to enumerate")
    vals = np.asarray(model.values, dtype=float)
    w = np.asarray(model.probabilities, dtype=float)
    vals.setflags(write=False)
    w.setflags(write=False)
    return SampleSet(seed=None, values=vals, weights=w)


def sample_returns(model: ReturnModel, count: int = DEFAULT_SAMPLES, seed: int = 0,
                   mode: str = "auto") -> SampleSet:
    """Sample set used by the solvers: enumeration for finite support under ``auto``."""
    if mode not in SAMPLING_MODES:
        raise ValueError(f"unknown sampling mode {mode!r}")
    if mode == "enumerate" or (mode == "auto" and model.finite_support):
        return enumerate_returns(model)
    return draw_returns(model, count, seed)


def expect(x, samples: SampleSet) -> np.ndarray | float:
    """Expectation along the last axis (the sample axis)."""
    x = np.ascontiguousarray(x, dtype=float)
    if samples.weights is None:
        out = x.mean(axis=-1)
    else:
        out = (x * samples.weights).sum(axis=-1)
    return float(out) if np.ndim(out) == 0 else out


def _variance(x: np.ndarray, mean, samples: SampleSet):
    dev = x - np.expand_dims(np.asarray(mean), -1)
    return expect(dev * dev, samples)


def _payoff_values(payoff, samples: SampleSet) -> np.ndarray:
    if samples.count < 1:
        raise ValueError("empty sample set")
    vals = payoff(samples.values) if callable(payoff) else payoff
    vals = np.broadcast_to(np.asarray(vals, dtype=float), samples.values.shape)
    if not np.all(np.isfinite(vals)):
        raise ValueError("payoff is not finite on every sample")
    return vals


def expected_value(payoff: Callable | np.ndarray, samples: SampleSet) -> tuple[float, float]:
    """Return (estimate, standard error) of E[payoff(R)].

    Enumerated sample sets give the exact value with standard error 0.
    """
    vals = _payoff_values(payoff, samples)
    est = expect(vals, samples)
    if samples.exact or samples.count < 2:
        return est, 0.0
    return est, float(np.std(vals, ddof=1) / math.sqrt(samples.count))


def utility_expectation(u: UtilityFunction, x, samples: SampleSet):
    """Vectorised E[U(x)] along the sample axis of ``x``.

    Mean-variance uses the plug-in moments ``mean - rho * var / 2`` of the
    payoff distribution (population variance of the sample set).
    """
    x = np.asarray(x, dtype=float)
    if u.kind == "risk-neutral":
        return expect(x, samples)
    if u.kind == "mean-variance":
        mu = expect(x, samples)
        return mu - 0.5 * u.rho * _variance(x, mu, samples)
    return expect(u(x), samples)


def expected_utility(u: UtilityFunction, payoff: Callable | np.ndarray,
                     samples: SampleSet) -> float:
    errs = u.problems()
    if errs:
        raise ValidationError(errs)
    vals = _payoff_values(payoff, samples)
    return float(utility_expectation(u, vals, samples))

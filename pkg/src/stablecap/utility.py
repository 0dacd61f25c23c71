"""Preference specifications: risk-neutral, CARA, mean-variance and HARA."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

UTILITY_KINDS = ("risk-neutral", "cara", "mean-variance", "hara")


def hara_utility(w, a: float, b_h: float, gamma_u: float):
    """HARA utility ``(1-g)/g * (a*w/(1-g) + b)**g``; works on scalars and arrays.

    Requires ``a > 0``, ``g`` not in {0, 1} and a strictly positive bracket.
    """
    if not a > 0:
        raise ValueError("HARA requires a > 0")
    if gamma_u == 0:
        raise ValueError("HARA requires gamma_u != 0")
    if gamma_u == 1:
        raise ValueError("HARA requires gamma_u != 1")
    w_arr = np.asarray(w, dtype=float)
    base = a * w_arr / (1.0 - gamma_u) + b_h
    if np.any(~(base > 0)):
        raise ValueError("HARA domain violated: a*w/(1-gamma_u) + b_h must be > 0")
    out = (1.0 - gamma_u) / gamma_u * np.power(base, gamma_u)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class UtilityFunction:
    """A utility specification.

    ``rho`` is the absolute risk-aversion coefficient for ``cara`` and
    ``mean-variance``; ``a``, ``b_h`` and ``gamma_u`` parametrise ``hara``.
    Mean-variance has no pointwise form of its own: it is the CARA agent
    facing normal payoffs, so :meth:`__call__` evaluates the CARA utility and
    expectations use the moment formula instead.
    """

    kind: str = "risk-neutral"
    rho: float = 1.0
    a: float = 1.0
    b_h: float = 1.0
    gamma_u: float = 0.5

    @classmethod
    def risk_neutral(cls) -> "UtilityFunction":
        return cls("risk-neutral")

    @classmethod
    def cara(cls, rho: float) -> "UtilityFunction":
        return cls("cara", rho=float(rho))

    @classmethod
    def mean_variance(cls, rho: float) -> "UtilityFunction":
        return cls("mean-variance", rho=float(rho))

    @classmethod
    def hara(cls, a: float, b_h: float, gamma_u: float) -> "UtilityFunction":
        return cls("hara", a=float(a), b_h=float(b_h), gamma_u=float(gamma_u))

    def problems(self) -> list[str]:
        if self.kind not in UTILITY_KINDS:
            return [f"unknown utility kind {self.kind!r}"]
        errs = []
        if self.kind in ("cara", "mean-variance") and not (math.isfinite(self.rho) and self.rho > 0):
            errs.append("rho must be > 0")
        if self.kind == "hara":
            if not self.a > 0:
                errs.append("HARA requires a > 0")
            if self.gamma_u == 0 or self.gamma_u == 1:
                errs.append("HARA requires gamma_u not in {0, 1}")
            elif not self.b_h > 0:
                # bracket at w = 0 reduces to b_h
                errs.append("HARA domain violated at w = 0: b_h must be > 0")
        return errs

    def __call__(self, w):
        if self.kind == "risk-neutral":
            return w * 1.0 if np.ndim(w) else float(w)
        if self.kind in ("cara", "mean-variance"):
            out = -np.exp(-self.rho * np.asarray(w, dtype=float))
            return float(out) if out.ndim == 0 else out
        if self.kind == "hara":
            return hara_utility(w, self.a, self.b_h, self.gamma_u)
        raise ValueError(f"unknown utility kind {self.kind!r}")

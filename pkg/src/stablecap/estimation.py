"""Risk-aversion estimation for mean-variance (CARA) agents.

Method 1 inverts the single-risky-asset optimum ``alpha* w = (E[R] - r) / (rho Var(R))``.
Method 2 inverts the multi-asset optimal weights
``w* = Sigma^{-1} mu_hat / (rho W prod(R_f))``; with more than one risky asset
the scalar ``rho`` is fitted by least squares and the residual is reported.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .utility import UtilityFunction

_EPS = np.finfo(float).eps


@dataclass(frozen=True)
class RiskAversionEstimate:
    rho: float
    method: str
    inputs_echo: dict = field(default_factory=dict)
    residual: float = 0.0

    @property
    def non_positive(self) -> bool:
        """Zero or negative estimates are kept and flagged, never clipped."""
        return not self.rho > 0


def arrow_pratt(u: UtilityFunction | Callable, w: float, step: float = 1e-3) -> float:
    """Absolute risk aversion ``-u''(w)/u'(w)`` by central finite differences.

    Raises ``ValueError`` when ``u'(w)`` cannot be told apart from zero.
    """
    if not step > 0:
        raise ValueError("step must be > 0")
    lo, mid, hi = (float(u(w - step)), float(u(w)), float(u(w + step)))
    d1 = (hi - lo) / (2.0 * step)
    scale = max(abs(lo), abs(mid), abs(hi))
    if not np.isfinite(d1) or abs(hi - lo) <= 8 * _EPS * scale or d1 == 0.0:
        raise ValueError(f"u'(w) is numerically zero at w={w}")
    d2 = (hi - 2.0 * mid + lo) / step ** 2
    return -d2 / d1


def optimal_alpha(w: float, er: float, var_r: float, r_free: float, rho: float) -> float:
    """Optimal risky share ``(E[R] - r) / (rho Var(R) w)`` of a mean-variance agent."""
    if not w > 0:
        raise ValueError("wealth must be > 0")
    if not var_r > 0:
        raise ValueError("variance must be > 0")
    if not rho > 0:
        raise ValueError("rho must be > 0")
    return (er - r_free) / (rho * var_r * w)


def mean_variance_objective(alpha: float, w: float, er: float, var_r: float, r_free: float,
                            rho: float) -> float:
    """``w [r + alpha (E[R] - r)] - rho w^2 alpha^2 Var(R) / 2``."""
    return w * (r_free + alpha * (er - r_free)) - 0.5 * rho * w ** 2 * alpha ** 2 * var_r


def estimate_rho_m1(w: float, alpha: float, er: float, var_r: float,
                    r_free: float) -> RiskAversionEstimate:
    denom = alpha * w * var_r
    if denom == 0 or not np.isfinite(denom):
        raise ValueError("alpha * w * var_r must be non-zero and finite")
    rho = (er - r_free) / denom
    return RiskAversionEstimate(
        rho=rho, method="method1",
        inputs_echo={"w": w, "alpha": alpha, "er": er, "var_r": var_r, "r_free": r_free})


def estimate_rho_m2(weights, wealth: float, rf_product: float, sigma,
                    mu_hat) -> RiskAversionEstimate:
    weights = np.atleast_1d(np.asarray(weights, dtype=float))
    mu_hat = np.atleast_1d(np.asarray(mu_hat, dtype=float))
    sigma = np.atleast_2d(np.asarray(sigma, dtype=float))
    k = weights.size
    if mu_hat.size != k or sigma.shape != (k, k):
        raise ValueError("weights, mu_hat and sigma dimensions disagree")
    if not np.allclose(sigma, sigma.T, rtol=0, atol=1e-14 * max(1.0, np.abs(sigma).max())):
        raise ValueError("sigma must be symmetric positive definite")
    try:
        chol = np.linalg.cholesky(sigma)
    except np.linalg.LinAlgError as exc:
        raise ValueError("sigma must be symmetric positive definite") from exc
    if not np.any(weights != 0):
        raise ValueError("weights vector must be non-zero")
    scale = wealth * rf_product
    if not scale > 0:
        raise ValueError("wealth * rf_product must be > 0")

    target = np.linalg.solve(chol.T, np.linalg.solve(chol, mu_hat))   # Sigma^{-1} mu_hat
    design = weights * scale
    if k == 1:
        rho = float(mu_hat[0] / (weights[0] * scale * sigma[0, 0]))
        residual = 0.0
    else:
        rho = float(design @ target / (design @ design))
        residual = float(np.linalg.norm(rho * design - target))
    return RiskAversionEstimate(
        rho=rho, method="method2",
        inputs_echo={"weights": weights.tolist(), "wealth": wealth, "rf_product": rf_product,
                     "sigma": sigma.tolist(), "mu_hat": mu_hat.tolist()},
        residual=residual)

import dataclasses

import numpy as np
import pytest
from hypothesis import given, strategies as st

from stablecap import GridSpec, ReturnModel, ScenarioParams, UtilityFunction, ValidationError
from stablecap.capstruct_p1 import solve_p1
from stablecap.capstruct_p2 import (analytic_secure, attack_indicator, incentive_security_region,
                                    price_of_anarchy, solve_p2, vault_best_response_p2)
from stablecap.stochastics import enumerate_returns

from oracles import p2_enumerate

RN = UtilityFunction.risk_neutral()


def test_attack_indicator_examples():
    p = ScenarioParams(gamma=1.0, zeta=0.1, kappa=50.0, alpha=0.0)
    assert attack_indicator(0.0, 100, 0.0, 0.0, p) == 1
    assert attack_indicator(0.0, 100, 0.0, 0.0, p.replace(alpha=1000.0)) == 0
    assert attack_indicator(0.0, 100, 0.0, 0.0, p.replace(alpha=95.0)) == 0  # equality


def test_vault_degenerate_cases():
    tp = enumerate_returns(ReturnModel.two_point((-0.2, 0.2), (0.5, 0.5)))
    v = vault_best_response_p2(0.05, ScenarioParams(n_bar=0.0), tp, RN)
    assert (v.n, v.f, v.participates) == (0.0, 0.0, False)
    certain = ScenarioParams(gamma=1.0, alpha=0.0, kappa=0.0, n_bar=100.0, b=0.5, u=0.0)
    v = vault_best_response_p2(0.05, certain, tp, RN, GridSpec(f_points=11, n_points=11))
    assert (v.n, v.f) == (0.0, 0.0)


def test_zeta_half_rejected():
    with pytest.raises(ValidationError):
        solve_p2(ScenarioParams(zeta=0.5), ReturnModel.deterministic(0.0), RN)


def test_zero_participation_objective():
    p = ScenarioParams(gamma=1.0, alpha=0.0, kappa=0.0, n_bar=100.0, b=0.5, u=0.0, zeta=0.1)
    rep = solve_p2(p, ReturnModel.two_point((-0.2, 0.2), (0.5, 0.5)), RN,
                   grid=GridSpec(delta_step=0.1, f_points=11, n_points=11))
    assert not rep.participates and rep.objectives["governance"] == 0.0


def test_large_alpha_equals_p1():
    p = ScenarioParams(gamma=1.0, alpha=1e6, kappa=2.0, n_bar=100.0, b=0.5, beta=0.6, u=0.0)
    rm = ReturnModel.two_point((-0.3, 0.4), (0.4, 0.6))
    grid = GridSpec(delta_step=0.05, f_points=31, n_points=11)
    a = solve_p2(p, rm, RN, grid=grid)
    b = solve_p1(p, rm, RN, grid=grid)
    assert a.equilibrium() == b.equilibrium() and a.n_star == p.n_bar


def test_small_grid_matches_enumeration():
    p = ScenarioParams(gamma=0.3, alpha=0.0, kappa=5.0, zeta=0.2, n_bar=100.0, b=0.5, beta=0.8,
                       u=0.0)
    rs, ps = (-0.5, 0.2), (0.2, 0.8)
    grid = GridSpec(delta_step=0.1, f_points=9, n_points=9)
    rep = solve_p2(p, ReturnModel.two_point(rs, ps), RN, grid=grid)
    d, n, f, gov = p2_enumerate(p, rs, ps, "risk_neutral", 0.0, grid.deltas().tolist(), 9, 9)
    assert (rep.delta_star, rep.n_star, rep.f_star) == (d, n, f)
    assert rep.objectives["governance"] == pytest.approx(gov)


def test_analytic_region_examples():
    assert analytic_secure(1.0, 0.05, 0.5, 0.2, 0.66)
    assert not analytic_secure(1.0, 0.05, 0.1, 0.05, 1.5)
    with pytest.raises(ZeroDivisionError):
        analytic_secure(1.0, 0.05, 0.0, 0.2, 0.66)


def test_region_point_order_and_flags():
    pts = incentive_security_region(
        [0.05, 0.5], [0.25], [0.2], [0.5], [0.05],
        ScenarioParams(n_bar=100.0, b=0.5, u=0.0), ReturnModel.two_point((-0.2, 0.2), (0.5, 0.5)),
        RN, grid=GridSpec(f_points=11, n_points=11))
    assert [pt.gamma for pt in pts] == [0.05, 0.5]
    for pt in pts:
        assert pt.analytic_secure == (pt.gamma * pt.r / (pt.zeta * pt.delta) < pt.beta)


def test_price_of_anarchy():
    rm = ReturnModel.two_point((-0.2, 0.2), (0.5, 0.5))
    grid = GridSpec(delta_step=0.1, f_points=11, n_points=11)
    base = ScenarioParams(n_bar=100.0, b=0.5, u=0.0, kappa=1.0, zeta=0.1, gamma=1.0)
    assert price_of_anarchy(base.replace(alpha=1e6), rm, RN, grid=grid).ratio == 1.0
    res = price_of_anarchy(base.replace(alpha=0.0), rm, RN, grid=grid)
    assert res.decentralized_welfare == pytest.approx(1.0)   # kappa only
    assert res.ratio < 1.0
    with pytest.raises(ValueError):
        price_of_anarchy(base.replace(alpha=0.0, kappa=0.0, b=0.0), rm, RN, grid=grid)


@given(st.floats(0, 2), st.floats(0, 2), st.floats(-0.9, 1), st.floats(-0.9, 1),
       st.floats(0, 100), st.floats(0, 100), st.floats(0.01, 0.49), st.floats(0.01, 0.49),
       st.floats(0, 50), st.floats(0, 50))
def test_attack_monotonicity(g1, g2, r1, r2, a1, a2, z1, z2, k1, k2):
    base = dict(n=100.0, f=40.0, delta=0.1)

    def d(gamma=1.0, r=0.0, alpha=10.0, zeta=0.2, kappa=10.0):
        p = ScenarioParams(gamma=gamma, alpha=alpha, zeta=zeta, kappa=kappa)
        return attack_indicator(r, base["n"], base["f"], base["delta"], p)

    lo, hi = sorted((g1, g2))
    assert d(gamma=lo) <= d(gamma=hi)
    lo, hi = sorted((r1, r2))
    assert d(r=lo) <= d(r=hi)
    lo, hi = sorted((a1, a2))
    assert d(alpha=lo) >= d(alpha=hi)
    lo, hi = sorted((z1, z2))
    assert d(zeta=lo) >= d(zeta=hi)
    lo, hi = sorted((k1, k2))
    assert d(kappa=lo) >= d(kappa=hi)


@given(st.floats(0.0, 1.0), st.floats(0.0, 20.0), st.floats(0.0, 3.0), st.floats(-0.5, 0.0),
       st.floats(0.0, 0.5))
def test_participation_audit(gamma, kappa, u, r_lo, r_hi):
    p = ScenarioParams(gamma=gamma, kappa=kappa, u=u, alpha=0.0, zeta=0.2, n_bar=50.0, b=0.5)
    rm = ReturnModel.two_point((r_lo, r_hi), (0.5, 0.5))
    rep = solve_p2(p, rm, RN, grid=GridSpec(delta_step=0.2, f_points=6, n_points=6))
    if rep.n_star > 0:
        samples = enumerate_returns(rm)
        v = vault_best_response_p2(rep.delta_star, p, samples, RN,
                                   GridSpec(delta_step=0.2, f_points=6, n_points=6))
        assert (v.n, v.f) == (rep.n_star, rep.f_star)
        assert v.participates
        n, f, dl = rep.n_star, rep.f_star, rep.delta_star
        d = attack_indicator(samples.values, n, f, dl, p)
        margin = f * (rep.b_price * p.b - dl) - gamma * np.sum(
            samples.weights * d * n * (1 + samples.values))
        assert u <= margin + 1e-9
    assert 0.0 <= rep.attack["probability"] <= 1.0

"""Independent pure-Python brute-force solvers used as test oracles."""

import math


def per_coin(f, n, delta, r, haircut=1.0):
    if f == 0:
        return 1.0
    return max(min(f, haircut * (n * (1 + r) - delta * f)) / f, 0.0)


def util_mean(kind, rho, xs, ps):
    mu = sum(p * x for p, x in zip(ps, xs))
    if kind == "risk_neutral":
        return mu
    if kind == "mean_variance":
        return mu - rho * sum(p * (x - mu) ** 2 for p, x in zip(ps, xs)) / 2
    if kind == "cara":
        return sum(p * -math.exp(-rho * x) for p, x in zip(ps, xs))
    raise ValueError(kind)


def linspace(a, b, k):
    # same point arithmetic as numpy.linspace: start + i * step, exact endpoint
    if k == 1:
        return [a]
    step = (b - a) / (k - 1)
    return [a + i * step for i in range(k - 1)] + [b]


def p1_enumerate(p, rs, ps, kind, rho, deltas, f_points):
    """Exhaustive (delta, F) search: vault argmax per delta, then governance argmax."""
    n = p.n_bar
    er = sum(q * r for q, r in zip(ps, rs))
    best = None
    for delta in deltas:
        vault = None
        for f in linspace(0.0, p.beta * n, f_points):
            b = util_mean(kind, rho, [per_coin(f, n, delta, r) for r in rs], ps)
            obj = n * er + f * (b * p.b - delta)
            if obj >= p.u and (vault is None or obj > vault[1] + 1e-12):
                vault = (f, obj)
        f = vault[0] if vault else 0.0
        gov = delta * f + p.kappa
        if best is None or gov > best[2] + 1e-12:
            best = (delta, f, gov)
    return best


def p2_enumerate(p, rs, ps, kind, rho, deltas, n_points, f_points):
    """Exhaustive (delta, N, F) search for the attack game."""
    best = None
    for delta in deltas:
        vault = None
        for f_i, f in enumerate(linspace(0.0, p.beta * p.n_bar, f_points)):
            for n_i, n in reversed(list(enumerate(linspace(0.0, p.n_bar, n_points)))):
                if f > p.beta * n * (1 + 1e-12):
                    continue
                d = [1.0 if p.gamma * n * (1 + r) > p.zeta * (delta * f + p.kappa) + p.alpha
                     else 0.0 for r in rs]
                xs = [per_coin(f, n, delta, r, 1 - p.gamma * di) for r, di in zip(rs, d)]
                b = util_mean(kind, rho, xs, ps)
                lev = f * (b * p.b - delta)
                obj = lev + sum(q * ((p.n_bar - n) * r + (1 - di) * n * r - di * n * (1 + r))
                                for q, r, di in zip(ps, rs, d))
                margin = lev - p.gamma * sum(q * di * n * (1 + r) for q, r, di in zip(ps, rs, d))
                if n > 0 and p.u > margin:
                    continue
                if vault is None or obj > vault[2] + 1e-12:
                    vault = (n, f, obj, sum(q * di for q, di in zip(ps, d)))
        gov = (delta * vault[1] + p.kappa) * (1 - vault[3])
        if best is None or gov > best[3] + 1e-12:
            best = (delta, vault[0], vault[1], gov)
    return best


def p3_prices(family, kappa, pressure, b_param):
    def gov(x_g, y_g, delta, f):
        return delta * f + kappa + pressure * (x_g + y_g)

    if family == "linear":
        def stbl(f, y_s):
            return b_param if f == 0 else min(b_param, y_s / f)
    else:
        def stbl(f, y_s):
            return b_param
    return gov, stbl


def _frac(hold, p1):
    if p1 > 0:
        return hold / p1
    return math.inf if hold > 0 else 0.0


def _gov_worth(hold, p1, delta, f):
    return hold + (hold * delta * f / p1 if p1 > 0 else 0.0)


def p3_nash_profiles(p, rs, ps, kind, rho, prices, deltas, points, bribes, tol=1e-9):
    """Every pure profile (delta, label, vault, holder) at which no agent gains by deviating.

    Vault points are (x_G, x_C, N, F, gamma_v); holder points (y_C, y_G, y_S, gamma_s).
    """
    gov_price, stbl_price = prices
    fr = linspace(0.0, 1.0, points)
    er = sum(q * r for q, r in zip(ps, rs))
    vaults = []
    for a in fr:
        x_g = a * p.x_bar
        x_c = max(p.x_bar - x_g, 0.0)
        for nf in fr:
            n = nf * x_c
            for ff in fr:
                for gv in bribes:
                    vaults.append((x_g, x_c, n, ff * p.beta * n, gv))
    holders = []
    for i, g in enumerate(fr):
        for j, s in enumerate(fr):
            if i + j < points:
                y_g, y_s = g * p.y_bar, s * p.y_bar
                for gs in bribes:
                    holders.append((max(p.y_bar - y_g - y_s, 0.0), y_g, y_s, gs))

    def joint_ok(x_g, y_g, p1):
        return not (_frac(x_g, p1) >= p.zeta and _frac(y_g, p1) >= p.zeta)

    def gov_options(delta, v, h):
        x_g, _, n, f, gv = v
        _, y_g, _, gs = h
        p1 = gov_price(x_g, y_g, delta, f)
        fv, fs = _frac(x_g, p1), _frac(y_g, p1)
        out = {}
        if fv < p.zeta and fs < p.zeta:
            out["n"] = p.epsilon * (delta * f + p1)
        if p.epsilon + fv >= p.zeta and fs < p.zeta:
            out["v"] = gv * (f - x_g) - p.alpha
        if p.epsilon + fs >= p.zeta and fv < p.zeta:
            out["s"] = gs * (n - y_g) - p.alpha
        return out

    def vault_value(delta, label, v, h):
        x_g, x_c, n, f, gv = v
        _, y_g, y_s, _ = h
        p1 = gov_price(x_g, y_g, delta, f)
        if not joint_ok(x_g, y_g, p1):
            return None
        stake = f * (stbl_price(f, y_s) * p.b - delta)
        if label == "n":
            stake += _gov_worth(x_g, p1, delta, f)
        elif label == "v":
            stake += (1 - gv) * (f - x_g)
        else:
            stake -= n
        if n > 0 and p.u > stake:
            return None
        return x_c * er + stake

    def holder_value(delta, label, v, h):
        x_g, _, n, f, _ = v
        y_c, y_g, y_s, gs = h
        b = stbl_price(f, y_s)
        p1 = gov_price(x_g, y_g, delta, f)
        if not joint_ok(x_g, y_g, p1):
            return None
        coins = y_s / b if y_s > 0 else 0.0
        xs = []
        for r in rs:
            x = y_c * r
            if label == "n":
                x += min(coins, max(n * (1 + r) - delta * f, 0.0)) + _gov_worth(y_g, p1, delta, f)
            elif label == "s":
                x += (1 - gs) * (n - y_g)
            xs.append(x)
        return util_mean(kind, rho, xs, ps)

    vault_best, holder_best, gov_best = {}, {}, {}
    found = []
    for delta in deltas:
        for label in "nvs":
            for h_i, h in enumerate(holders):
                vals = [vault_value(delta, label, v, h) for v in vaults]
                vault_best[(delta, label, h_i)] = max(x for x in vals if x is not None) \
                    if any(x is not None for x in vals) else None
    for delta in deltas:
        for label in "nvs":
            for v_i, v in enumerate(vaults):
                vals = [holder_value(delta, label, v, h) for h in holders]
                holder_best[(delta, label, v_i)] = max(x for x in vals if x is not None) \
                    if any(x is not None for x in vals) else None
    for v_i, v in enumerate(vaults):
        for h_i, h in enumerate(holders):
            best = None
            for delta in deltas:
                for val in gov_options(delta, v, h).values():
                    best = val if best is None else max(best, val)
            gov_best[(v_i, h_i)] = best

    for delta in deltas:
        for label in "nvs":
            for v_i, v in enumerate(vaults):
                for h_i, h in enumerate(holders):
                    opts = gov_options(delta, v, h)
                    if label not in opts or opts[label] < gov_best[(v_i, h_i)] - tol:
                        continue
                    vv = vault_value(delta, label, v, h)
                    if vv is None or vv < vault_best[(delta, label, h_i)] - tol:
                        continue
                    hv = holder_value(delta, label, v, h)
                    if hv is None or hv < holder_best[(delta, label, v_i)] - tol:
                        continue
                    found.append((delta, label, v, h))
    return found

"""Scenario files: TOML documents with unit-suffixed keys.

Every key carries its unit (``_usd``, ``_fraction``, ``_rate``, ``_per_usd``)
or is a plain count. Unknown keys are errors, so a typo cannot silently fall
back to a default. :func:`parse_scenario` collects every problem before
raising one :class:`ValidationError`.
"""

from __future__ import annotations

import itertools
import sys
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

import tomli_w

from .core import GridSpec, ReturnModel, ScenarioParams, ValidationError
from .miner_p4 import P4Config
from .portfolio_p3 import PRICE_MODELS, P3Grid
from .stochastics import DEFAULT_SAMPLES, SAMPLING_MODES
from .utility import UtilityFunction

PARAM_KEYS = {
    "beta": "beta_fraction",
    "kappa": "kappa_usd",
    "b": "b_rate",
    "u": "u_usd",
    "u_holder": "u_holder_usd",
    "zeta": "zeta_fraction",
    "gamma": "gamma_fraction",
    "alpha": "alpha_usd",
    "epsilon": "epsilon_fraction",
    "n_bar": "n_bar_usd",
    "x_bar": "x_bar_usd",
    "y_bar": "y_bar_usd",
    "r_discount": "r_discount_rate",
    "c": "c_usd",
    "delta_cost": "delta_cost_fraction",
    "r_free": "r_free_rate",
}
KEY_PARAMS = {v: k for k, v in PARAM_KEYS.items()}

P4_KEYS = {
    "y_s": "y_s_usd", "y_a": "y_a_usd", "inflow": "inflow_usd",
    "initial_supply": "initial_supply_usd", "r_max": "r_max_usd", "r_points": "r_points",
    "holding_points": "holding_points", "b_a": "b_a_usd",
}
P4_PRICE_KEYS = ("demand_coef", "issuance_coef", "spend_fraction", "confidence_coef")
REGION_KEYS = {"gamma": "gamma_fraction", "zeta": "zeta_fraction", "delta": "delta_fraction",
               "beta": "beta_fraction", "r": "r_rate"}
RHO_KEYS = ("cdp_csv", "prices_csv", "min_collateral_usd", "cutoff_timestamp", "eoa_only",
            "assume_reinvest", "r_free_annual_rate", "active_threshold", "snapshot_mode",
            "outlier_cap", "hist_bins")


@dataclass(frozen=True)
class Scenario:
    params: ScenarioParams = ScenarioParams()
    returns: ReturnModel = ReturnModel.deterministic(0.0)
    utility: UtilityFunction = UtilityFunction.risk_neutral()
    seed: int = 0
    samples: int = DEFAULT_SAMPLES
    mode: str = "auto"
    timing: str = "sequential"
    max_iterations: int = 200
    grid: GridSpec = GridSpec()
    p3_grid: P3Grid = P3Grid()
    price_model: str = "linear"
    price_options: dict = field(default_factory=dict)
    p4: P4Config = P4Config()
    p4_rounds: int = 50
    p4_price: dict = field(default_factory=dict)
    region: dict = field(default_factory=dict)
    rho: dict = field(default_factory=dict)
    sweep: dict = field(default_factory=dict)
    source: str | None = None

    def header(self) -> dict:
        """Reproducibility header embedded in every output."""
        return {
            "seed": self.seed,
            "samples": self.samples,
            "mode": self.mode,
            "grid": self.grid.describe(),
        }


def _num(v):
    return isinstance(v, (int, float)) and not isinstance(v, bool)


class _Reader:
    """Pops typed values from one TOML table and remembers every problem."""

    def __init__(self, table: dict, name: str, errors: list[str]):
        self.table = dict(table)
        self.name = name
        self.errors = errors

    def take(self, key, kind, default=None):
        if key not in self.table:
            return default
        v = self.table.pop(key)
        ok = {
            "float": _num(v),
            "int": isinstance(v, int) and not isinstance(v, bool),
            "bool": isinstance(v, bool),
            "str": isinstance(v, str),
            "floats": isinstance(v, list) and all(_num(x) for x in v),
        }[kind]
        if not ok:
            self.errors.append(f"[{self.name}] {key} must be of type {kind}")
            return default
        if kind == "float":
            return float(v)
        if kind == "floats":
            return tuple(float(x) for x in v)
        return v

    def take_range(self, key):
        """A list of numbers or ``{start, stop, num}`` (inclusive linspace)."""
        if key not in self.table:
            return None
        v = self.table[key]
        if isinstance(v, dict):
            self.table.pop(key)
            try:
                start, stop, num = float(v["start"]), float(v["stop"]), int(v["num"])
            except (KeyError, TypeError, ValueError):
                self.errors.append(f"[{self.name}] {key} range needs start, stop, num")
                return None
            if num < 1 or set(v) - {"start", "stop", "num"}:
                self.errors.append(f"[{self.name}] {key} range is malformed")
                return None
            return tuple(float(x) for x in np.linspace(start, stop, num))
        return self.take(key, "floats")

    def finish(self):
        for key in sorted(self.table):
            self.errors.append(f"[{self.name}] unknown key {key!r}")


def _table(doc: dict, name: str, errors: list[str]) -> dict:
    t = doc.get(name, {})
    if not isinstance(t, dict):
        errors.append(f"[{name}] must be a table")
        return {}
    return t


def params_from_table(table: dict, errors: list[str] | None = None) -> ScenarioParams:
    own = errors is None
    errors = [] if own else errors
    rd = _Reader(table, "params", errors)
    values = {}
    for name, key in PARAM_KEYS.items():
        v = rd.take(key, "float")
        if v is not None:
            values[name] = v
    rd.finish()
    params = ScenarioParams(**values)
    if own and errors:
        raise ValidationError(errors)
    return params


def params_to_table(params: ScenarioParams) -> dict:
    return {PARAM_KEYS[f.name]: float(getattr(params, f.name)) for f in fields(params)}


def dump_params(params: ScenarioParams) -> str:
    return tomli_w.dumps({"params": params_to_table(params)})


def load_params(text: str) -> ScenarioParams:
    return params_from_table(tomllib.loads(text).get("params", {}))


def _returns(table, errors) -> ReturnModel:
    rd = _Reader(table, "returns", errors)
    kind = rd.take("kind", "str", "deterministic")
    if kind == "deterministic":
        model = ReturnModel.deterministic(rd.take("value_fraction", "float", 0.0))
    elif kind == "two-point":
        model = ReturnModel.two_point(rd.take("values_fraction", "floats", ()),
                                      rd.take("probabilities", "floats", ()))
    elif kind == "lognormal":
        model = ReturnModel.lognormal(rd.take("log_mean", "float", 0.0),
                                      rd.take("log_sd", "float", 0.0))
    else:
        errors.append(f"[returns] unknown kind {kind!r}")
        model = ReturnModel.deterministic(0.0)
    rd.finish()
    return model


def _utility(table, errors) -> UtilityFunction:
    rd = _Reader(table, "utility", errors)
    kind = rd.take("kind", "str", "risk-neutral")
    if kind == "risk-neutral":
        u = UtilityFunction.risk_neutral()
    elif kind in ("cara", "mean-variance"):
        rho = rd.take("rho_per_usd", "float", 0.0)
        u = UtilityFunction.cara(rho) if kind == "cara" else UtilityFunction.mean_variance(rho)
    elif kind == "hara":
        u = UtilityFunction.hara(rd.take("a", "float", 1.0), rd.take("b_h", "float", 1.0),
                                 rd.take("gamma_u", "float", 0.5))
    else:
        errors.append(f"[utility] unknown kind {kind!r}")
        u = UtilityFunction.risk_neutral()
    rd.finish()
    return u


def parse_scenario(doc: dict, source: str | None = None) -> Scenario:
    """Build and fully validate a :class:`Scenario` from a parsed TOML document."""
    errors: list[str] = []
    known = {"params", "returns", "utility", "solver", "p3", "p4", "region", "rho", "sweep"}
    for key in sorted(set(doc) - known):
        errors.append(f"unknown table [{key}]")

    params = params_from_table(_table(doc, "params", errors), errors)
    returns = _returns(_table(doc, "returns", errors), errors)
    utility = _utility(_table(doc, "utility", errors), errors)

    rd = _Reader(_table(doc, "solver", errors), "solver", errors)
    seed = rd.take("seed", "int", 0)
    samples = rd.take("samples", "int", DEFAULT_SAMPLES)
    mode = rd.take("mode", "str", "auto")
    timing = rd.take("timing", "str", "sequential")
    max_iter = rd.take("max_iterations", "int", 200)
    deltas = rd.take_range("delta_values_fraction")
    grid = GridSpec(delta_step=rd.take("delta_step_fraction", "float", 0.01),
                    f_points=rd.take("f_points", "int", 51),
                    n_points=rd.take("n_points", "int", 21),
                    delta_values=deltas)
    rd.finish()
    if mode not in SAMPLING_MODES:
        errors.append(f"[solver] mode must be one of {SAMPLING_MODES}")
    if timing not in ("sequential", "concurrent"):
        errors.append("[solver] timing must be 'sequential' or 'concurrent'")
    if samples < 1:
        errors.append("[solver] samples must be >= 1")
    if max_iter < 1:
        errors.append("[solver] max_iterations must be >= 1")
    if deltas is not None and any(not 0 <= d < 1 for d in deltas):
        errors.append("[solver] delta values must lie in [0, 1)")

    rd = _Reader(_table(doc, "p3", errors), "p3", errors)
    price_model = rd.take("price_model", "str", "linear")
    price_options = {}
    for key, opt in (("pressure", "pressure"), ("b_max_usd", "b_max")):
        v = rd.take(key, "float")
        if v is not None:
            price_options[opt] = v
    base = P3Grid()
    p3_grid = P3Grid(
        delta_values=rd.take_range("delta_values_fraction") or base.delta_values,
        alloc_points=rd.take("alloc_points", "int", base.alloc_points),
        n_points=rd.take("n_points", "int", base.n_points),
        f_points=rd.take("f_points", "int", base.f_points),
        bribe_values=rd.take_range("bribe_values_fraction") or base.bribe_values,
        max_iterations=rd.take("max_iterations", "int", base.max_iterations),
        damping=rd.take("damping", "float", base.damping))
    rd.finish()
    if price_model not in PRICE_MODELS:
        errors.append(f"[p3] unknown price model {price_model!r}; known: {sorted(PRICE_MODELS)}")
    errors += [f"[p3] {e}" for e in p3_grid.problems()]

    rd = _Reader(_table(doc, "p4", errors), "p4", errors)
    rounds = rd.take("rounds", "int", 50)
    p4_values = {}
    for name, key in P4_KEYS.items():
        kind = "int" if key.endswith("points") else "float"
        v = rd.take(key, kind)
        if v is not None:
            p4_values[name] = v
    p4 = P4Config(**p4_values, count=samples)
    p4_price = {}
    for key in P4_PRICE_KEYS:
        v = rd.take(key, "float")
        if v is not None:
            p4_price[key] = v
    rd.finish()
    if rounds < 0:
        errors.append("[p4] rounds must be >= 0")
    errors += [f"[p4] {e}" for e in p4.problems()]

    rd = _Reader(_table(doc, "region", errors), "region", errors)
    region = {}
    for name, key in REGION_KEYS.items():
        v = rd.take_range(key)
        if v is not None:
            region[name] = v
    rd.finish()

    rd = _Reader(_table(doc, "rho", errors), "rho", errors)
    rho = {}
    kinds = {"cdp_csv": "str", "prices_csv": "str", "min_collateral_usd": "float",
             "cutoff_timestamp": "int", "eoa_only": "bool", "assume_reinvest": "bool",
             "r_free_annual_rate": "float", "active_threshold": "int", "snapshot_mode": "str",
             "outlier_cap": "float", "hist_bins": "int"}
    for key in RHO_KEYS:
        v = rd.take(key, kinds[key])
        if v is not None:
            rho[key] = v
    rd.finish()

    rd = _Reader(_table(doc, "sweep", errors), "sweep", errors)
    sweep = {}
    for key in sorted(rd.table):
        if key not in KEY_PARAMS:
            continue
        v = rd.take_range(key)
        if v is not None:
            if not v:
                errors.append(f"[sweep] {key} is empty")
            sweep[key] = v
    rd.finish()

    errors += params.problems() + returns.problems() + utility.problems() + grid.problems()
    if errors:
        raise ValidationError(errors)
    return Scenario(params, returns, utility, seed, samples, mode, timing, max_iter, grid,
                    p3_grid, price_model, price_options, p4, rounds, p4_price, region, rho,
                    sweep, source)


def read_scenario(path) -> Scenario:
    """Read and parse a scenario file.

    ``OSError`` propagates for unreadable files; malformed TOML becomes a
    :class:`ValidationError`.
    """
    data = Path(path).read_bytes()
    try:
        doc = tomllib.loads(data.decode("utf-8"))
    except (tomllib.TOMLDecodeError, UnicodeDecodeError) as exc:
        raise ValidationError([f"malformed scenario file: {exc}"]) from None
    return parse_scenario(doc, str(path))


def expand_sweep(scenario: Scenario) -> list[tuple[dict, Scenario]]:
    """Cells of the sweep block in lexicographic order of the sorted keys.

    Without a sweep block the scenario itself is the only cell.
    """
    if not scenario.sweep:
        return [({}, scenario)]
    keys = sorted(scenario.sweep)
    cells = []
    errors = []
    for combo in itertools.product(*(scenario.sweep[k] for k in keys)):
        label = dict(zip(keys, combo))
        params = scenario.params.replace(**{KEY_PARAMS[k]: v for k, v in label.items()})
        errors += [f"sweep cell {label}: {e}" for e in params.problems()]
        cells.append((label, replace(scenario, params=params, sweep={})))
    if errors:
        raise ValidationError(errors)
    return cells

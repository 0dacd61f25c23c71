"""Capital-structure games and risk-aversion estimation for non-custodial stablecoins."""

__version__ = "0.1.0"

from .core import (EquilibriumReport, GovTokenPath, GridSpec, ReturnModel, ScenarioParams,
                   ValidationError, validate)
from .stochastics import (SampleSet, draw_returns, enumerate_returns, expected_utility,
                          expected_value, sample_returns)
from .utility import UtilityFunction, hara_utility

__all__ = [
    "EquilibriumReport", "GovTokenPath", "GridSpec", "ReturnModel", "ScenarioParams",
    "ValidationError", "validate", "SampleSet", "draw_returns", "enumerate_returns",
    "expected_utility", "expected_value", "sample_returns", "UtilityFunction", "hara_utility",
]

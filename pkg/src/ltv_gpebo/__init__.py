"""Adaptive state observer for nonlinear time-varying SISO plants with
unknown constant parameters, built on output-driven filters and
forgetting-factor least squares."""

from .estimator import EstimatorConfig, EstimatorState, estimator_deriv, is_pe, pe_gram
from .exprs import eval_expr, parse_expr
from .gpebo import FilterBankState, RegressionSample, a0_at, filter_deriv, reconstruct_state, regression_sample
from .observer import ObserverRun, SignalRecord, Trace, error_series, run_observer
from .plant import SystemDefinition, TrueParameters, output, benchmark_system, plant_deriv, simulate_truth

__version__ = "0.1.0"

"""Simulate recommenders replaying user arrivals and measure exposure inequality."""

from .errors import RecIneqError
from .experiment import ExperimentSpec, run_experiment
from .ingest import DatasetConfig, derive_gauge_set, filter_users, load_jester_csv, split_users
from .metrics import count_mean_regression, gini, gini_series, popularity_histogram
from .simulator import Mode, SimulationConfig, SimulationLog, run_dynamic, run_static
from .synthetic import generate_synthetic
from .types import GaugeSet, RankedRecommendation, RatingMatrix, UserProfile, validate_matrix

__version__ = "0.1.0"

__all__ = [
    "DatasetConfig", "ExperimentSpec", "GaugeSet", "Mode", "RankedRecommendation",
    "RatingMatrix", "RecIneqError", "SimulationConfig", "SimulationLog", "UserProfile",
    "count_mean_regression", "derive_gauge_set", "filter_users", "generate_synthetic",
    "gini", "gini_series", "load_jester_csv", "popularity_histogram", "run_dynamic",
    "run_experiment", "run_static", "split_users", "validate_matrix",
]

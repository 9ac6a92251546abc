"""Mobility-trace uniqueness measurement and re-identification toolkit."""

__version__ = "0.1.0"

from .geo import (
    EARTH_RADIUS_KM,
    GpsPoint,
    TemporalScale,
    haversine_km,
    initial_bearing_deg,
    spatiotemporal_distance,
)
from .store import Dataset, ParseError, Trajectory, filter_dataset, point_key
from .coarsen import CoarseningSpec, coarsen_time, k_anonymity_of, truncate_resolution
from .motion import MotionSample, quantize_features, weighted_direction_deg, windowed_features
from .uniqueness import (
    SampleSet,
    UniquenessReport,
    build_point_index,
    movement_uniqueness,
    sample_nested_subsets,
    uniqueness,
    user_count_sweep,
)
from .classifier import (
    DEFAULT_TAU_GRID,
    AccuracyResult,
    RankedMatch,
    TauTuneResult,
    accuracy_experiment,
    classify,
    distance_to_trace,
    trace_reduction_experiment,
    tune_tau,
)
from .separability import SeparabilityReport, agsi, gsi, separability_cdf
from .synth import SynthSpec, generate

__all__ = [
    "EARTH_RADIUS_KM",
    "GpsPoint",
    "TemporalScale",
    "haversine_km",
    "initial_bearing_deg",
    "spatiotemporal_distance",
    "Dataset",
    "Trajectory",
    "ParseError",
    "filter_dataset",
    "point_key",
    "CoarseningSpec",
    "coarsen_time",
    "k_anonymity_of",
    "truncate_resolution",
    "MotionSample",
    "quantize_features",
    "weighted_direction_deg",
    "windowed_features",
    "SampleSet",
    "UniquenessReport",
    "build_point_index",
    "movement_uniqueness",
    "sample_nested_subsets",
    "uniqueness",
    "user_count_sweep",
    "DEFAULT_TAU_GRID",
    "AccuracyResult",
    "RankedMatch",
    "TauTuneResult",
    "accuracy_experiment",
    "classify",
    "distance_to_trace",
    "trace_reduction_experiment",
    "tune_tau",
    "SeparabilityReport",
    "agsi",
    "gsi",
    "separability_cdf",
    "SynthSpec",
    "generate",
]

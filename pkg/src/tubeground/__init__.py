"""Weakly supervised spatio-temporal grounding over precomputed detections.

The package links detections into tubelets, cleans their labels, filters
them against the query subject, builds training curricula, selects the
queried tubelet at inference time and scores the result.
"""
from .core import (
    BBox,
    ConfigurationError,
    DataError,
    Detection,
    GroundTruthAnnotation,
    InvalidSampleError,
    QueryRecord,
    SubActionPhrase,
    TemporalSpan,
    TubegroundError,
    Tubelet,
)
from .config import PipelineConfig
from .pipeline import PipelineInputs, run_pipeline

__version__ = "0.1.0"

__all__ = [
    "BBox",
    "ConfigurationError",
    "DataError",
    "Detection",
    "GroundTruthAnnotation",
    "InvalidSampleError",
    "PipelineConfig",
    "PipelineInputs",
    "QueryRecord",
    "SubActionPhrase",
    "TemporalSpan",
    "TubegroundError",
    "Tubelet",
    "run_pipeline",
]

"""Core statistical modules."""

from adaglr.core.data import ColumnSchema, Dataset
from adaglr.core.nullfit import NullModelSpec, fit_null_model
from adaglr.core.dimred import ProjectionConfig, estimate_projection
from adaglr.core.glrtest import TestConfig, TestReport, Variant, run_test

__all__ = [
    "ColumnSchema",
    "Dataset",
    "NullModelSpec",
    "fit_null_model",
    "ProjectionConfig",
    "estimate_projection",
    "TestConfig",
    "TestReport",
    "Variant",
    "run_test",
]

"""Input validation helpers shared by the estimators and the functional API."""

from __future__ import annotations

import numbers
from typing import Sequence

import numpy as np

from .trees import TreeShape


def check_probability(p, name: str = "q", upper_open: bool = False) -> float:
    if not isinstance(p, numbers.Real) or isinstance(p, bool):
        raise TypeError(f"{name} must be a real number, got {type(p).__name__}")
    p = float(p)
    hi_ok = p < 1.0 if upper_open else p <= 1.0
    if not (p >= 0.0 and hi_ok):
        bound = "[0, 1)" if upper_open else "[0, 1]"
        raise ValueError(f"{name} must lie in {bound}, got {p}")
    return p


def check_shape(shape, kind: str | None = None) -> TreeShape:
    if isinstance(shape, dict):
        shape = TreeShape.from_dict(shape)
    if not isinstance(shape, TreeShape):
        raise TypeError(f"expected a TreeShape, got {type(shape).__name__}")
    if kind is not None and shape.kind != kind:
        raise ValueError(f"this operation needs a {kind} shape, got {shape}")
    return shape


def check_labels(labels: Sequence[int], n: int | None = None) -> np.ndarray:
    arr = np.asarray(labels)
    if arr.ndim != 1:
        raise ValueError(f"labels must be one-dimensional, got shape {arr.shape}")
    if n is not None and arr.size != n:
        raise ValueError(f"expected {n} labels, got {arr.size}")
    if arr.size and not np.isin(arr, (0, 1)).all():
        raise ValueError("labels must be binary")
    return arr.astype(np.int8)


def check_rng(rng) -> np.random.Generator:
    """Accept a Generator, an int seed or None."""
    if isinstance(rng, np.random.Generator):
        return rng
    if rng is None or isinstance(rng, (numbers.Integral, np.random.SeedSequence)):
        return np.random.default_rng(rng)
    raise TypeError(f"cannot build a random generator from {type(rng).__name__}")


def check_traces(traces) -> list:
    traces = list(traces)
    if not traces:
        raise ValueError("at least one trace is required")
    return traces

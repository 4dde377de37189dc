"""Desk-scale string trace reconstruction and the censored-channel wrapper.

Any callable ``recon(traces, m, q, conditioned_nonempty=False) -> bits`` is a
string reconstructor; the tree algorithms take one as a dependency.
"""

from __future__ import annotations

import math
from typing import Callable, Protocol, Sequence

import numpy as np

from ._validation import check_probability, check_rng, check_traces
from .channel import EMPTY, pad_traces
from .exceptions import NoUsableTraces
from .spider_recon import _TraceReconstructor, best_match
from .trees import TreeShape

DEFAULT_CAP = 16


class StringReconstructor(Protocol):
    def __call__(self, traces: Sequence[Sequence[int]], m: int, q: float, conditioned_nonempty: bool = False) -> list[int]: ...


def string_mean_matrix(m: int, q: float) -> np.ndarray:
    """``M[l, j] = (1-q) C(l, j) (1-q)^j q^(l-j)``: bit ``l`` lands at position ``j``."""
    M = np.zeros((m, m))
    for ell in range(m):
        for j in range(ell + 1):
            M[ell, j] = (1 - q) * math.comb(ell, j) * (1 - q) ** j * q ** (ell - j)
    return M


def exhaustive_best_match_string(
    traces: Sequence[Sequence[int]],
    m: int,
    q: float,
    conditioned_nonempty: bool = False,
    rng=None,
    cap: int = DEFAULT_CAP,
) -> list[int]:
    """Best match over all ``2^m`` strings (a one-path spider).

    With ``conditioned_nonempty`` the traces are taken to be conditioned on
    keeping at least one bit, which rescales the expected means.
    """
    q = check_probability(q, "q", upper_open=True)
    traces = check_traces(traces)
    if m > cap:
        raise ValueError(f"string length {m} exceeds the exhaustive-search cap {cap}")
    if m == 0:
        return []
    U = pad_traces(traces, m)
    res = best_match(U, TreeShape.spider(m, m), q, rng=check_rng(0 if rng is None else rng), conditioned_nonempty=conditioned_nonempty)
    return [int(b) for b in res.labels]


def censored_reconstruct(
    censored_traces,
    m: int,
    q: float,
    gamma: float,
    inner: Callable | None = None,
) -> list[int]:
    """Drop empty traces (censored or fully deleted) and delegate to ``inner``.

    The surviving traces follow the string channel conditioned on being
    nonempty, so ``inner`` is told so.
    """
    check_probability(gamma, "gamma")
    inner = inner or exhaustive_best_match_string
    kept = [list(t) for t in censored_traces if t is not EMPTY and t is not None and len(t) > 0]
    if not kept:
        raise NoUsableTraces("all traces are empty")
    return list(inner(kept, m, q, conditioned_nonempty=True))


def censoring_budget(T: int, q: float, m: int, gamma: float, epsilon: float = 0.0) -> int:
    """Trace budget after censoring: ``(1+eps) T / ((1-q^m)(1-gamma))``, rounded up."""
    value = (1 + epsilon) * T / ((1 - q**m) * (1 - gamma))
    # round away float noise before taking the ceiling
    return math.ceil(round(value, 9))


class ExhaustiveStringReconstructor(_TraceReconstructor):
    """Estimator wrapper around :func:`exhaustive_best_match_string`.

    Instances are also string reconstructors: ``recon(traces, m, q)``.
    """

    def __init__(self, m: int = 8, q: float = 0.1, cap: int = DEFAULT_CAP, conditioned_nonempty: bool = False, random_state=None):
        self.m = m
        self.q = q
        self.cap = cap
        self.conditioned_nonempty = conditioned_nonempty
        self.random_state = random_state

    def fit(self, traces, y=None):
        self.labels_ = np.asarray(self(traces, self.m, self.q, self.conditioned_nonempty), dtype=np.int8)
        return self

    def __call__(self, traces, m, q, conditioned_nonempty=False):
        rng = 0 if self.random_state is None else self.random_state
        return exhaustive_best_match_string(traces, m, q, conditioned_nonempty, rng=rng, cap=self.cap)

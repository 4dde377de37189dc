"""Mean-based reconstruction of spiders and the two reductions to string reconstruction.

A trace of an ``(n, d)``-spider is normalized to ``n/d`` paths of depth ``d``
and read in DFS order, giving a length-``n`` vector ``b``.  Its expectation
is linear in the labels: ``E[b] = a @ M`` with ``M`` from
:func:`expected_mean_matrix`.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Iterable, Sequence

import numpy as np
from sklearn.base import BaseEstimator

from ._validation import check_probability, check_rng, check_shape, check_traces
from .channel import EMPTY, spider_paths, spider_trace_vector
from .exceptions import NoUsableTraces
from .trees import Node, TreeShape

# Beyond this size binomial weights are assembled in log space.
EXACT_BINOMIAL_LIMIT = 50


def _binomial_weights(size: int, p: float) -> np.ndarray:
    """``B[a, b] = C(a, b) p^b (1-p)^(a-b)`` for ``0 <= b <= a < size``."""
    out = np.zeros((size, size))
    if size <= EXACT_BINOMIAL_LIMIT or p in (0.0, 1.0):
        for a in range(size):
            for b in range(a + 1):
                out[a, b] = math.comb(a, b) * p**b * (1.0 - p) ** (a - b)
        return out
    lp, lq = math.log(p), math.log1p(-p)
    for a in range(size):
        for b in range(a + 1):
            logc = math.lgamma(a + 1) - math.lgamma(b + 1) - math.lgamma(a - b + 1)
            out[a, b] = math.exp(logc + b * lp + (a - b) * lq)
    return out


@lru_cache(maxsize=64)
def _mean_matrix(n: int, d: int, q: float) -> np.ndarray:
    depth = _binomial_weights(d, 1.0 - q)
    paths = _binomial_weights(n // d, 1.0 - q**d)
    M = (1.0 - q) * np.kron(paths, depth)
    M.setflags(write=False)
    return M


def expected_mean_matrix(shape: TreeShape, q: float) -> np.ndarray:
    """``(n, n)`` matrix with ``E[b_j] = sum_l a_l M[l, j]``.

    Label ``l`` sits at depth ``r_l = l mod d`` of path ``s_l = l // d``.  It
    survives with probability ``1-q``, lands at depth ``r_j`` when exactly
    ``r_j`` of its ``r_l`` path ancestors survive, and lands on path ``s_j``
    when exactly ``s_j`` of the ``s_l`` earlier paths keep a node.
    """
    shape = check_shape(shape, "spider")
    q = check_probability(q, "q", upper_open=True)
    return _mean_matrix(shape.n, shape.d, q)


def expected_trace_mean(labels, shape: TreeShape, q: float, conditioned_nonempty: bool = False) -> np.ndarray:
    """Coordinate-wise expectation of the normalized trace vector.

    ``labels`` may be any real vector (differences of labelings included).
    With ``conditioned_nonempty`` the expectation is taken over traces that
    keep at least one node.
    """
    shape = check_shape(shape, "spider")
    a = np.asarray(labels, dtype=np.float64)
    if a.shape != (shape.n,):
        raise ValueError(f"expected {shape.n} labels, got shape {a.shape}")
    E = a @ expected_mean_matrix(shape, q)
    if conditioned_nonempty:
        E = E / (1.0 - q**shape.n)
    return E


# ---------------------------------------------------------------------------
# generating functions


@dataclass(frozen=True)
class GeneratingFunctionEval:
    w: complex | np.ndarray
    A_value: complex | np.ndarray
    A_tilde_value: complex | np.ndarray | None
    l_star: int | None


def first_nonzero(labels) -> int | None:
    nz = np.flatnonzero(np.asarray(labels))
    return int(nz[0]) if nz.size else None


def eval_generating(labels, shape: TreeShape, q: float, w) -> GeneratingFunctionEval:
    """Expected generating function ``A(w)`` and its factored form at ``w``.

    ``w`` may be a scalar or an array of complex points.  For all-zero labels
    the factored form is undefined and ``A_tilde_value``/``l_star`` are None.
    """
    shape = check_shape(shape, "spider")
    q = check_probability(q, "q", upper_open=True)
    a = np.asarray(labels, dtype=np.float64)
    if a.shape != (shape.n,):
        raise ValueError(f"expected {shape.n} labels, got shape {a.shape}")
    d = shape.d
    w_arr = np.asarray(w, dtype=np.complex128)
    inner = q + (1 - q) * w_arr
    outer = q**d + (1 - q**d) * w_arr**d
    idx = np.arange(shape.n)
    r, s = idx % d, idx // d

    def total(shift: int):
        acc = np.zeros(w_arr.shape, dtype=np.complex128)
        for ell in np.flatnonzero(a):
            acc = acc + a[ell] * inner ** r[ell] * outer ** (s[ell] - shift)
        return (1 - q) * acc

    A = total(0)
    l_star = first_nonzero(a)
    A_tilde = None if l_star is None else total(l_star // d)
    if w_arr.ndim == 0:
        A = complex(A)
        A_tilde = None if A_tilde is None else complex(A_tilde)
    return GeneratingFunctionEval(w=w, A_value=A, A_tilde_value=A_tilde, l_star=l_star)


def choose_L(n: int, d: int, q: float, C: float = 1.0) -> int:
    """Arc parameter ``max(ceil((4 pi^2 n q^d / C)^(1/3)), 20)``."""
    if C <= 0:
        raise ValueError(f"C must be positive, got {C}")
    return max(math.ceil((4 * math.pi**2 * n * q**d / C) ** (1.0 / 3.0)), 20)


def arc_points(L: int, count: int) -> np.ndarray:
    """``count`` evenly spaced points of the arc ``{e^{i theta}: |theta| <= pi/L}``."""
    if L < 20:
        raise ValueError(f"L must be at least 20, got {L}")
    theta = np.linspace(-math.pi / L, math.pi / L, count)
    return np.exp(1j * theta)


# ---------------------------------------------------------------------------
# best match


def distinguishing_index(labels1, labels2, shape: TreeShape, q: float) -> int:
    """Coordinate with the largest expected-mean gap (smallest index on ties)."""
    a1 = np.asarray(labels1, dtype=np.float64)
    a2 = np.asarray(labels2, dtype=np.float64)
    if np.array_equal(a1, a2):
        raise ValueError("labelings are identical; no distinguishing index")
    gap = np.abs(expected_trace_mean(a1 - a2, shape, q))
    return int(np.argmax(gap))


@dataclass
class MatchResult:
    labels: np.ndarray
    index: int
    fallback: bool = False
    qualifiers: list[int] = field(default_factory=list)


def all_labelings(n: int) -> np.ndarray:
    """All ``2^n`` binary vectors in lexicographic order."""
    if n > 24:
        raise ValueError(f"refusing to enumerate 2^{n} labelings")
    codes = np.arange(2**n, dtype=np.int64)
    return ((codes[:, None] >> np.arange(n - 1, -1, -1)) & 1).astype(np.int8)


def best_match_means(ubar: np.ndarray, cand_means: np.ndarray, rng=None) -> tuple[int | None, list[int]]:
    """Index of the best match among candidates with expected means ``cand_means``.

    Candidate ``y`` beats ``x`` when it is strictly closer to ``ubar`` at
    their distinguishing index.  The best match is beaten by nobody.
    Returns ``(index or None, qualifier indices)``; the smallest qualifying
    index wins.
    """
    E = np.asarray(cand_means, dtype=np.float64)
    N = E.shape[0]
    dist = np.abs(E - ubar)
    alive = np.ones(N, dtype=bool)
    rows = np.arange(N)
    qualifiers = []
    for x in np.argsort(dist.max(axis=1), kind="stable"):
        if not alive[x]:
            continue
        j = np.abs(E - E[x]).argmax(axis=1)
        dx = dist[x, j]
        dy = dist[rows, j]
        closer = dy < dx
        closer[x] = False
        alive &= ~(dy > dx)
        if closer.any():
            alive[x] = False
        else:
            qualifiers.append(int(x))
    qualifiers.sort()
    return (qualifiers[0] if qualifiers else None), qualifiers


def _trace_matrix(traces, shape: TreeShape) -> np.ndarray:
    if isinstance(traces, np.ndarray):
        U = np.asarray(traces, dtype=np.float64)
        if U.ndim != 2 or U.shape[1] != shape.n:
            raise ValueError(f"trace matrix must have shape (T, {shape.n}), got {U.shape}")
        return U
    traces = check_traces(traces)
    return np.stack([np.asarray(t, dtype=np.float64) if not isinstance(t, Node) else spider_trace_vector(t, shape) for t in traces])


def best_match(
    traces,
    shape: TreeShape,
    q: float,
    candidates: Iterable[Sequence[int]] | None = None,
    rng=None,
    conditioned_nonempty: bool = False,
) -> MatchResult:
    """Best-match labeling for spider traces.

    ``traces`` are normalized trace vectors (a ``(T, n)`` array) or trace
    trees.  ``candidates`` defaults to every labeling in lexicographic order.
    When no candidate beats all others a uniformly random candidate is
    returned and ``fallback`` is set.
    """
    shape = check_shape(shape, "spider")
    q = check_probability(q, "q", upper_open=True)
    U = _trace_matrix(traces, shape)
    if U.shape[0] == 0:
        raise ValueError("at least one trace is required")
    C = all_labelings(shape.n) if candidates is None else np.asarray(list(candidates), dtype=np.int8)
    if C.ndim != 2 or C.shape[0] == 0 or C.shape[1] != shape.n:
        raise ValueError(f"candidates must be a nonempty collection of length-{shape.n} labelings")
    E = C @ expected_mean_matrix(shape, q)
    if conditioned_nonempty:
        E = E / (1.0 - q**shape.n)
    idx, qual = best_match_means(U.mean(axis=0), E)
    if idx is None:
        # every candidate lost to some other one
        rng = check_rng(0 if rng is None else rng)
        idx = int(rng.integers(C.shape[0]))
        return MatchResult(labels=C[idx].copy(), index=idx, fallback=True)
    if candidates is not None and len(qual) > 1:
        idx = min(qual, key=lambda i: tuple(C[i]))
    return MatchResult(labels=C[idx].copy(), index=idx, qualifiers=qual)


def reconstruct_spider_meanbased(traces, shape: TreeShape, q: float, rng=None) -> np.ndarray:
    return best_match(traces, shape, q, rng=rng).labels


# ---------------------------------------------------------------------------
# reductions to string reconstruction


def _default_string_recon():
    from .string_recon import exhaustive_best_match_string

    return exhaustive_best_match_string


def _nonempty(traces):
    return [t for t in traces if t is not EMPTY and t is not None]


def spider_keep_mask(traces, shape: TreeShape) -> np.ndarray:
    """Which traces kept at least one node on every path."""
    return np.array([len(spider_paths(t)) == shape.n_paths for t in traces], dtype=bool)


def reconstruct_spider_large_depth(traces, shape: TreeShape, q: float, string_recon: Callable | None = None) -> np.ndarray:
    """Per-path string reconstruction from traces that kept every path.

    Discarding the other traces is a censoring of each path's string channel,
    and the kept path strings are nonempty by construction.
    """
    shape = check_shape(shape, "spider")
    q = check_probability(q, "q", upper_open=True)
    traces = _nonempty(check_traces(traces))
    if q > 0 and shape.d < math.log(shape.n) / math.log(1 / q):
        warnings.warn(f"depth {shape.d} is below log_(1/q) n; the large-depth reduction is not in its intended regime", stacklevel=2)
    recon = string_recon or _default_string_recon()
    kept = [spider_paths(t) for t in traces if len(t.children) == shape.n_paths]
    if not kept:
        raise NoUsableTraces("no trace contains a node from every path")
    out = []
    for p in range(shape.n_paths):
        out.extend(recon([paths[p] for paths in kept], shape.d, q, conditioned_nonempty=True))
    return np.asarray(out, dtype=np.int8)


def reconstruct_spider_rows(traces, shape: TreeShape, q: float, string_recon: Callable | None = None) -> np.ndarray:
    """Row-wise string reconstruction from fully intact paths.

    The nodes at depth ``r`` of the intact paths of a trace form a string
    trace of row ``r`` with deletion probability ``1 - (1-q)^d``.
    """
    shape = check_shape(shape, "spider")
    q = check_probability(q, "q", upper_open=True)
    traces = _nonempty(check_traces(traces))
    if not traces:
        raise NoUsableTraces("every trace was censored")
    recon = string_recon or _default_string_recon()
    q_row = 1.0 - (1.0 - q) ** shape.d
    intact = [[p for p in spider_paths(t) if len(p) == shape.d] for t in traces]
    rows = np.zeros((shape.d, shape.n_paths), dtype=np.int8)
    for r in range(shape.d):
        rows[r] = recon([[p[r] for p in paths] for paths in intact], shape.n_paths, q_row)
    return rows.T.reshape(-1)


# ---------------------------------------------------------------------------
# estimators


class _TraceReconstructor(BaseEstimator):
    """Shared fit/predict plumbing: ``fit(traces)`` learns ``labels_``."""

    def predict(self, X=None) -> np.ndarray:
        if not hasattr(self, "labels_"):
            raise RuntimeError(f"{type(self).__name__} is not fitted")
        return self.labels_

    def fit_predict(self, traces, y=None) -> np.ndarray:
        return self.fit(traces).predict()


class SpiderMeanBasedReconstructor(_TraceReconstructor):
    """Exhaustive best-match reconstruction of an ``(n, d)``-spider."""

    def __init__(self, n: int = 9, d: int = 3, q: float = 0.2, random_state=None):
        self.n = n
        self.d = d
        self.q = q
        self.random_state = random_state

    def fit(self, traces, y=None):
        shape = TreeShape.spider(self.n, self.d)
        res = best_match(traces, shape, self.q, rng=check_rng(self.random_state))
        self.labels_ = res.labels
        self.fallback_ = res.fallback
        return self


class SpiderLargeDepthReconstructor(_TraceReconstructor):
    def __init__(self, n: int = 16, d: int = 8, q: float = 0.5, string_recon=None):
        self.n = n
        self.d = d
        self.q = q
        self.string_recon = string_recon

    def fit(self, traces, y=None):
        shape = TreeShape.spider(self.n, self.d)
        traces = _nonempty(check_traces(traces))
        self.keep_rate_ = float(spider_keep_mask(traces, shape).mean()) if traces else 0.0
        self.labels_ = reconstruct_spider_large_depth(traces, shape, self.q, self.string_recon)
        return self


class SpiderRowReconstructor(_TraceReconstructor):
    def __init__(self, n: int = 12, d: int = 2, q: float = 0.2, string_recon=None):
        self.n = n
        self.d = d
        self.q = q
        self.string_recon = string_recon

    def fit(self, traces, y=None):
        shape = TreeShape.spider(self.n, self.d)
        self.labels_ = reconstruct_spider_rows(traces, shape, self.q, self.string_recon)
        return self


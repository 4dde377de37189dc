"""Reconstruction of complete k-ary trees under Left-Propagation deletions.

Large degree: every trace keeps the full depth-(d-1) skeleton, so the labels
read along each H-subtree form a string trace of that subtree's labels.
Any degree: a single trace whose G-subtree is defined copies H exactly.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from ._validation import check_probability, check_shape, check_traces
from .exceptions import NoCaterpillarTrace, PerpEncountered
from .spider_recon import _TraceReconstructor
from .trace_analysis import subtree_labels, trace_G, trace_P
from .trees import Node, TreeShape, canonical_H, covering_indices, depth_of, level, psi, tree_labels


def extract_s(trace: Node, shape: TreeShape, j: int) -> list[int] | None:
    """Labels of ``v_{t_i}..v_{d-1}`` on the route to ``j`` followed by the children of ``v_{d-1}``.

    ``i = psi(j)`` and ``t_i`` is its depth.  None when the route is undefined.
    """
    shape = check_shape(shape, "kary")
    path = trace_P(trace, shape, j)
    if path is None:
        return None
    t_i = depth_of(shape, psi(shape, j))
    return [v.label for v in path[t_i:]] + [c.label for c in path[-1].children]


def _default_string_recon():
    from .string_recon import exhaustive_best_match_string

    return exhaustive_best_match_string


def reconstruct_lp_large(traces, shape: TreeShape, q: float, string_recon: Callable | None = None) -> np.ndarray:
    """Large-degree Left-Propagation reconstruction through string reconstruction.

    Stops with :class:`PerpEncountered` if any trace lacks a route to some
    depth-(d-1) node.  The extracted strings are forwarded whatever their
    length and are treated as conditioned on being nonempty.
    """
    shape = check_shape(shape, "kary")
    q = check_probability(q, "q", upper_open=True)
    traces = check_traces(traces)
    recon = string_recon or _default_string_recon()
    labels = np.full(shape.n, -1, dtype=np.int8)
    if shape.d == 1 or shape.k == 1:
        # a star or a path: the trace is itself a string trace of all labels
        labels[:] = recon([tree_labels(t) for t in traces], shape.n, q)
        return labels
    columns = level(shape, shape.d - 1)
    strings: dict[int, list[list[int]]] = {j: [] for j in columns}
    for t, trace in enumerate(traces):
        for j in columns:
            s = extract_s(trace, shape, j)
            if s is None:
                raise PerpEncountered(t, j)
            strings[j].append(s)
    for j in columns:
        H = canonical_H(shape, psi(shape, j))
        labels[H] = recon(strings[j], len(H), q, conditioned_nonempty=True)
    return labels


def skeleton_intact(trace: Node, shape: TreeShape) -> bool:
    """Whether every depth-(d-1) node has a defined route (all of P_Y(j) defined)."""
    if shape.d == 1:
        return True
    return all(trace_P(trace, shape, j) is not None for j in level(shape, shape.d - 1))


def reconstruct_lp_small(traces, shape: TreeShape, q: float) -> np.ndarray:
    """Copy H_X(i) from the first trace whose G-subtree for ``i`` is defined."""
    shape = check_shape(shape, "kary")
    check_probability(q, "q", upper_open=True)
    traces = check_traces(traces)
    labels = np.full(shape.n, -1, dtype=np.int8)
    for i in covering_indices(shape):
        t_i = depth_of(shape, i)
        for y in traces:
            G = trace_G(y, shape, i)
            if G is not None:
                labels[canonical_H(shape, i)] = subtree_labels(G)[t_i - 1 :]
                break
        else:
            raise NoCaterpillarTrace(i)
    return labels


class LPLargeReconstructor(_TraceReconstructor):
    def __init__(self, k: int = 8, d: int = 2, q: float = 0.1, string_recon=None):
        self.k = k
        self.d = d
        self.q = q
        self.string_recon = string_recon

    def fit(self, traces, y=None):
        shape = TreeShape.kary(self.k, self.d)
        self.labels_ = reconstruct_lp_large(traces, shape, self.q, self.string_recon)
        return self


class LPSmallReconstructor(_TraceReconstructor):
    def __init__(self, k: int = 2, d: int = 4, q: float = 0.1):
        self.k = k
        self.d = d
        self.q = q

    def fit(self, traces, y=None):
        shape = TreeShape.kary(self.k, self.d)
        self.labels_ = reconstruct_lp_small(traces, shape, self.q)
        return self

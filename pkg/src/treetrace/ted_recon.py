"""Reconstruction of complete k-ary trees under TED deletions.

Two algorithms:

* large degree: locate each surviving root-to-leaf path's origin from the
  sizes of neighbouring subtrees, bucket traces by origin, copy path labels
  and reconstruct each leaf row as a string;
* any degree: majority vote over traces that are s-stable for each covering
  index.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from ._validation import check_probability, check_shape, check_traces
from .exceptions import EmptyBucket, NoStableTraces
from .spider_recon import _TraceReconstructor
from .trace_analysis import is_s_stable, subtree_labels, trace_G
from .trees import (
    Node,
    TreeShape,
    canonical_H,
    canonical_P,
    children_of,
    covering_indices,
    depth_of,
    level,
    level_offset,
    tree_labels,
)


def alpha_hat(alpha: float, scale: float) -> int:
    """The integer ``a`` with ``a - 1/2 <= alpha/scale < a + 1/2``."""
    if scale <= 0:
        raise ValueError(f"scale must be positive, got {scale}")
    return math.floor(alpha / scale + 0.5)


def level_scale(k: int, q: float, ell: int) -> float:
    """Expected number of surviving descendants (self included) of a height-(ell+1) node."""
    return (1 - q) * sum(k**h for h in range(1, ell + 2))


@dataclass(frozen=True)
class PathEstimate:
    digits: tuple[int, ...]  # a_0, a_1, ..., a_{d-2}
    w_hat: int
    path: tuple[Node, ...]

    @property
    def node(self) -> Node:
        return self.path[-1]


def _full_paths(trace: Node, d: int) -> list[list[Node]]:
    """Root-to-``v`` paths for every depth-(d-1) node ``v`` that has a child, left to right."""
    out = []
    stack = [(trace, [trace])]
    while stack:
        node, path = stack.pop()
        if len(path) == d:
            if node.children:
                out.append(path)
            continue
        for c in reversed(node.children):
            stack.append((c, path + [c]))
    return out


def _index_of(nodes, target) -> int:
    for pos, node in enumerate(nodes):
        if node is target:
            return pos
    raise ValueError("node not found among its siblings")


def estimate_digit(parent: Node, node: Node, k: int, q: float, ell: int) -> int:
    """Estimated position of ``node``'s origin among the ``k`` original children of ``parent``'s origin."""
    siblings = parent.children
    anchors = [pos for pos, z in enumerate(siblings) if z.height == ell + 1]
    k_star = anchors.index(_index_of(siblings, node))
    scale = level_scale(k, q, ell)
    total = k_star
    prev = -1
    for pos in anchors[: k_star + 1]:
        gap = sum(z.size for z in siblings[prev + 1 : pos])
        total += alpha_hat(gap, scale)
        prev = pos
    return min(total, k - 1)


def estimate_paths(trace: Node, shape: TreeShape, q: float) -> list[PathEstimate]:
    """Origin estimate for every depth-(d-1) trace node with a depth-d child."""
    shape = check_shape(shape, "kary")
    k, d = shape.k, shape.d
    if d < 2:
        raise ValueError("path finding needs depth d >= 2")
    out = []
    for path in _full_paths(trace, d):
        digits = tuple(estimate_digit(path[d - 2 - ell], path[d - 1 - ell], k, q, ell) for ell in range(d - 1))
        w_hat = level_offset(shape, d - 1) + sum(a * k**ell for ell, a in enumerate(digits))
        out.append(PathEstimate(digits, w_hat, tuple(path)))
    return out


def find_paths(trace: Node, shape: TreeShape, q: float) -> set[int]:
    """Estimated origins (BFS indices at depth d-1) of the trace's surviving root-to-leaf paths."""
    return {est.w_hat for est in estimate_paths(trace, shape, q)}


def bucket_traces(traces, shape: TreeShape, q: float) -> dict[int, list[tuple[int, list[Node]]]]:
    """Map each depth-(d-1) index to ``(trace index, root-to-v path)`` pairs.

    When several nodes of one trace get the same estimate the leftmost is used.
    """
    buckets: dict[int, list[tuple[int, list[Node]]]] = {j: [] for j in level(shape, shape.d - 1)}
    for t, trace in enumerate(traces):
        seen = set()
        for est in estimate_paths(trace, shape, q):
            if est.w_hat not in seen:
                seen.add(est.w_hat)
                buckets[est.w_hat].append((t, list(est.path)))
    return buckets


def _default_string_recon():
    from .string_recon import exhaustive_best_match_string

    return exhaustive_best_match_string


def reconstruct_ted_large(traces, shape: TreeShape, q: float, string_recon: Callable | None = None) -> np.ndarray:
    """Large-degree TED reconstruction.

    Internal labels come from the root-to-``v`` path of the first trace in
    each bucket; where the covering subtrees overlap the smallest ``j`` wins.
    Leaf rows are reconstructed from the child strings of every bucketed ``v``;
    those strings are conditioned on being nonempty.
    """
    shape = check_shape(shape, "kary")
    q = check_probability(q, "q", upper_open=True)
    traces = check_traces(traces)
    recon = string_recon or _default_string_recon()
    k, d = shape.k, shape.d
    labels = np.full(shape.n, -1, dtype=np.int8)
    if d == 1 or k == 1:
        # a star or a path: the trace is itself a string trace of all labels
        labels[:] = recon([tree_labels(t) for t in traces], shape.n, q)
        return labels
    buckets = bucket_traces(traces, shape, q)
    for j, entries in buckets.items():
        if not entries:
            raise EmptyBucket(j)
        _, path = entries[0]
        for node_index, node in zip(canonical_P(shape, j)[1:], path[1:]):
            if labels[node_index] < 0:
                labels[node_index] = node.label
        strings = [[c.label for c in p[-1].children] for _, p in entries]
        labels[children_of(shape, j)] = recon(strings, k, q, conditioned_nonempty=True)
    return labels


def stability_level(k: int, d: int, q: float) -> int:
    """``ceil(log_k log_{1/q}(3dk))`` floored at 1 (``d`` for paths)."""
    if k == 1:
        return d
    if q <= 0:
        return 1
    inner = math.log(3 * d * k) / math.log(1 / q)
    if inner <= 1:
        return 1
    return max(1, math.ceil(math.log(inner) / math.log(k) - 1e-12))


def majority(vectors: np.ndarray) -> np.ndarray:
    """Coordinate-wise majority of 0/1 rows; ties go to 0."""
    vectors = np.asarray(vectors)
    return (2 * vectors.sum(axis=0) > vectors.shape[0]).astype(np.int8)


def stable_votes(traces, shape: TreeShape, i: int, s: int) -> np.ndarray:
    """Label vectors of G_Y(i) (root excluded) over the s-stable traces, one row each."""
    rows = [subtree_labels(trace_G(y, shape, i)) for y in traces if is_s_stable(y, shape, i, s)]
    return np.asarray(rows, dtype=np.int8).reshape(len(rows), shape.d + shape.k - 1)


def reconstruct_ted_small(traces, shape: TreeShape, q: float, s: int | None = None) -> np.ndarray:
    """Any-degree TED reconstruction by majority over s-stable traces.

    Each node is labeled from the covering index whose H-subtree contains it.
    """
    shape = check_shape(shape, "kary")
    q = check_probability(q, "q", upper_open=True)
    traces = check_traces(traces)
    s = stability_level(shape.k, shape.d, q) if s is None else int(s)
    labels = np.full(shape.n, -1, dtype=np.int8)
    for i in covering_indices(shape):
        votes = stable_votes(traces, shape, i, s)
        if votes.shape[0] == 0:
            raise NoStableTraces(i)
        t_i = depth_of(shape, i)
        labels[canonical_H(shape, i)] = majority(votes)[t_i - 1 :]
    return labels


class TEDLargeReconstructor(_TraceReconstructor):
    """Path-finding reconstruction for large branching factor."""

    def __init__(self, k: int = 8, d: int = 2, q: float = 0.05, string_recon=None):
        self.k = k
        self.d = d
        self.q = q
        self.string_recon = string_recon

    def fit(self, traces, y=None):
        shape = TreeShape.kary(self.k, self.d)
        self.labels_ = reconstruct_ted_large(traces, shape, self.q, self.string_recon)
        return self


class TEDSmallReconstructor(_TraceReconstructor):
    """Majority vote over s-stable traces; ``s=None`` uses the default level."""

    def __init__(self, k: int = 2, d: int = 3, q: float = 0.1, s: int | None = None):
        self.k = k
        self.d = d
        self.q = q
        self.s = s

    def fit(self, traces, y=None):
        shape = TreeShape.kary(self.k, self.d)
        self.s_ = stability_level(self.k, self.d, self.q) if self.s is None else self.s
        self.labels_ = reconstruct_ted_small(traces, shape, self.q, self.s_)
        return self

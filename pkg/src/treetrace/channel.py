"""Tree deletion channels (TED and Left-Propagation), the string channel and censoring.

The deterministic cores take an explicit deletion set of original node
indices (the ``origin`` of each node).  Samplers draw the deletion set with
probability ``q`` per non-root node and then call the core.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from sklearn.base import BaseEstimator

from ._validation import check_probability, check_rng
from .trees import Node, TreeShape

TED = "ted"
LP = "lp"
MODELS = (TED, LP)


class _Empty:
    """Sentinel for a censored (empty) trace."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "EMPTY"

    def __bool__(self):
        return False


EMPTY = _Empty()


def check_model(model: str) -> str:
    model = str(model).lower()
    aliases = {"ted": TED, "lp": LP, "leftpropagation": LP, "left_propagation": LP, "left-propagation": LP}
    if model not in aliases:
        raise ValueError(f"unknown deletion model {model!r}; expected 'ted' or 'lp'")
    return aliases[model]


@dataclass(frozen=True)
class ChannelConfig:
    model: str = TED
    q: float = 0.1
    censor_gamma: float = 0.0
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "model", check_model(self.model))
        check_probability(self.q, "q", upper_open=True)
        check_probability(self.censor_gamma, "censor_gamma")


def derive_rng(seed: int, *keys: int) -> np.random.Generator:
    """Independent stream for ``keys`` under ``seed`` (e.g. a trace or trial index)."""
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in keys)))


# ---------------------------------------------------------------------------
# mutable working copy used by the sequential deletion cores


class _Slot:
    __slots__ = ("label", "origin", "children", "parent")

    def __init__(self, label, origin, parent):
        self.label = label
        self.origin = origin
        self.parent = parent
        self.children: list[_Slot] = []


def _thaw(tree: Node) -> tuple[_Slot, dict[int, _Slot]]:
    root = _Slot(tree.label, tree.origin, None)
    where: dict[int, _Slot] = {}
    stack = [(tree, root)]
    while stack:
        node, slot = stack.pop()
        for child in node.children:
            cs = _Slot(child.label, child.origin, slot)
            slot.children.append(cs)
            if child.origin is not None:
                where[child.origin] = cs
            stack.append((child, cs))
    return root, where


def _freeze(slot: _Slot) -> Node:
    return Node(slot.label, [_freeze(c) for c in slot.children], origin=slot.origin)


def _check_deletions(where: dict[int, _Slot], deletions: Iterable[int]) -> list[int]:
    dels = sorted(set(int(v) for v in deletions))
    missing = [v for v in dels if v not in where]
    if missing:
        raise ValueError(f"deletion set references nonexistent nodes {missing}")
    return dels


def delete_ted(tree: Node, deletions: Iterable[int]) -> Node:
    """TED deletion: each deleted node's children take its place, in order."""
    root, where = _thaw(tree)
    for v in _check_deletions(where, deletions):
        slot = where.pop(v)
        parent = slot.parent
        pos = parent.children.index(slot)
        for c in slot.children:
            c.parent = parent
        parent.children[pos : pos + 1] = slot.children
    return _freeze(root)


def delete_lp(tree: Node, deletions: Iterable[int]) -> Node:
    """Left-Propagation deletion, applied node by node in increasing index order.

    Deleting ``v`` moves every node on the left-only path below ``v`` up one
    position (with its label); the last position on that path disappears.
    Deletions name nodes, not positions, so a node that has moved up is still
    deleted when its own index comes up.
    """
    root, where = _thaw(tree)
    for v in _check_deletions(where, deletions):
        slot = where.pop(v)
        while slot.children:
            below = slot.children[0]
            slot.label, slot.origin = below.label, below.origin
            if slot.origin is not None:
                where[slot.origin] = slot
            slot = below
        slot.parent.children.remove(slot)
    return _freeze(root)


def delete(tree: Node, deletions: Iterable[int], model: str) -> Node:
    return delete_ted(tree, deletions) if check_model(model) == TED else delete_lp(tree, deletions)


def draw_deletions(tree: Node, q: float, rng: np.random.Generator) -> list[int]:
    origins = [node.origin for node in tree.iter_bfs()][1:]
    mask = rng.random(len(origins)) < q
    return [o for o, m in zip(origins, mask) if m]


def sample_trace(tree: Node, cfg: ChannelConfig, rng=None) -> Node | _Empty:
    """One trace of ``tree`` through the configured channel (censoring included)."""
    rng = check_rng(rng if rng is not None else cfg.seed)
    trace = delete(tree, draw_deletions(tree, cfg.q, rng), cfg.model)
    if cfg.censor_gamma > 0:
        return censor(trace, cfg.censor_gamma, rng)
    return trace


def sample_traces(tree: Node, cfg: ChannelConfig, count: int, rng=None) -> list:
    rng = check_rng(rng if rng is not None else cfg.seed)
    return [sample_trace(tree, cfg, rng) for _ in range(count)]


def censor(trace, gamma: float, rng) -> Node | _Empty:
    """Replace ``trace`` by :data:`EMPTY` with probability ``gamma``."""
    check_probability(gamma, "gamma")
    rng = check_rng(rng)
    return EMPTY if rng.random() < gamma else trace


# ---------------------------------------------------------------------------
# strings


def string_channel(bits: Sequence[int], deletions: Iterable[int]) -> list[int]:
    dels = set(deletions)
    return [b for i, b in enumerate(bits) if i not in dels]


def sample_string_traces(bits: Sequence[int], q: float, count: int, rng=None) -> list[list[int]]:
    """``count`` string-channel traces of ``bits``."""
    rng = check_rng(rng)
    x = np.asarray(bits, dtype=np.int8)
    keep = rng.random((count, len(x))) >= q
    return [x[row].tolist() for row in keep]


def pad_traces(traces: Sequence[Sequence[int]], m: int) -> np.ndarray:
    """Right-pad traces with zeros into a ``(T, m)`` array."""
    out = np.zeros((len(traces), m), dtype=np.float64)
    for t, tr in enumerate(traces):
        if len(tr) > m:
            raise ValueError(f"trace of length {len(tr)} exceeds original length {m}")
        out[t, : len(tr)] = tr
    return out


# ---------------------------------------------------------------------------
# spiders


def spider_paths(trace: Node) -> list[list[int]]:
    """Label sequence of each root path, left to right."""
    paths = []
    for child in trace.children:
        seq = []
        node = child
        while True:
            seq.append(node.label)
            if not node.children:
                break
            if len(node.children) > 1:
                raise ValueError("not a spider trace: a path node has several children")
            node = node.children[0]
        paths.append(seq)
    return paths


def normalize_spider_trace(trace: Node, shape: TreeShape) -> Node:
    """Pad a spider trace with zero labels back to ``n/d`` paths of depth ``d``."""
    if not shape.is_spider:
        raise ValueError("normalize_spider_trace needs a spider shape")
    paths = spider_paths(trace)
    if len(paths) > shape.n_paths:
        raise ValueError(f"trace has {len(paths)} paths, shape allows {shape.n_paths}")
    if any(len(p) > shape.d for p in paths):
        raise ValueError(f"trace has a path longer than d={shape.d}")
    full = [p + [0] * (shape.d - len(p)) for p in paths]
    full += [[0] * shape.d for _ in range(shape.n_paths - len(paths))]
    out = []
    for seq in full:
        node = None
        for b in reversed(seq):
            node = Node(b, [node] if node is not None else [])
        out.append(node)
    return Node(None, out)


def spider_trace_vector(trace: Node, shape: TreeShape) -> np.ndarray:
    """DFS label vector (length n) of the normalized trace."""
    paths = spider_paths(trace)
    if len(paths) > shape.n_paths or any(len(p) > shape.d for p in paths):
        raise ValueError(f"trace does not fit {shape}")
    vec = np.zeros(shape.n, dtype=np.float64)
    for p, seq in enumerate(paths):
        vec[p * shape.d : p * shape.d + len(seq)] = seq
    return vec


def sample_spider_vectors(labels: Sequence[int], shape: TreeShape, q: float, count: int, rng=None) -> np.ndarray:
    """Vectorized spider channel: ``(count, n)`` normalized trace label vectors.

    Survivors of each path are compacted toward the root, then non-empty
    paths are compacted to the left, exactly as both tree models do on spiders.
    """
    rng = check_rng(rng)
    P, d = shape.n_paths, shape.d
    a = np.asarray(labels, dtype=np.float64).reshape(P, d)
    keep = rng.random((count, P, d)) >= q
    # stable sort puts kept entries first, preserving order within a path
    order = np.argsort(~keep, axis=2, kind="stable")
    vals = np.where(keep, a[None], 0.0)
    paths = np.take_along_axis(vals, order, axis=2)
    alive = keep.any(axis=2)
    porder = np.argsort(~alive, axis=1, kind="stable")
    paths = np.take_along_axis(paths, porder[:, :, None], axis=1)
    return paths.reshape(count, P * d)


class DeletionChannel(BaseEstimator):
    """Seeded tree deletion channel.

    Parameters
    ----------
    model : {'ted', 'lp'}
    q : float
        Deletion probability per non-root node, in [0, 1).
    gamma : float
        Censoring probability.
    random_state : int or numpy Generator
    """

    def __init__(self, model: str = TED, q: float = 0.1, gamma: float = 0.0, random_state=None):
        self.model = model
        self.q = q
        self.gamma = gamma
        self.random_state = random_state

    def fit(self, X=None, y=None):
        self.config_ = ChannelConfig(self.model, self.q, self.gamma)
        self.rng_ = check_rng(self.random_state)
        return self

    def sample(self, tree: Node, count: int = 1) -> list:
        if not hasattr(self, "rng_"):
            self.fit()
        return sample_traces(tree, self.config_, count, self.rng_)

    def transform(self, trees: Sequence[Node]) -> list:
        if not hasattr(self, "rng_"):
            self.fit()
        return [sample_trace(t, self.config_, self.rng_) for t in trees]

"""Canonical subtrees of a trace and the structural predicates used by the k-ary algorithms.

A trace-side subtree is either a list of trace nodes (root first) or ``None``,
which stands for the undefined value produced when the walk meets a node that
does not have exactly ``k`` children.
"""

from __future__ import annotations

from typing import Iterable

from .trees import (
    ROOT,
    Node,
    TreeShape,
    _check_cover_index,
    canonical_G,
    children_of,
    pi_function,
    route_positions,
)


def _walk(trace: Node, k: int, positions: Iterable[int]) -> list[Node] | None:
    path = [trace]
    for pos in positions:
        node = path[-1]
        if len(node.children) != k:
            return None
        path.append(node.children[pos])
    return path


def trace_P(trace: Node, shape: TreeShape, i: int) -> list[Node] | None:
    """Trace nodes ``v_0..v_t`` along the route to ``i`` (``t`` = depth of ``i``), or None."""
    return _walk(trace, shape.k, route_positions(shape, i))


def trace_G(trace: Node, shape: TreeShape, i: int) -> list[Node] | None:
    """``v_0..v_{d-1}`` along ``pi_i`` plus the ``k`` children of ``v_{d-1}``, or None."""
    pi = pi_function(shape, i)
    path = _walk(trace, shape.k, pi[: shape.d - 1])
    if path is None or len(path[-1].children) != shape.k:
        return None
    return path + list(path[-1].children)


def trace_H(trace: Node, shape: TreeShape, i: int) -> list[Node] | None:
    """The part of :func:`trace_G` from depth ``t_i`` on, or None when G is undefined."""
    t = _check_cover_index(shape, i)
    G = trace_G(trace, shape, i)
    return None if G is None else G[t:]


def subtree_labels(nodes: list[Node]) -> list[int]:
    """Labels of a root-first node list, root excluded."""
    return [node.label for node in nodes[1:]]


def is_s_stable(trace: Node, shape: TreeShape, i: int, s: int) -> bool:
    """Whether ``trace`` is s-stable for covering index ``i``.

    Internal nodes of G_Y(i) are ``v_0..v_{d-1}``.  Each one whose height
    ``h`` in the trace is at most ``s`` must have all ``k`` children at height
    exactly ``h - 1``.
    """
    G = trace_G(trace, shape, i)
    if G is None:
        return False
    for v in G[: shape.d]:
        h = v.height
        if h <= s and any(c.height != h - 1 for c in v.children):
            return False
    return True


def g_plus(shape: TreeShape, i: int) -> list[int]:
    """G_X(i) together with all children of its internal nodes (root first)."""
    _check_cover_index(shape, i)
    internal = canonical_G(shape, i)[: shape.d]
    nodes = {c for u in internal for c in children_of(shape, u)}
    return [ROOT] + sorted(nodes)


def is_b_balanced(tree: Node, deletions: Iterable[int], b: int) -> bool:
    """No internal node of ``tree`` loses more than ``b`` consecutive children.

    ``tree`` is the original tree; nodes are matched to the deletion set by
    their ``origin``.  This predicate looks at ground truth and is meant for
    tests and diagnostics only.
    """
    dels = set(deletions)
    for node in tree.iter_bfs():
        run = 0
        for c in node.children:
            run = run + 1 if c.origin in dels else 0
            if run > b:
                return False
    return True

"""Independent reference implementations shared by the test modules.

These are written recursively, straight from the channel definitions, and
share no code with the package's iterative deletion cores.
"""

from __future__ import annotations

import itertools
import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

from treetrace.trees import Node, TreeShape  # noqa: E402


def ref_ted(tree: Node, dels) -> Node:
    """TED reference: a deleted node is replaced by its children, in order."""
    dels = set(dels)

    def rec(node):
        kids = [g for c in node.children for g in rec(c)]
        if node.origin in dels:
            return kids
        return [Node(node.label, kids, origin=node.origin)]

    (root,) = rec(tree)
    return root


def ref_lp(tree: Node, dels) -> Node:
    """Left-Propagation reference, bottom-up.

    A deleted node takes the label of its leftmost surviving child's subtree
    root, which in turn is removed from that subtree the same way.
    """
    dels = set(dels)

    def filt(items):
        return [t for t in items if t is not None]

    def delete_root(t):
        if not t.children:
            return None
        head = t.children[0]
        return Node(head.label, filt([delete_root(head)]) + list(t.children[1:]), origin=head.origin)

    def rec(node):
        ch = filt([rec(c) for c in node.children])
        if node.origin not in dels:
            return Node(node.label, ch, origin=node.origin)
        if not ch:
            return None
        head = ch[0]
        return Node(head.label, filt([delete_root(head)]) + ch[1:], origin=head.origin)

    return rec(tree)


def all_subsets(items):
    items = list(items)
    for r in range(len(items) + 1):
        yield from itertools.combinations(items, r)


def origins(tree: Node) -> list[int]:
    return [node.origin for node in tree.iter_bfs()][1:]


def random_bits(n: int, seed: int) -> list[int]:
    return np.random.default_rng(seed).integers(0, 2, n).tolist()


def small_shapes():
    """Complete shapes with k, d <= 3 up to 14 nodes and every spider with n <= 8."""
    out = [TreeShape.kary(k, d) for k in (1, 2, 3) for d in (1, 2, 3) if TreeShape.kary(k, d).n <= 14]
    out += [TreeShape.spider(n, d) for n in range(1, 9) for d in range(1, n + 1) if n % d == 0]
    return out


def oracle_string_recon(truths):
    """A perfect string reconstructor that isolates tree-level logic.

    It is handed the true strings in the order the algorithm will ask for
    them, checks that every trace it receives is a subsequence of the next
    one, and returns it.
    """
    pending = [list(t) for t in truths]

    def is_subsequence(t, s):
        it = iter(s)
        return all(b in it for b in t)

    def recon(traces, m, q, conditioned_nonempty=False):
        truth = pending.pop(0)
        assert len(truth) == m
        assert all(is_subsequence(t, truth) for t in traces), "a trace is not a subsequence of the true string"
        return truth

    recon.pending = pending
    return recon


@pytest.fixture
def rng():
    return np.random.default_rng(12345)

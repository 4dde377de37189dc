"""Tree shapes, node indexing and the canonical subtrees of complete k-ary trees.

Indexing conventions
--------------------
Complete k-ary trees index their non-root nodes in BFS order: the root's
children are ``0..k-1``, the children of node ``i`` are
``k*(i+1) .. k*(i+1)+k-1``.  Spiders use a DFS index: the node at depth ``j``
(1-based) of path ``i`` (1-based) has index ``(i-1)*d + j-1``.

The root is never indexed; in node lists it appears as :data:`ROOT`.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Iterable, Iterator, Sequence

ROOT = -1


class Node:
    """Immutable node of a labeled ordered tree.

    ``origin`` is provenance metadata (the node's index in the original tree).
    Reconstruction code must never read it.
    """

    __slots__ = ("label", "children", "origin", "height", "size")

    def __init__(self, label: int | None, children: Iterable[Node] = (), origin: int | None = None):
        self.label = label
        self.children = tuple(children)
        self.origin = origin
        self.height = 1 + max(c.height for c in self.children) if self.children else 0
        self.size = 1 + sum(c.size for c in self.children)

    def __eq__(self, other):
        if not isinstance(other, Node):
            return NotImplemented
        return self.label == other.label and self.children == other.children

    def __hash__(self):
        return hash((self.label, self.children))

    def __repr__(self):
        if not self.children:
            return f"Node({self.label!r})"
        return f"Node({self.label!r}, {list(self.children)!r})"

    def same_provenance(self, other: Node) -> bool:
        """Structural equality including ``origin`` on every node."""
        return (
            self.label == other.label
            and self.origin == other.origin
            and len(self.children) == len(other.children)
            and all(a.same_provenance(b) for a, b in zip(self.children, other.children))
        )

    def iter_preorder(self) -> Iterator[Node]:
        stack = [self]
        while stack:
            node = stack.pop()
            yield node
            stack.extend(reversed(node.children))

    def iter_bfs(self) -> Iterator[Node]:
        level = [self]
        while level:
            yield from level
            level = [c for node in level for c in node.children]

    def levels(self) -> list[list[Node]]:
        out = []
        level = [self]
        while level:
            out.append(level)
            level = [c for node in level for c in node.children]
        return out


# A labeled ordered tree is represented by its (unlabeled) root node.
LabeledOrderedTree = Node


@dataclass(frozen=True)
class TreeShape:
    """Structural descriptor: ``kind`` is ``"kary"`` (uses k, d) or ``"spider"`` (uses n, d)."""

    kind: str
    d: int
    k: int = 0
    n_spider: int = 0

    def __post_init__(self):
        if self.kind == "kary":
            if self.k < 1 or self.d < 1:
                raise ValueError(f"complete k-ary tree needs k >= 1 and d >= 1, got k={self.k}, d={self.d}")
        elif self.kind == "spider":
            if self.d < 1 or self.n_spider < 1:
                raise ValueError(f"spider needs n >= 1 and d >= 1, got n={self.n_spider}, d={self.d}")
            if self.n_spider % self.d:
                raise ValueError(f"spider depth d={self.d} must divide n={self.n_spider}")
        else:
            raise ValueError(f"unknown shape kind {self.kind!r}")

    @classmethod
    def kary(cls, k: int, d: int) -> TreeShape:
        return cls("kary", d=d, k=k)

    @classmethod
    def spider(cls, n: int, d: int) -> TreeShape:
        return cls("spider", d=d, n_spider=n)

    @property
    def is_kary(self) -> bool:
        return self.kind == "kary"

    @property
    def is_spider(self) -> bool:
        return self.kind == "spider"

    @property
    def n(self) -> int:
        if self.is_spider:
            return self.n_spider
        if self.k == 1:
            return self.d
        return (self.k ** (self.d + 1) - self.k) // (self.k - 1)

    @property
    def n_paths(self) -> int:
        if not self.is_spider:
            raise ValueError("n_paths is only defined for spiders")
        return self.n_spider // self.d

    def to_dict(self) -> dict:
        if self.is_kary:
            return {"kind": "kary", "k": self.k, "d": self.d}
        return {"kind": "spider", "n": self.n_spider, "d": self.d}

    @classmethod
    def from_dict(cls, data: dict) -> TreeShape:
        kind = data.get("kind")
        if kind in ("kary", "complete_kary"):
            return cls.kary(int(data["k"]), int(data["d"]))
        if kind == "spider":
            return cls.spider(int(data["n"]), int(data["d"]))
        raise ValueError(f"unknown shape kind {kind!r}")

    def __str__(self):
        if self.is_kary:
            return f"kary(k={self.k}, d={self.d})"
        return f"spider(n={self.n_spider}, d={self.d})"


# ---------------------------------------------------------------------------
# k-ary index arithmetic


def _require_kary(shape: TreeShape) -> None:
    if not shape.is_kary:
        raise ValueError(f"operation requires a complete k-ary shape, got {shape}")


def level_offset(shape: TreeShape, t: int) -> int:
    """BFS index of the leftmost node at depth ``t``."""
    k = shape.k
    return sum(k**h for h in range(1, t))


def depth_of(shape: TreeShape, i: int) -> int:
    _require_kary(shape)
    if not 0 <= i < shape.n:
        raise ValueError(f"node index {i} out of range for {shape}")
    t, start, width = 1, 0, shape.k
    while i >= start + width:
        start += width
        width *= shape.k
        t += 1
    return t


def parent_of(shape: TreeShape, i: int) -> int:
    """Parent index, or ``ROOT`` for depth-1 nodes."""
    if depth_of(shape, i) == 1:
        return ROOT
    return i // shape.k - 1


def children_of(shape: TreeShape, i: int) -> list[int]:
    """Child indices of ``i`` (``i=ROOT`` allowed); empty for leaves."""
    k = shape.k
    if i == ROOT:
        return list(range(k))
    if depth_of(shape, i) >= shape.d:
        return []
    first = k * (i + 1)
    return list(range(first, first + k))


def sibling_position(shape: TreeShape, i: int) -> int:
    depth_of(shape, i)
    return i % shape.k


def level(shape: TreeShape, t: int) -> list[int]:
    """``J_t``: BFS indices of the nodes at depth ``t``."""
    _require_kary(shape)
    if not 1 <= t <= shape.d:
        raise ValueError(f"depth {t} outside [1, {shape.d}]")
    start = level_offset(shape, t)
    return list(range(start, start + shape.k**t))


@dataclass(frozen=True)
class IndexSets:
    J: dict[int, list[int]]
    I_levels: dict[int, list[int]]
    I: list[int] = field(default_factory=list)


def index_sets(shape: TreeShape) -> IndexSets:
    """Level sets ``J_t``, non-leftmost subsets ``I_t`` for t in [d], and ``I`` over t in [d-1]."""
    _require_kary(shape)
    J = {t: level(shape, t) for t in range(1, shape.d + 1)}
    I_levels = {1: list(J[1])}
    for t in range(2, shape.d + 1):
        I_levels[t] = [i for i in J[t] if i % shape.k != 0]
    I = [i for t in range(1, shape.d) for i in I_levels[t]]
    return IndexSets(J=J, I_levels=I_levels, I=I)


def covering_indices(shape: TreeShape) -> list[int]:
    """Indices whose H-subtrees partition the tree.

    This is ``I`` for d >= 2.  For a star (d = 1) ``I`` is empty; the single
    index 0 is used instead, whose H-subtree is the whole star.
    """
    if shape.d == 1:
        return [0]
    return index_sets(shape).I


def _check_cover_index(shape: TreeShape, i: int) -> int:
    t = depth_of(shape, i)
    if shape.d == 1:
        if i != 0:
            raise ValueError(f"for a star only index 0 covers the tree, got {i}")
        return t
    if t > shape.d - 1 or (t >= 2 and i % shape.k == 0):
        raise ValueError(f"node {i} is not in I for {shape}")
    return t


def route_positions(shape: TreeShape, i: int) -> list[int]:
    """Sibling positions along the root-to-``i`` path (length = depth of ``i``)."""
    out = []
    node = i
    while node != ROOT:
        out.append(node % shape.k)
        node = parent_of(shape, node)
    return out[::-1]


def pi_function(shape: TreeShape, i: int) -> list[int]:
    """``pi_i(t)`` for t = 0..d-1: the route to ``i`` then the left-only descent."""
    _require_kary(shape)
    _check_cover_index(shape, i)
    pos = route_positions(shape, i)
    return pos + [0] * (shape.d - len(pos))


def canonical_P(shape: TreeShape, i: int) -> list[int]:
    """Root-to-``i`` path, root first (``ROOT`` sentinel)."""
    _require_kary(shape)
    path = []
    node = i
    depth_of(shape, i)
    while node != ROOT:
        path.append(node)
        node = parent_of(shape, node)
    return [ROOT] + path[::-1]


def _left_descent(shape: TreeShape, i: int) -> list[int]:
    path = [i]
    while True:
        ch = children_of(shape, path[-1])
        if not ch:
            return path
        path.append(ch[0])


def canonical_H(shape: TreeShape, i: int) -> list[int]:
    """Left-only path from ``i`` to a leaf, followed by that leaf's k-1 siblings."""
    _require_kary(shape)
    _check_cover_index(shape, i)
    path = _left_descent(shape, i)
    leaf = path[-1]
    return path + list(range(leaf + 1, leaf + shape.k))


def canonical_G(shape: TreeShape, i: int) -> list[int]:
    """``P_X(i)`` followed by the rest of ``H_X(i)``; d + k nodes including the root."""
    return canonical_P(shape, i)[:-1] + canonical_H(shape, i)


def psi(shape: TreeShape, j: int) -> int:
    """The unique covering index ``i`` whose H-subtree contains depth-(d-1) node ``j``."""
    _require_kary(shape)
    if shape.d == 1:
        raise ValueError("psi needs d >= 2")
    if depth_of(shape, j) != shape.d - 1:
        raise ValueError(f"node {j} is not at depth d-1={shape.d - 1}")
    node = j
    while depth_of(shape, node) >= 2 and node % shape.k == 0:
        node = parent_of(shape, node)
    return node


# ---------------------------------------------------------------------------
# spider index arithmetic


def spider_index(shape: TreeShape, path: int, depth: int) -> int:
    """DFS index of the node at ``depth`` (1-based) on ``path`` (1-based)."""
    if not shape.is_spider:
        raise ValueError("spider_index needs a spider shape")
    if not (1 <= path <= shape.n_paths and 1 <= depth <= shape.d):
        raise ValueError(f"(path={path}, depth={depth}) outside {shape}")
    return (path - 1) * shape.d + depth - 1


def spider_position(shape: TreeShape, index: int) -> tuple[int, int]:
    """Inverse of :func:`spider_index`: ``(path, depth)``, both 1-based."""
    if not 0 <= index < shape.n:
        raise ValueError(f"index {index} out of range for {shape}")
    return index // shape.d + 1, index % shape.d + 1


# ---------------------------------------------------------------------------
# construction


def _check_bits(labels: Sequence[int], n: int) -> list[int]:
    labels = [int(b) for b in labels]
    if len(labels) != n:
        raise ValueError(f"expected {n} labels, got {len(labels)}")
    if any(b not in (0, 1) for b in labels):
        raise ValueError("labels must be binary")
    return labels


def build_complete_kary(k: int, d: int, labels: Sequence[int]) -> Node:
    """Complete k-ary tree of depth ``d`` with labels in BFS order."""
    shape = TreeShape.kary(k, d)
    labels = _check_bits(labels, shape.n)

    def build(i: int) -> Node:
        return Node(labels[i], [build(c) for c in children_of(shape, i)], origin=i)

    return Node(None, [build(c) for c in range(k)])


def build_spider(n: int, d: int, labels: Sequence[int]) -> Node:
    """``n/d`` label paths of length ``d`` hanging off the root, labels in DFS order."""
    shape = TreeShape.spider(n, d)
    labels = _check_bits(labels, n)
    paths = []
    for p in range(shape.n_paths):
        node = None
        for idx in range(p * d + d - 1, p * d - 1, -1):
            node = Node(labels[idx], [node] if node is not None else [], origin=idx)
        paths.append(node)
    return Node(None, paths)


def build_tree(shape: TreeShape, labels: Sequence[int]) -> Node:
    if shape.is_kary:
        return build_complete_kary(shape.k, shape.d, labels)
    return build_spider(shape.n, shape.d, labels)


def build_path(labels: Sequence[int]) -> Node:
    """A path, i.e. a string: identical to the 1-ary tree of depth ``len(labels)``."""
    labels = [int(b) for b in labels]
    if not labels:
        return Node(None)
    return build_complete_kary(1, len(labels), labels)


def build_star(labels: Sequence[int]) -> Node:
    labels = [int(b) for b in labels]
    return Node(None, [Node(b, origin=i) for i, b in enumerate(labels)])


def tree_labels(tree: Node) -> list[int]:
    """Labels of the non-root nodes in BFS order (the k-ary index order)."""
    return [node.label for node in tree.iter_bfs()][1:]


def spider_labels(tree: Node) -> list[int]:
    """Labels of the non-root nodes in DFS order (the spider index order)."""
    return [node.label for node in tree.iter_preorder()][1:]


# ---------------------------------------------------------------------------
# JSON


def tree_to_obj(tree: Node, with_origin: bool = False) -> dict[str, Any]:
    obj: dict[str, Any] = {"label": tree.label, "children": [tree_to_obj(c, with_origin) for c in tree.children]}
    if with_origin and tree.origin is not None:
        obj["origin"] = tree.origin
    return obj


def tree_from_obj(obj: dict[str, Any]) -> Node:
    children = [tree_from_obj(c) for c in obj.get("children", [])]
    return Node(obj.get("label"), children, origin=obj.get("origin"))


def tree_to_json(tree: Node, with_origin: bool = False) -> str:
    return json.dumps(tree_to_obj(tree, with_origin), separators=(",", ":"))


def tree_from_json(text: str) -> Node:
    return tree_from_obj(json.loads(text))

"""Forests over batch indices, per-vertex marked node sets and frequency-vector selection.

A forest is fixed by a frequency vector f = (f_1, ..., f_h) and the class exponent
r.  Nodes are pairs ``(level, ordinal)``; a level-k node covers the batch interval
``[ordinal * span_k, (ordinal + 1) * span_k)`` with ``span_0 = 1`` and
``span_k = 2^(r+1) * f_1 * ... * f_(k-1)``.  Nothing is stored: parents, ranks and
paths are integer divisions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Mapping, Sequence

__all__ = [
    "Node",
    "Forest",
    "delta_power",
    "enumerate_freq_vectors",
    "selectable_vectors",
    "update_mark_set",
    "count_marked_children",
    "freq_vec_select",
    "Violation",
    "check_invariant1",
    "dump_marks",
]

Node = tuple[int, int]  # (level, ordinal)


def delta_power(delta: int, exponent: Fraction) -> int:
    """delta^exponent rounded up to a power of two; delta must be a power of two."""
    k = delta.bit_length() - 1
    if delta != 1 << k:
        raise ValueError("delta must be a power of two")
    return 1 << math.ceil(Fraction(exponent) * k)


def enumerate_freq_vectors(delta: int, eps: Fraction, r: int, batch_count: int) -> list[tuple[int, ...]]:
    """All monotone power-of-two vectors 2^(r+1) >= f_1 >= ... >= f_h = delta^eps
    with 2^(r+1) * f_1 * ... * f_(h-1) <= batch_count.

    The one-coordinate vector (delta^eps,) is always included, so a class has a
    forest even when the stream is shorter than one tree.
    """
    top = 1 << (r + 1)
    low = delta_power(delta, eps)
    if low > top:
        return []
    stack = [((f1,), top) for f1 in _powers(low, top)]
    found = []
    while stack:
        prefix, product = stack.pop()
        if prefix[-1] == low:
            found.append(prefix)
        # prefix[-1] becomes interior once something is appended
        grown = product * prefix[-1]
        if grown <= batch_count:
            for x in _powers(low, prefix[-1]):
                stack.append((prefix + (x,), grown))
    if (low,) not in found:
        found.append((low,))
    return sorted(set(found), key=lambda f: (len(f), f))


def _powers(lo: int, hi: int) -> list[int]:
    out, x = [], lo
    while x <= hi:
        out.append(x)
        x *= 2
    return out


def selectable_vectors(vectors: Sequence[tuple[int, ...]], low: int) -> list[tuple[int, ...]]:
    """Vectors whose only coordinate equal to delta^eps is the last one.

    Selection stops at the first coordinate equal to delta^eps, so vectors such as
    (4, 4) can never be returned and must not act as witnesses either.
    """
    return [f for f in vectors if all(x > low for x in f[:-1])]


@dataclass(frozen=True)
class Forest:
    f: tuple[int, ...]
    r: int

    def __post_init__(self):
        if not self.f:
            raise ValueError("frequency vector must be non-empty")

    @property
    def h(self) -> int:
        return len(self.f)

    @property
    def branching(self) -> tuple[int, ...]:
        """Number of children of a level-(k+1) node, for k = 0..h-1."""
        return ((1 << (self.r + 1)),) + self.f[:-1]

    @property
    def spans(self) -> tuple[int, ...]:
        out = [1]
        for b in self.branching:
            out.append(out[-1] * b)
        return tuple(out)

    def tree_of(self, t: int) -> int:
        return t // self.spans[-1]

    def leaf_to_path(self, t: int) -> list[Node]:
        return [(k, t // s) for k, s in enumerate(self.spans)]

    def first_leaf(self, node: Node) -> int:
        return node[1] * self.spans[node[0]]

    def parent(self, node: Node) -> Node:
        k, o = node
        return (k + 1, o // self.branching[k])

    def child_rank(self, node: Node) -> int:
        k, o = node
        return o % self.branching[k]

    def ancestor(self, node: Node, level: int) -> Node:
        return (level, self.first_leaf(node) // self.spans[level])

    def contains(self, node: Node, t: int) -> bool:
        return t // self.spans[node[0]] == node[1]

    def leaf_interval(self, node: Node) -> range:
        start = self.first_leaf(node)
        return range(start, start + self.spans[node[0]])


def update_mark_set(marks: Mapping[Node, tuple | None], forest: Forest, t: int) -> dict[Node, tuple | None]:
    """Bring a mark set to batch t: drop other trees, lift off-path marks to children of the path.

    A lifted node keeps the suffix tuple of the absorbed mark with the earliest
    first leaf, with coordinates below its level blanked.
    """
    spans = forest.spans
    h = forest.h
    tree = t // spans[h]
    out: dict[Node, tuple | None] = {}
    # earliest first leaf wins, so lazy and eager updating agree on inherited suffixes
    for node in sorted(marks, key=lambda nd: (nd[1] * spans[nd[0]], nd[0])):
        k, o = node
        first = o * spans[k]
        if first // spans[h] != tree:
            continue
        j = k + 1
        while j <= h and first // spans[j] != t // spans[j]:
            j += 1
        lifted = (j - 1, first // spans[j - 1])
        if lifted in out:
            continue
        tup = marks[node]
        if tup is not None and lifted[0] > k:
            tup = (None,) * lifted[0] + tuple(tup[lifted[0]:])
        out[lifted] = tup
    return out


def count_marked_children(marks: Mapping[Node, object], forest: Forest, parent: Node) -> int:
    level = parent[0] - 1
    b = forest.branching[level]
    return sum(1 for (k, o) in marks if k == level and o // b == parent[1])


def freq_vec_select(
    vectors: Sequence[tuple[int, ...]],
    marks_of: Callable[[tuple[int, ...]], Mapping[Node, object]],
    r: int,
    low: int,
    t: int,
) -> tuple[tuple[int, ...], bool]:
    """Choose the frequency vector for one vertex at batch t.

    ``vectors`` must be the selectable vectors; ``marks_of(f)`` returns the
    (already updated) mark set of the vertex in forest f.  Returns the vector and
    whether the no-feasible-candidate fallback was used.
    """
    prefix: tuple[int, ...] = ()
    fallback = False
    while True:
        k = len(prefix)
        pool = [f for f in vectors if f[:k] == prefix and len(f) > k]
        candidates = sorted({f[k] for f in pool})
        if not candidates:
            raise ValueError(f"no vector extends prefix {prefix}")
        span = (1 << (r + 1)) * math.prod(prefix)
        node = (k + 1, t // span)
        chosen = None
        for x in candidates:
            for f in pool:
                if f[k] != x:
                    continue
                if count_marked_children(marks_of(f), Forest(f, r), node) < x:
                    chosen = x
                    break
            if chosen is not None:
                break
        if chosen is None:
            chosen = candidates[0]
            fallback = True
        prefix += (chosen,)
        if chosen == low:
            return prefix, fallback


@dataclass(frozen=True)
class Violation:
    v: int
    f: tuple[int, ...]
    node: Node | None
    rule: str
    detail: str = ""


def check_invariant1(
    marks: Mapping[int, Mapping[tuple[int, ...], Mapping[Node, object]]],
    r: int,
    t: int,
    degree_log: Mapping[int, Mapping[int, int]] | None,
    batch_size: int,
) -> list[Violation]:
    """Validate antichain / child-of-path, the degree lower bound and the space bound.

    ``marks[v][f]`` must already be updated to batch t (marks of the current leaf
    may be present).  ``degree_log[v][t']`` is v's batch degree at every batch t'
    where v belonged to this class; None skips the degree rule.
    """
    out: list[Violation] = []
    totals: dict[tuple[int, ...], int] = {}
    for v in sorted(marks):
        for f, nodes in marks[v].items():
            forest = Forest(f, r)
            totals[f] = totals.get(f, 0) + len(nodes)
            path = set(forest.leaf_to_path(t))
            ordered = sorted(nodes)
            for i, a in enumerate(ordered):
                for b in ordered[i + 1:]:
                    if b[0] > a[0] and forest.ancestor(a, b[0]) == b:
                        out.append(Violation(v, f, a, "1", f"ancestor {b} also marked"))
                if a[0] >= forest.h or a in path and a != (0, t):
                    out.append(Violation(v, f, a, "1", "mark lies on the current path"))
                elif a != (0, t) and forest.parent(a) not in path:
                    out.append(Violation(v, f, a, "1", "parent not on the current path"))
                if degree_log is not None:
                    k = a[0]
                    log = degree_log.get(v, {})
                    acc = sum(log.get(s, 0) for s in forest.leaf_interval(a))
                    need = (1 << r) * math.prod(f[:k])
                    if acc * (1 << k) < need:
                        out.append(Violation(v, f, a, "2", f"degree {acc} below {Fraction(need, 1 << k)}"))
    for f, total in totals.items():
        bound = (1 << (len(f) + 3)) * batch_size
        if total > bound:
            out.append(Violation(-1, f, None, "space", f"{total} marks exceed {bound}"))
    return out


def dump_marks(marks: Mapping[int, Mapping[tuple[int, ...], Mapping[Node, object]]]) -> list[str]:
    """Debug dump lines 'v f-vector node-level node-ordinal [tuple]'."""
    lines = []
    for v in sorted(marks):
        for f in sorted(marks[v]):
            for (k, o), tup in sorted(marks[v][f].items()):
                vec = ",".join(map(str, f))
                tail = ""
                if tup is not None:
                    tail = " " + ",".join("*" if c is None else str(c) for c in tup)
                lines.append(f"{v} {vec} {k} {o}{tail}")
    return lines

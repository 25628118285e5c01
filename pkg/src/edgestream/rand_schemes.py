"""Randomized per-class coloring schemes and the König bipartite edge coloring.

Every scheme instance serves one degree class of one bipartite level inside one
epoch and recursion depth.  ``color_batch`` receives the class edges of a batch
as ``(seq, u, v)`` triples and returns ``{seq: ColorId or None}``.

For the low-degree schemes ``u`` is the low-degree side and ``v`` the side whose
palettes are tracked in forests; the caller swaps sides when needed.
"""

from __future__ import annotations

import hashlib
import random
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

from .forest import (
    Forest,
    Node,
    check_invariant1,
    delta_power,
    enumerate_freq_vectors,
    freq_vec_select,
    selectable_vectors,
    update_mark_set,
)
from .stream import ColorId

__all__ = [
    "prf",
    "konig_color",
    "greedy_color",
    "package_permutation",
    "package_index",
    "leaf_palette_path",
    "PaletteCounter",
    "select_palette",
    "low_kappa",
    "high_palette_size",
    "ClassContext",
    "SchemeStats",
    "LowForestMixin",
    "RandLowScheme",
    "ShortcutScheme",
    "RandHighScheme",
]


def prf(*key) -> int:
    """64-bit keyed pseudo-random value, stable across processes and platforms."""
    return int.from_bytes(hashlib.blake2b(repr(key).encode(), digest_size=8).digest(), "big")


def konig_color(edges: Sequence[tuple[int, int]], max_degree: int) -> list[int]:
    """Proper edge coloring of a bipartite multigraph with colors 0..max_degree-1.

    ``edges`` are (left, right) pairs; the two sides are separate namespaces.
    Each edge takes a color free at both ends, flipping an alternating path first
    when the free colors differ.
    """
    left: dict[int, dict[int, int]] = {}
    right: dict[int, dict[int, int]] = {}
    colors = [-1] * len(edges)
    for idx, (u, v) in enumerate(edges):
        at_u = left.setdefault(u, {})
        at_v = right.setdefault(v, {})
        if len(at_u) >= max_degree or len(at_v) >= max_degree:
            raise ValueError(f"degree exceeds {max_degree} at edge {idx}")
        alpha = next(c for c in range(max_degree) if c not in at_u)
        if alpha in at_v:
            beta = next(c for c in range(max_degree) if c not in at_v)
            path = []
            node, on_right, col = v, True, alpha
            while True:
                nxt = (right if on_right else left)[node].get(col)
                if nxt is None:
                    break
                path.append(nxt)
                eu, ev = edges[nxt]
                node = eu if on_right else ev
                on_right = not on_right
                col = beta if col == alpha else alpha
            for e in path:
                eu, ev = edges[e]
                del left[eu][colors[e]]
                del right[ev][colors[e]]
            for e in path:
                eu, ev = edges[e]
                colors[e] = beta if colors[e] == alpha else alpha
                left[eu][colors[e]] = e
                right[ev][colors[e]] = e
        colors[idx] = alpha
        at_u[alpha] = idx
        at_v[alpha] = idx
    return colors


def greedy_color(edges: Sequence[tuple[int, int]]) -> list[int]:
    """First-fit edge coloring of a general multigraph: at most 2*maxdeg - 1 colors."""
    used: dict[int, set[int]] = {}
    out = []
    for u, v in edges:
        su = used.setdefault(u, set())
        sv = used.setdefault(v, set())
        c = 0
        while c in su or c in sv:
            c += 1
        su.add(c)
        sv.add(c)
        out.append(c)
    return out


@lru_cache(maxsize=8192)
def package_permutation(key: tuple, children: int, parts: int) -> tuple[int, ...]:
    """Sub-package indices of a parent's children.

    A seeded shuffle of the multiset (children/parts) x [5*parts]; child j takes
    entry j.  ``key`` identifies the parent node and the run seed.
    """
    mult = max(children // parts, 1)
    pool = [i for i in range(5 * parts) for _ in range(mult)]
    random.Random(prf("package", key)).shuffle(pool)
    return tuple(pool[:children])


def package_index(forest: Forest, node: Node, key: tuple) -> int:
    """Index of ``node``'s package inside its parent's subdivision."""
    k = node[0]
    parent = forest.parent(node)
    children = forest.branching[k]
    parts = forest.f[k]
    perm = package_permutation(key + (forest.f, parent), children, parts)
    return perm[forest.child_rank(node)]


def leaf_palette_path(forest: Forest, t: int, key: tuple) -> tuple[int, ...]:
    """Package indices from the root's child down to the leaf at batch t."""
    path = forest.leaf_to_path(t)
    return tuple(package_index(forest, path[k], key) for k in range(forest.h - 1, -1, -1))


class PaletteCounter:
    """cnt(C): number of earlier leaves of the same tree carrying the same palette."""

    def __init__(self, forest: Forest, key: tuple):
        self.forest = forest
        self.key = key
        self.tree = -1
        self.next_leaf = 0
        self.counts: Counter = Counter()
        self.max_seen = 0

    def count(self, t: int) -> int:
        span = self.forest.spans[-1]
        tree = t // span
        if tree != self.tree:
            self.tree = tree
            self.counts.clear()
            self.next_leaf = tree * span
        while self.next_leaf < t:
            self.counts[leaf_palette_path(self.forest, self.next_leaf, self.key)] += 1
            self.next_leaf += 1
        c = self.counts[leaf_palette_path(self.forest, t, self.key)]
        self.max_seen = max(self.max_seen, c)
        return c


def select_palette(forest: Forest, marks: dict, t: int, key: tuple) -> tuple[int, ...] | None:
    """Leaf palette path, or None when a marked sibling on the path shares a package."""
    path = forest.leaf_to_path(t)
    for k in range(forest.h - 1, -1, -1):
        node = path[k]
        parent = path[k + 1]
        mine = None
        for other in marks:
            if other[0] != k or other == node or forest.parent(other) != parent:
                continue
            if mine is None:
                mine = package_index(forest, node, key)
            if package_index(forest, other, key) == mine:
                return None
    return leaf_palette_path(forest, t, key)


def low_kappa(l: int, r: int, cnt: int, shift: int, i: int) -> int:
    """Slot of the i-th (1-based) edge around u inside a palette of 25 * 2^(l+r+2) colors."""
    return (5 * (1 << (l + 1)) * (cnt + shift) + i) % (25 * (1 << (l + r + 2)))


def high_palette_size(delta: int, l: int, r: int) -> int:
    """Delta_0 = ceil(4 * (2^(l+r+1)/delta + 1))."""
    return -(-4 * ((1 << (l + r + 1)) + delta) // delta)


@dataclass
class ClassContext:
    """Everything a scheme instance needs to know about where it runs."""

    route: tuple[str, ...]
    epoch: int
    depth: int
    level: int
    l: int
    r: int
    delta: int
    eps: Fraction
    n: int
    batch_size: int
    batch_bound: int
    seed: int = 0
    instrument: bool = False

    def color(self, scheme: str, local: tuple[int, ...]) -> ColorId:
        return ColorId(self.route, self.epoch, self.depth, self.level, self.l, self.r, scheme, local)

    @property
    def key(self) -> tuple:
        return (self.seed, self.route, self.epoch, self.depth, self.level, self.l, self.r)


@dataclass
class SchemeStats:
    edges: int = 0
    colored: int = 0
    empty_palettes: int = 0
    freqvec_fallbacks: int = 0
    matcher_failures: int = 0
    max_cnt: int = 0
    cnt_bound: int = 0
    marks_high_water: dict = field(default_factory=dict)
    mark_bounds: dict = field(default_factory=dict)
    violations: list = field(default_factory=list)


class LowForestMixin:
    """Shared mark-set bookkeeping for the randomized and deterministic low schemes."""

    ctx: ClassContext
    stats: SchemeStats

    def _init_forests(self, low_l: int, low_r: int) -> None:
        self.low_l, self.low_r = low_l, low_r
        self.eps_pow = delta_power(self.ctx.delta, self.ctx.eps)
        self.all_vectors = enumerate_freq_vectors(self.ctx.delta, self.ctx.eps, low_r, self.ctx.batch_bound)
        self.vectors = selectable_vectors(self.all_vectors, self.eps_pow)
        self.forests = {f: Forest(f, low_r) for f in self.vectors}
        self.vector_index = {f: i for i, f in enumerate(self.all_vectors)}
        self.marks: dict[int, dict[tuple, dict]] = {}
        self.marks_at: dict[int, int] = {}
        self.degree_log: dict[int, dict[int, int]] | None = {} if self.ctx.instrument else None

    def _refresh(self, v: int, t: int) -> dict[tuple, dict]:
        per_v = self.marks.get(v)
        if per_v is None:
            per_v = self.marks[v] = {}
        if self.marks_at.get(v) != t:
            for f in list(per_v):
                per_v[f] = update_mark_set(per_v[f], self.forests[f], t)
                if not per_v[f]:
                    del per_v[f]
            self.marks_at[v] = t
        return per_v

    def _choose_vector(self, v: int, t: int) -> tuple[int, ...]:
        per_v = self._refresh(v, t)
        empty: dict = {}
        f, fallback = freq_vec_select(self.vectors, lambda g: per_v.get(g, empty),
                                      self.low_r, self.eps_pow, t)
        self.stats.freqvec_fallbacks += int(fallback)
        return f

    def _add_mark(self, v: int, f: tuple, t: int, tup=None) -> None:
        self.marks[v].setdefault(f, {})[(0, t)] = tup

    def _log_degree(self, v: int, t: int, degree: int) -> None:
        if self.degree_log is not None:
            self.degree_log.setdefault(v, {})[t] = degree

    def audit(self, t: int) -> None:
        """Eagerly lift every mark to batch t, then check the marked-set invariants."""
        for v in list(self.marks):
            self._refresh(v, t)
        # the degree log only needs batches of the trees still alive
        if self.degree_log is not None:
            for v, log in self.degree_log.items():
                for s in [s for s in log if s < t - self._longest_span()]:
                    del log[s]
        found = self._check(t)
        self.stats.violations.extend(found)
        for f in self.vectors:
            total = sum(len(per_v.get(f, ())) for per_v in self.marks.values())
            prev = self.stats.marks_high_water.get(f, 0)
            self.stats.marks_high_water[f] = max(prev, total)
            self.stats.mark_bounds[f] = (1 << (len(f) + 3)) * self.ctx.batch_size

    def _longest_span(self) -> int:
        return max(fo.spans[-1] for fo in self.forests.values())

    def _check(self, t: int) -> list:
        return check_invariant1(self.marks, self.low_r, t, self.degree_log, self.ctx.batch_size)


def _group_by_v(edges):
    by_v: dict[int, list] = {}
    for e in edges:
        by_v.setdefault(e[2], []).append(e)
    return by_v


def _u_ranks(edges) -> list[int]:
    seen: Counter = Counter()
    ranks = []
    for _, u, _v in edges:
        seen[u] += 1
        ranks.append(seen[u])
    return ranks


class RandLowScheme(LowForestMixin):
    """Forest-allocated random palettes for classes with a low-degree side."""

    tag = "L"

    def __init__(self, ctx: ClassContext, low_l: int, low_r: int):
        self.ctx = ctx
        self.stats = SchemeStats()
        self._init_forests(low_l, low_r)
        self.counters = {f: PaletteCounter(self.forests[f], ctx.key) for f in self.vectors}
        self.stats.cnt_bound = (1 << (low_r + 1)) // self.eps_pow

    def shift(self, u: int) -> int:
        return prf("shift", self.ctx.key, u) % (3 << (self.low_r + 1)) + 1

    def color_batch(self, t: int, edges, v_degree: dict[int, int]) -> dict[int, ColorId | None]:
        out: dict[int, ColorId | None] = {}
        ranks = dict(zip((e[0] for e in edges), _u_ranks(edges)))
        chosen = {}
        for v, group in _group_by_v(edges).items():
            f = self._choose_vector(v, t)
            chosen[v] = f
            forest = self.forests[f]
            palette = select_palette(forest, self.marks[v].get(f, {}), t, self.ctx.key)
            if palette is None:
                self.stats.empty_palettes += 1
                for seq, _, _ in group:
                    out[seq] = None
                continue
            cnt = self.counters[f].count(t)
            self.stats.max_cnt = max(self.stats.max_cnt, cnt)
            head = (self.vector_index[f], forest.tree_of(t)) + palette
            taken = set()
            for seq, u, _ in group:
                kappa = low_kappa(self.low_l, self.low_r, cnt, self.shift(u), ranks[seq])
                if kappa in taken:
                    out[seq] = None
                else:
                    taken.add(kappa)
                    out[seq] = self.ctx.color(self.tag, head + (kappa,))
        for v, f in chosen.items():
            self._add_mark(v, f, t)
            self._log_degree(v, t, v_degree[v])
        self.stats.edges += len(edges)
        self.stats.colored += sum(1 for c in out.values() if c is not None)
        if self.ctx.instrument:
            self.audit(t)
        return out


class ShortcutScheme:
    """Both sides small: greedy with a fresh palette of 2^(l+1) + 2^(r+1) colors per batch."""

    tag = "S"

    def __init__(self, ctx: ClassContext, low_l: int, low_r: int):
        self.ctx = ctx
        self.stats = SchemeStats()
        self.size = (1 << (low_l + 1)) + (1 << (low_r + 1))

    def color_batch(self, t: int, edges, v_degree=None) -> dict[int, ColorId | None]:
        colors = greedy_color([(("u", u), ("v", v)) for _, u, v in edges])
        if colors and max(colors) >= self.size:
            raise AssertionError("greedy exceeded the shortcut palette")
        self.stats.edges += len(edges)
        self.stats.colored += len(edges)
        return {seq: self.ctx.color(self.tag, (t, c)) for (seq, _, _), c in zip(edges, colors)}


class RandHighScheme:
    """Palette matrix indexed by shifted per-vertex counters, pruned buckets, König inside."""

    tag = "H"

    def __init__(self, ctx: ClassContext):
        self.ctx = ctx
        self.stats = SchemeStats()
        self.rows = ctx.delta >> ctx.l
        self.cols = ctx.delta >> ctx.r
        self.slots = high_palette_size(ctx.delta, ctx.l, ctx.r)
        self.cnt_u: Counter = Counter()
        self.cnt_v: Counter = Counter()
        self.stats.cnt_bound = max(self.rows, self.cols)

    def row_of(self, u: int) -> int:
        c = self.cnt_u[u]
        if c >= self.rows:
            raise AssertionError(f"counter of {u} reached {c} >= {self.rows}")
        return (prf("row", self.ctx.key, u) % self.rows + c) % self.rows

    def col_of(self, v: int) -> int:
        c = self.cnt_v[v]
        if c >= self.cols:
            raise AssertionError(f"counter of {v} reached {c} >= {self.cols}")
        return (prf("col", self.ctx.key, v) % self.cols + c) % self.cols

    def color_batch(self, t: int, edges, v_degree=None) -> dict[int, ColorId | None]:
        out: dict[int, ColorId | None] = {}
        rows = {u: self.row_of(u) for _, u, _ in edges}
        cols = {v: self.col_of(v) for _, _, v in edges}
        buckets: dict[tuple[int, int], list] = {}
        for e in edges:
            buckets.setdefault((rows[e[1]], cols[e[2]]), []).append(e)
        for (x, y) in sorted(buckets):
            group = buckets[(x, y)]
            du = Counter(u for _, u, _ in group)
            dv = Counter(v for _, _, v in group)
            keep = []
            for e in group:
                if max(du[e[1]], dv[e[2]]) > self.slots:
                    out[e[0]] = None
                else:
                    keep.append(e)
            colors = konig_color([(u, v) for _, u, v in keep], self.slots)
            for (seq, _, _), c in zip(keep, colors):
                out[seq] = self.ctx.color(self.tag, (x, y, c))
        for u in rows:
            self.cnt_u[u] += 1
        for v in cols:
            self.cnt_v[v] += 1
        self.stats.max_cnt = max(self.stats.max_cnt, max(self.cnt_u.values(), default=0),
                                 max(self.cnt_v.values(), default=0))
        self.stats.edges += len(edges)
        self.stats.colored += sum(1 for c in out.values() if c is not None)
        return out

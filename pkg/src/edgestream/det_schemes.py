"""Deterministic per-class schemes built on multiplicity-code expanders.

Low-degree classes reuse the forests and frequency vectors of the randomized
scheme, but a palette is a tuple (c_1, ..., c_h) whose coordinates come from
online matchings, and the per-edge slot comes from matching u into a vertex
expander.  High-degree classes encode (vertex id, batch counter) as a polynomial
and read bucket coordinates off matchings in two expanders.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import mpmath

from .expander import (
    ExpanderParams,
    MatchState,
    ceil_log,
    digits,
    gamma,
    offline_match,
    online_match,
    prime_in_range,
    tuple_to_int,
)
from .forest import Forest, Violation, check_invariant1
from .rand_schemes import ClassContext, LowForestMixin, SchemeStats, konig_color
from .stream import ColorId

__all__ = [
    "DetParams",
    "encode_counter_poly",
    "det_package_suffix",
    "det_palette_count",
    "check_invariant2",
    "DetLowScheme",
    "DetHighScheme",
]


def _delta_exponent(eps: Fraction) -> Fraction:
    return Fraction(eps) ** 2 / 10


@dataclass(frozen=True)
class DetParams:
    """Field size q and the overlap parameter lambda shared by both deterministic schemes."""

    q: int
    lam: int
    forced: bool

    @staticmethod
    def field_size(delta: int, eps: Fraction) -> int:
        exponent = float(_delta_exponent(eps)) * math.log2(delta)
        lo = max(2, math.ceil(2.0**exponent - 1e-12))
        return prime_in_range(lo, 2 * lo)

    @staticmethod
    def full_lambda(n: int, eps: Fraction) -> int:
        e = 2 + 3 / _delta_exponent(eps)
        with mpmath.workdps(60 + int(e * 4)):
            value = mpmath.power(mpmath.log(n, 2), e) * mpmath.power(e.numerator / mpmath.mpf(e.denominator), e)
            return max(1, int(mpmath.ceil(value)))

    @staticmethod
    def threshold_met(delta: int, n: int, eps: Fraction) -> bool:
        """delta >= (log2 n)^(20 / (eps^2 * delta_exp)), evaluated in log space."""
        if n <= 2:
            return True
        power = 20 / (Fraction(eps) ** 2 * _delta_exponent(eps))
        return math.log2(delta) >= float(power) * math.log2(math.log2(n))

    @classmethod
    def build(cls, delta: int, n: int, eps: Fraction, lam: int | None = None, force: bool = False) -> "DetParams":
        q = cls.field_size(delta, eps)
        if lam is not None:
            return cls(q, max(1, int(lam)), True)
        if force and not cls.threshold_met(delta, n, eps):
            # large enough that every evaluation map is injective: matchings always succeed
            return cls(q, q * q * max(n, delta), True)
        return cls(q, cls.full_lambda(n, eps), False)


def encode_counter_poly(vertex: int, cnt: int, cnt_dim: int, id_dim: int, q: int) -> tuple[int, ...]:
    """Coefficients of g + X^cnt_dim * f, g = digits of the counter, f = digits of the id."""
    return digits(cnt, q, cnt_dim) + digits(vertex, q, id_dim)


def _pad(coeffs: tuple[int, ...], a: int) -> tuple[int, ...]:
    if len(coeffs) > a:
        raise ValueError("polynomial longer than the expander's left dimension")
    return coeffs + (0,) * (a - len(coeffs))


def det_package_suffix(forest: Forest, marks: dict, t: int, matchers: list[ExpanderParams]) -> tuple[int, ...] | None:
    """Palette tuple for a vertex at batch t, or None when the matcher at level W fails.

    ``matchers[j]`` pairs child ranks of level-(j+1) nodes with coordinate c_(j+1).
    """
    h = forest.h
    path = forest.leaf_to_path(t)
    w = min(k for k, _ in marks) + 1 if marks else h
    c: list = [None] * h
    params = matchers[w - 1]
    state = MatchState(params)
    siblings = sorted(m for m in marks if m[0] == w - 1 and forest.parent(m) == path[w])
    for m in siblings:
        copy, right = _decode(marks[m][w - 1], params)
        state.occupy(copy, right)
    rank = forest.child_rank(path[w - 1])
    got = online_match(digits(rank, params.q, params.a), state)
    if got is None:
        return None
    c[w - 1] = got.code(params.q)
    if siblings:
        source = marks[siblings[0]]
        for j in range(w, h):
            c[j] = source[j]
    for i in range(w - 1):
        p = matchers[i]
        first = online_match(digits(forest.child_rank(path[i]), p.q, p.a), MatchState(p))
        c[i] = first.code(p.q)
    return tuple(c)


def _decode(code: int, params: ExpanderParams) -> tuple[int, tuple[int, ...]]:
    copy, rest = divmod(code, params.right_size)
    return copy, digits(rest, params.q, params.b + 2)


@lru_cache(maxsize=65536)
def _ranks_hitting(params: ExpanderParams, branching: int, code: int) -> frozenset:
    """Child ranks whose neighbourhood contains the right vertex encoded by ``code``."""
    _, right = _decode(code, params)
    x = right[0]
    return frozenset(k for k in range(branching)
                     if gamma(digits(k, params.q, params.a), x, params.b, params.q) == right)


def det_palette_count(forest: Forest, palette: tuple[int, ...], t: int, matchers: list[ExpanderParams]) -> int:
    """Number of earlier leaves in t's tree whose package contains ``palette``."""
    spans, branching = forest.spans, forest.branching
    allowed = [_ranks_hitting(matchers[j], branching[j], palette[j]) for j in range(forest.h)]
    offset = t - forest.tree_of(t) * spans[-1]
    below = [1]
    for j in range(forest.h):
        below.append(below[-1] * len(allowed[j]))
    count = 0
    for j in range(forest.h - 1, -1, -1):
        d = (offset // spans[j]) % branching[j]
        count += sum(1 for s in allowed[j] if s < d) * below[j]
        if d not in allowed[j]:
            break
    return count


def check_invariant2(marks: dict, r: int, t: int, degree_log, batch_size: int,
                     matchers_of=None) -> list[Violation]:
    """Invariant-1 rules plus suffix agreement at common ancestors and matching consistency.

    ``matchers_of(f)`` returns the matcher list of forest f; None skips the
    expander-edge check.
    """
    out = check_invariant1(marks, r, t, degree_log, batch_size)
    for v in sorted(marks):
        for f, nodes in marks[v].items():
            forest = Forest(f, r)
            items = sorted(nodes.items())
            for i, (a, ta) in enumerate(items):
                for b, tb in items[i + 1:]:
                    top = max(a[0], b[0]) + 1
                    while top <= forest.h and forest.ancestor(a, top) != forest.ancestor(b, top):
                        top += 1
                    for j in range(top, forest.h):
                        if ta[j] != tb[j]:
                            out.append(Violation(v, f, b, "4", f"suffix differs from {a} at c_{j + 1}"))
                            break
                    if a[0] == b[0] and forest.parent(a) == forest.parent(b) and ta[a[0]] == tb[b[0]]:
                        out.append(Violation(v, f, b, "4", f"sibling {a} reuses c_{a[0] + 1}"))
                if matchers_of is not None:
                    params = matchers_of(f)[a[0]]
                    copy, right = _decode(ta[a[0]], params)
                    rank = forest.child_rank(a)
                    if gamma(digits(rank, params.q, params.a), right[0], params.b, params.q) != right:
                        out.append(Violation(v, f, a, "4", "coordinate is not an expander neighbour"))
    return out


class DetLowScheme(LowForestMixin):
    tag = "DL"

    def __init__(self, ctx: ClassContext, low_l: int, low_r: int, params: DetParams):
        self.ctx = ctx
        self.stats = SchemeStats()
        self.params = params
        self._init_forests(low_l, low_r)
        q, lam = params.q, params.lam
        self.b0 = ceil_log(lam << (low_r + 1), q)
        self.vertex_matcher = ExpanderParams(q, max(1, ceil_log(ctx.n, q)), self.b0)
        self.slot_modulus = q ** (self.b0 + 2)
        self.matchers = {f: self._level_matchers(f) for f in self.vectors}
        self.stats.cnt_bound = 1 << (low_r + 1)

    def _level_matchers(self, f: tuple[int, ...]) -> list[ExpanderParams]:
        q, lam = self.params.q, self.params.lam
        branching = Forest(f, self.low_r).branching
        return [ExpanderParams(q, max(1, ceil_log(branching[j], q)), ceil_log(lam * f[j], q))
                for j in range(len(f))]

    def color_batch(self, t: int, edges, v_degree: dict[int, int]) -> dict[int, ColorId | None]:
        out: dict[int, ColorId | None] = {}
        rank_at_u: Counter = Counter()
        ranks = {}
        for seq, u, _ in edges:
            ranks[seq] = rank_at_u[u]
            rank_at_u[u] += 1
        chosen = {}
        by_v: dict[int, list] = {}
        for e in edges:
            by_v.setdefault(e[2], []).append(e)
        vm = self.vertex_matcher
        for v, group in by_v.items():
            f = self._choose_vector(v, t)
            forest = self.forests[f]
            marks = self.marks[v].get(f, {})
            palette = det_package_suffix(forest, marks, t, self.matchers[f])
            if palette is None:
                self.stats.empty_palettes += 1
                for seq, _, _ in group:
                    out[seq] = None
                continue
            chosen[v] = (f, palette)
            cnt = det_palette_count(forest, palette, t, self.matchers[f])
            self.stats.max_cnt = max(self.stats.max_cnt, cnt)
            head = (self.vector_index[f], forest.tree_of(t)) + palette
            state = MatchState(vm)
            for seq, u, _ in group:
                got = online_match(digits(u, vm.q, vm.a), state)
                if got is None:
                    self.stats.matcher_failures += 1
                    out[seq] = None
                    continue
                slot = (cnt + tuple_to_int(got.right, vm.q)) % self.slot_modulus
                out[seq] = self.ctx.color(self.tag, head + (got.t_index, slot, ranks[seq]))
        for v, (f, palette) in chosen.items():
            self._add_mark(v, f, t, palette)
        for v in by_v:
            self._log_degree(v, t, v_degree[v])
        self.stats.edges += len(edges)
        self.stats.colored += sum(1 for c in out.values() if c is not None)
        if self.ctx.instrument:
            self.audit(t)
        return out

    def _check(self, t: int) -> list:
        return check_invariant2(self.marks, self.low_r, t, self.degree_log, self.ctx.batch_size,
                                lambda f: self.matchers[f])


class DetHighScheme:
    tag = "DH"

    def __init__(self, ctx: ClassContext, params: DetParams):
        self.ctx = ctx
        self.stats = SchemeStats()
        self.params = params
        q, lam = params.q, params.lam
        self.rows = ctx.delta >> ctx.l
        self.cols = ctx.delta >> ctx.r
        self.id_dim = max(1, ceil_log(ctx.n, q))
        self.row_dim = ceil_log(self.rows, q)
        self.col_dim = ceil_log(self.cols, q)
        self.left = ExpanderParams(q, ceil_log(ctx.n * self.rows, q) + 2, ceil_log(lam * self.rows, q))
        self.right = ExpanderParams(q, ceil_log(ctx.n * self.cols, q) + 2, ceil_log(lam * self.cols, q))
        self.groups = -(-(1 << (ctx.l + ctx.r + 2)) // ctx.delta)
        self.cnt_u: Counter = Counter()
        self.cnt_v: Counter = Counter()
        self.stats.cnt_bound = max(self.rows, self.cols)
        self.bucket_overflows = 0

    def _poly_u(self, u: int) -> tuple[int, ...]:
        return _pad(encode_counter_poly(u, self.cnt_u[u], self.row_dim, self.id_dim, self.params.q), self.left.a)

    def _poly_v(self, v: int) -> tuple[int, ...]:
        return _pad(encode_counter_poly(v, self.cnt_v[v], self.col_dim, self.id_dim, self.params.q), self.right.a)

    def _coordinates(self, edges, centre: int, other: int, group_size: int, poly, params) -> dict[int, int]:
        """Match each centre's neighbours, in chunks of ``group_size``, into ``params``."""
        around: dict[int, list] = {}
        for e in edges:
            around.setdefault(e[centre], []).append(e)
        coord: dict[int, int] = {}
        for group in around.values():
            for start in range(0, len(group), group_size):
                chunk = group[start:start + group_size]
                polys = [poly(e[other]) for e in chunk]
                mates = offline_match(polys, params)
                for e, p, right in zip(chunk, polys, mates):
                    if right is None:
                        self.stats.matcher_failures += 1
                        right = gamma(p, 0, params.b, params.q)
                    coord[e[0]] = tuple_to_int(right, params.q)
        return coord

    def color_batch(self, t: int, edges, v_degree=None) -> dict[int, ColorId | None]:
        t_coord = self._coordinates(edges, 1, 2, self.cols, self._poly_v, self.right)
        s_coord = self._coordinates(edges, 2, 1, self.rows, self._poly_u, self.left)
        buckets: dict[tuple[int, int], list] = {}
        for e in edges:
            buckets.setdefault((s_coord[e[0]], t_coord[e[0]]), []).append(e)
        out: dict[int, ColorId | None] = {}
        for key in sorted(buckets):
            group = buckets[key]
            du = Counter(u for _, u, _ in group)
            dv = Counter(v for _, _, v in group)
            width = max(max(du.values()), max(dv.values()))
            if width > self.groups:
                self.bucket_overflows += 1
            colors = konig_color([(u, v) for _, u, v in group], width)
            for (seq, _, _), c in zip(group, colors):
                out[seq] = self.ctx.color(self.tag, key + (c,))
        for u in {e[1] for e in edges}:
            self.cnt_u[u] += 1
        for v in {e[2] for e in edges}:
            self.cnt_v[v] += 1
        self.stats.max_cnt = max(self.stats.max_cnt, max(self.cnt_u.values(), default=0),
                                 max(self.cnt_v.values(), default=0))
        self.stats.edges += len(edges)
        self.stats.colored += len(edges)
        return out

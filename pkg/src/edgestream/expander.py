"""Polynomials over prime fields, multiplicity-code expanders and online matching.

A left vertex of the expander is a polynomial of degree < a over F_q, stored as a
tuple of ``a`` coefficients (constant term first).  Its neighbours are the tuples
``gamma(f, x) = (x, f(x), H^1 f(x), ..., H^b f(x))`` for every field element x,
where ``H^i`` is the Hasse derivative.  Right vertices are never materialised.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

__all__ = [
    "FieldPoly",
    "ExpanderParams",
    "Match",
    "MatchState",
    "ceil_log",
    "digits",
    "poly_eval",
    "hasse_derivative",
    "taylor_coefficients",
    "gamma",
    "tuple_to_int",
    "online_match",
    "offline_match",
    "right_degree_audit",
    "is_prime",
    "prime_in_range",
]


def ceil_log(value: int, base: int) -> int:
    """Smallest d >= 0 with base**d >= value (exact integer arithmetic)."""
    if base < 2:
        raise ValueError("base must be at least 2")
    d, power = 0, 1
    while power < value:
        power *= base
        d += 1
    return d


def digits(value: int, base: int, length: int) -> tuple[int, ...]:
    """Base-``base`` digits of ``value``, least significant first, padded to ``length``."""
    if value < 0:
        raise ValueError("value must be non-negative")
    out = []
    for _ in range(length):
        value, rem = divmod(value, base)
        out.append(rem)
    if value:
        raise ValueError(f"value does not fit in {length} base-{base} digits")
    return tuple(out)


def tuple_to_int(entries: Sequence[int], base: int) -> int:
    """Inverse of :func:`digits`: interpret entries as base-``base`` digits."""
    acc = 0
    for e in reversed(entries):
        acc = acc * base + e
    return acc


def poly_eval(coeffs: Sequence[int], x: int, q: int) -> int:
    acc = 0
    for c in reversed(coeffs):
        acc = (acc * x + c) % q
    return acc


def hasse_derivative(coeffs: Sequence[int], i: int, q: int) -> tuple[int, ...]:
    """i-th Hasse derivative; coefficient of X^(k-i) is C(k, i) * c_k.

    The result keeps the input length (high coefficients become zero).
    """
    if i < 0:
        raise ValueError("derivative order must be non-negative")
    a = len(coeffs)
    out = [0] * a
    for k in range(i, a):
        out[k - i] = math.comb(k, i) * coeffs[k] % q
    return tuple(out)


def taylor_coefficients(coeffs: Sequence[int], x: int, q: int, count: int) -> list[int]:
    """[H^0 f(x), ..., H^{count-1} f(x)], i.e. the coefficients of f(X + x)."""
    c = list(coeffs)
    a = len(c)
    for i in range(min(count, a)):
        for k in range(a - 2, i - 1, -1):
            c[k] = (c[k] + x * c[k + 1]) % q
    if count > a:
        c.extend([0] * (count - a))
    return c[:count]


def gamma(coeffs: Sequence[int], x: int, b: int, q: int) -> tuple[int, ...]:
    """Neighbour of ``coeffs`` at evaluation point x: (x, f(x), H^1 f(x), ..., H^b f(x))."""
    return (x, *taylor_coefficients(coeffs, x, q, b + 1))


@dataclass(frozen=True)
class FieldPoly:
    """Polynomial over F_q with ``len(coeffs)`` as its declared dimension a."""

    q: int
    coeffs: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "coeffs", tuple(int(c) % self.q for c in self.coeffs))

    @classmethod
    def from_int(cls, value: int, q: int, a: int) -> "FieldPoly":
        return cls(q, digits(value, q, a))

    @property
    def a(self) -> int:
        return len(self.coeffs)

    def __call__(self, x: int) -> int:
        return poly_eval(self.coeffs, x, self.q)

    def hasse(self, i: int) -> "FieldPoly":
        return FieldPoly(self.q, hasse_derivative(self.coeffs, i, self.q))

    def gamma(self, x: int, b: int) -> tuple[int, ...]:
        return gamma(self.coeffs, x, b, self.q)


@dataclass(frozen=True)
class ExpanderParams:
    """Multiplicity-code expander: left F_q^{<a}[X], right F_q^{b+2}, plus stacked copies."""

    q: int
    a: int
    b: int

    @property
    def left_size(self) -> int:
        return self.q**self.a

    @property
    def right_size(self) -> int:
        return self.q ** (self.b + 2)

    @property
    def copies(self) -> int:
        # ceil((b+2) * log2 q); log2 q is irrational for odd primes so float ceil is exact
        if self.q == 2:
            return self.b + 2
        return math.ceil((self.b + 2) * math.log2(self.q))

    @property
    def capacity(self) -> int:
        """K = floor((2q-2)^(b+2) / (q * a^(b+2) * (b+2)^(b+2)))."""
        e = self.b + 2
        return (2 * self.q - 2) ** e // (self.q * self.a**e * e**e)

    @property
    def degree_bound(self) -> int:
        """Right-degree bound q^(a-b-1); the evaluation map is injective when b+1 >= a."""
        return self.q ** max(self.a - self.b - 1, 0)

    @property
    def in_lemma_range(self) -> bool:
        return 15 <= self.b + 2 <= self.a <= self.q


@dataclass(frozen=True)
class Match:
    copy: int
    right: tuple[int, ...]
    t_index: int

    def code(self, q: int) -> int:
        """Integer label of the matched right vertex, copy included."""
        return self.copy * q ** len(self.right) + tuple_to_int(self.right, q)


@dataclass
class MatchState:
    """Occupied right vertices per copy plus the arrival log."""

    params: ExpanderParams
    occupied: dict[int, set] = field(default_factory=dict)
    log: list = field(default_factory=list)

    def occupy(self, copy: int, right: tuple[int, ...]) -> None:
        self.occupied.setdefault(copy, set()).add(right)

    def unmatched_after(self) -> list[int]:
        """Entry j-1 = number of arrivals not matched within copies 1..j."""
        copies = self.params.copies
        counts = [0] * copies
        for _, m in self.log:
            last = copies if m is None else m.copy
            for j in range(min(last, copies)):
                counts[j] += 1
        return counts


def online_match(poly: Sequence[int], state: MatchState) -> Match | None:
    """Greedy online matching over stacked copies: lowest copy, then ascending x."""
    p = state.params
    coeffs = tuple(poly)
    if len(coeffs) > p.a and any(coeffs[p.a:]):
        raise ValueError("polynomial degree exceeds the expander's left dimension")
    cache: list[tuple[int, ...]] = []  # gamma at x = 0, 1, ... computed on demand

    def neighbour(x: int) -> tuple[int, ...]:
        while len(cache) <= x:
            cache.append(gamma(coeffs, len(cache), p.b, p.q))
        return cache[x]

    result = None
    for copy in range(p.copies):
        taken = state.occupied.get(copy, ())
        for x in range(p.q):
            right = neighbour(x)
            if right not in taken:
                result = Match(copy, right, copy * p.q + x)
                break
        if result is not None:
            break
    if result is not None:
        state.occupy(result.copy, result.right)
    state.log.append((coeffs, result))
    return result


def offline_match(polys: Sequence[Sequence[int]], params: ExpanderParams) -> list:
    """Maximum matching of the given left vertices into a single copy (augmenting paths).

    Returns, per left vertex, its right tuple or None when no augmenting path exists.
    """
    adj = [[gamma(tuple(f), x, params.b, params.q) for x in range(params.q)] for f in polys]
    owner: dict[tuple, int] = {}
    mate: list = [None] * len(polys)

    def augment(i: int, seen: set) -> bool:
        for right in adj[i]:
            if right in seen:
                continue
            seen.add(right)
            j = owner.get(right)
            if j is None or augment(j, seen):
                owner[right] = i
                mate[i] = right
                return True
        return False

    for i in range(len(polys)):
        augment(i, set())
    return mate


def right_degree_audit(params: ExpanderParams, cap: int = 200_000) -> int:
    """Exact maximum right degree by enumerating every (polynomial, point) edge."""
    total = params.left_size * params.q
    if total > cap:
        raise ValueError(f"enumeration of {total} edges exceeds cap {cap}")
    counts: dict[tuple, int] = {}
    for value in range(params.left_size):
        coeffs = digits(value, params.q, params.a)
        for x in range(params.q):
            key = gamma(coeffs, x, params.b, params.q)
            counts[key] = counts.get(key, 0) + 1
    return max(counts.values(), default=0)


_MR_BASES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)


def is_prime(n: int) -> bool:
    """Deterministic Miller-Rabin, exact for n < 3.3e24."""
    if n < 2:
        return False
    for p in _MR_BASES:
        if n % p == 0:
            return n == p
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in _MR_BASES:
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def prime_in_range(lo: int, hi: int) -> int:
    """Smallest prime in [lo, hi)."""
    if lo < 2 or hi < 2 * lo:
        raise ValueError("need lo >= 2 and hi >= 2*lo")
    for candidate in range(lo, hi):
        if is_prime(candidate):
            return candidate
    raise ArithmeticError(f"no prime in [{lo}, {hi})")  # unreachable by Bertrand


def iter_polys(q: int, a: int) -> Iterable[tuple[int, ...]]:
    for value in range(q**a):
        yield digits(value, q, a)

"""Closed-form color budgets, assembled from the run manifest.

Every pass epoch contributes, for each bipartite level and each degree class
(l, r), the palette size of the scheme that class dispatches to.  Greedy finishers
contribute 2*maxdeg - 1.  Colors produced inside a multigraph child are split in
two by the pairing rule, so each nesting step doubles the contribution.
"""

from __future__ import annotations

import math
from fractions import Fraction

from .expander import ExpanderParams, ceil_log
from .forest import Forest, delta_power, enumerate_freq_vectors
from .rand_schemes import high_palette_size

__all__ = [
    "shortcut_budget",
    "rand_low_budget",
    "rand_high_budget",
    "det_low_budget",
    "det_high_budget",
    "class_budget",
    "class_kind",
    "entry_budget",
    "namespace_budgets",
    "total_budget",
]


def _levels(n: int) -> int:
    return max(1, (n - 1).bit_length())


def class_kind(mode: str, delta: int, eps: Fraction, l: int, r: int) -> str:
    """Scheme tag a class dispatches to (mirrors the pipeline)."""
    if min(1 << l, 1 << r) ** 3 <= delta:
        hi = max(l, r)
        if (1 << (hi + 1)) <= delta_power(delta, eps):
            return "S"
        return "L" if mode == "rand" else "DL"
    return "H" if mode == "rand" else "DH"


def shortcut_budget(l: int, r: int, batches: int) -> int:
    return ((1 << (l + 1)) + (1 << (r + 1))) * batches


def _trees(forest: Forest, batches: int) -> int:
    return max(1, -(-batches // forest.spans[-1]))


def rand_low_budget(delta: int, eps: Fraction, lo: int, hi: int, batches: int, batch_bound: int) -> int:
    total = 0
    for f in enumerate_freq_vectors(delta, eps, hi, batch_bound):
        per_tree = 25 * (1 << (lo + hi + 2)) * math.prod(5 * x for x in f)
        total += per_tree * _trees(Forest(f, hi), batches)
    return total


def rand_high_budget(delta: int, l: int, r: int) -> int:
    return (delta >> l) * (delta >> r) * high_palette_size(delta, l, r)


def det_low_budget(delta: int, eps: Fraction, n: int, lo: int, hi: int, batches: int,
                   batch_bound: int, q: int, lam: int) -> int:
    b0 = ceil_log(lam << (hi + 1), q)
    vertex = ExpanderParams(q, max(1, ceil_log(n, q)), b0)
    head = vertex.copies * q * q ** (b0 + 2) * (1 << (lo + 1))
    total = 0
    for f in enumerate_freq_vectors(delta, eps, hi, batch_bound):
        forest = Forest(f, hi)
        product = 1
        for j, x in enumerate(f):
            p = ExpanderParams(q, max(1, ceil_log(forest.branching[j], q)), ceil_log(lam * x, q))
            product *= p.copies * q ** (p.b + 2)
        total += head * product * _trees(forest, batches)
    return total


def det_high_budget(delta: int, l: int, r: int, q: int, lam: int) -> int:
    rows, cols = delta >> l, delta >> r
    b1 = ceil_log(lam * rows, q)
    b2 = ceil_log(lam * cols, q)
    groups = -(-(1 << (l + r + 2)) // delta)
    return q ** (b1 + 2) * q ** (b2 + 2) * groups


def class_budget(entry: dict, l: int, r: int) -> int:
    """Budget of one degree class at one bipartite level of a manifest pass entry."""
    delta = entry["delta"]
    eps = Fraction(entry["epsilon"])
    mode = entry["mode"]
    kind = class_kind(mode, delta, eps, l, r)
    lo, hi = min(l, r), max(l, r)
    batches = max(1, entry["batches"])
    if kind == "S":
        return shortcut_budget(lo, hi, batches)
    if kind == "L":
        return rand_low_budget(delta, eps, lo, hi, batches, entry["batch_bound"])
    if kind == "H":
        return rand_high_budget(delta, l, r)
    if kind == "DL":
        return det_low_budget(delta, eps, entry["n"], lo, hi, batches, entry["batch_bound"],
                              entry["q"], entry["lam"])
    return det_high_budget(delta, l, r, entry["q"], entry["lam"])


def _multiplier(route) -> int:
    return 2 ** sum(1 for part in route if part.startswith("B"))


def entry_budget(entry: dict) -> int:
    """Budget of one manifest entry, doubling for each multigraph nesting step."""
    mult = _multiplier(entry["route"])
    if entry["kind"] == "greedy":
        return mult * (2 * entry["delta"] - 1)
    k = entry["delta"].bit_length() - 1
    per_level = sum(class_budget(entry, l, r) for l in range(k + 1) for r in range(k + 1))
    return mult * per_level * _levels(entry["n"])


def namespace_budgets(manifest: list[dict]) -> dict[tuple, int]:
    """Per-namespace budgets keyed like ``ColorId.namespace`` minus the level.

    Keys are (route, epoch, depth, l, r, scheme) for passes and
    (route, 0, depth, 0, 0, "G") for greedy finishers.  The value applies to each
    bipartite level separately.
    """
    out: dict[tuple, int] = {}
    for entry in manifest:
        route = tuple(entry["route"])
        mult = _multiplier(route)
        if entry["kind"] == "greedy":
            out[(route, 0, entry["depth"], 0, 0, "G")] = mult * (2 * entry["delta"] - 1)
            continue
        k = entry["delta"].bit_length() - 1
        eps = Fraction(entry["epsilon"])
        for l in range(k + 1):
            for r in range(k + 1):
                tag = class_kind(entry["mode"], entry["delta"], eps, l, r)
                key = (route, entry["epoch"], entry["depth"], l, r, tag)
                out[key] = mult * class_budget(entry, l, r)
    return out


def total_budget(manifest: list[dict]) -> int:
    return sum(entry_budget(e) for e in manifest)


"""Reproducible edge-stream generators.

All kinds build the stream in rounds (roughly one batch of edges each) so the
per-batch shape is controlled.  ``order="sorted"`` sorts the whole stream by
endpoint, which clusters every vertex's edges into as few batches as possible;
``order="random"`` shuffles inside each round.
"""

from __future__ import annotations

import random
from collections import Counter
from dataclasses import dataclass
from typing import IO

__all__ = ["SpecError", "GenSpec", "KINDS", "generate", "write_stream", "stream_lines"]

KINDS = ("random-bipartite", "unbalanced-stars", "d-regular-batches", "multigraph")


class SpecError(ValueError):
    pass


@dataclass(frozen=True)
class GenSpec:
    kind: str
    n: int
    delta: int
    seed: int = 0
    order: str = "random"
    d: int | None = None  # regular degree per round for d-regular-batches
    star: int = 16  # star size for unbalanced-stars

    def validate(self) -> None:
        if self.kind not in KINDS:
            raise SpecError(f"unknown generator kind {self.kind!r}")
        if self.order not in ("random", "sorted"):
            raise SpecError(f"unknown order {self.order!r}")
        if self.n < 4 or self.delta < 1:
            raise SpecError("need n >= 4 and delta >= 1")
        if self.kind == "d-regular-batches":
            d = self.degree
            if d < 1 or d > self.delta:
                raise SpecError(f"regular degree {d} must lie in [1, delta]")
            if d > self.side:
                raise SpecError(f"regular degree {d} exceeds the side size {self.side}")

    @property
    def degree(self) -> int:
        return self.d if self.d is not None else min(8, self.delta)

    @property
    def side(self) -> int:
        """Per-side vertex count of one d-regular round (n edges per round)."""
        return min(self.n // 2, self.n // self.degree)


def generate(spec: GenSpec) -> list[tuple[int, int]]:
    spec.validate()
    rng = random.Random(f"{spec.kind}:{spec.n}:{spec.delta}:{spec.seed}:{spec.d}:{spec.star}")
    builder = {
        "random-bipartite": _random_bipartite,
        "unbalanced-stars": _unbalanced_stars,
        "d-regular-batches": _regular_batches,
        "multigraph": _multigraph,
    }[spec.kind]
    rounds = builder(spec, rng)
    if spec.order == "sorted":
        edges = sorted(e for rnd in rounds for e in rnd)
    else:
        edges = []
        for rnd in rounds:
            rnd = list(rnd)
            rng.shuffle(rnd)
            edges.extend(rnd)
    deg = Counter(x for e in edges for x in e)
    if deg and max(deg.values()) > spec.delta:
        raise AssertionError("generator exceeded its declared maximum degree")
    return edges


def _halves(n: int) -> tuple[list[int], list[int]]:
    return list(range(n // 2)), list(range(n // 2, n))


def _random_bipartite(spec: GenSpec, rng: random.Random) -> list[list[tuple[int, int]]]:
    left, right = _halves(spec.n)
    seen: set = set()
    rounds = []
    for _ in range(spec.delta):
        perm = right[:]
        rng.shuffle(perm)
        rnd = []
        for a, b in zip(left, perm):
            if (a, b) not in seen:
                seen.add((a, b))
                rnd.append((a, b))
        rounds.append(rnd)
    return rounds


def _unbalanced_stars(spec: GenSpec, rng: random.Random) -> list[list[tuple[int, int]]]:
    """Left vertices get one edge per round; right centres get stars of ``star`` leaves."""
    left, right = _halves(spec.n)
    size = max(1, min(spec.star, spec.delta, len(left)))
    width = max(1, len(left) // size)
    deg: Counter = Counter()
    seen: set = set()
    rounds = []
    for i in range(spec.delta):
        start = (i * width) % len(right)
        centres = [right[(start + j) % len(right)] for j in range(min(width, len(right)))]
        leaves = left[:]
        rng.shuffle(leaves)
        rnd = []
        for c_index, centre in enumerate(centres):
            for leaf in leaves[c_index * size:(c_index + 1) * size]:
                e = (leaf, centre)
                if e in seen or deg[leaf] >= spec.delta or deg[centre] >= spec.delta:
                    continue
                seen.add(e)
                deg[leaf] += 1
                deg[centre] += 1
                rnd.append(e)
        rounds.append(rnd)
    return rounds


def _regular_batches(spec: GenSpec, rng: random.Random) -> list[list[tuple[int, int]]]:
    """delta // d rounds; each round is a d-regular bipartite graph on 2 * side vertices.

    Both halves are randomly relabelled and cut into blocks of ``side`` vertices.  A
    round joins one left block to one right block with d circulant shifts; shifts
    are never reused for the same block pair, so no edge repeats.
    """
    left, right = _halves(spec.n)
    rng.shuffle(left)
    rng.shuffle(right)
    d, k = spec.degree, spec.side
    lblocks = [left[i:i + k] for i in range(0, len(left) - k + 1, k)]
    rblocks = [right[i:i + k] for i in range(0, len(right) - k + 1, k)]
    unused = {(a, b): list(range(k)) for a in range(len(lblocks)) for b in range(len(rblocks))}
    rounds = []
    for _ in range(spec.delta // d):
        open_pairs = [p for p, free in unused.items() if len(free) >= d]
        if not open_pairs:
            raise SpecError("no block pair has d unused shifts left; lower d or delta")
        a, b = rng.choice(open_pairs)
        shifts = rng.sample(unused[(a, b)], d)
        for s in shifts:
            unused[(a, b)].remove(s)
        ls, rs = lblocks[a], rblocks[b]
        rounds.append([(ls[i], rs[(i + s) % k]) for s in shifts for i in range(k)])
    return rounds


def _multigraph(spec: GenSpec, rng: random.Random) -> list[list[tuple[int, int]]]:
    """Random general multigraph: each round is a random matching with multiplicities 1..3."""
    deg: Counter = Counter()
    rounds = []
    vertices = list(range(spec.n))
    budget = spec.delta
    while budget > 0:
        rng.shuffle(vertices)
        rnd = []
        for a, b in zip(vertices[0::2], vertices[1::2]):
            room = spec.delta - max(deg[a], deg[b])
            if room <= 0:
                continue
            mult = min(room, rng.randint(1, 3))
            deg[a] += mult
            deg[b] += mult
            rnd.extend([(min(a, b), max(a, b))] * mult)
        rounds.append(rnd)
        budget -= 2
    return rounds


def stream_lines(n: int, edges: list[tuple[int, int]], delta: int | None = None):
    head = f"{n} {len(edges)}" + (f" {delta}" if delta is not None else "")
    yield head
    for u, v in edges:
        yield f"{u} {v}"


def write_stream(out: IO[str], n: int, edges: list[tuple[int, int]], delta: int | None = None) -> None:
    for line in stream_lines(n, edges, delta):
        out.write(line + "\n")

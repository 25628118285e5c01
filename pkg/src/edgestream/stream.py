"""Edge streams: parsing, batching, degree classes, color records and scratch spools."""

from __future__ import annotations

import os
import tempfile
from collections import Counter
from dataclasses import dataclass
from typing import IO, Iterable, Iterator, Sequence

__all__ = [
    "StreamFormatError",
    "Edge",
    "Batch",
    "ColorId",
    "ColorRecord",
    "StreamHeader",
    "parse_header",
    "iter_edges",
    "read_batch",
    "iter_batches",
    "classify_batch",
    "RecordWriter",
    "Spool",
]

BOT = "BOT"


class StreamFormatError(ValueError):
    pass


@dataclass(frozen=True)
class Edge:
    u: int
    v: int
    seq: int


@dataclass(frozen=True)
class Batch:
    index: int
    edges: tuple[Edge, ...]


@dataclass(frozen=True, order=True)
class ColorId:
    """Hierarchical color identity; two ids are equal only if every coordinate matches."""

    route: tuple[str, ...]
    epoch: int
    depth: int
    level: int
    l: int
    r: int
    scheme: str
    local: tuple[int, ...]

    def __str__(self) -> str:
        route = "/".join(self.route) if self.route else "-"
        head = f"{route}:{self.epoch}:{self.depth}:{self.level}:{self.l}:{self.r}:{self.scheme}"
        return head + "".join(f":{x}" for x in self.local)

    @property
    def namespace(self) -> tuple:
        return (self.route, self.epoch, self.depth, self.level, self.l, self.r, self.scheme)

    def with_last(self, value: int) -> "ColorId":
        return ColorId(self.route, self.epoch, self.depth, self.level, self.l, self.r,
                       self.scheme, self.local[:-1] + (value,))

    def with_route_prefix(self, prefix: tuple[str, ...]) -> "ColorId":
        return ColorId(prefix + self.route, self.epoch, self.depth, self.level, self.l, self.r,
                       self.scheme, self.local)

    @classmethod
    def parse(cls, text: str) -> "ColorId":
        parts = text.split(":")
        if len(parts) < 7:
            raise StreamFormatError(f"malformed color id {text!r}")
        route = () if parts[0] == "-" else tuple(parts[0].split("/"))
        nums = [int(p) for p in parts[1:6]]
        return cls(route, *nums, parts[6], tuple(int(p) for p in parts[7:]))


@dataclass(frozen=True)
class ColorRecord:
    seq: int
    color: ColorId | None  # None is the uncolored marker

    def line(self) -> str:
        return f"{self.seq} {BOT if self.color is None else self.color}"


@dataclass(frozen=True)
class StreamHeader:
    n: int
    m: int | None = None
    delta: int | None = None


def parse_header(line: str) -> StreamHeader:
    fields = line.split()
    if not 1 <= len(fields) <= 3:
        raise StreamFormatError(f"header must be 'n [m] [delta]', got {line.strip()!r}")
    try:
        values = [int(x) for x in fields]
    except ValueError as exc:
        raise StreamFormatError(f"non-integer header field in {line.strip()!r}") from exc
    if values[0] < 1 or any(x < 0 for x in values):
        raise StreamFormatError(f"invalid header {line.strip()!r}")
    return StreamHeader(*values)


def iter_edges(lines: Iterable[str], n: int, start_seq: int = 0) -> Iterator[Edge]:
    """Parse 'u v' lines, skipping blanks; rejects self-loops and out-of-range ids."""
    seq = start_seq
    for lineno, line in enumerate(lines, start=2):
        text = line.strip()
        if not text or text.startswith("#"):
            continue
        fields = text.split()
        if len(fields) != 2:
            raise StreamFormatError(f"line {lineno}: expected 'u v', got {text!r}")
        try:
            u, v = int(fields[0]), int(fields[1])
        except ValueError as exc:
            raise StreamFormatError(f"line {lineno}: non-integer endpoint in {text!r}") from exc
        if not (0 <= u < n and 0 <= v < n):
            raise StreamFormatError(f"line {lineno}: endpoint out of range [0, {n}) in {text!r}")
        if u == v:
            raise StreamFormatError(f"line {lineno}: self-loop {text!r}")
        yield Edge(u, v, seq)
        seq += 1


def read_batch(cursor: Iterator[Edge], size: int, index: int) -> Batch | None:
    """Next batch of at most ``size`` edges, or None at end of stream."""
    edges = []
    for edge in cursor:
        edges.append(edge)
        if len(edges) == size:
            break
    if not edges:
        return None
    return Batch(index, tuple(edges))


def iter_batches(edges: Iterable[Edge], size: int) -> Iterator[Batch]:
    cursor = iter(edges)
    index = 0
    while (batch := read_batch(cursor, size, index)) is not None:
        yield batch
        index += 1


def classify_batch(edges: Sequence) -> dict[tuple[int, int], list]:
    """Split a batch into degree classes (floor(log2 deg u), floor(log2 deg v)).

    Accepts Edge objects or any objects/tuples whose last two fields are the
    left and right endpoint.
    """
    pairs = [(e.u, e.v) if isinstance(e, Edge) else (e[-2], e[-1]) for e in edges]
    deg_left = Counter(u for u, _ in pairs)
    deg_right = Counter(v for _, v in pairs)
    classes: dict[tuple[int, int], list] = {}
    for e, (u, v) in zip(edges, pairs):
        key = (deg_left[u].bit_length() - 1, deg_right[v].bit_length() - 1)
        classes.setdefault(key, []).append(e)
    return classes


class RecordWriter:
    """Writes color records; remembers colored seqs when asked to validate."""

    def __init__(self, out: IO[str] | None = None, validate: bool = False):
        self.out = out
        self.validate = validate
        self.colored: set[int] = set()
        self.lines = 0

    def emit(self, records: Iterable[ColorRecord]) -> None:
        for rec in records:
            if self.validate and rec.color is not None:
                if rec.seq in self.colored:
                    raise ValueError(f"duplicate colored record for seq {rec.seq}")
                self.colored.add(rec.seq)
            if self.out is not None:
                self.out.write(rec.line() + "\n")
            self.lines += 1


class Spool:
    """Scratch stream of (seq, u, v) triples; in memory until it exceeds ``threshold``."""

    def __init__(self, threshold: int = 1 << 16, directory: str | None = None):
        self.threshold = threshold
        self.directory = directory
        self._mem: list[tuple[int, int, int]] = []
        self._file: IO[str] | None = None
        self._path: str | None = None
        self.count = 0

    def append(self, seq: int, u: int, v: int) -> None:
        self.count += 1
        if self._file is None:
            self._mem.append((seq, u, v))
            if len(self._mem) > self.threshold:
                fd, self._path = tempfile.mkstemp(prefix="edgestream-", suffix=".spool",
                                                  dir=self.directory)
                self._file = os.fdopen(fd, "w+")
                for item in self._mem:
                    self._file.write("%d %d %d\n" % item)
                self._mem = []
        else:
            self._file.write(f"{seq} {u} {v}\n")

    def __len__(self) -> int:
        return self.count

    def __iter__(self) -> Iterator[tuple[int, int, int]]:
        if self._file is None:
            yield from self._mem
            return
        self._file.flush()
        self._file.seek(0)
        for line in self._file:
            s, u, v = line.split()
            yield int(s), int(u), int(v)

    def close(self) -> None:
        if self._file is not None:
            self._file.close()
            if self._path and os.path.exists(self._path):
                os.unlink(self._path)
            self._file = None
        self._mem = []

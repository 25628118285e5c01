"""End-to-end driver: epochs, bipartite levels, class dispatch, multigraph pairing, recursion.

One :class:`StreamColorer` colors one edge stream.  Its depth-0 pass streams the
input batch by batch; uncolored edges are spooled and replayed by deeper passes
until the residual fits the in-memory budget, where a greedy finisher closes the
run.  In multigraph mode every pass owns a half-degree child colorer that receives
edges parallel to one already waiting in the current batch.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import IO, Callable, Iterable

from .det_schemes import DetHighScheme, DetLowScheme, DetParams
from .forest import delta_power
from .rand_schemes import (
    ClassContext,
    RandHighScheme,
    RandLowScheme,
    ShortcutScheme,
    greedy_color,
)
from .stream import ColorId, ColorRecord, RecordWriter, Spool, StreamHeader, iter_edges, parse_header

__all__ = [
    "ColoringConfig",
    "RunStats",
    "RecursionCapError",
    "bipartize",
    "epoch_exponent",
    "low_dispatch",
    "pair_colors",
    "StreamColorer",
    "run_pipeline",
    "color_edges",
]

Sink = Callable[[int, "ColorId | None"], None]


class RecursionCapError(RuntimeError):
    pass


@dataclass
class ColoringConfig:
    mode: str = "rand"
    epsilon: Fraction = Fraction(1, 2)
    seed: int = 0
    batch_size: int | None = None
    multigraph: bool = False
    force_det_path: bool = False
    det_lambda: int | None = None
    instrument: bool = False
    record_pairs: bool = False
    max_depth: int | None = None
    memory_factor: float = 8.0
    scratch_dir: str | None = None
    spool_threshold: int = 1 << 16

    def __post_init__(self):
        if self.mode not in ("rand", "det"):
            raise ValueError(f"mode must be 'rand' or 'det', got {self.mode!r}")
        self.epsilon = Fraction(self.epsilon).limit_denominator(1000)
        if not 0 < self.epsilon <= 1:
            raise ValueError("epsilon must lie in (0, 1]")
        if self.batch_size is not None and self.batch_size < 1:
            raise ValueError("batch size must be positive")

    @property
    def progress_rate(self) -> float:
        """Expected colored fraction per pass, (2/3) * (4/5)^(1/eps)."""
        return (2 / 3) * (4 / 5) ** (1 / float(self.epsilon))

    def depth_cap(self, delta: int) -> int:
        return math.ceil(50 * max(1.0, math.log2(max(delta, 2))) / self.progress_rate)


@dataclass
class RunStats:
    edges: int = 0
    bot_records: int = 0
    depth: int = 0
    epochs: int = 0
    schemes: dict = field(default_factory=dict)  # (depth, tag) -> [edges, colored]
    manifest: list = field(default_factory=list)
    violations: list = field(default_factory=list)
    marks_high_water: dict = field(default_factory=dict)  # label -> (peak, bound)
    cnt_peaks: dict = field(default_factory=dict)  # label -> (peak, bound)
    freqvec_fallbacks: int = 0
    empty_palettes: int = 0
    matcher_failures: int = 0
    bucket_overflows: int = 0
    pairs: list = field(default_factory=list)
    pass_bots: dict = field(default_factory=dict)  # (route, depth) -> (edges, bots)

    def fraction(self, tag: str, depth: int = 0) -> float | None:
        entry = self.schemes.get((depth, tag))
        if not entry or not entry[0]:
            return None
        return entry[1] / entry[0]

    def as_dict(self) -> dict:
        return {
            "edges": self.edges,
            "bot_records": self.bot_records,
            "depth": self.depth,
            "epochs": self.epochs,
            "schemes": {f"{d}:{t}": v for (d, t), v in sorted(self.schemes.items())},
            "manifest": self.manifest,
            "violations": [str(v) for v in self.violations],
            "marks_high_water": {k: list(v) for k, v in self.marks_high_water.items()},
            "cnt_peaks": {k: list(v) for k, v in self.cnt_peaks.items()},
            "freqvec_fallbacks": self.freqvec_fallbacks,
            "empty_palettes": self.empty_palettes,
            "matcher_failures": self.matcher_failures,
            "bucket_overflows": self.bucket_overflows,
            "pairs": len(self.pairs),
        }


def bipartize(u: int, v: int) -> tuple[int, int, int]:
    """(level, side of u, side of v): level is the highest bit where the ids differ."""
    if u == v:
        raise ValueError("self-loops have no level")
    level = (u ^ v).bit_length() - 1
    return level, (u >> level) & 1, (v >> level) & 1


def epoch_exponent(max_degree: int) -> int:
    """Smallest k >= 1 with 2^k >= max_degree."""
    return max(1, (max(max_degree, 1) - 1).bit_length())


def low_dispatch(delta: int, l: int, r: int) -> bool:
    """True when min(2^l, 2^r) <= delta^(1/3)."""
    return min(1 << l, 1 << r) ** 3 <= delta


def pair_colors(color: ColorId) -> tuple[ColorId, ColorId]:
    """Child color k becomes 2k-1 for the forwarded edge and 2k for its evicted partner."""
    k = color.local[-1]
    return color.with_last(2 * k - 1), color.with_last(2 * k)


class _Epoch:
    def __init__(self, index: int, k: int, start: int):
        self.index = index
        self.k = k
        self.delta = 1 << k
        self.start = start
        self.batches = 0
        self.schemes: dict = {}
        self.closed = False


class _Pass:
    """One streaming pass over a (sub)stream at a fixed recursion depth."""

    def __init__(self, owner: "StreamColorer", depth: int, delta: int | None, m: int | None):
        self.owner = owner
        self.cfg = owner.cfg
        self.n = owner.n
        self.depth = depth
        self.batch_size = owner.batch_size
        self.declared_delta = delta
        self.m = m
        self.degrees: Counter = Counter()
        self.bot_degrees: Counter = Counter()
        self.spool = Spool(self.cfg.spool_threshold, self.cfg.scratch_dir)
        self.pending: dict = {}
        self.batch_index = 0
        self.epochs: list[_Epoch] = []
        self.edges = 0
        self.bots = 0
        self.child: StreamColorer | None = None
        self.partner: dict[int, tuple[int, int, int]] = {}
        if delta is not None:
            self.epochs.append(_Epoch(0, epoch_exponent(delta), 0))

    # ----- input side -----
    def push(self, seq: int, u: int, v: int) -> None:
        self.edges += 1
        if self.cfg.multigraph:
            key = (u, v) if u < v else (v, u)
            old = self.pending.pop(key, None)
            if old is not None:
                self.partner[seq] = old
                if self.cfg.instrument or self.cfg.record_pairs:
                    self.owner.stats.pairs.append((self.owner.route, seq, old[0]))
                self._child().push(seq, u, v)
                return
            self.pending[key] = (seq, u, v)
        else:
            self.pending[len(self.pending)] = (seq, u, v)
        if len(self.pending) >= self.batch_size:
            self._flush()

    def _child(self) -> "StreamColorer":
        if self.child is None:
            half = None if self.declared_delta is None else max(1, self.epochs[0].delta // 2)
            self.child = StreamColorer(
                self.n, half, None, self.cfg,
                route=self.owner.route + (f"B{self.depth}",),
                sink=self._child_emit, stats=self.owner.stats, batch_size=self.batch_size)
        return self.child

    def _child_emit(self, seq: int, color: ColorId | None) -> None:
        if color is None:
            return
        old = self.partner.pop(seq)
        first, second = pair_colors(color)
        self.owner.sink(seq, first)
        self.owner.sink(old[0], second)

    # ----- batch processing -----
    def _flush(self) -> None:
        edges = list(self.pending.values())
        self.pending = {}
        if edges:
            self._process(edges)

    def _epoch_for(self, edges) -> _Epoch:
        for _, u, v in edges:
            self.degrees[u] += 1
            self.degrees[v] += 1
        peak = max(self.degrees[x] for _, u, v in edges for x in (u, v))
        if self.declared_delta is not None:
            if peak > self.epochs[0].delta:
                raise ValueError(f"observed degree {peak} exceeds declared maximum degree")
            return self.epochs[0]
        if not self.epochs or peak > self.epochs[-1].delta:
            self._close_epoch()
            self.epochs.append(_Epoch(len(self.epochs), epoch_exponent(peak), self.batch_index))
        return self.epochs[-1]

    def _batch_bound(self, delta: int) -> int:
        cap = self.n * delta // 2
        total = cap if self.m is None else min(self.m, cap)
        return max(1, -(-total // self.batch_size))

    def _scheme(self, epoch: _Epoch, level: int, l: int, r: int):
        key = (level, l, r)
        scheme = epoch.schemes.get(key)
        if scheme is not None:
            return scheme
        cfg = self.cfg
        ctx = ClassContext(self.owner.route, epoch.index, self.depth, level, l, r, epoch.delta,
                           cfg.epsilon, self.n, self.batch_size, self._batch_bound(epoch.delta),
                           cfg.seed, cfg.instrument)
        if low_dispatch(epoch.delta, l, r):
            lo, hi = min(l, r), max(l, r)
            if (1 << (hi + 1)) <= delta_power(epoch.delta, cfg.epsilon):
                scheme = ShortcutScheme(ctx, lo, hi)
            elif cfg.mode == "rand":
                scheme = RandLowScheme(ctx, lo, hi)
            else:
                scheme = DetLowScheme(ctx, lo, hi, self.owner.det_params(epoch.delta))
        elif cfg.mode == "rand":
            scheme = RandHighScheme(ctx)
        else:
            scheme = DetHighScheme(ctx, self.owner.det_params(epoch.delta))
        epoch.schemes[key] = scheme
        return scheme

    def _process(self, edges) -> None:
        epoch = self._epoch_for(edges)
        t = self.batch_index - epoch.start
        by_level: dict[int, list] = {}
        for seq, u, v in edges:
            level, su, _ = bipartize(u, v)
            left, right = (u, v) if su == 0 else (v, u)
            by_level.setdefault(level, []).append((seq, left, right))
        results: dict[int, ColorId | None] = {}
        for level in sorted(by_level):
            items = by_level[level]
            deg_left = Counter(a for _, a, _ in items)
            deg_right = Counter(b for _, _, b in items)
            classes: dict[tuple[int, int], list] = {}
            for e in items:
                key = (deg_left[e[1]].bit_length() - 1, deg_right[e[2]].bit_length() - 1)
                classes.setdefault(key, []).append(e)
            for (l, r) in sorted(classes):
                scheme = self._scheme(epoch, level, l, r)
                group = classes[(l, r)]
                if l > r and isinstance(scheme, (RandLowScheme, DetLowScheme)):
                    group = [(s, b, a) for s, a, b in group]
                    marks_side = deg_left
                else:
                    marks_side = deg_right
                results.update(scheme.color_batch(t, group, marks_side))
        for seq, u, v in sorted(edges):
            color = results[seq]
            if color is None:
                self.bots += 1
                self.spool.append(seq, u, v)
                self.bot_degrees[u] += 1
                self.bot_degrees[v] += 1
            self.owner.sink(seq, color)
        epoch.batches += 1
        self.batch_index += 1

    def _close_epoch(self) -> None:
        if not self.epochs:
            return
        epoch = self.epochs[-1]
        if epoch.closed:
            return
        epoch.closed = True
        stats = self.owner.stats
        stats.epochs += 1
        stats.manifest.append({
            "kind": "pass", "route": list(self.owner.route), "epoch": epoch.index, "depth": self.depth,
            "delta": epoch.delta, "batches": epoch.batches, "batch_bound": self._batch_bound(epoch.delta),
            "n": self.n, "batch_size": self.batch_size, "mode": self.cfg.mode,
            "epsilon": str(self.cfg.epsilon),
            **self.owner.det_manifest(epoch.delta),
        })
        for (level, l, r), scheme in sorted(epoch.schemes.items()):
            s = scheme.stats
            entry = stats.schemes.setdefault((self.depth, scheme.tag), [0, 0])
            entry[0] += s.edges
            entry[1] += s.colored
            stats.freqvec_fallbacks += s.freqvec_fallbacks
            stats.empty_palettes += s.empty_palettes
            stats.matcher_failures += s.matcher_failures
            stats.bucket_overflows += getattr(scheme, "bucket_overflows", 0)
            stats.violations.extend(s.violations)
            label = f"{'/'.join(self.owner.route) or '-'}:{epoch.index}:{self.depth}:{level}:{l}:{r}:{scheme.tag}"
            if s.cnt_bound:
                stats.cnt_peaks[label] = (s.max_cnt, s.cnt_bound)
            for f, peak in s.marks_high_water.items():
                stats.marks_high_water[f"{label}:{','.join(map(str, f))}"] = (peak, s.mark_bounds[f])

    def finish(self) -> Spool:
        self._flush()
        self._close_epoch()
        if self.child is not None:
            self.child.close()
        self.owner.stats.pass_bots[("/".join(self.owner.route), self.depth)] = (self.edges, self.bots)
        return self.spool


class StreamColorer:
    """Colors one stream; ``sink(seq, color)`` receives every record as it is produced."""

    def __init__(self, n: int, delta: int | None, m: int | None, cfg: ColoringConfig,
                 route: tuple[str, ...] = (), sink: Sink | None = None,
                 stats: RunStats | None = None, batch_size: int | None = None):
        self.n = n
        self.delta = delta
        self.m = m
        self.cfg = cfg
        self.route = route
        self.sink = sink or (lambda seq, color: None)
        self.stats = stats if stats is not None else RunStats()
        self.batch_size = batch_size or cfg.batch_size or n
        self._det_cache: dict[int, DetParams] = {}
        self.memory_edges = int(cfg.memory_factor * n)
        self.buffer: list | None = None
        if (m is not None and m <= self.memory_edges) or (cfg.mode == "det" and not cfg.force_det_path):
            self.buffer = []
            self.first = None
        else:
            self.first = _Pass(self, 0, delta, m)
        self.closed = False

    def det_params(self, delta: int) -> DetParams:
        if delta not in self._det_cache:
            self._det_cache[delta] = DetParams.build(delta, self.n, self.cfg.epsilon,
                                                     self.cfg.det_lambda, self.cfg.force_det_path)
        return self._det_cache[delta]

    def det_manifest(self, delta: int) -> dict:
        if self.cfg.mode != "det":
            return {}
        p = self.det_params(delta)
        return {"q": p.q, "lam": p.lam}

    def push(self, seq: int, u: int, v: int) -> None:
        if u == v:
            raise ValueError(f"self-loop at edge {seq}")
        self.stats.edges += 1 if not self.route else 0
        if self.buffer is not None:
            self.buffer.append((seq, u, v))
        else:
            self.first.push(seq, u, v)

    def close(self) -> None:
        if self.closed:
            return
        self.closed = True
        if self.buffer is not None:
            edges, self.buffer = self.buffer, None
            if self.cfg.mode == "det" and not self.cfg.force_det_path and edges:
                deg = Counter(x for _, u, v in edges for x in (u, v))
                delta = 1 << epoch_exponent(max(deg.values()))
                if DetParams.threshold_met(delta, self.n, self.cfg.epsilon):
                    self.first = _Pass(self, 0, self.delta, len(edges))
                    for e in edges:
                        self.first.push(*e)
                    self._recurse(self.first.finish())
                    return
            self._greedy(edges, 0)
            return
        self._recurse(self.first.finish())

    def _recurse(self, spool: Spool) -> None:
        depth = 1
        cap = self.cfg.max_depth
        while len(spool):
            residual = Counter()
            for _, u, v in spool:
                residual[u] += 1
                residual[v] += 1
            delta = 1 << epoch_exponent(max(residual.values()))
            if cap is None:
                cap = self.cfg.depth_cap(delta)
            if depth > cap:
                raise RecursionCapError(f"recursion depth {depth} exceeds cap {cap}")
            if len(spool) <= self.memory_edges:
                edges = list(spool)
                spool.close()
                self._greedy(edges, depth)
                return
            p = _Pass(self, depth, delta, len(spool))
            for seq, u, v in spool:
                p.push(seq, u, v)
            spool.close()
            spool = p.finish()
            self.stats.depth = max(self.stats.depth, depth) if not self.route else self.stats.depth
            depth += 1
        spool.close()

    def _greedy(self, edges, depth: int) -> None:
        if not edges:
            return
        colors = greedy_color([(u, v) for _, u, v in edges])
        deg = Counter(x for _, u, v in edges for x in (u, v))
        peak = max(deg.values())
        if max(colors) > 2 * peak - 2:
            raise AssertionError("greedy finisher exceeded 2*maxdeg - 1 colors")
        self.stats.manifest.append({"kind": "greedy", "route": list(self.route), "depth": depth,
                                    "delta": peak})
        if not self.route:
            self.stats.depth = max(self.stats.depth, depth)
        entry = self.stats.schemes.setdefault((depth, "G"), [0, 0])
        entry[0] += len(edges)
        entry[1] += len(edges)
        for (seq, _, _), c in sorted(zip(edges, colors)):
            self.sink(seq, ColorId(self.route, 0, depth, 0, 0, 0, "G", (c,)))


def run_pipeline(lines: Iterable[str], cfg: ColoringConfig, out: IO[str] | None = None,
                 header: StreamHeader | None = None) -> RunStats:
    """Color a text edge stream (header line first unless ``header`` is given)."""
    it = iter(lines)
    if header is None:
        first = next((ln for ln in it if ln.strip() and not ln.startswith("#")), None)
        if first is None:
            raise ValueError("empty input: missing header")
        header = parse_header(first)
    writer = RecordWriter(out, validate=cfg.instrument)
    stats = RunStats()

    def sink(seq: int, color: ColorId | None) -> None:
        if color is None:
            stats.bot_records += 1
        writer.emit([ColorRecord(seq, color)])

    colorer = StreamColorer(header.n, header.delta, header.m, cfg, sink=sink, stats=stats)
    for edge in iter_edges(it, header.n):
        colorer.push(edge.seq, edge.u, edge.v)
    colorer.close()
    if header.m is not None and stats.edges != header.m:
        raise ValueError(f"header declares {header.m} edges but the stream has {stats.edges}")
    return stats


def color_edges(edges: Iterable[tuple[int, int]], n: int, cfg: ColoringConfig,
                delta: int | None = None, m: int | None = None) -> tuple[dict[int, ColorId], RunStats]:
    """In-process convenience wrapper: returns {seq: final color} and the run statistics."""
    final: dict[int, ColorId] = {}
    stats = RunStats()

    def sink(seq: int, color: ColorId | None) -> None:
        if color is None:
            stats.bot_records += 1
        else:
            final[seq] = color

    colorer = StreamColorer(n, delta, m, cfg, sink=sink, stats=stats)
    for seq, (u, v) in enumerate(edges):
        colorer.push(seq, int(u), int(v))
    colorer.close()
    return final, stats

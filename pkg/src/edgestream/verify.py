"""Post-hoc checks of a finished run.

The verifier reads the input and output streams with its own minimal parser and
keeps plain per-vertex dictionaries; it does not reuse the colorer's batching,
classification or adjacency bookkeeping.  It may use O(m) memory.
"""

from __future__ import annotations

from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import Iterable

from .budget import namespace_budgets, total_budget

__all__ = [
    "IncompleteOutputError",
    "BudgetExceededError",
    "read_input",
    "read_output",
    "ProperReport",
    "verify_proper",
    "BudgetReport",
    "verify_budget",
    "measure_fraction",
    "SpaceReport",
    "space_audit",
    "verify_pairs",
    "bot_tally",
]


class IncompleteOutputError(ValueError):
    pass


class BudgetExceededError(AssertionError):
    pass


def read_input(lines: Iterable[str]) -> tuple[int, list[tuple[int, int]]]:
    """(n, edges) from 'n [m] [delta]' followed by 'u v' lines."""
    n = None
    edges = []
    for raw in lines:
        text = raw.split("#", 1)[0].strip()
        if not text:
            continue
        if n is None:
            n = int(text.split()[0])
            continue
        a, b = text.split()
        edges.append((int(a), int(b)))
    if n is None:
        raise ValueError("input has no header")
    return n, edges


def read_output(lines: Iterable[str]) -> tuple[dict[int, str], Counter]:
    """Final color string per seq, plus the number of BOT lines per seq."""
    final: dict[int, str] = {}
    bots: Counter = Counter()
    for raw in lines:
        text = raw.strip()
        if not text:
            continue
        seq_text, color = text.split(maxsplit=1)
        seq = int(seq_text)
        if color == "BOT":
            bots[seq] += 1
        elif seq in final:
            raise IncompleteOutputError(f"seq {seq} colored twice")
        else:
            final[seq] = color
    return final, bots


@dataclass
class ProperReport:
    edges: int
    distinct_colors: int
    violations: list = field(default_factory=list)  # (seq_a, seq_b, vertex, color)

    @property
    def ok(self) -> bool:
        return not self.violations


def verify_proper(input_lines: Iterable[str], output_lines: Iterable[str]) -> ProperReport:
    _, edges = read_input(input_lines)
    final, _ = read_output(output_lines)
    missing = [s for s in range(len(edges)) if s not in final]
    if missing:
        raise IncompleteOutputError(f"{len(missing)} edges have no color, first seq {missing[0]}")
    extra = [s for s in final if not 0 <= s < len(edges)]
    if extra:
        raise IncompleteOutputError(f"output names unknown seq {extra[0]}")
    owner: dict[tuple[int, str], int] = {}
    violations = []
    for seq, (u, v) in enumerate(edges):
        color = final[seq]
        for x in (u, v):
            other = owner.setdefault((x, color), seq)
            if other != seq:
                violations.append((other, seq, x, color))
    return ProperReport(len(edges), len(set(final.values())), violations)


@dataclass
class BudgetReport:
    distinct_colors: int
    budget: int
    breaches: list = field(default_factory=list)  # (namespace, used, allowed)

    @property
    def ok(self) -> bool:
        return self.distinct_colors <= self.budget and not self.breaches

    def check(self) -> "BudgetReport":
        if not self.ok:
            raise BudgetExceededError(
                f"{self.distinct_colors} colors against budget {self.budget}; breaches {self.breaches[:3]}")
        return self


def _namespace(color: str) -> tuple:
    parts = color.split(":")
    route = () if parts[0] == "-" else tuple(parts[0].split("/"))
    epoch, depth, level, l, r = (int(p) for p in parts[1:6])
    return (route, epoch, depth, l, r, parts[6]), level


def verify_budget(output_lines: Iterable[str], manifest: list[dict]) -> BudgetReport:
    """Distinct colors against the total budget and against every per-class budget."""
    final, _ = read_output(output_lines)
    colors = set(final.values())
    allowed = namespace_budgets(manifest)
    used: Counter = Counter()
    for color in colors:
        key, level = _namespace(color)
        used[(key, level)] += 1
    breaches = []
    for (key, level), count in sorted(used.items()):
        limit = allowed.get(key)
        if limit is None or count > limit:
            breaches.append((key + (level,), count, limit))
    return BudgetReport(len(colors), total_budget(manifest), breaches)


def bot_tally(output_lines: Iterable[str]) -> Counter:
    """BOT records per pass: the k-th BOT line of a seq belongs to pass k-1."""
    seen: Counter = Counter()
    per_pass: Counter = Counter()
    for raw in output_lines:
        text = raw.strip()
        if text.endswith(" BOT"):
            seq = int(text.split()[0])
            per_pass[seen[seq]] += 1
            seen[seq] += 1
    return per_pass


def measure_fraction(runs: Iterable, depth: int = 0) -> dict[str, dict[str, float]]:
    """Per-scheme colored fraction at ``depth``: mean over runs of the per-run fraction.

    ``runs`` holds RunStats objects (or their ``schemes`` dicts).
    """
    samples: dict[str, list[float]] = defaultdict(list)
    for run in runs:
        schemes = getattr(run, "schemes", run)
        for (d, tag), (edges, colored) in schemes.items():
            if d == depth and edges:
                samples[tag].append(colored / edges)
    out = {}
    for tag, values in sorted(samples.items()):
        mean = sum(values) / len(values)
        out[tag] = {"runs": len(values), "mean": mean, "min": min(values), "max": max(values)}
    return out


@dataclass
class SpaceReport:
    marks: dict  # label -> (peak, bound)
    counters: dict  # label -> (peak, bound)
    total_peak: int
    total_bound: int
    breaches: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.breaches


def space_audit(stats) -> SpaceReport:
    """Marked-set and palette-counter high-water marks of an instrumented run.

    The total bound is the per-vector bound summed over the vectors of the run,
    i.e. the vector count is the explicit multiplier.
    """
    breaches = []
    for label, (peak, bound) in sorted(stats.marks_high_water.items()):
        if peak > bound:
            breaches.append(("marks", label, peak, bound))
    for label, (peak, bound) in sorted(stats.cnt_peaks.items()):
        if peak > bound:
            breaches.append(("cnt", label, peak, bound))
    breaches.extend(("invariant", str(v), None, None) for v in stats.violations)
    total_peak = sum(p for p, _ in stats.marks_high_water.values())
    total_bound = sum(b for _, b in stats.marks_high_water.values())
    return SpaceReport(dict(stats.marks_high_water), dict(stats.cnt_peaks), total_peak, total_bound, breaches)


def verify_pairs(output_lines: Iterable[str], pairs: Iterable[tuple]) -> list[str]:
    """Check top-level multigraph pairs: forwarded edge odd last coordinate 2k-1, partner 2k.

    Also checks that every color produced inside a child belongs to such a pair.
    Returns a list of problems (empty when consistent).
    """
    final, _ = read_output(output_lines)
    problems = []
    paired: set[int] = set()
    for route, seq, partner in pairs:
        if route:
            continue
        paired.update((seq, partner))
        a, b = final.get(seq), final.get(partner)
        if a is None or b is None:
            problems.append(f"pair ({seq},{partner}) not fully colored")
            continue
        head_a, last_a = a.rsplit(":", 1)
        head_b, last_b = b.rsplit(":", 1)
        ka, kb = int(last_a), int(last_b)
        if head_a != head_b or ka % 2 != 1 or kb != ka + 1 or a.startswith("-:"):
            problems.append(f"pair ({seq},{partner}) colors {a} / {b} are not 2k-1 / 2k")
    for seq, color in final.items():
        if not color.startswith("-:") and seq not in paired:
            problems.append(f"seq {seq} has child color {color} but no recorded pair")
    return problems

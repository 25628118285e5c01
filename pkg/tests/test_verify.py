import io
from collections import Counter
from fractions import Fraction

import pytest

import edgestream.rand_schemes as rand_schemes
from edgestream.generators import GenSpec, generate, stream_lines
from edgestream.pipeline import ColoringConfig, run_pipeline
from edgestream.verify import (
    BudgetExceededError,
    IncompleteOutputError,
    bot_tally,
    measure_fraction,
    space_audit,
    verify_budget,
    verify_pairs,
    verify_proper,
)


def run(kind="unbalanced-stars", n=256, delta=64, seed=1, **kw):
    edges = generate(GenSpec(kind, n, delta, seed))
    cfg = ColoringConfig(epsilon=kw.pop("epsilon", Fraction(1, 3)), seed=seed,
                         memory_factor=kw.pop("memory_factor", 0.5), **kw)
    buf = io.StringIO()
    stats = run_pipeline(stream_lines(n, edges, delta), cfg, buf)
    return list(stream_lines(n, edges, delta)), buf.getvalue().splitlines(), stats, edges


def test_correct_run_has_no_violations():
    inp, out, _, edges = run()
    report = verify_proper(inp, out)
    assert report.ok
    assert report.edges == len(edges)


def test_planted_duplicate_is_the_only_violation():
    inp, out, _, edges = run()
    final = {}
    for line in out:
        seq, color = line.split()
        if color != "BOT":
            final[int(seq)] = color
    # two edges sharing a vertex: give the second the first's color
    first = 0
    second = next(i for i in range(1, len(edges)) if set(edges[i]) & set(edges[first]))
    shared = (set(edges[first]) & set(edges[second])).pop()
    tampered = [ln for ln in out if not ln.startswith(f"{second} ") or ln.endswith("BOT")]
    tampered.append(f"{second} {final[first]}")
    report = verify_proper(inp, tampered)
    assert report.violations == [(first, second, shared, final[first])]


def test_missing_record_is_incomplete():
    inp, out, _, _ = run()
    dropped = [ln for ln in out if not ln.startswith("0 ")]
    with pytest.raises(IncompleteOutputError):
        verify_proper(inp, dropped)


def test_double_final_color_rejected():
    inp, out, _, _ = run()
    extra = out + [next(ln for ln in out if not ln.endswith("BOT"))]
    with pytest.raises(IncompleteOutputError):
        verify_proper(inp, extra)


def test_budget_holds_and_negative_control():
    _, out, stats, _ = run()
    report = verify_budget(out, stats.manifest).check()
    assert report.distinct_colors <= report.budget
    shrunk = [dict(e, delta=2) if e["kind"] == "pass" else e for e in stats.manifest]
    bad = verify_budget(out, shrunk)
    assert not bad.ok
    with pytest.raises(BudgetExceededError):
        bad.check()


def test_empty_graph_uses_no_colors():
    report = verify_budget([], [])
    assert (report.distinct_colors, report.budget) == (0, 0)
    assert verify_proper(["5 0"], []).ok


def test_bot_tally_by_pass():
    out = ["0 BOT", "1 BOT", "0 BOT", "0 -:0:2:0:0:0:G:0", "1 -:0:1:0:0:0:G:0"]
    assert bot_tally(out) == Counter({0: 2, 1: 1})


def test_bot_tally_matches_stats():
    _, out, stats, _ = run()
    assert sum(bot_tally(out).values()) == stats.bot_records


def test_space_audit_clean_run():
    _, _, stats, _ = run(instrument=True)
    report = space_audit(stats)
    assert report.ok
    assert report.total_peak <= report.total_bound
    assert report.marks


def test_space_audit_fires_when_lifting_is_skipped(monkeypatch):
    monkeypatch.setattr(rand_schemes, "update_mark_set", lambda marks, forest, t: dict(marks))
    _, _, stats, _ = run(instrument=True)
    report = space_audit(stats)
    assert not report.ok
    assert any(kind == "invariant" for kind, *_ in report.breaches)


def test_space_audit_empty_stream():
    _, _, stats, _ = run(n=8, delta=1, kind="random-bipartite")
    assert space_audit(stats).total_peak == 0


def test_measure_fraction_averages_runs():
    class Fake:
        def __init__(self, schemes):
            self.schemes = schemes
    runs = [Fake({(0, "H"): [10, 5]}), Fake({(0, "H"): [10, 10], (1, "H"): [4, 0]})]
    got = measure_fraction(runs)
    assert got["H"]["mean"] == pytest.approx(0.75)
    assert got["H"]["runs"] == 2


def test_pairs_check_and_tamper():
    edges = generate(GenSpec("multigraph", 128, 16, 2))
    cfg = ColoringConfig(seed=2, multigraph=True, instrument=True, memory_factor=0.5)
    buf = io.StringIO()
    stats = run_pipeline(stream_lines(128, edges, 16), cfg, buf)
    out = buf.getvalue().splitlines()
    assert stats.pairs
    assert verify_pairs(out, stats.pairs) == []
    route, seq, partner = next(p for p in stats.pairs if not p[0])
    tampered = [ln for ln in out if not ln.startswith(f"{partner} ") or ln.endswith("BOT")]
    color = next(ln.split()[1] for ln in out if ln.startswith(f"{partner} ") and not ln.endswith("BOT"))
    head, last = color.rsplit(":", 1)
    tampered.append(f"{partner} {head}:{int(last) + 2}")
    assert verify_pairs(tampered, stats.pairs)

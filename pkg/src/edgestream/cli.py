"""Command-line driver: ``color``, ``verify``, ``gen`` and ``bench``."""

from __future__ import annotations

import argparse
import json
import statistics
import sys
import time
from contextlib import ExitStack
from fractions import Fraction

from .budget import total_budget
from .generators import KINDS, GenSpec, generate, stream_lines, write_stream
from .pipeline import ColoringConfig, RecursionCapError, run_pipeline
from .verify import bot_tally, measure_fraction, space_audit, verify_budget, verify_pairs, verify_proper


def _fraction(text: str) -> Fraction:
    try:
        value = Fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise argparse.ArgumentTypeError(f"not a fraction: {text!r}") from exc
    if not 0 < value <= 1:
        raise argparse.ArgumentTypeError("epsilon must lie in (0, 1]")
    return value


def _emit(pairs, out) -> None:
    for key, value in pairs:
        out.write(f"{key}={value}\n")


def _config(args) -> ColoringConfig:
    return ColoringConfig(
        mode=args.mode, epsilon=args.epsilon, seed=args.seed, batch_size=args.batch_size,
        multigraph=args.multigraph, record_pairs=args.multigraph,
        force_det_path=args.force_det_path, det_lambda=args.det_lambda,
        instrument=args.instrument, max_depth=args.max_depth, memory_factor=args.memory_factor,
        scratch_dir=args.scratch_dir)


def summary_dict(cfg: ColoringConfig, stats, elapsed: float) -> dict:
    data = stats.as_dict()
    data["pairs"] = [[list(route), a, b] for route, a, b in stats.pairs]
    data["config"] = {"mode": cfg.mode, "epsilon": str(cfg.epsilon), "seed": cfg.seed,
                      "batch_size": cfg.batch_size, "multigraph": cfg.multigraph,
                      "force_det_path": cfg.force_det_path, "det_lambda": cfg.det_lambda,
                      "memory_factor": cfg.memory_factor}
    data["budget"] = total_budget(stats.manifest)
    data["seconds"] = round(elapsed, 3)
    return data


def cmd_color(args) -> int:
    cfg = _config(args)
    with ExitStack() as stack:
        src = sys.stdin if args.input in (None, "-") else stack.enter_context(open(args.input))
        dst = sys.stdout if args.output in (None, "-") else stack.enter_context(open(args.output, "w"))
        start = time.perf_counter()
        try:
            stats = run_pipeline(src, cfg, dst)
        except RecursionCapError as exc:
            print(f"error={exc}", file=sys.stderr)
            return 3
        elapsed = time.perf_counter() - start
    report = sys.stderr if args.output in (None, "-") else sys.stdout
    rows = [("edges", stats.edges), ("bot_records", stats.bot_records), ("depth", stats.depth),
            ("epochs", stats.epochs), ("budget", total_budget(stats.manifest)),
            ("freqvec_fallbacks", stats.freqvec_fallbacks), ("empty_palettes", stats.empty_palettes),
            ("matcher_failures", stats.matcher_failures), ("bucket_overflows", stats.bucket_overflows),
            ("violations", len(stats.violations)), ("seconds", f"{elapsed:.3f}")]
    for (depth, tag), (edges, colored) in sorted(stats.schemes.items()):
        rows.append((f"fraction.{depth}.{tag}", f"{colored / edges:.4f}" if edges else "nan"))
    _emit(rows, report)
    if args.summary:
        with open(args.summary, "w") as fh:
            json.dump(summary_dict(cfg, stats, elapsed), fh, indent=1)
    return 0


def cmd_verify(args) -> int:
    with open(args.input) as fh:
        inp = fh.readlines()
    with open(args.output) as fh:
        out = fh.readlines()
    proper = verify_proper(inp, out)
    rows = [("edges", proper.edges), ("distinct_colors", proper.distinct_colors),
            ("proper", "ok" if proper.ok else "FAIL"), ("collisions", len(proper.violations))]
    for seq_a, seq_b, vertex, color in proper.violations[:20]:
        rows.append(("collision", f"{seq_a},{seq_b}@{vertex}:{color}"))
    for k, count in sorted(bot_tally(out).items()):
        rows.append((f"bot.pass{k}", count))
    ok = proper.ok
    if args.summary:
        with open(args.summary) as fh:
            summary = json.load(fh)
        budget = verify_budget(out, summary["manifest"])
        rows += [("budget", budget.budget), ("budget_ok", "ok" if budget.ok else "FAIL"),
                 ("budget_breaches", len(budget.breaches))]
        problems = verify_pairs(out, [(tuple(r), a, b) for r, a, b in summary.get("pairs", [])])
        if summary.get("pairs") or summary["config"].get("multigraph"):
            rows.append(("pairs_ok", "ok" if not problems else "FAIL"))
            ok = ok and not problems
        ok = ok and budget.ok
    _emit(rows, sys.stdout)
    return 0 if ok else 1


def cmd_gen(args) -> int:
    spec = GenSpec(args.kind, args.n, args.delta, args.seed, args.order, args.d)
    edges = generate(spec)
    if args.out in (None, "-"):
        write_stream(sys.stdout, args.n, edges, args.delta)
    else:
        with open(args.out, "w") as fh:
            write_stream(fh, args.n, edges, args.delta)
    return 0


def cmd_bench(args) -> int:
    runs = []
    depths = []
    start = time.perf_counter()
    for seed in range(args.seed, args.seed + args.seeds):
        spec = GenSpec(args.kind, args.n, args.delta, seed, args.order)
        edges = generate(spec)
        cfg = ColoringConfig(mode=args.mode, epsilon=args.epsilon, seed=seed, batch_size=args.batch_size,
                             multigraph=args.kind == "multigraph", force_det_path=args.mode == "det",
                             instrument=args.instrument, memory_factor=args.memory_factor)
        stats = run_pipeline(stream_lines(args.n, edges, args.delta), cfg)
        runs.append(stats)
        depths.append(stats.depth)
    rows = [("runs", len(runs)), ("depth_mean", f"{statistics.mean(depths):.3f}"),
            ("depth_max", max(depths))]
    for tag, info in measure_fraction(runs).items():
        rows.append((f"fraction.{tag}.mean", f"{info['mean']:.4f}"))
        rows.append((f"fraction.{tag}.min", f"{info['min']:.4f}"))
    if args.instrument:
        breaches = sum(len(space_audit(s).breaches) for s in runs)
        rows.append(("space_breaches", breaches))
    rows.append(("seconds", f"{time.perf_counter() - start:.3f}"))
    _emit(rows, sys.stdout)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="edgestream", description="Streaming edge coloring tools")
    sub = parser.add_subparsers(dest="command", required=True)

    def coloring_flags(p):
        p.add_argument("--mode", choices=("rand", "det"), default="rand")
        p.add_argument("--epsilon", type=_fraction, default=Fraction(1, 2))
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--batch-size", type=int, default=None)
        p.add_argument("--instrument", action="store_true")
        p.add_argument("--memory-factor", type=float, default=8.0)

    c = sub.add_parser("color", help="color an edge stream")
    coloring_flags(c)
    c.add_argument("--multigraph", action="store_true")
    c.add_argument("--force-det-path", action="store_true")
    c.add_argument("--det-lambda", type=int, default=None)
    c.add_argument("--max-depth", type=int, default=None)
    c.add_argument("--scratch-dir", default=None)
    c.add_argument("--input", default=None)
    c.add_argument("--output", default=None)
    c.add_argument("--summary", default=None, help="write a JSON summary with the budget manifest")
    c.set_defaults(func=cmd_color)

    v = sub.add_parser("verify", help="check an output stream against its input")
    v.add_argument("--input", required=True)
    v.add_argument("--output", required=True)
    v.add_argument("--summary", default=None, help="JSON summary from 'color' enables budget checks")
    v.set_defaults(func=cmd_verify)

    g = sub.add_parser("gen", help="generate an edge stream")
    g.add_argument("--kind", choices=KINDS, required=True)
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--delta", type=int, required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--order", choices=("random", "sorted"), default="random")
    g.add_argument("--d", type=int, default=None)
    g.add_argument("--out", default=None)
    g.set_defaults(func=cmd_gen)

    b = sub.add_parser("bench", help="colored fractions and depths over many seeds")
    coloring_flags(b)
    b.add_argument("--kind", choices=KINDS, default="random-bipartite")
    b.add_argument("--n", type=int, default=256)
    b.add_argument("--delta", type=int, default=64)
    b.add_argument("--order", choices=("random", "sorted"), default="random")
    b.add_argument("--seeds", type=int, default=20)
    b.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())

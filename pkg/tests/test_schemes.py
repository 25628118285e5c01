import random
from collections import Counter
from fractions import Fraction

import networkx as nx
import pytest

from conftest import collisions
from edgestream.det_schemes import DetHighScheme, DetLowScheme, DetParams, det_palette_count, encode_counter_poly
from edgestream.expander import digits, gamma, is_prime
from edgestream.forest import Forest
from edgestream.rand_schemes import (
    ClassContext,
    PaletteCounter,
    RandHighScheme,
    RandLowScheme,
    ShortcutScheme,
    greedy_color,
    high_palette_size,
    konig_color,
    leaf_palette_path,
    low_kappa,
    package_permutation,
    select_palette,
)


def random_bipartite_multigraph(rng, nl, nr, m):
    return [(rng.randrange(nl), rng.randrange(nr)) for _ in range(m)]


def test_konig_uses_max_degree_colors():
    rng = random.Random(2)
    for _ in range(200):
        edges = random_bipartite_multigraph(rng, rng.randint(1, 8), rng.randint(1, 8), rng.randint(1, 40))
        g = nx.MultiGraph()
        g.add_edges_from((("L", u), ("R", v)) for u, v in edges)
        delta = max(d for _, d in g.degree())
        colors = konig_color(edges, delta)
        assert max(colors) < delta
        assert not collisions([(("L", u), ("R", v)) for u, v in edges], colors)


def test_konig_rejects_degree_overflow():
    with pytest.raises(ValueError):
        konig_color([(0, 0), (0, 1), (0, 2)], 2)


def test_greedy_bound_on_general_multigraphs():
    rng = random.Random(8)
    for _ in range(200):
        n = rng.randint(2, 12)
        edges = []
        for _ in range(rng.randint(1, 50)):
            u, v = rng.sample(range(n), 2)
            edges.append((u, v))
        deg = Counter(x for e in edges for x in e)
        colors = greedy_color(edges)
        assert not collisions(edges, colors)
        assert max(colors) <= 2 * max(deg.values()) - 2


def test_package_permutation_multiplicities():
    for children, parts in [(8, 4), (16, 4), (4, 4), (32, 8)]:
        perm = package_permutation(("k", children), children, parts)
        assert len(perm) == children
        assert all(0 <= p < 5 * parts for p in perm)
        assert max(Counter(perm).values()) <= children // parts
    assert package_permutation(("k",), 8, 4) == package_permutation(("k",), 8, 4)


def test_palette_counter_matches_brute_force():
    key = ("seed", 1)
    for f, r in [((4,), 2), ((8, 4), 2), ((4, 4), 1)]:
        fo = Forest(f, r)
        counter = PaletteCounter(fo, key)
        for t in range(0, 3 * fo.spans[-1], 3):
            tree = t // fo.spans[-1]
            mine = leaf_palette_path(fo, t, key)
            expected = sum(1 for s in range(tree * fo.spans[-1], t) if leaf_palette_path(fo, s, key) == mine)
            assert counter.count(t) == expected


def test_select_palette_detects_shared_sibling_package():
    fo = Forest((4,), 2)  # branching (8,), one level
    key = ("x",)
    perm = package_permutation(key + (fo.f, (1, 0)), 8, 4)
    t = 3
    same = [s for s in range(8) if s != t and perm[s] == perm[t]]
    differ = [s for s in range(8) if perm[s] != perm[t]]
    assert select_palette(fo, {}, t, key) == (perm[t],)
    if same:
        assert select_palette(fo, {(0, same[0]): None}, t, key) is None
    assert select_palette(fo, {(0, differ[0]): None}, t, key) == (perm[t],)


def test_low_kappa_distinct_around_a_vertex():
    for l, r in [(0, 2), (1, 3), (2, 5)]:
        for cnt in range(4):
            for shift in range(1, 3 * 2 ** (r + 1) + 1):
                slots = [low_kappa(l, r, cnt, shift, i) for i in range(1, 2 ** (l + 1))]
                assert len(set(slots)) == len(slots)
                assert all(0 <= s < 25 * 2 ** (l + r + 2) for s in slots)


def test_high_palette_size_reference_value():
    # ceil(4 * (2^9 / 256 + 1)) = 12
    assert high_palette_size(256, 4, 4) == 12
    assert (256 >> 4) * (256 >> 4) * high_palette_size(256, 4, 4) == 3072


def ctx_for(l, r, delta, eps, batch_size, seed=0, batch_bound=64, n=2000):
    return ClassContext((), 0, 0, 0, l, r, delta, Fraction(eps), n, batch_size, batch_bound, seed, True)


def low_class_batches(rng, batches, r, v_pool, per_batch, u_pool):
    """Each batch: per_batch centres with 2^r fresh-per-batch leaves (left degree 1)."""
    out = []
    for _ in range(batches):
        centres = rng.sample(v_pool, per_batch)
        leaves = rng.sample(u_pool, per_batch * 2**r)
        edges = [(None, leaves[i * 2**r + j], c) for i, c in enumerate(centres) for j in range(2**r)]
        out.append(edges)
    return out


def drive(scheme, batches):
    colored_edges, colors = [], []
    seq = 0
    for t, raw in enumerate(batches):
        edges = []
        for _, u, v in raw:
            edges.append((seq, u, v))
            seq += 1
        v_degree = Counter(v for _, _, v in edges)
        out = scheme.color_batch(t, edges, v_degree)
        for s, u, v in edges:
            colored_edges.append((("u", u), ("v", v)))
            colors.append(out[s])
    return colored_edges, colors


@pytest.mark.parametrize("seed", range(4))
def test_rand_low_proper_and_invariants(seed):
    rng = random.Random(seed)
    batches = low_class_batches(rng, 40, 2, list(range(1000, 1010)), 5, list(range(300)))
    scheme = RandLowScheme(ctx_for(0, 2, 64, Fraction(1, 3), 20, seed), 0, 2)
    edges, colors = drive(scheme, batches)
    assert not collisions(edges, colors)
    assert scheme.stats.violations == []
    assert scheme.stats.max_cnt <= scheme.stats.cnt_bound
    assert sum(c is not None for c in colors) > 0.5 * len(colors)


@pytest.mark.parametrize("seed", range(3))
def test_det_low_proper_and_invariants(seed):
    rng = random.Random(seed)
    batches = low_class_batches(rng, 40, 2, list(range(1000, 1010)), 5, list(range(300)))
    params = DetParams.build(64, 2000, Fraction(1, 3), force=True)
    scheme = DetLowScheme(ctx_for(0, 2, 64, Fraction(1, 3), 20, seed), 0, 2, params)
    edges, colors = drive(scheme, batches)
    assert not collisions(edges, colors)
    assert scheme.stats.violations == []
    assert scheme.stats.max_cnt <= scheme.stats.cnt_bound
    assert all(c is not None for c in colors)


def regular_batches(rng, batches, d, pool_l, pool_r):
    out = []
    for _ in range(batches):
        ls = rng.sample(pool_l, d)
        rs = rng.sample(pool_r, d)
        out.append([(None, ls[i], rs[(i + s) % d]) for s in range(d) for i in range(d)])
    return out


@pytest.mark.parametrize("seed", range(3))
def test_rand_high_proper(seed):
    rng = random.Random(seed)
    batches = regular_batches(rng, 12, 16, list(range(40)), list(range(100, 140)))
    scheme = RandHighScheme(ctx_for(4, 4, 256, Fraction(1, 2), 256, seed))
    edges, colors = drive(scheme, batches)
    assert not collisions(edges, colors)
    assert len({c for c in colors if c is not None}) <= 3072
    assert scheme.stats.max_cnt <= scheme.stats.cnt_bound


def test_det_high_colors_everything():
    rng = random.Random(1)
    batches = regular_batches(rng, 8, 16, list(range(40)), list(range(100, 140)))
    params = DetParams.build(256, 200, Fraction(1, 2), force=True)
    scheme = DetHighScheme(ctx_for(4, 4, 256, Fraction(1, 2), 256, n=200), params)
    edges, colors = drive(scheme, batches)
    assert all(c is not None for c in colors)
    assert not collisions(edges, colors)
    assert scheme.stats.matcher_failures == 0
    assert scheme.bucket_overflows == 0


def test_shortcut_palette_size():
    scheme = ShortcutScheme(ctx_for(0, 0, 64, Fraction(1, 2), 10), 0, 0)
    out = scheme.color_batch(0, [(0, 1, 2), (1, 3, 2)], None)
    assert len(set(out.values())) == 2
    assert scheme.size == 4


def test_det_params_field_and_lambda():
    for delta, eps in [(64, Fraction(1, 2)), (2**20, Fraction(1, 2)), (2**40, Fraction(1, 3))]:
        p = DetParams.build(delta, 1000, eps, force=True)
        lo = max(2, -(-int(round(2 ** (float(eps) ** 2 / 10 * (delta.bit_length() - 1)) * 1e9)) // 10**9))
        assert is_prime(p.q)
        assert lo <= p.q < 2 * lo
        assert all(not is_prime(x) for x in range(lo, p.q))
        assert p.lam == p.q * p.q * max(1000, delta)
    assert DetParams.build(64, 1000, Fraction(1, 2), lam=7).lam == 7
    assert not DetParams.threshold_met(2**30, 1000, Fraction(1, 2))
    assert DetParams.threshold_met(4, 2, Fraction(1, 2))


def test_full_lambda_against_float_formula():
    # (log2 n)^e * e^e with e = 2 + 3 / (eps^2 / 10), small enough here to check in floats
    eps = Fraction(1)
    e = 2 + 3 / (float(eps) ** 2 / 10)
    for n in [4, 16, 1000]:
        expected = (__import__("math").log2(n) ** e) * e**e
        got = DetParams.full_lambda(n, eps)
        assert abs(got - expected) / expected < 1e-9


def test_counter_polynomial_layout():
    assert encode_counter_poly(5, 2, 2, 3, 3) == (2, 0, 2, 1, 0)


def test_det_palette_count_brute_force():
    params = DetParams.build(64, 500, Fraction(1, 2), force=True)
    rng = random.Random(0)
    scheme = DetLowScheme(ctx_for(0, 2, 64, Fraction(1, 2), 10), 0, 2, params)
    for f, matchers in scheme.matchers.items():
        fo = Forest(f, 2)
        for _ in range(30):
            t = rng.randrange(3 * fo.spans[-1])
            palette = []
            for j in range(fo.h):
                m = matchers[j]
                rank = fo.child_rank(fo.leaf_to_path(t)[j])
                right = gamma(digits(rank, m.q, m.a), rng.randrange(m.q), m.b, m.q)
                palette.append(rng.randrange(m.copies) * m.right_size + sum(x * m.q**i for i, x in enumerate(right)))
            start = fo.tree_of(t) * fo.spans[-1]
            expected = 0
            for s in range(start, t):
                ok = True
                for j in range(fo.h):
                    m = matchers[j]
                    rest = palette[j] % m.right_size
                    right = digits(rest, m.q, m.b + 2)
                    rank = fo.child_rank(fo.leaf_to_path(s)[j])
                    if gamma(digits(rank, m.q, m.a), right[0], m.b, m.q) != right:
                        ok = False
                        break
                expected += ok
            assert det_palette_count(fo, tuple(palette), t, matchers) == expected

from collections import Counter

import pytest

from edgestream.generators import KINDS, GenSpec, SpecError, generate, stream_lines


@pytest.mark.parametrize("kind", KINDS)
@pytest.mark.parametrize("delta", [16, 64])
def test_declared_degree_respected_and_reproducible(kind, delta):
    spec = GenSpec(kind, 300, delta, 7)
    edges = generate(spec)
    deg = Counter(x for e in edges for x in e)
    assert max(deg.values()) <= delta
    assert all(u != v and 0 <= u < 300 and 0 <= v < 300 for u, v in edges)
    assert generate(spec) == edges
    assert generate(GenSpec(kind, 300, delta, 8)) != edges


def test_unbalanced_stars_batch_shape():
    n, delta = 100, 16
    edges = generate(GenSpec("unbalanced-stars", n, delta, 0))
    per_round = (n // 2 // 16) * 16
    for start in range(0, len(edges), per_round):
        batch = edges[start:start + per_round]
        left = Counter(u for u, _ in batch)
        right = Counter(v for _, v in batch)
        assert set(left.values()) == {1}
        assert set(right.values()) == {16}


def test_regular_rounds_are_regular():
    n, d = 256, 8
    edges = generate(GenSpec("d-regular-batches", n, 32, 1, d=d))
    assert len(edges) == (32 // d) * n
    for start in range(0, len(edges), n):
        batch = edges[start:start + n]
        deg = Counter(x for e in batch for x in e)
        assert set(deg.values()) == {d}
    assert len(set(edges)) == len(edges)


def test_multigraph_has_parallel_edges():
    edges = generate(GenSpec("multigraph", 200, 16, 3))
    assert max(Counter(edges).values()) > 1


def test_sorted_order():
    edges = generate(GenSpec("random-bipartite", 64, 8, 0, order="sorted"))
    assert edges == sorted(edges)


@pytest.mark.parametrize("spec", [
    GenSpec("nope", 10, 4), GenSpec("random-bipartite", 2, 4), GenSpec("random-bipartite", 10, 4, order="x"),
    GenSpec("d-regular-batches", 16, 4, d=8), GenSpec("d-regular-batches", 64, 16, d=9),
])
def test_infeasible_specs(spec):
    with pytest.raises(SpecError):
        generate(spec)


def test_stream_lines_header():
    lines = list(stream_lines(5, [(0, 1)], 3))
    assert lines == ["5 1 3", "0 1"]

import io
from collections import Counter

import pytest
from hypothesis import given
from hypothesis import strategies as st

from edgestream.stream import (
    ColorId,
    ColorRecord,
    Edge,
    RecordWriter,
    Spool,
    StreamFormatError,
    classify_batch,
    iter_batches,
    iter_edges,
    parse_header,
)

routes = st.lists(st.sampled_from(["B0", "B1", "B2"]), max_size=3).map(tuple)
color_ids = st.builds(
    ColorId, routes, st.integers(0, 9), st.integers(0, 9), st.integers(0, 20), st.integers(0, 12),
    st.integers(0, 12), st.sampled_from(["L", "S", "H", "DL", "DH", "G"]),
    st.lists(st.integers(-3, 10**6), min_size=1, max_size=6).map(tuple))


@given(color_ids)
def test_color_id_text_roundtrip(cid):
    assert ColorId.parse(str(cid)) == cid


def test_color_id_format():
    cid = ColorId(("B0", "B1"), 1, 2, 3, 4, 5, "H", (6, 7))
    assert str(cid) == "B0/B1:1:2:3:4:5:H:6:7"
    assert str(ColorId((), 0, 0, 0, 0, 0, "G", (3,))) == "-:0:0:0:0:0:G:3"
    assert cid.with_last(9).local == (6, 9)
    assert cid.with_route_prefix(("B7",)).route == ("B7", "B0", "B1")


def test_color_id_parse_rejects_short():
    with pytest.raises(StreamFormatError):
        ColorId.parse("1:2:3")


def test_header_parsing():
    assert parse_header("10") == parse_header("10\n")
    h = parse_header("10 20 8")
    assert (h.n, h.m, h.delta) == (10, 20, 8)
    for bad in ["", "a b", "0 3", "1 2 3 4", "5 -1"]:
        with pytest.raises(StreamFormatError):
            parse_header(bad)


def test_iter_edges_validation():
    edges = list(iter_edges(["0 1", "", "# comment", "2 3"], 4))
    assert edges == [Edge(0, 1, 0), Edge(2, 3, 1)]
    for bad in ["1 1", "0 4", "0", "x 1"]:
        with pytest.raises(StreamFormatError):
            list(iter_edges([bad], 4))


def test_batches_have_requested_size():
    edges = [Edge(i, i + 1, i) for i in range(10)]
    sizes = [len(b.edges) for b in iter_batches(edges, 4)]
    assert sizes == [4, 4, 2]


def test_classify_batch_against_manual_degrees():
    pairs = [(0, 10), (0, 11), (0, 12), (1, 10), (2, 13)]
    classes = classify_batch(pairs)
    du = Counter(u for u, _ in pairs)
    dv = Counter(v for _, v in pairs)
    for (l, r), members in classes.items():
        for u, v in members:
            assert 2**l <= du[u] < 2 ** (l + 1)
            assert 2**r <= dv[v] < 2 ** (r + 1)
    assert sum(len(m) for m in classes.values()) == len(pairs)
    assert classes[(1, 1)] == [(0, 10)]


def test_record_writer_rejects_duplicate_color():
    out = io.StringIO()
    w = RecordWriter(out, validate=True)
    cid = ColorId((), 0, 0, 0, 0, 0, "G", (1,))
    w.emit([ColorRecord(0, None), ColorRecord(0, cid)])
    with pytest.raises(ValueError):
        w.emit([ColorRecord(0, cid)])
    assert out.getvalue().splitlines() == ["0 BOT", "0 -:0:0:0:0:0:G:1"]


def test_spool_switches_to_disk(tmp_path):
    spool = Spool(threshold=3, directory=str(tmp_path))
    items = [(i, i + 1, i + 2) for i in range(10)]
    for it in items:
        spool.append(*it)
    assert len(spool) == 10
    assert list(tmp_path.iterdir())
    assert list(spool) == items
    assert list(spool) == items  # re-iterable
    spool.close()
    assert not list(tmp_path.iterdir())

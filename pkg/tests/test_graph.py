import gzip

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sigat import datasets
from sigat.graph import (DataError, ParseError, SignedDigraph, holdout_split, load_edge_list,
                         load_folds, make_folds, save_folds, subgraph_from_edges,
                         write_edge_list)

from oracles import random_signed_digraph


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_load_snap_small(tmp_path):
    p = write(tmp_path, "g.tsv", "# comment\n0\t1\t1\n1\t2\t-1\n")
    g = load_edge_list(p)
    assert g.num_nodes == 3
    assert (g.num_positive, g.num_negative) == (1, 1)
    assert g.out_pos(0).tolist() == [1]
    assert g.in_neg(2).tolist() == [1]


def test_weighted_csv_thresholds_ratings(tmp_path):
    p = write(tmp_path, "g.csv", "SOURCE,TARGET,RATING,TIME\n5,9,-3,100\n9,7,2,101\n7,5,0,102\n")
    g = load_edge_list(p, "weighted-csv")
    # ids by first appearance: 5->0, 9->1, 7->2
    assert g.labels.tolist() == [5, 9, 7]
    assert g.edge_list() == [(0, 1, -1), (1, 2, 1), (2, 0, -1)]


def test_gzip_detected(tmp_path):
    p = tmp_path / "g.csv.gz"
    with gzip.open(p, "wt") as fh:
        fh.write("1,2,10,0\n2,3,-10,0\n")
    g = load_edge_list(p, "weighted-csv")
    assert g.num_edges == 2


@pytest.mark.parametrize("text, line", [
    ("0\t1\t1\n0\t2\t0\n", 2),
    ("0\t1\t1\n0 x 1\n", 2),
    ("0\t1\n", 1),
])
def test_parse_errors_carry_line_number(tmp_path, text, line):
    p = write(tmp_path, "bad.tsv", text)
    with pytest.raises(ParseError) as info:
        load_edge_list(p)
    assert info.value.line_no == line


def test_missing_file_is_data_error(tmp_path):
    with pytest.raises(DataError):
        load_edge_list(tmp_path / "nope.tsv")


def test_self_loops_and_duplicates_counted(tmp_path):
    p = write(tmp_path, "g.tsv", "0\t0\t1\n0\t1\t1\n0\t1\t-1\n1\t0\t-1\n")
    g = load_edge_list(p)
    assert g.stats["self_loops"] == 1
    assert g.stats["duplicates"] == 1
    # first occurrence wins; the mutual edge of opposite sign is kept
    assert g.edge_list() == [(0, 1, 1), (1, 0, -1)]


def test_partition_and_transpose():
    g = random_signed_digraph(25, 150, np.random.default_rng(4))
    total = sum(len(g.out_pos(u)) + len(g.out_neg(u)) for u in range(g.num_nodes))
    assert total == g.num_edges
    for u in range(g.num_nodes):
        for v in g.out_pos(u):
            assert u in g.in_pos(v)
        for v in g.out_neg(u):
            assert u in g.in_neg(v)
        for v in g.in_pos(u):
            assert u in g.out_pos(v)


def test_round_trip(tmp_path):
    g = random_signed_digraph(30, 200, np.random.default_rng(1))
    write_edge_list(g, tmp_path / "g.tsv")
    h = load_edge_list(tmp_path / "g.tsv")
    relabel = h.labels
    back = sorted((int(relabel[u]), int(relabel[v]), s) for u, v, s in h.edge_list())
    assert back == sorted(g.edge_list())


def test_signed_neighbors_union_keeps_mixed_pairs():
    g = SignedDigraph.from_edges(2, [(0, 1, 1), (1, 0, -1)])
    indptr, idx = g.signed_neighbors(+1, "union")
    assert idx[indptr[0]:indptr[1]].tolist() == [1]
    indptr, idx = g.signed_neighbors(-1, "union")
    assert idx[indptr[0]:indptr[1]].tolist() == [1]
    indptr, idx = g.signed_neighbors(+1, "out")
    assert idx[indptr[1]:indptr[2]].tolist() == []


def test_folds_ten_edges():
    g = random_signed_digraph(6, 10, np.random.default_rng(0))
    splits = make_folds(g, 5, seed=3)
    assert [len(s.test_edges) for s in splits] == [2] * 5
    tests = np.concatenate([s.test_edges for s in splits])
    assert sorted(tests.tolist()) == list(range(10))
    again = make_folds(g, 5, seed=3)
    for a, b in zip(splits, again):
        assert np.array_equal(a.test_edges, b.test_edges)


def test_fold_sizes_at_bitcoin_alpha_scale():
    # 24,186 edges into 5 folds: 4,837 or 4,838 per fold
    n = 200
    pairs = np.random.default_rng(0).choice(n * n, size=30000, replace=False)
    pairs = pairs[pairs // n != pairs % n][:24186]
    g = SignedDigraph.from_edges(n, [(int(p // n), int(p % n), 1) for p in pairs])
    assert g.num_edges == 24186
    sizes = [len(s.test_edges) for s in make_folds(g, 5, seed=0)]
    assert set(sizes) == {4837, 4838} and sum(sizes) == 24186


def test_make_folds_errors():
    g = random_signed_digraph(4, 3, np.random.default_rng(0))
    with pytest.raises(ValueError):
        make_folds(g, 4, 0)
    with pytest.raises(ValueError):
        make_folds(g, 1, 0)


@settings(max_examples=40, deadline=None)
@given(m=st.integers(2, 60), k=st.integers(2, 10), seed=st.integers(0, 2**32 - 1))
def test_folds_partition_edges(m, k, seed):
    g = random_signed_digraph(12, m, np.random.default_rng(seed % 1000))
    k = min(k, g.num_edges)
    splits = make_folds(g, k, seed)
    sizes = [len(s.test_edges) for s in splits]
    assert max(sizes) - min(sizes) <= 1
    allt = np.sort(np.concatenate([s.test_edges for s in splits]))
    assert np.array_equal(allt, np.arange(g.num_edges))
    for s in splits:
        assert np.intersect1d(s.train_edges, s.test_edges).size == 0
        assert len(s.train_edges) + len(s.test_edges) == g.num_edges


def test_fold_manifest_round_trip(tmp_path):
    g = random_signed_digraph(10, 40, np.random.default_rng(2))
    splits = make_folds(g, 4, 11)
    save_folds(splits, tmp_path / "folds.json")
    back = load_folds(tmp_path / "folds.json")
    for a, b in zip(splits, back):
        assert np.array_equal(a.train_edges, b.train_edges)
        assert np.array_equal(a.test_edges, b.test_edges)
        assert b.seed == 11


def test_holdout_split_sizes():
    g = random_signed_digraph(10, 50, np.random.default_rng(2))
    s = holdout_split(g, 0.2, 0)
    assert len(s.test_edges) == 10 and len(s.train_edges) == 40


def test_subgraph_identity_empty_single():
    g = random_signed_digraph(8, 20, np.random.default_rng(5))
    assert subgraph_from_edges(g, np.arange(g.num_edges)) == g
    empty = subgraph_from_edges(g, [])
    assert empty.num_nodes == 8 and empty.num_edges == 0
    e = int(np.flatnonzero(g.sign > 0)[0])
    a, b = int(g.src[e]), int(g.dst[e])
    one = subgraph_from_edges(g, [e])
    assert one.out_pos(a).tolist() == [b]
    for u in range(8):
        for name in ("out_pos", "out_neg", "in_pos", "in_neg"):
            lst = getattr(one, name)(u).tolist()
            if (name, u) in (("out_pos", a), ("in_pos", b)):
                continue
            assert lst == []
    with pytest.raises(IndexError):
        subgraph_from_edges(g, [g.num_edges])


def test_content_hash_tracks_edges():
    g = random_signed_digraph(8, 20, np.random.default_rng(5))
    h = subgraph_from_edges(g, np.arange(g.num_edges - 1))
    assert g.content_hash() == subgraph_from_edges(g, np.arange(g.num_edges)).content_hash()
    assert g.content_hash() != h.content_hash()


@pytest.mark.parametrize("name", sorted(datasets.DATASETS))
def test_published_dataset_counts(name):
    path = datasets.locate(name)
    if path is None:
        pytest.skip(f"{name} not downloaded (set {datasets.DATA_ENV} or run `sigat fetch {name}`)")
    info = datasets.DATASETS[name]
    g = load_edge_list(path, info.format)
    assert datasets.check_counts(g, info) == []

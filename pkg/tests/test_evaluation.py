import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sigat.evaluation import (EdgeDataset, auc_score, build_edge_dataset, dimension_sweep,
                              epoch_sweep, metrics, random_baseline, run_cv, train_logreg)
from sigat.graph import EdgeSplit, make_folds
from sigat.model import SigatConfig, embed_all, train
from sigat.motifs import extract

from oracles import CONFUSION_CASES, pair_auc, random_signed_digraph, two_faction_graph


# -- logistic regression -----------------------------------------------------------

def test_logreg_separable_1d():
    clf = train_logreg(EdgeDataset(np.array([[-1.0], [1.0]]), np.array([0, 1])))
    p = clf.predict_proba(np.array([[-1.0], [1.0]]))
    assert p[0] < 0.5 < p[1]
    assert clf.converged and clf.weights[0] > 0


def test_logreg_single_class_is_degenerate():
    data = EdgeDataset(np.random.default_rng(0).normal(size=(5, 2)), np.ones(5, dtype=int))
    with pytest.warns(RuntimeWarning):
        clf = train_logreg(data)
    assert clf.degenerate
    assert np.all(clf.predict_proba(np.random.default_rng(1).normal(size=(7, 2))) > 0.5)


def test_logreg_optimality_certificate():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(200, 6))
    y = (X @ rng.normal(size=6) + rng.normal(size=200) > 0).astype(int)
    clf = train_logreg(EdgeDataset(X, y), l2_c=1.0)
    # gradient of the regularized objective, recomputed from the fitted weights
    p = 1.0 / (1.0 + np.exp(-(X @ clf.weights + clf.bias)))
    grad_w = X.T @ (p - y) + clf.weights
    grad_b = np.sum(p - y)
    assert np.sqrt(grad_w @ grad_w + grad_b ** 2) < 1e-6
    assert clf.grad_norm < 1e-6


def test_logreg_agrees_with_sklearn():
    linear_model = pytest.importorskip("sklearn.linear_model")
    rng = np.random.default_rng(1)
    X = rng.normal(size=(300, 4))
    y = (X[:, 0] - 0.5 * X[:, 2] + rng.normal(size=300) > 0.3).astype(int)
    ours = train_logreg(EdgeDataset(X, y), l2_c=0.7)
    ref = linear_model.LogisticRegression(C=0.7, tol=1e-12, max_iter=10_000).fit(X, y)
    assert np.allclose(ours.weights, ref.coef_[0], atol=1e-6)
    assert ours.bias == pytest.approx(ref.intercept_[0], abs=1e-6)


def test_logreg_empty_raises():
    with pytest.raises(ValueError):
        train_logreg(EdgeDataset(np.zeros((0, 2)), np.zeros(0)))


# -- metrics ----------------------------------------------------------------

def test_metrics_perfect_ranking():
    m = metrics([0.9, 0.8, 0.2], [1, 1, 0])
    assert (m.accuracy, m.f1, m.macro_f1, m.auc) == (1.0, 1.0, 1.0, 1.0)


def test_auc_ties_and_single_class():
    assert auc_score([0.3, 0.3], [1, 0]) == (0.5, True)
    assert auc_score([0.1, 0.9], [1, 1]) == (0.5, False)
    assert metrics([0.2, 0.7], [0, 0]).auc_defined is False


@pytest.mark.parametrize("case", range(len(CONFUSION_CASES)))
def test_confusion_table(case):
    scores, labels, _, acc, f1p, f1n = CONFUSION_CASES[case]
    m = metrics(scores, labels)
    assert m.accuracy == float(acc)
    assert m.f1 == float(f1p)
    assert m.macro_f1 == (float(f1p) + float(f1n)) / 2


def test_auc_matches_pair_counting_50_points():
    rng = np.random.default_rng(0)
    scores = np.round(rng.random(50), 1)   # coarse grid forces ties
    labels = rng.integers(0, 2, 50)
    assert auc_score(scores, labels)[0] == pair_auc(scores, labels)


@settings(max_examples=60)
@given(st.lists(st.tuples(st.integers(-40, 40), st.integers(0, 1)), min_size=2, max_size=40))
def test_auc_invariant_to_monotone_transform(pairs):
    # a coarse grid keeps distinct scores distinct after the transforms
    scores = np.array([p[0] / 8 for p in pairs])
    labels = np.array([p[1] for p in pairs])
    a = auc_score(scores, labels)[0]
    assert auc_score(np.exp(scores) * 3 + 1, labels)[0] == pytest.approx(a, abs=1e-12)
    assert auc_score(scores ** 3, labels)[0] == pytest.approx(a, abs=1e-12)


@settings(max_examples=60)
@given(st.lists(st.tuples(st.floats(0, 1), st.integers(0, 1)), min_size=1, max_size=40))
def test_metric_invariants(pairs):
    scores = np.array([p[0] for p in pairs])
    labels = np.array([p[1] for p in pairs])
    m = metrics(scores, labels)
    errors = np.mean((scores >= 0.5) != (labels == 1))
    assert m.accuracy + errors == pytest.approx(1.0, abs=1e-12)
    for v in (m.accuracy, m.f1, m.macro_f1, m.auc):
        assert 0.0 <= v <= 1.0
    pred = scores >= 0.5
    tp = np.sum(pred & (labels == 1))
    if tp:
        precision = tp / pred.sum()
        recall = tp / (labels == 1).sum()
        assert min(precision, recall) - 1e-12 <= m.f1 <= max(precision, recall) + 1e-12


def test_macro_f1_direction():
    labels = np.array([1] * 9 + [0])
    always = metrics(np.ones(10), labels)
    assert always.macro_f1 < always.f1
    assert metrics(labels.astype(float), labels).macro_f1 == 1.0


def test_metrics_length_mismatch():
    with pytest.raises(ValueError):
        metrics([0.1, 0.2], [1])


# -- edge features and baselines ---------------------------------------------------

def test_edge_dataset_rows():
    g = random_signed_digraph(6, 10, np.random.default_rng(0))
    Z = np.arange(12, dtype=float).reshape(6, 2)
    data = build_edge_dataset(Z, g, [0, 3])
    for row, e in zip(data.features, (0, 3)):
        assert row.tolist() == Z[g.src[e]].tolist() + Z[g.dst[e]].tolist()
    assert data.labels.tolist() == [int(g.sign[0] > 0), int(g.sign[3] > 0)]


def test_random_baseline():
    Z = random_baseline(7, 3, seed=5)
    assert Z.shape == (7, 3) and Z.min() >= 0 and Z.max() < 1
    assert np.array_equal(Z, random_baseline(7, 3, seed=5))


# -- cross-validation ------------------------------------------------------------

SMALL = SigatConfig(dim=4, epochs=2, batch_size=20, seed=0)


def test_run_cv_random_k_tuples():
    g = random_signed_digraph(30, 150, np.random.default_rng(0), p_pos=0.8)
    report = run_cv(g, SMALL, k=3, seed=1, embedder="random")
    assert len(report.folds) == 3
    assert [f.fold_id for f in report.folds] == [0, 1, 2]
    assert sum(f.num_test for f in report.folds) == g.num_edges
    mean = report.mean
    assert mean["auc"] == pytest.approx(np.mean([f.metrics.auc for f in report.folds]))


def test_run_cv_sigat_reproducible_and_thread_independent():
    g = random_signed_digraph(30, 150, np.random.default_rng(0), p_pos=0.8)
    a = run_cv(g, SMALL, k=3, seed=2)
    b = run_cv(g, SMALL, k=3, seed=2)
    c = run_cv(g, SMALL, k=3, seed=2, threads=3)
    assert a.to_json() == b.to_json() == c.to_json()
    assert all(len(f.loss_trace) == 2 for f in a.folds)


def test_run_cv_uses_given_splits_and_cache(tmp_path):
    g = random_signed_digraph(20, 80, np.random.default_rng(3))
    splits = make_folds(g, 2, 9)
    a = run_cv(g, SMALL, k=2, splits=splits, cache_dir=tmp_path)
    assert len(list(tmp_path.iterdir())) == 2
    b = run_cv(g, SMALL, k=2, splits=splits, cache_dir=tmp_path)
    assert a.to_json() == b.to_json()


def test_overlapping_split_rejected():
    g = random_signed_digraph(20, 80, np.random.default_rng(3))
    bad = EdgeSplit(np.arange(0, 50), np.arange(40, 80), 0, 0)
    with pytest.raises(AssertionError):
        run_cv(g, SMALL, k=2, splits=[bad], embedder="random")


def test_report_outputs():
    g = random_signed_digraph(20, 80, np.random.default_rng(3))
    report = run_cv(g, SMALL, k=2, embedder="random", dataset="toy")
    doc = json.loads(report.to_json())
    assert doc["k"] == 2 and set(doc["mean"]) == {"accuracy", "f1", "macro_f1", "auc"}
    assert "seconds" not in doc["folds"][0]
    assert "seconds" in report.to_dict(timings=True)["folds"][0]
    table = report.to_table()
    assert "Random" in table.splitlines()[0]
    assert [line.split()[-2] for line in table.splitlines()[1:]] == \
        ["Accuracy", "F1", "Macro-F1", "AUC"]
    plus = run_cv(g, SigatConfig(dim=2, epochs=1, motif_subset="plusminus2"), k=2)
    assert "SiGAT+/-" in plus.to_table()


def test_sweeps_rows():
    g = random_signed_digraph(25, 120, np.random.default_rng(4))
    rows = epoch_sweep(g, SMALL, [1, 3])
    assert [r[0] for r in rows] == [1, 3]
    assert all(0 <= r[2] <= 1 for r in rows)
    assert [r[0] for r in dimension_sweep(g, SMALL, [2, 3])] == [2, 3]
    assert len(epoch_sweep(g, SMALL, [2])) == 1


def test_faction_structure_visible_in_embeddings():
    """Trained embeddings separate the two factions under the dot-product score.

    Scoring an edge by ``z_u . z_v`` (the quantity the loss shapes) ranks
    intra-faction pairs above inter-faction pairs.
    """
    g, faction = two_faction_graph(n=120, m=1200, noise=0.0, seed=0)
    cfg = SigatConfig(dim=8, epochs=40, batch_size=60, lr=0.01, seed=0)
    nb = extract(g, cfg.motif_ids)
    model, trace = train(g, cfg, neighborhoods=nb)
    Z = embed_all(model, nb)
    scores = np.einsum("ij,ij->i", Z[g.src], Z[g.dst])
    labels = (g.sign > 0).astype(int)
    assert trace[-1] < trace[0]
    assert auc_score(scores, labels)[0] > 0.95

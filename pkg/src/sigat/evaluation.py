"""Link-sign prediction: edge features, logistic regression, metrics, CV."""

from __future__ import annotations

import json
import logging
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.stats import rankdata

from .graph import holdout_split, make_folds, subgraph_from_edges
from .model import embed_all, init_model, train
from .motifs import extract

logger = logging.getLogger(__name__)

METRIC_NAMES = ("accuracy", "f1", "macro_f1", "auc")
METRIC_LABELS = {"accuracy": "Accuracy", "f1": "F1", "macro_f1": "Macro-F1", "auc": "AUC"}
EMBEDDERS = ("sigat", "random")


@dataclass(frozen=True)
class EdgeDataset:
    features: np.ndarray
    labels: np.ndarray


def build_edge_dataset(Z, g, edge_index):
    """Rows ``concat(Z[src], Z[dst])`` with label 1 for positive edges."""
    edge_index = np.asarray(edge_index, dtype=np.int64)
    src, dst = g.src[edge_index], g.dst[edge_index]
    features = np.concatenate([Z[src], Z[dst]], axis=1)
    return EdgeDataset(features, (g.sign[edge_index] > 0).astype(np.int64))


# -- logistic regression -----------------------------------------------------------

@dataclass
class LogisticModel:
    weights: np.ndarray
    bias: float
    grad_norm: float = 0.0
    n_iter: int = 0
    converged: bool = True
    degenerate: bool = False

    def decision_function(self, X):
        return np.asarray(X, dtype=np.float64) @ self.weights + self.bias

    def predict_proba(self, X):
        z = self.decision_function(X)
        return np.exp(-np.logaddexp(0.0, -z))


def _objective(X1, y, theta, inv_c):
    z = X1 @ theta
    w = theta[:-1]
    return float(np.sum(np.logaddexp(0.0, z) - y * z) + 0.5 * inv_c * (w @ w))


def train_logreg(data, l2_c=1.0, max_iter=100, tol=1e-6):
    """Fit L2-regularized logistic regression by damped Newton iterations.

    Minimizes ``sum(log-loss) + ||w||^2 / (2 * l2_c)``; the bias is not
    penalized.  Stops once the gradient norm drops below ``tol``.  A training
    set with a single class gives a constant classifier flagged
    ``degenerate`` (and a warning).
    """
    X = np.asarray(data.features, dtype=np.float64)
    y = np.asarray(data.labels, dtype=np.float64)
    n, p = X.shape
    if n == 0:
        raise ValueError("empty training set")
    n_pos = y.sum()
    if n_pos == 0 or n_pos == n:
        warnings.warn("logistic regression trained on a single class", RuntimeWarning,
                      stacklevel=2)
        rate = (n_pos + 0.5) / (n + 1.0)
        return LogisticModel(np.zeros(p), float(np.log(rate / (1.0 - rate))),
                             converged=True, degenerate=True)

    inv_c = 1.0 / l2_c
    X1 = np.hstack([X, np.ones((n, 1))])
    reg = np.full(p + 1, inv_c)
    reg[-1] = 0.0
    theta = np.zeros(p + 1)
    f = _objective(X1, y, theta, inv_c)
    for it in range(max_iter + 1):
        prob = np.exp(-np.logaddexp(0.0, -(X1 @ theta)))
        grad = X1.T @ (prob - y) + reg * theta
        grad_norm = float(np.linalg.norm(grad))
        if grad_norm < tol or it == max_iter:
            break
        weight = prob * (1.0 - prob)
        hess = (X1 * weight[:, None]).T @ X1 + np.diag(reg)
        hess[np.diag_indices_from(hess)] += 1e-12
        try:
            step = np.linalg.solve(hess, grad)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(hess, grad, rcond=None)[0]
        t = 1.0
        while True:
            candidate = theta - t * step
            f_new = _objective(X1, y, candidate, inv_c)
            if f_new <= f - 1e-4 * t * (grad @ step) or t < 1e-10:
                break
            t *= 0.5
        theta, f = candidate, f_new
    converged = grad_norm < tol
    if not converged:
        logger.warning("logistic regression stopped at gradient norm %.3g", grad_norm)
    return LogisticModel(theta[:-1].copy(), float(theta[-1]), grad_norm, it, converged)


# -- metrics ------------------------------------------------------------------------

@dataclass(frozen=True)
class Metrics:
    accuracy: float
    f1: float
    macro_f1: float
    auc: float
    auc_defined: bool = True

    def as_dict(self):
        return {name: getattr(self, name) for name in METRIC_NAMES}


def _f1(tp, fp, fn):
    denom = 2 * tp + fp + fn
    return 0.0 if denom == 0 else 2 * tp / denom


def auc_score(scores, labels):
    """Mann-Whitney AUC with average ranks, so ties count one half.

    Returns ``(auc, defined)``; with a single class present it is (0.5, False).
    """
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    n_pos = int((labels == 1).sum())
    n_neg = len(labels) - n_pos
    if n_pos == 0 or n_neg == 0:
        return 0.5, False
    ranks = rankdata(scores)
    u = ranks[labels == 1].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg)), True


def metrics(scores, labels, threshold=0.5):
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels).astype(np.int64)
    if scores.shape != labels.shape:
        raise ValueError(f"length mismatch: {scores.shape} vs {labels.shape}")
    if scores.size == 0:
        raise ValueError("no predictions")
    pred = scores >= threshold
    truth = labels == 1
    tp = int(np.sum(pred & truth))
    tn = int(np.sum(~pred & ~truth))
    fp = int(np.sum(pred & ~truth))
    fn = int(np.sum(~pred & truth))
    f1_pos = _f1(tp, fp, fn)
    f1_neg = _f1(tn, fn, fp)
    auc, defined = auc_score(scores, labels)
    return Metrics((tp + tn) / len(labels), f1_pos, (f1_pos + f1_neg) / 2.0, auc, defined)


def random_baseline(num_nodes, d, seed):
    """Uniform [0, 1) embeddings."""
    return np.random.default_rng(seed).random((num_nodes, d))


# -- cross-validation ------------------------------------------------------------

@dataclass
class FoldResult:
    fold_id: int
    metrics: Metrics
    seed: int
    num_train: int
    num_test: int
    loss_trace: list = field(default_factory=list)
    seconds: float = 0.0

    def to_dict(self, timings=False):
        out = {"fold": self.fold_id, "seed": self.seed, "num_train": self.num_train,
               "num_test": self.num_test, **self.metrics.as_dict(),
               "auc_defined": self.metrics.auc_defined, "loss_trace": self.loss_trace}
        if timings:
            out["seconds"] = self.seconds
        return out


@dataclass
class EvalReport:
    folds: list
    config: dict
    seed: int
    embedder: str
    dataset: str = ""

    @property
    def mean(self):
        return {name: float(np.mean([getattr(f.metrics, name) for f in self.folds]))
                for name in METRIC_NAMES}

    @property
    def timings(self):
        return [f.seconds for f in self.folds]

    def to_dict(self, timings=False):
        return {"dataset": self.dataset, "embedder": self.embedder, "seed": self.seed,
                "k": len(self.folds), "config": self.config, "mean": self.mean,
                "folds": [f.to_dict(timings) for f in self.folds]}

    def to_json(self, timings=False):
        return json.dumps(self.to_dict(timings), indent=2, sort_keys=True)

    def to_table(self, column=None):
        """Aligned text table: one row per metric, one column for this method."""
        column = column or ("SiGAT" if self.embedder == "sigat" else "Random")
        if self.embedder == "sigat" and self.config.get("motif_subset") == "plusminus2":
            column = "SiGAT+/-"
        head = self.dataset or "dataset"
        width = max(len(head), 13)
        lines = [f"{'Dataset':<{width}}  {'Metric':<8}  {column:>8}"]
        for i, name in enumerate(METRIC_NAMES):
            label = head if i == 0 else ""
            lines.append(f"{label:<{width}}  {METRIC_LABELS[name]:<8}  {self.mean[name]:>8.4f}")
        return "\n".join(lines)


def fold_seed(seed, fold_id):
    return int(np.random.SeedSequence([seed, fold_id]).generate_state(1)[0])


def embed_fold(g_train, cfg, embedder, seed, cache_dir=None):
    """Node embeddings learned from the training sub-graph only."""
    if embedder == "random":
        return random_baseline(g_train.num_nodes, cfg.dim, seed), []
    if embedder != "sigat":
        raise ValueError(f"unknown embedder {embedder!r}")
    from .motifs import extract_cached
    neighborhoods = extract_cached(g_train, cfg.motif_ids, cache_dir)
    model, trace = train(g_train, replace(cfg, seed=seed), neighborhoods=neighborhoods)
    return embed_all(model, neighborhoods), trace


def _check_disjoint(g, split):
    if np.intersect1d(split.train_edges, split.test_edges).size:
        raise AssertionError("train and test edges overlap")
    n = g.num_nodes
    train_pairs = g.src[split.train_edges] * n + g.dst[split.train_edges]
    test_pairs = g.src[split.test_edges] * n + g.dst[split.test_edges]
    if np.intersect1d(train_pairs, test_pairs).size:
        raise AssertionError("a test edge is present in the training graph")


def evaluate_split(g, split, cfg, embedder="sigat", seed=0, l2_c=1.0, max_iter=100,
                   cache_dir=None):
    start = time.perf_counter()
    _check_disjoint(g, split)
    g_train = subgraph_from_edges(g, split.train_edges)
    Z, trace = embed_fold(g_train, cfg, embedder, seed, cache_dir)
    clf = train_logreg(build_edge_dataset(Z, g, split.train_edges), l2_c, max_iter)
    test = build_edge_dataset(Z, g, split.test_edges)
    result = metrics(clf.predict_proba(test.features), test.labels)
    return FoldResult(split.fold_id, result, seed, len(split.train_edges),
                      len(split.test_edges), [float(x) for x in trace],
                      time.perf_counter() - start)


def run_cv(g, cfg, k=5, seed=0, embedder="sigat", splits=None, threads=1, l2_c=1.0,
           max_iter=100, cache_dir=None, dataset=""):
    """k-fold link-sign prediction.

    Every fold re-extracts motifs and retrains embeddings on its own training
    edges, fits the classifier on training-edge features and scores the held
    out edges.  Results do not depend on ``threads``.
    """
    if k < 2:
        raise ValueError("k must be at least 2")
    if splits is None:
        splits = make_folds(g, k, seed)

    def one(split):
        fs = fold_seed(seed, split.fold_id)
        res = evaluate_split(g, split, cfg, embedder, fs, l2_c, max_iter, cache_dir)
        logger.info("fold %d: %s", split.fold_id,
                    " ".join(f"{n}={v:.4f}" for n, v in res.metrics.as_dict().items()))
        return res

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            folds = list(pool.map(one, splits))
    else:
        folds = [one(s) for s in splits]
    return EvalReport(folds, cfg.to_dict(), seed, embedder, dataset)


# -- parameter sweeps ------------------------------------------------------------

def _holdout_auc(g, split, Z, l2_c=1.0):
    clf = train_logreg(build_edge_dataset(Z, g, split.train_edges), l2_c)
    test = build_edge_dataset(Z, g, split.test_edges)
    return auc_score(clf.predict_proba(test.features), test.labels)[0]


def epoch_sweep(g, cfg, epochs, seed=0, test_fraction=0.2):
    """Rows ``(epoch, total_loss, test_auc)`` along one training run.

    Training runs to ``max(epochs)`` on a random train split; embeddings are
    scored at each listed epoch.
    """
    epochs = sorted(set(int(e) for e in epochs))
    if not epochs or epochs[0] < 1:
        raise ValueError("epoch list must hold positive integers")
    split = holdout_split(g, test_fraction, seed)
    g_train = subgraph_from_edges(g, split.train_edges)
    run_cfg = replace(cfg, epochs=epochs[-1], seed=fold_seed(seed, 0))
    neighborhoods = extract(g_train, run_cfg.motif_ids)
    model = init_model(g_train, run_cfg)
    wanted = set(epochs)
    rows = []

    def record(epoch, loss):
        if epoch in wanted:
            rows.append((epoch, loss, _holdout_auc(g, split, embed_all(model, neighborhoods))))

    train(g_train, run_cfg, callbacks=record, neighborhoods=neighborhoods, model=model)
    return rows


def dimension_sweep(g, cfg, dims, seed=0, test_fraction=0.2):
    """Rows ``(dim, test_auc)``: one full training run per dimension."""
    dims = [int(d) for d in dims]
    if not dims:
        raise ValueError("dimension list is empty")
    split = holdout_split(g, test_fraction, seed)
    g_train = subgraph_from_edges(g, split.train_edges)
    neighborhoods = extract(g_train, cfg.motif_ids)
    rows = []
    for d in dims:
        run_cfg = replace(cfg, dim=d, seed=fold_seed(seed, 0))
        model, _ = train(g_train, run_cfg, neighborhoods=neighborhoods)
        rows.append((d, _holdout_auc(g, split, embed_all(model, neighborhoods))))
    return rows

"""Motif-attention embedding model, signed loss and mini-batch training."""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import autodiff as ad
from .autodiff import NumericError
from .motifs import NUM_MOTIFS, extract
from .optim import AdamState, adam_step

logger = logging.getLogger(__name__)

LEAKY_SLOPE = 0.2
MOTIF_SUBSETS = {"all38": tuple(range(NUM_MOTIFS)), "plusminus2": (0, 1)}
Q_CLAMP = (1.0, 100.0)


@dataclass
class SigatConfig:
    dim: int = 20
    hidden: int | None = None
    epochs: int = 100
    batch_size: int = 500
    lr: float = 0.0005
    weight_decay: float = 0.0001
    loss_balance: float | str = "auto"
    motif_subset: str = "all38"
    neighbor_cap: int | None = None
    seed: int = 0
    neighbor_mode: str = "union"
    freeze_features: bool = False
    shuffle: bool = True

    def __post_init__(self):
        for name in ("dim", "epochs", "batch_size"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.hidden is not None and self.hidden < 1:
            raise ValueError("hidden must be >= 1")
        if self.motif_subset not in MOTIF_SUBSETS:
            raise ValueError(f"motif_subset must be one of {sorted(MOTIF_SUBSETS)}")
        if self.neighbor_mode not in ("union", "out", "in"):
            raise ValueError("neighbor_mode must be union, out or in")
        if self.neighbor_cap is not None and self.neighbor_cap < 1:
            raise ValueError("neighbor_cap must be >= 1")
        if isinstance(self.loss_balance, str):
            if self.loss_balance != "auto":
                raise ValueError("loss_balance must be a positive number or 'auto'")
        elif not self.loss_balance > 0:
            raise ValueError("loss_balance must be positive")

    @property
    def hidden_dim(self):
        return self.dim if self.hidden is None else self.hidden

    @property
    def motif_ids(self):
        return MOTIF_SUBSETS[self.motif_subset]

    def to_dict(self):
        return asdict(self)


PARAM_NAMES = ("X", "W", "a", "W1", "b1", "W2", "b2")


@dataclass
class SigatModel:
    """Trainable state.

    ``W[j]`` and ``a[j]`` belong to motif ``motif_ids[j]``.  A node's motif
    message is ``sum_v alpha_uv * (X[v] @ W[j])``; the fused embedding is
    ``tanh(concat(X[u], messages...) @ W1 + b1) @ W2 + b2``.
    """

    config: SigatConfig
    motif_ids: tuple
    params: dict = field(repr=False)

    @property
    def num_nodes(self):
        return self.params["X"].shape[0]

    def copy(self):
        return SigatModel(self.config, self.motif_ids,
                          {k: v.copy() for k, v in self.params.items()})


def _glorot(rng, shape, fan_in, fan_out):
    bound = math.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-bound, bound, size=shape)


def init_model(g, cfg):
    """Fresh parameters for graph ``g``; identical for identical ``cfg.seed``."""
    n = g.num_nodes if hasattr(g, "num_nodes") else int(g)
    d, h = cfg.dim, cfg.hidden_dim
    motif_ids = cfg.motif_ids
    k = len(motif_ids)
    rng = np.random.default_rng(cfg.seed)
    a_bound = math.sqrt(6.0 / (2 * d + 1))
    params = {
        "X": rng.random((n, d)),
        "W": _glorot(rng, (k, d, d), d, d),
        "a": rng.uniform(-a_bound, a_bound, size=(k, 2 * d)),
        "W1": _glorot(rng, ((k + 1) * d, h), (k + 1) * d, h),
        "b1": np.zeros(h),
        "W2": _glorot(rng, (h, d), h, d),
        "b2": np.zeros(d),
    }
    return SigatModel(cfg, tuple(motif_ids), params)


# -- neighborhood selection --------------------------------------------------

def _rows(indptr, indices, nodes):
    """Flatten the CSR rows of ``nodes``: returns (position-in-nodes, neighbor)."""
    starts = indptr[nodes]
    counts = indptr[nodes + 1] - starts
    total = int(counts.sum())
    seg = np.repeat(np.arange(len(nodes)), counts)
    offsets = np.arange(total) - np.repeat(np.cumsum(counts) - counts, counts)
    return seg, indices[np.repeat(starts, counts) + offsets]


def _cap(seg, nbr, cap, rng):
    """Keep a uniform random subset of at most ``cap`` entries per segment."""
    if cap is None or len(seg) == 0:
        return seg, nbr
    counts = np.bincount(seg)
    if counts.max() <= cap:
        return seg, nbr
    order = np.lexsort((rng.random(len(seg)), seg))
    seg, nbr = seg[order], nbr[order]
    rank = np.arange(len(seg)) - np.repeat(np.cumsum(counts) - counts, counts)
    keep = rank < cap
    seg, nbr = seg[keep], nbr[keep]
    order = np.lexsort((nbr, seg))
    return seg[order], nbr[order]


# -- forward -------------------------------------------------------------------

def _nodes_for(params, constant):
    if constant:
        return {k: ad.Node(v) for k, v in params.items()}
    return {k: ad.param(v, name=k) for k, v in params.items()}


def _forward(P, model, nodes, neighborhoods, rng=None, keep_attention=False):
    """Embeddings ``Z`` (one row per entry of ``nodes``) as an autodiff node."""
    cfg = model.config
    nodes = np.asarray(nodes, dtype=np.int64)
    k = len(nodes)
    motif_edges = []
    involved = [nodes]
    for m in model.motif_ids:
        indptr, indices = neighborhoods.csr(m)
        seg, nbr = _cap(*_rows(indptr, indices, nodes), cfg.neighbor_cap, rng)
        motif_edges.append((seg, nbr))
        involved.append(nbr)
    universe = np.unique(np.concatenate(involved))
    Xs = ad.gather(P["X"], universe)
    here = np.searchsorted(universe, nodes)
    blocks = [ad.gather(Xs, here)]
    attention = {}
    for j, (m, (seg, nbr)) in enumerate(zip(model.motif_ids, motif_edges)):
        if len(seg) == 0:
            blocks.append(ad.Node(np.zeros((k, cfg.dim))))
            continue
        src_local = here[seg]
        dst_local = np.searchsorted(universe, nbr)
        rows, inverse = np.unique(np.concatenate([src_local, dst_local]), return_inverse=True)
        H = ad.matmul(ad.gather(Xs, rows), ad.take(P["W"], j))
        # a . [h_u || h_v] splits into a per-row source score plus a target score
        halves = ad.transpose(ad.reshape(ad.take(P["a"], j), (2, cfg.dim)))
        scores = ad.reshape(ad.matmul(H, halves), (-1,))
        logits = ad.leaky_relu(ad.add(ad.gather(scores, 2 * inverse[:len(seg)]),
                                      ad.gather(scores, 2 * inverse[len(seg):] + 1)),
                               LEAKY_SLOPE)
        h_dst = ad.gather(H, inverse[len(seg):])
        alpha = ad.segment_softmax(logits, seg, k)
        if keep_attention:
            attention[m] = (seg, nbr, alpha.value)
        weighted = ad.mul(h_dst, ad.reshape(alpha, (-1, 1)))
        blocks.append(ad.segment_sum(weighted, seg, k))
    fused = ad.tanh(ad.add(ad.matmul(ad.concat(blocks), P["W1"]), P["b1"]))
    Z = ad.add(ad.matmul(fused, P["W2"]), P["b2"])
    if keep_attention:
        return Z, attention
    return Z


def aggregate_motif(model, m, u, neighborhoods):
    """Attention message ``X_m(u)`` (zero vector for an empty neighborhood)."""
    j = model.motif_ids.index(m)
    X, W, a = model.params["X"], model.params["W"][j], model.params["a"][j]
    nbrs = neighborhoods.neighbors(m, u)
    d = model.config.dim
    if len(nbrs) == 0:
        return np.zeros(d)
    hu = X[u] @ W
    hv = X[nbrs] @ W
    logits = ad.leaky_relu(np.concatenate([np.broadcast_to(hu, hv.shape), hv], axis=1) @ a,
                           LEAKY_SLOPE).value
    alpha = np.asarray(ad.masked_softmax(logits))
    return alpha @ hv


def _sampler(model, rng):
    if rng is None and model.config.neighbor_cap:
        return np.random.default_rng(model.config.seed)
    return rng


def attention(model, m, u, neighborhoods, rng=None):
    """Attention coefficients over ``N_m(u)`` (the sampled subset under a cap)."""
    _, att = _forward(_nodes_for(model.params, True), model, [u], neighborhoods,
                      _sampler(model, rng), keep_attention=True)
    if m not in att:
        return np.zeros(0)
    return att[m][2]


def forward(model, u, neighborhoods, rng=None):
    """Embedding ``Z_u`` of one node."""
    return _forward(_nodes_for(model.params, True), model, [u], neighborhoods,
                    _sampler(model, rng)).value[0]


def embed_all(model, neighborhoods, chunk=4096):
    """``(num_nodes, d)`` matrix whose row ``u`` is :func:`forward` of ``u``."""
    n = model.num_nodes
    P = _nodes_for(model.params, True)
    rng = _sampler(model, None)
    out = np.empty((n, model.config.dim))
    for start in range(0, n, chunk):
        nodes = np.arange(start, min(n, start + chunk))
        out[start:start + len(nodes)] = _forward(P, model, nodes, neighborhoods, rng).value
    return out


# -- loss ----------------------------------------------------------------------

@dataclass(frozen=True)
class LossNeighbors:
    """Positive and negative neighbor sets used by the loss, as CSR pairs."""

    pos: tuple
    neg: tuple

    @classmethod
    def from_graph(cls, g, mode="union"):
        return cls(g.signed_neighbors(+1, mode), g.signed_neighbors(-1, mode))

    def balance(self):
        """Ratio of positive to negative neighbor entries, clamped to [1, 100]."""
        n_pos, n_neg = len(self.pos[1]), len(self.neg[1])
        if n_neg == 0:
            return Q_CLAMP[1] if n_pos else Q_CLAMP[0]
        return float(min(max(n_pos / n_neg, Q_CLAMP[0]), Q_CLAMP[1]))


def resolve_balance(cfg, loss_neighbors):
    if cfg.loss_balance == "auto":
        return loss_neighbors.balance()
    return float(cfg.loss_balance)


def _loss_node(P, model, batch, loss_neighbors, neighborhoods, Q, rng=None):
    batch = np.asarray(batch, dtype=np.int64)
    ps, pv = _rows(*loss_neighbors.pos, batch)
    ns, nv = _rows(*loss_neighbors.neg, batch)
    if len(pv) + len(nv) == 0:
        return None
    pu, nu = batch[ps], batch[ns]
    nodes = np.unique(np.concatenate([pu, pv, nu, nv]))
    Z = _forward(P, model, nodes, neighborhoods, rng)
    terms = []
    if len(pv):
        dots = ad.row_dot(ad.gather(Z, np.searchsorted(nodes, pu)),
                          ad.gather(Z, np.searchsorted(nodes, pv)))
        terms.append(ad.scale(ad.total(ad.log_sigmoid(dots)), -1.0))
    if len(nv):
        dots = ad.row_dot(ad.gather(Z, np.searchsorted(nodes, nu)),
                          ad.gather(Z, np.searchsorted(nodes, nv)))
        terms.append(ad.scale(ad.total(ad.log_sigmoid(ad.scale(dots, -1.0))), -Q))
    return terms[0] if len(terms) == 1 else ad.add(terms[0], terms[1])


def loss_and_grads(model, batch, loss_neighbors, neighborhoods, Q, rng=None):
    """Batch loss and its gradient with respect to every parameter array."""
    P = _nodes_for(model.params, False)
    loss = _loss_node(P, model, batch, loss_neighbors, neighborhoods, Q, rng)
    if loss is None:
        return 0.0, {k: np.zeros_like(v) for k, v in model.params.items()}
    loss.backward()
    grads = {k: (node.grad if node.grad is not None else np.zeros_like(node.value))
             for k, node in P.items()}
    return float(loss.value), grads


def batch_loss(model, batch, g, neighborhoods, Q):
    """Signed loss summed over the nodes of ``batch``.

    Each node pulls its positive neighbors closer (``-log sigmoid(z_u . z_v)``)
    and pushes its negative neighbors away (``-Q log sigmoid(-z_u . z_v)``).
    """
    loss_neighbors = LossNeighbors.from_graph(g, model.config.neighbor_mode)
    node = _loss_node(_nodes_for(model.params, True), model, batch, loss_neighbors,
                      neighborhoods, Q)
    return 0.0 if node is None else float(node.value)


# -- training ------------------------------------------------------------------

def _callbacks(callbacks):
    if callbacks is None:
        return []
    if callable(callbacks):
        return [callbacks]
    return list(callbacks)


def train(g, cfg, callbacks=None, neighborhoods=None, model=None):
    """Fit a model on ``g``.

    Returns ``(model, trace)`` where ``trace[e]`` is the summed batch loss of
    epoch ``e + 1``.  Each callback is called as ``cb(epoch, total_loss)``
    after every epoch (epochs count from 1).
    """
    callbacks = _callbacks(callbacks)
    if neighborhoods is None:
        neighborhoods = extract(g, cfg.motif_ids)
    if model is None:
        model = init_model(g, cfg)
    loss_neighbors = LossNeighbors.from_graph(g, cfg.neighbor_mode)
    Q = resolve_balance(cfg, loss_neighbors)
    trainable = {k: v for k, v in model.params.items()
                 if not (cfg.freeze_features and k == "X")}
    state = AdamState.for_params(trainable, lr=cfg.lr, weight_decay=cfg.weight_decay)
    seeds = np.random.SeedSequence(cfg.seed).spawn(2)
    order_rng = np.random.default_rng(seeds[0])
    sample_rng = np.random.default_rng(seeds[1]) if cfg.neighbor_cap else None
    n = g.num_nodes
    trace = []
    logger.debug("training: n=%d motifs=%d Q=%.4f", n, len(model.motif_ids), Q)
    for epoch in range(1, cfg.epochs + 1):
        order = order_rng.permutation(n) if cfg.shuffle else np.arange(n)
        epoch_loss = 0.0
        for b, start in enumerate(range(0, n, cfg.batch_size)):
            batch = order[start:start + cfg.batch_size]
            try:
                value, grads = loss_and_grads(model, batch, loss_neighbors, neighborhoods,
                                              Q, sample_rng)
            except NumericError as exc:
                raise NumericError(f"epoch {epoch}, batch {b + 1}: {exc}") from exc
            adam_step(state, trainable, grads)
            epoch_loss += value
        if not math.isfinite(epoch_loss):
            raise NumericError(f"epoch {epoch}: loss is not finite")
        trace.append(epoch_loss)
        for cb in callbacks:
            cb(epoch, epoch_loss)
    return model, trace

"""Motif-based graph attention embeddings for signed directed networks."""

__version__ = "0.1.0"

from .autodiff import NumericError, grad_check, leaky_relu_scalar, masked_softmax
from .evaluation import (EdgeDataset, EvalReport, Metrics, build_edge_dataset, metrics,
                         random_baseline, run_cv, train_logreg)
from .graph import (DataError, EdgeSplit, ParseError, SignedDigraph, load_edge_list,
                    make_folds, subgraph_from_edges)
from .model import (SigatConfig, SigatModel, aggregate_motif, batch_loss, embed_all, forward,
                    init_model, train)
from .motifs import MotifId, MotifNeighborhoods, catalog, census, extract
from .optim import AdamState, adam_step

__all__ = [
    "AdamState", "DataError", "EdgeDataset", "EdgeSplit", "EvalReport", "Metrics", "MotifId",
    "MotifNeighborhoods", "NumericError", "ParseError", "SigatConfig", "SigatModel",
    "SignedDigraph", "adam_step", "aggregate_motif", "batch_loss", "build_edge_dataset",
    "catalog", "census", "embed_all", "extract", "forward", "grad_check", "init_model",
    "leaky_relu_scalar", "load_edge_list", "make_folds", "masked_softmax", "metrics",
    "random_baseline", "run_cv", "subgraph_from_edges", "train", "train_logreg",
]

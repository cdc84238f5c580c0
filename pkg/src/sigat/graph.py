"""Signed directed graphs: storage, parsing, folds and sub-graphs.

Node ids are dense integers ``0..num_nodes-1``.  Every edge carries a sign
of +1 or -1.  Four sorted adjacency structures (``out_pos``, ``out_neg``,
``in_pos``, ``in_neg``) are kept in compressed-row form so per-node lookups
are O(1) slices.
"""

from __future__ import annotations

import gzip
import hashlib
import io
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

logger = logging.getLogger(__name__)

FORMATS = ("snap-tsv", "weighted-csv")
NEIGHBOR_MODES = ("union", "out", "in")


class DataError(ValueError):
    """Raised for unreadable or inconsistent input data."""


class ParseError(DataError):
    def __init__(self, message, line_no=None, path=None):
        self.line_no = line_no
        self.path = path
        where = ""
        if path is not None:
            where += f"{path}:"
        if line_no is not None:
            where += f"{line_no}: "
        elif where:
            where += " "
        super().__init__(where + message)


def csr_from_pairs(rows, cols, num_rows, dedupe=False):
    """Build ``(indptr, indices)`` with indices sorted inside each row."""
    rows = np.asarray(rows, dtype=np.int64)
    cols = np.asarray(cols, dtype=np.int64)
    order = np.lexsort((cols, rows))
    rows, cols = rows[order], cols[order]
    if dedupe and len(rows):
        keep = np.ones(len(rows), dtype=bool)
        keep[1:] = (rows[1:] != rows[:-1]) | (cols[1:] != cols[:-1])
        rows, cols = rows[keep], cols[keep]
    indptr = np.zeros(num_rows + 1, dtype=np.int64)
    np.cumsum(np.bincount(rows, minlength=num_rows), out=indptr[1:])
    return indptr, cols


@dataclass(frozen=True, eq=False)
class SignedDigraph:
    """Immutable signed directed graph.

    Use :meth:`from_edges` or :func:`load_edge_list` rather than the raw
    constructor.  ``labels`` holds the original node identifiers (first
    appearance order) when the graph came from a file.
    """

    num_nodes: int
    src: np.ndarray
    dst: np.ndarray
    sign: np.ndarray
    labels: np.ndarray | None = None
    stats: dict = field(default_factory=dict)

    def __post_init__(self):
        for name in ("src", "dst", "sign"):
            getattr(self, name).setflags(write=False)
        adj = {}
        n = self.num_nodes
        for key, s in (("pos", 1), ("neg", -1)):
            mask = self.sign == s
            adj["out_" + key] = csr_from_pairs(self.src[mask], self.dst[mask], n)
            adj["in_" + key] = csr_from_pairs(self.dst[mask], self.src[mask], n)
        for indptr, indices in adj.values():
            indptr.setflags(write=False)
            indices.setflags(write=False)
        object.__setattr__(self, "_adj", adj)

    @classmethod
    def from_edges(cls, num_nodes, edges, labels=None):
        """Build a graph from ``(src, dst, sign)`` triples.

        Self-loops are skipped and later duplicates of an ordered pair are
        dropped; both are counted in ``stats``.
        """
        arr = np.asarray(list(edges) if not isinstance(edges, np.ndarray) else edges,
                         dtype=np.int64).reshape(-1, 3)
        src, dst, sign = arr[:, 0], arr[:, 1], arr[:, 2]
        if len(arr) and (src.min() < 0 or dst.min() < 0
                         or src.max() >= num_nodes or dst.max() >= num_nodes):
            raise DataError("edge endpoint outside [0, num_nodes)")
        if not np.isin(sign, (-1, 1)).all():
            raise DataError("edge signs must be +1 or -1")
        loops = src == dst
        src, dst, sign = src[~loops], dst[~loops], sign[~loops]
        _, first = np.unique(src * num_nodes + dst, return_index=True)
        first.sort()
        n_dup = len(src) - len(first)
        g = cls(int(num_nodes), src[first].copy(), dst[first].copy(),
                sign[first].astype(np.int8),
                labels=None if labels is None else np.asarray(labels),
                stats={"self_loops": int(loops.sum()), "duplicates": int(n_dup)})
        return g

    # -- queries ---------------------------------------------------------

    @property
    def num_edges(self):
        return len(self.src)

    @property
    def num_positive(self):
        return int((self.sign > 0).sum())

    @property
    def num_negative(self):
        return int((self.sign < 0).sum())

    def adjacency(self, name):
        """``(indptr, indices)`` for one of out_pos/out_neg/in_pos/in_neg."""
        return self._adj[name]

    def _row(self, name, u):
        indptr, indices = self._adj[name]
        return indices[indptr[u]:indptr[u + 1]]

    def out_pos(self, u):
        return self._row("out_pos", u)

    def out_neg(self, u):
        return self._row("out_neg", u)

    def in_pos(self, u):
        return self._row("in_pos", u)

    def in_neg(self, u):
        return self._row("in_neg", u)

    def edge_list(self):
        return list(zip(self.src.tolist(), self.dst.tolist(), self.sign.tolist()))

    def signed_neighbors(self, sign, mode="union"):
        """Undirected neighbor sets of one sign as CSR.

        ``mode`` picks which directions count: ``"out"``, ``"in"`` or their
        ``"union"``.  A node linked by both a positive and a negative edge
        appears in both the positive and the negative sets.
        """
        if mode not in NEIGHBOR_MODES:
            raise ValueError(f"mode must be one of {NEIGHBOR_MODES}, got {mode!r}")
        mask = self.sign == (1 if sign > 0 else -1)
        s, d = self.src[mask], self.dst[mask]
        if mode == "out":
            rows, cols = s, d
        elif mode == "in":
            rows, cols = d, s
        else:
            rows, cols = np.concatenate([s, d]), np.concatenate([d, s])
        return csr_from_pairs(rows, cols, self.num_nodes, dedupe=True)

    def content_hash(self):
        h = hashlib.sha256()
        h.update(np.int64(self.num_nodes).tobytes())
        h.update(np.ascontiguousarray(self.src, dtype="<i8").tobytes())
        h.update(np.ascontiguousarray(self.dst, dtype="<i8").tobytes())
        h.update(np.ascontiguousarray(self.sign, dtype="<i1").tobytes())
        return h.hexdigest()

    def __eq__(self, other):
        if not isinstance(other, SignedDigraph):
            return NotImplemented
        return (self.num_nodes == other.num_nodes
                and np.array_equal(self.src, other.src)
                and np.array_equal(self.dst, other.dst)
                and np.array_equal(self.sign, other.sign))

    __hash__ = None

    def __repr__(self):
        return (f"SignedDigraph(num_nodes={self.num_nodes}, "
                f"pos={self.num_positive}, neg={self.num_negative})")


# -- parsing ---------------------------------------------------------------

def _open_text(path):
    path = Path(path)
    with open(path, "rb") as fh:
        magic = fh.read(2)
    if magic == b"\x1f\x8b":
        return io.TextIOWrapper(gzip.open(path, "rb"), encoding="utf-8")
    return open(path, encoding="utf-8")


def _to_int(token, line_no, path, what):
    try:
        return int(token)
    except ValueError:
        raise ParseError(f"{what} is not an integer: {token!r}", line_no, path) from None


def load_edge_list(path, format="snap-tsv"):
    """Read a signed edge list and remap node ids densely.

    ``snap-tsv``: ``src<TAB>dst<TAB>sign`` with sign in {1, -1}; lines starting
    with ``#`` are comments.  ``weighted-csv``: ``SOURCE,TARGET,RATING[,TIME]``;
    a rating above zero becomes +1 and anything else -1.  A non-numeric first
    line is treated as a header.  Gzip input is detected automatically.
    """
    if format not in FORMATS:
        raise ValueError(f"unknown format {format!r}; expected one of {FORMATS}")
    path = Path(path)
    if not path.is_file():
        raise DataError(f"no such file: {path}")

    ids = {}
    rows = []
    seen_data = False
    self_loops = 0
    with _open_text(path) as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if format == "snap-tsv":
                parts = line.split()
                if len(parts) != 3:
                    raise ParseError(f"expected 3 fields, got {len(parts)}", line_no, path)
                u, v = (_to_int(p, line_no, path, "node id") for p in parts[:2])
                s = _to_int(parts[2], line_no, path, "sign")
                if s not in (1, -1):
                    raise ParseError(f"sign must be 1 or -1, got {s}", line_no, path)
            else:
                parts = [p.strip() for p in line.split(",")]
                if not seen_data and not parts[0].lstrip("-").isdigit():
                    seen_data = True
                    continue  # header
                if len(parts) not in (3, 4):
                    raise ParseError(f"expected 3 or 4 fields, got {len(parts)}", line_no, path)
                u, v = (_to_int(p, line_no, path, "node id") for p in parts[:2])
                rating = _to_int(parts[2], line_no, path, "rating")
                s = 1 if rating > 0 else -1
            seen_data = True
            if u == v:
                self_loops += 1
                continue
            for node in (u, v):
                if node not in ids:
                    ids[node] = len(ids)
            rows.append((ids[u], ids[v], s))

    labels = np.fromiter(ids.keys(), dtype=np.int64, count=len(ids))
    g = SignedDigraph.from_edges(len(ids), np.array(rows, dtype=np.int64).reshape(-1, 3),
                                 labels=labels)
    g.stats["self_loops"] = self_loops
    if g.stats["self_loops"]:
        logger.warning("%s: skipped %d self-loops", path, g.stats["self_loops"])
    if g.stats["duplicates"]:
        logger.warning("%s: dropped %d duplicate edges", path, g.stats["duplicates"])
    return g


def write_edge_list(g, path):
    """Write ``g`` as snap-tsv using its dense node ids."""
    with open(path, "w", encoding="utf-8") as fh:
        for u, v, s in g.edge_list():
            fh.write(f"{u}\t{v}\t{s}\n")


# -- splits ----------------------------------------------------------------

@dataclass(frozen=True)
class EdgeSplit:
    train_edges: np.ndarray
    test_edges: np.ndarray
    fold_id: int
    seed: int


def make_folds(g, k, seed):
    """Shuffle edge indices with ``seed`` and cut them into ``k`` folds."""
    if k < 2:
        raise ValueError("k must be at least 2")
    if k > g.num_edges:
        raise ValueError(f"k={k} exceeds the number of edges ({g.num_edges})")
    perm = np.random.default_rng(seed).permutation(g.num_edges)
    chunks = np.array_split(perm, k)
    splits = []
    for i, test in enumerate(chunks):
        train = np.concatenate([c for j, c in enumerate(chunks) if j != i])
        splits.append(EdgeSplit(np.sort(train), np.sort(test), i, seed))
    return splits


def holdout_split(g, test_fraction, seed):
    """One random train/test split of the edges."""
    if not 0.0 < test_fraction < 1.0:
        raise ValueError("test_fraction must lie in (0, 1)")
    perm = np.random.default_rng(seed).permutation(g.num_edges)
    n_test = int(round(test_fraction * g.num_edges))
    return EdgeSplit(np.sort(perm[n_test:]), np.sort(perm[:n_test]), 0, seed)


def save_folds(splits, path):
    if not splits:
        raise ValueError("no splits to save")
    doc = {"seed": int(splits[0].seed), "k": len(splits),
           "folds": [s.test_edges.tolist() for s in splits]}
    Path(path).write_text(json.dumps(doc))


def load_folds(path):
    doc = json.loads(Path(path).read_text())
    folds = [np.asarray(f, dtype=np.int64) for f in doc["folds"]]
    if len(folds) != doc["k"]:
        raise DataError("split manifest: k does not match the number of folds")
    splits = []
    for i, test in enumerate(folds):
        train = np.concatenate([f for j, f in enumerate(folds) if j != i])
        splits.append(EdgeSplit(np.sort(train), np.sort(test), i, doc["seed"]))
    return splits


def subgraph_from_edges(g, keep):
    """Graph over the same node set holding only the edges indexed by ``keep``."""
    keep = np.unique(np.asarray(keep, dtype=np.int64))
    if len(keep) and (keep[0] < 0 or keep[-1] >= g.num_edges):
        raise IndexError("edge index out of range")
    return SignedDigraph(g.num_nodes, g.src[keep].copy(), g.dst[keep].copy(),
                         g.sign[keep].copy(), labels=g.labels)

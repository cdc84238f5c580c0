"""The 38-motif catalog and motif-neighborhood extraction.

Motif ids:

* ``0, 1`` undirected sign: ``v`` is a positive (negative) neighbor of ``u``
  through an edge in either direction.
* ``2..5`` directed sign, in the order (out,+), (out,-), (in,+), (in,-):
  ``N_2(u) = out_pos(u)`` and so on.
* ``6..37`` triangles.  A triangle motif is a triple
  ``(uv_sign, uw_config, wv_config)`` with id
  ``6 + 16*sign_index + 4*uw_index + wv_index`` where sign index is 0 for +
  and 1 for -, and configs are indexed ``out+, out-, in+, in-``.  A config of
  an ordered pair ``(x, y)`` is read from ``x``: ``out+`` means an edge
  ``x -> y`` with sign +, ``in-`` means an edge ``y -> x`` with sign -.

``v`` belongs to ``N_t(u)`` for triangle motif ``t`` when ``u`` and ``v`` share
an edge (either direction) of sign ``uv_sign`` and some third node ``w``
satisfies both ``uw_config`` on ``(u, w)`` and ``wv_config`` on ``(w, v)``.
Neighborhoods are sets: several witnesses give one entry.
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .graph import DataError, csr_from_pairs

NUM_MOTIFS = 38
CONFIGS = ("out+", "out-", "in+", "in-")
SIGNS = ("+", "-")

# bit i of a pair mask is set when config CONFIGS[i] holds for that ordered pair
_OUT_POS, _OUT_NEG, _IN_POS, _IN_NEG = 1, 2, 4, 8


@dataclass(frozen=True)
class MotifId:
    id: int
    kind: str
    descriptor: tuple

    def describe(self):
        if self.kind == "undirected-sign":
            return f"u -{self.descriptor[0]}- v"
        if self.kind == "directed-sign":
            direction, sign = self.descriptor
            return f"u {direction}{sign} v"
        s, c1, c2 = self.descriptor
        return f"uv:{s} uw:{c1} wv:{c2}"


def _build_catalog():
    out = [MotifId(0, "undirected-sign", ("+",)),
           MotifId(1, "undirected-sign", ("-",))]
    for direction in ("out", "in"):
        for sign in SIGNS:
            out.append(MotifId(len(out), "directed-sign", (direction, sign)))
    for sign in SIGNS:
        for c1 in CONFIGS:
            for c2 in CONFIGS:
                out.append(MotifId(len(out), "triangle", (sign, c1, c2)))
    return tuple(out)


_CATALOG = _build_catalog()


def catalog():
    """All 38 motifs in id order."""
    return list(_CATALOG)


def triangle_id(uv_sign, uw_config, wv_config):
    return 6 + 16 * SIGNS.index(uv_sign) + 4 * CONFIGS.index(uw_config) + CONFIGS.index(wv_config)


def resolve(motifs):
    """Normalize a motif selection (ids, MotifId objects or None=all) to sorted ids."""
    if motifs is None:
        return list(range(NUM_MOTIFS))
    ids = sorted({m.id if isinstance(m, MotifId) else int(m) for m in motifs})
    if ids and (ids[0] < 0 or ids[-1] >= NUM_MOTIFS):
        raise ValueError("motif id outside the catalog")
    return ids


class MotifNeighborhoods:
    """Per-motif neighbor lists in compressed-row form.

    ``indptr[m]`` has ``num_nodes + 1`` offsets into ``indices[m]``; row ``u``
    is sorted.  Motifs that were not extracted hold empty rows.
    """

    def __init__(self, num_nodes, indptr, indices, motif_ids):
        self.num_nodes = num_nodes
        self.indptr = list(indptr)
        self.indices = list(indices)
        self.motif_ids = tuple(motif_ids)
        for arr in self.indptr + self.indices:
            arr.setflags(write=False)

    def neighbors(self, m, u):
        p = self.indptr[m]
        return self.indices[m][p[u]:p[u + 1]]

    def csr(self, m):
        return self.indptr[m], self.indices[m]

    def degree(self, m):
        return np.diff(self.indptr[m])

    def as_sets(self, m):
        return [set(self.neighbors(m, u).tolist()) for u in range(self.num_nodes)]

    def __eq__(self, other):
        if not isinstance(other, MotifNeighborhoods):
            return NotImplemented
        return (self.num_nodes == other.num_nodes
                and all(np.array_equal(a, b) for a, b in zip(self.indptr, other.indptr))
                and all(np.array_equal(a, b) for a, b in zip(self.indices, other.indices)))

    __hash__ = None


def _pair_masks(g):
    """Map each ordered adjacent pair ``(x, y)`` to its config bit mask."""
    masks = {}
    for u, v, s in zip(g.src.tolist(), g.dst.tolist(), g.sign.tolist()):
        fwd, back = (_OUT_POS, _IN_POS) if s > 0 else (_OUT_NEG, _IN_NEG)
        masks[(u, v)] = masks.get((u, v), 0) | fwd
        masks[(v, u)] = masks.get((v, u), 0) | back
    return masks


def _triangle_table():
    """``table[uv_mask][uw_mask][wv_mask]`` -> tuple of triangle motif ids."""
    bits = [[i for i in range(4) if mask >> i & 1] for mask in range(16)]
    table = [[[()] * 16 for _ in range(16)] for _ in range(16)]
    for uv in range(16):
        signs = [k for k, present in enumerate((uv & (_OUT_POS | _IN_POS),
                                                uv & (_OUT_NEG | _IN_NEG))) if present]
        for m1 in range(16):
            for m2 in range(16):
                table[uv][m1][m2] = tuple(6 + 16 * s + 4 * c1 + c2
                                          for s in signs for c1 in bits[m1] for c2 in bits[m2])
    return table


_TABLE = _triangle_table()


def _triangle_members(g, wanted):
    """Encoded ``(motif, u, v)`` members of the requested triangle motifs.

    Edge iterator: every undirected adjacent pair ``{u, v}`` intersects the
    neighbor sets of its endpoints (cost ``min(deg u, deg v)`` with hashed
    sets), so the total work is O(sum over pairs of the smaller degree).
    """
    n = g.num_nodes
    masks = _pair_masks(g)
    nbrs = [set() for _ in range(n)]
    for u, v in masks:
        nbrs[u].add(v)
    wanted = set(wanted)
    found = set()
    for (u, v), uv in masks.items():
        if u > v:
            continue
        a, b = nbrs[u], nbrs[v]
        common = a & b if len(a) <= len(b) else b & a
        if not common:
            continue
        vu = masks[(v, u)]
        for w in common:
            for motif in _TABLE[uv][masks[(u, w)]][masks[(w, v)]]:
                if motif in wanted:
                    found.add((motif * n + u) * n + v)
            for motif in _TABLE[vu][masks[(v, w)]][masks[(w, u)]]:
                if motif in wanted:
                    found.add((motif * n + v) * n + u)
    return np.fromiter(found, dtype=np.int64, count=len(found))


def extract(g, motifs=None):
    """Materialize ``N_m(u)`` for every requested motif ``m``.

    ``motifs`` takes ids or :class:`MotifId` objects; ``None`` extracts all 38.
    """
    ids = resolve(motifs)
    n = g.num_nodes
    empty_ptr = np.zeros(n + 1, dtype=np.int64)
    indptr = [empty_ptr] * NUM_MOTIFS
    indices = [np.zeros(0, dtype=np.int64)] * NUM_MOTIFS

    for m in ids:
        if m == 0:
            indptr[0], indices[0] = g.signed_neighbors(+1, "union")
        elif m == 1:
            indptr[1], indices[1] = g.signed_neighbors(-1, "union")
        elif m < 6:
            name = ("out_pos", "out_neg", "in_pos", "in_neg")[m - 2]
            p, idx = g.adjacency(name)
            indptr[m], indices[m] = p.copy(), idx.copy()

    tri = [m for m in ids if m >= 6]
    if tri:
        codes = _triangle_members(g, tri)
        motif_of = codes // (n * n)
        rest = codes % (n * n)
        for m in tri:
            sel = rest[motif_of == m]
            indptr[m], indices[m] = csr_from_pairs(sel // n, sel % n, n)
    return MotifNeighborhoods(n, indptr, indices, ids)


def census(neighborhoods):
    """Number of (u, v) memberships per motif, as a length-38 list."""
    return [int(len(ix)) for ix in neighborhoods.indices]


def census_records(neighborhoods):
    """JSON-ready census rows ``{motif_id, descriptor, edge_count}``."""
    counts = census(neighborhoods)
    return [{"motif_id": m.id, "kind": m.kind, "descriptor": list(m.descriptor),
             "edge_count": counts[m.id]} for m in _CATALOG]


# -- binary cache ------------------------------------------------------------
#
# Layout (all little-endian):
#   magic b"SGMN" | u32 version | u64 num_nodes | u32 num_motifs | 32-byte sha256
#   of the graph | u32 count of extracted ids | u8 ids...
#   then per motif m in 0..num_motifs-1: u64 nnz | i64[num_nodes+1] offsets |
#   i64[nnz] neighbors

CACHE_MAGIC = b"SGMN"
CACHE_VERSION = 1


def save_cache(neighborhoods, graph_hash, path):
    with open(path, "wb") as fh:
        fh.write(CACHE_MAGIC)
        fh.write(struct.pack("<IQI", CACHE_VERSION, neighborhoods.num_nodes, NUM_MOTIFS))
        fh.write(bytes.fromhex(graph_hash))
        ids = neighborhoods.motif_ids
        fh.write(struct.pack("<I", len(ids)))
        fh.write(bytes(ids))
        for p, ix in zip(neighborhoods.indptr, neighborhoods.indices):
            fh.write(struct.pack("<Q", len(ix)))
            fh.write(np.ascontiguousarray(p, dtype="<i8").tobytes())
            fh.write(np.ascontiguousarray(ix, dtype="<i8").tobytes())


def load_cache(path, graph_hash=None):
    data = Path(path).read_bytes()
    if data[:4] != CACHE_MAGIC:
        raise DataError(f"{path}: not a motif cache")
    version, n, num_motifs = struct.unpack_from("<IQI", data, 4)
    if version != CACHE_VERSION or num_motifs != NUM_MOTIFS:
        raise DataError(f"{path}: unsupported cache version {version}")
    off = 4 + 16
    stored = data[off:off + 32].hex()
    off += 32
    if graph_hash is not None and stored != graph_hash:
        raise DataError(f"{path}: cache belongs to a different graph")
    (n_ids,) = struct.unpack_from("<I", data, off)
    off += 4
    ids = list(data[off:off + n_ids])
    off += n_ids
    indptr, indices = [], []
    for _ in range(NUM_MOTIFS):
        (nnz,) = struct.unpack_from("<Q", data, off)
        off += 8
        indptr.append(np.frombuffer(data, dtype="<i8", count=n + 1, offset=off).astype(np.int64))
        off += 8 * (n + 1)
        indices.append(np.frombuffer(data, dtype="<i8", count=nnz, offset=off).astype(np.int64))
        off += 8 * nnz
    return MotifNeighborhoods(n, indptr, indices, ids)


def extract_cached(g, motifs=None, cache_dir=None):
    """:func:`extract` with an on-disk cache keyed by graph content and motif set."""
    if cache_dir is None:
        return extract(g, motifs)
    ids = resolve(motifs)
    graph_hash = g.content_hash()
    key = hashlib.sha256((graph_hash + ",".join(map(str, ids))).encode()).hexdigest()[:24]
    path = Path(cache_dir) / f"motifs-{key}.bin"
    if path.is_file():
        return load_cache(path, graph_hash)
    result = extract(g, ids)
    path.parent.mkdir(parents=True, exist_ok=True)
    save_cache(result, graph_hash, path)
    return result

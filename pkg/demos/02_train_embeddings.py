"""Training embeddings and reading the attention weights.

We generate a small network in which every account has a hidden "standing"
and ratings mostly point upward with trust (u -> v is positive when v stands
above u), then train the model and watch the loss fall.  Afterwards we ask
which neighbors a node attends to inside one motif.

    python demos/02_train_embeddings.py
"""

import numpy as np

from sigat import SigatConfig, catalog, embed_all, extract, train
from sigat.graph import SignedDigraph
from sigat.model import attention

rng = np.random.default_rng(7)
n = 150
standing = rng.normal(size=n)
edges, seen = [], set()
while len(edges) < 1200:
    u, v = (int(x) for x in rng.integers(n, size=2))
    if u == v or (u, v) in seen:
        continue
    seen.add((u, v))
    sign = 1 if standing[v] - standing[u] + 0.3 * rng.normal() > -0.5 else -1
    edges.append((u, v, sign))
g = SignedDigraph.from_edges(n, edges)
print(f"{g.num_nodes} nodes, {g.num_positive} positive, {g.num_negative} negative edges")

cfg = SigatConfig(dim=12, epochs=30, batch_size=50, lr=0.005, seed=0)
nb = extract(g, cfg.motif_ids)


def report(epoch, loss):
    if epoch == 1 or epoch % 5 == 0:
        print(f"  epoch {epoch:>3}  total loss {loss:10.2f}")


print("\ntraining")
model, trace = train(g, cfg, callbacks=report, neighborhoods=nb)
print(f"loss fell from {trace[0]:.1f} to {trace[-1]:.1f}")

# Friends should now have larger inner products than foes.
Z = embed_all(model, nb)
dots = np.einsum("ij,ij->i", Z[g.src], Z[g.dst])
print(f"\nmean z_u . z_v over positive edges {dots[g.sign > 0].mean():+.3f}, "
      f"over negative edges {dots[g.sign < 0].mean():+.3f}")

# Attention inside the out+ motif of the busiest node.
m = 2
u = int(np.argmax(nb.degree(m)))
alpha = attention(model, m, u, nb)
print(f"\nnode {u}, motif {m} ({catalog()[m].describe()}): {len(alpha)} neighbors")
for v, a in sorted(zip(nb.neighbors(m, u).tolist(), alpha), key=lambda t: -t[1])[:5]:
    print(f"  neighbor {v:>3}  weight {a:.3f}  standing {standing[v]:+.2f}")
print(f"weights sum to {alpha.sum():.12f}")

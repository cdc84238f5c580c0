"""Motif neighborhoods on a hand-made trust network.

Five accounts rate each other.  Alice trusts Bob and Carol, Carol trusts Bob,
Dave distrusts Alice and Bob, and Bob distrusts Erin.  We look at which
accounts end up in which motif neighborhood of Alice, then print the census.

    python demos/01_motif_census.py
"""

from sigat import SignedDigraph, catalog, census, extract

NAMES = ["alice", "bob", "carol", "dave", "erin"]
A, B, C, D, E = range(5)

g = SignedDigraph.from_edges(5, [
    (A, B, +1), (A, C, +1), (C, B, +1),
    (D, A, -1), (D, B, -1),
    (B, E, -1),
])
nb = extract(g)
motifs = catalog()

print(f"{g.num_nodes} accounts, {g.num_positive} trust and {g.num_negative} distrust ratings\n")

print("Alice's non-empty motif neighborhoods:")
for m in motifs:
    members = [NAMES[v] for v in nb.neighbors(m.id, A)]
    if members:
        print(f"  {m.id:>2}  {m.describe():<24} {', '.join(members)}")

# Bob is a member of the triangle motif (uv:+, uw:out+, wv:out+) for Alice
# because Carol witnesses it: alice -> carol -> bob, all trusting.
print("\nWho sees Alice through a triangle?")
for m in motifs[6:]:
    for u in range(g.num_nodes):
        if A in nb.neighbors(m.id, u).tolist():
            print(f"  {NAMES[u]:<6} via {m.describe()}")

counts = census(nb)
print("\nCensus (motifs with at least one membership):")
for m in motifs:
    if counts[m.id]:
        print(f"  {m.id:>2}  {m.kind:<16} {m.describe():<24} {counts[m.id]}")
print(f"\n{sum(1 for c in counts if c)} of {len(counts)} motifs occur in this network.")

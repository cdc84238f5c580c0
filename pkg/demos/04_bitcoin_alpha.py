"""The full protocol on the Bitcoin-Alpha trust network.

Needs the SNAP archive ``soc-sign-bitcoinalpha.csv.gz`` in ``$SIGAT_DATA_DIR``
or ``./data``; ``sigat fetch bitcoin-alpha`` downloads it.  Ratings above zero
count as trust.  The script prints the dataset statistics, the motif census,
and then 5-fold results for the random baseline, SiGAT+/- and SiGAT at
d=20 and 100 epochs.  The SiGAT runs take roughly half an hour each on one
core.

    python demos/04_bitcoin_alpha.py [--quick]

``--quick`` trains for 5 epochs instead of 100 to check the plumbing.
"""

import sys
import time

from sigat import SigatConfig, census, datasets, extract
from sigat.evaluation import run_cv

info = datasets.DATASETS["bitcoin-alpha"]
path = datasets.locate(info.name)
if path is None:
    print(f"{info.filename} not found in {datasets.data_dir()}.\n"
          f"Run `sigat fetch bitcoin-alpha` or set {datasets.DATA_ENV}.")
    sys.exit(0)

g = datasets.load(info.name, path.parent)
print(f"{info.name}: {g.num_nodes} nodes, {g.num_positive} positive, "
      f"{g.num_negative} negative edges "
      f"({100 * g.num_positive / g.num_edges:.2f}% positive)")
for problem in datasets.check_counts(g, info):
    print("  warning:", problem)

start = time.perf_counter()
counts = census(extract(g))
print(f"motif census in {time.perf_counter() - start:.1f}s; "
      f"{sum(counts[6:])} triangle memberships over {sum(1 for c in counts[6:] if c)} motifs")

epochs = 5 if "--quick" in sys.argv else info.default_epochs
runs = [("Random", "random", SigatConfig(dim=20, epochs=epochs)),
        ("SiGAT+/-", "sigat", SigatConfig(dim=20, epochs=epochs, motif_subset="plusminus2")),
        ("SiGAT", "sigat", SigatConfig(dim=20, epochs=epochs))]
for label, embedder, cfg in runs:
    start = time.perf_counter()
    report = run_cv(g, cfg, k=5, seed=0, embedder=embedder, dataset=info.name)
    print(f"\n{label} ({time.perf_counter() - start:.0f}s)")
    print(report.to_table())

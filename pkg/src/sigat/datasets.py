"""Public signed-network datasets: registry, local lookup and download."""

from __future__ import annotations

import logging
import os
import shutil
import urllib.request
from dataclasses import dataclass
from pathlib import Path

from .graph import DataError, load_edge_list

logger = logging.getLogger(__name__)

DATA_ENV = "SIGAT_DATA_DIR"


@dataclass(frozen=True)
class DatasetInfo:
    name: str
    url: str
    filename: str
    format: str
    num_nodes: int
    num_positive: int
    num_negative: int
    default_epochs: int

    @property
    def num_edges(self):
        return self.num_positive + self.num_negative


DATASETS = {
    "bitcoin-alpha": DatasetInfo(
        "bitcoin-alpha",
        "https://snap.stanford.edu/data/soc-sign-bitcoinalpha.csv.gz",
        "soc-sign-bitcoinalpha.csv.gz", "weighted-csv",
        3783, 22650, 1536, 100),
    "slashdot": DatasetInfo(
        "slashdot",
        "https://snap.stanford.edu/data/soc-sign-Slashdot090221.txt.gz",
        "soc-sign-Slashdot090221.txt.gz", "snap-tsv",
        82140, 425072, 124130, 20),
    "epinions": DatasetInfo(
        "epinions",
        "https://snap.stanford.edu/data/soc-sign-epinions.txt.gz",
        "soc-sign-epinions.txt.gz", "snap-tsv",
        131828, 717667, 123705, 10),
}


def data_dir():
    return Path(os.environ.get(DATA_ENV, Path.cwd() / "data"))


def locate(name, directory=None):
    """Path of a downloaded dataset, or None when it is not on disk.

    Both the gzip archive and its decompressed twin are accepted.
    """
    info = DATASETS[name]
    directory = Path(directory) if directory is not None else data_dir()
    for candidate in (info.filename, info.filename.removesuffix(".gz")):
        path = directory / candidate
        if path.is_file():
            return path
    return None


def load(name, directory=None):
    path = locate(name, directory)
    if path is None:
        raise DataError(f"dataset {name!r} not found in {directory or data_dir()}; "
                        f"run `sigat fetch {name}` first")
    return load_edge_list(path, DATASETS[name].format)


def check_counts(g, info):
    """Compare a loaded graph with the published node/edge counts.

    Returns a list of human-readable mismatches (empty when all agree).
    """
    problems = []
    for label, got, want in (("nodes", g.num_nodes, info.num_nodes),
                             ("positive edges", g.num_positive, info.num_positive),
                             ("negative edges", g.num_negative, info.num_negative)):
        if got != want:
            problems.append(f"{info.name}: {label} {got} != {want}")
    return problems


def fetch(name, directory=None, url=None, timeout=60.0):
    """Download one dataset archive and validate it against its published counts.

    ``url`` overrides the registry address (mirrors, ``file://`` paths).
    Returns ``(path, problems)``; ``problems`` lists count mismatches and is
    empty for a clean download.  Unparseable downloads are removed and raise
    :class:`DataError`.
    """
    info = DATASETS[name]
    directory = Path(directory) if directory is not None else data_dir()
    directory.mkdir(parents=True, exist_ok=True)
    target = directory / info.filename
    partial = target.with_name(target.name + ".part")
    logger.info("downloading %s", url or info.url)
    try:
        with urllib.request.urlopen(url or info.url, timeout=timeout) as resp, \
                open(partial, "wb") as out:
            shutil.copyfileobj(resp, out)
    except OSError as exc:
        partial.unlink(missing_ok=True)
        raise DataError(f"download of {name} failed: {exc}") from exc
    try:
        problems = check_counts(load_edge_list(partial, info.format), info)
    except DataError:
        partial.unlink(missing_ok=True)
        raise
    partial.replace(target)
    for p in problems:
        logger.warning(p)
    return target, problems

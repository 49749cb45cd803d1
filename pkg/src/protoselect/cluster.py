"""Correlation dissimilarity, hierarchical clustering, dendrogram cuts, ARI."""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import InputError

LINKAGES = {
    "complete": _kernels.LINK_COMPLETE,
    "single": _kernels.LINK_SINGLE,
    "average": _kernels.LINK_AVERAGE,
}


@dataclass(frozen=True)
class Dissimilarity:
    """Symmetric p x p dissimilarity with zero diagonal, entries in [0, 2]."""

    D: np.ndarray

    def __post_init__(self):
        D = np.asarray(self.D, dtype=float)
        object.__setattr__(self, "D", D)
        if D.ndim != 2 or D.shape[0] != D.shape[1]:
            raise InputError("dissimilarity must be square")
        if np.max(np.abs(D - D.T)) > 1e-12:
            raise InputError("dissimilarity must be symmetric")
        if np.max(np.abs(np.diag(D))) > 1e-12:
            raise InputError("dissimilarity diagonal must be zero")
        if D.min() < -1e-12 or D.max() > 2 + 1e-12:
            raise InputError("dissimilarity entries must lie in [0, 2]")

    @property
    def p(self) -> int:
        return self.D.shape[0]


@dataclass(frozen=True)
class Dendrogram:
    """Merge tree: (p-1, 3) records of (left node, right node, height).

    Leaves are 0..p-1; merge m creates node p+m. For complete and average
    linkage heights are non-decreasing in merge order.
    """

    merges: np.ndarray
    leaf_count: int

    def __post_init__(self):
        merges = np.asarray(self.merges, dtype=float)
        object.__setattr__(self, "merges", merges)
        if merges.shape != (self.leaf_count - 1, 3):
            raise InputError("merge table shape does not match leaf count")


@dataclass(frozen=True)
class Clustering:
    """Partition of features 1..p into clusters labelled 1..K."""

    labels: np.ndarray
    K: int

    def __post_init__(self):
        labels = np.asarray(self.labels, dtype=int)
        object.__setattr__(self, "labels", labels)
        seen = np.unique(labels)
        if not np.array_equal(seen, np.arange(1, self.K + 1)):
            raise InputError("labels must use every id in 1..K")

    @property
    def p(self) -> int:
        return self.labels.shape[0]

    def members(self, k: int) -> np.ndarray:
        """0-based feature indices of cluster k."""
        return np.where(self.labels == k)[0]


def correlation_dissimilarity(X: np.ndarray) -> Dissimilarity:
    """D_jk = 1 - sample correlation of columns j and k."""
    X = np.asarray(X, dtype=float)
    sd = X.std(axis=0)
    bad = np.where(sd <= 0)[0]
    if bad.size:
        raise InputError(f"constant column at index {bad[0]} has no correlation")
    C = np.corrcoef(X, rowvar=False)
    D = 1.0 - C
    np.fill_diagonal(D, 0.0)
    D = np.clip(0.5 * (D + D.T), 0.0, 2.0)
    return Dissimilarity(D=D)


def hclust(diss: Dissimilarity, linkage: str = "complete") -> Dendrogram:
    """Agglomerative merge tree under the chosen linkage.

    Ties on the minimal linkage distance merge the pair with the smallest
    lexicographic indices, so results are deterministic.
    """
    if linkage not in LINKAGES:
        raise InputError(f"unknown linkage {linkage!r}; pick from {sorted(LINKAGES)}")
    merges = _kernels.linkage_kernel(
        np.ascontiguousarray(diss.D), LINKAGES[linkage]
    )
    return Dendrogram(merges=merges, leaf_count=diss.p)


def cut(dend: Dendrogram, K: int) -> Clustering:
    """Partition obtained by undoing the last K-1 merges.

    Cluster ids 1..K are assigned in order of each cluster's smallest member.
    """
    p = dend.leaf_count
    if not 1 <= K <= p:
        raise InputError(f"K must lie in 1..{p}, got {K}")
    parent = np.arange(2 * p - 1)

    def find(a: int) -> int:
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for m in range(p - K):
        left, right, _ = dend.merges[m]
        new = p + m
        parent[find(int(left))] = new
        parent[find(int(right))] = new
    roots = np.array([find(j) for j in range(p)])
    labels = np.zeros(p, dtype=int)
    next_id = 1
    assigned: dict[int, int] = {}
    for j in range(p):
        r = roots[j]
        if r not in assigned:
            assigned[r] = next_id
            next_id += 1
        labels[j] = assigned[r]
    return Clustering(labels=labels, K=next_id - 1)


def adjusted_rand_index(a: Clustering, b: Clustering) -> float:
    """Adjusted Rand Index from the pair-count contingency table."""
    if a.p != b.p:
        raise InputError("clusterings compare different numbers of features")
    table = np.zeros((a.K, b.K))
    for la, lb in zip(a.labels, b.labels):
        table[la - 1, lb - 1] += 1

    def comb2(x):
        return x * (x - 1) / 2.0

    nij = comb2(table).sum()
    ai = comb2(table.sum(axis=1)).sum()
    bj = comb2(table.sum(axis=0)).sum()
    total = comb2(a.p)
    expected = ai * bj / total
    max_index = 0.5 * (ai + bj)
    if max_index == expected:
        # both trivial partitions; identical iff 1
        return 1.0 if np.array_equal(a.labels, b.labels) else 0.0
    return float((nij - expected) / (max_index - expected))


def save_clustering(path: str, clustering: Clustering, feature_names: list[str]):
    """Two-column CSV export: feature_name, cluster_id."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["feature_name", "cluster_id"])
        for name, label in zip(feature_names, clustering.labels):
            writer.writerow([name, int(label)])


def load_clustering(path: str, feature_names: list[str]) -> Clustering:
    """Read a clustering exported by save_clustering (feature order from
    feature_names; ids are relabelled to 1..K if needed)."""
    by_name: dict[str, int] = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or len(header) < 2:
            raise InputError(f"{path}: expected two columns")
        for lineno, row in enumerate(reader, start=2):
            if len(row) < 2:
                raise InputError(f"{path}:{lineno}: expected two columns")
            try:
                by_name[row[0]] = int(row[1])
            except ValueError:
                raise InputError(f"{path}:{lineno}: bad cluster id") from None
    try:
        raw = np.array([by_name[name] for name in feature_names])
    except KeyError as exc:
        raise InputError(f"{path}: missing feature {exc.args[0]!r}") from None
    ids = {v: i + 1 for i, v in enumerate(sorted(set(raw)))}
    labels = np.array([ids[v] for v in raw])
    return Clustering(labels=labels, K=len(ids))

"""Marginal significance testing of prototypes (screening-only conditioning)
with Benjamini-Hochberg FDR control over the cluster-level hypotheses."""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .cluster import Clustering
from .dataset import Dataset
from .errors import InputError
from .polyhedra import selective_pvalue, swap_contrast
from .proto import extract_prototypes, screening_constraints


@dataclass(frozen=True)
class ClusterTest:
    cluster_id: int
    prototype: str
    p_value: float
    null_status: str = "unknown"  # "null" / "non_null" in simulations


@dataclass(frozen=True)
class MarginalTestReport:
    tests: list[ClusterTest] = field(default_factory=list)
    q: float = 0.1
    rejected: list[int] = field(default_factory=list)  # cluster ids

    def to_json(self, path: str):
        payload = {
            "q": self.q,
            "rejected_clusters": self.rejected,
            "tests": [vars(t) for t in self.tests],
        }
        with open(path, "w") as fh:
            json.dump(payload, fh, indent=2, default=float)

    def qq_data(self) -> np.ndarray:
        """Sorted p-values paired with uniform quantiles, for QQ plotting."""
        p = np.sort([t.p_value for t in self.tests])
        k = p.size
        u = (np.arange(1, k + 1)) / (k + 1)
        return np.column_stack([u, p])


def bh_procedure(pvalues: np.ndarray, q: float) -> np.ndarray:
    """Benjamini-Hochberg step-up: reject the k smallest p-values for the
    largest k with p_(k) <= k q / K. Returns 0-based indices."""
    pvalues = np.asarray(pvalues, dtype=float)
    if not 0 < q <= 1:
        raise InputError("q must lie in (0, 1]")
    if pvalues.size and (pvalues.min() < 0 or pvalues.max() > 1):
        raise InputError("p-values must lie in [0, 1]")
    K = pvalues.size
    if K == 0:
        return np.array([], dtype=int)
    order = np.argsort(pvalues, kind="stable")
    sorted_p = pvalues[order]
    thresholds = q * np.arange(1, K + 1) / K
    passing = np.where(sorted_p <= thresholds)[0]
    if passing.size == 0:
        return np.array([], dtype=int)
    cutoff = passing[-1] + 1
    return np.sort(order[:cutoff])


def run_prototest(
    ds: Dataset,
    clustering: Clustering,
    sigma: float | None = None,
    q: float = 0.1,
    null_labels: np.ndarray | None = None,
) -> MarginalTestReport:
    """Selective marginal tests of each cluster's prototype.

    Conditions only on the prototyping step (no second-stage lasso event).
    The per-cluster contrast is eta = x_P / ||x_P||^2, testing the marginal
    projection of mu onto the prototype. null_labels, when supplied (one
    boolean per cluster, True = null), is recorded for simulation bookkeeping.
    """
    if not ds.standardized:
        raise InputError("dataset must be standardized before testing")
    sigma = ds.sigma if sigma is None else sigma
    if sigma is None:
        sigma = ds.resolve_sigma()
    X, y = ds.X, ds.y
    protoset = extract_prototypes(X, y, clustering)
    poly = screening_constraints(X, clustering, protoset, y=y)
    tests = []
    for k in range(clustering.K):
        j = protoset.prototypes[k]
        xj = X[:, j]
        eta = xj / float(xj @ xj)
        p_value = selective_pvalue(eta, y, poly, sigma)
        status = "unknown"
        if null_labels is not None:
            status = "null" if null_labels[k] else "non_null"
        tests.append(
            ClusterTest(
                cluster_id=k + 1,
                prototype=ds.feature_names[j],
                p_value=p_value,
                null_status=status,
            )
        )
    rejected_idx = bh_procedure(np.array([t.p_value for t in tests]), q)
    return MarginalTestReport(
        tests=tests, q=q, rejected=[int(i) + 1 for i in rejected_idx]
    )


def swap_in_pvalue(
    ds: Dataset,
    clustering: Clustering,
    cluster_id: int,
    feature: int,
    sigma: float,
) -> float:
    """Marginal-test p-value for a non-prototype, swapping it in against the
    screening-only polyhedron."""
    protoset = extract_prototypes(ds.X, ds.y, clustering)
    poly = screening_constraints(ds.X, clustering, protoset, y=ds.y)
    proto = protoset.prototypes[cluster_id - 1]
    contrast = swap_contrast(ds.X, np.array([proto]), proto, feature)
    return selective_pvalue(contrast.eta, ds.y, poly, sigma)

"""Cluster-count selection from dendrogram merge heights vs a uniform reference.

The observed merge-height curve h^X_k drops sharply once merges start joining
genuinely distinct clusters. A Monte Carlo reference built from column-wise
uniform (or permuted) matrices calibrates the baseline decay; the gap is
g_k = mean_b h^U_k - h^X_k and the selected count maximizes its first
difference d_k = g_k - g_{k-1} over k = 2..k_max.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .cluster import Dendrogram, correlation_dissimilarity, hclust
from .errors import InputError
from .rng import derived_rng


@dataclass(frozen=True)
class GapCurve:
    ks: np.ndarray  # cluster counts, ascending from 1
    h_X: np.ndarray  # merge height producing k clusters in the data
    h_U_mean: np.ndarray  # Monte Carlo mean reference heights
    h_U_se: np.ndarray  # standard errors of the reference heights
    g_hat: np.ndarray  # gap values
    d_hat: np.ndarray  # first differences (NaN at k=1)
    K_hat: int

    def to_csv(self, path: str):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["k", "h_X", "h_U_mean", "h_U_se", "g_hat", "d_hat"])
            for i, k in enumerate(self.ks):
                writer.writerow(
                    [
                        int(k),
                        repr(self.h_X[i]),
                        repr(self.h_U_mean[i]),
                        repr(self.h_U_se[i]),
                        repr(self.g_hat[i]),
                        "" if np.isnan(self.d_hat[i]) else repr(self.d_hat[i]),
                    ]
                )


def reference_matrix(X: np.ndarray, seed: int, scheme: str = "uniform") -> np.ndarray:
    """Null reference on the scale of X: column-wise uniform draws between
    each column's min and max ("uniform"), or per-column random permutation
    ("permute")."""
    X = np.asarray(X, dtype=float)
    rng = derived_rng(seed, 303)
    if scheme == "uniform":
        lo = X.min(axis=0)
        hi = X.max(axis=0)
        return lo + (hi - lo) * rng.random(X.shape)
    if scheme == "permute":
        out = np.empty_like(X)
        for j in range(X.shape[1]):
            out[:, j] = rng.permutation(X[:, j])
        return out
    raise InputError(f"unknown reference scheme {scheme!r}")


def merge_heights(dend: Dendrogram) -> np.ndarray:
    """Heights h_k of the merge producing k clusters, returned as an array
    indexed by k-1 for k = 1..p-1 (merge number p-k)."""
    p = dend.leaf_count
    heights = dend.merges[:, 2]
    # merge i (1-based) leaves p - i clusters, so h_k = height of merge p - k
    return heights[::-1][: p - 1].copy()


def estimate_clusters(
    X: np.ndarray,
    B: int = 100,
    linkage: str = "complete",
    k_max: int | None = None,
    seed: int = 0,
    scheme: str = "uniform",
) -> GapCurve:
    """Gap curve and selected cluster count K_hat = argmax_{2..k_max} d_hat_k.

    Ties in the argmax break toward smaller k (fewer clusters means fewer
    prototypes, the conservative direction for downstream screening).
    """
    X = np.asarray(X, dtype=float)
    n, p = X.shape
    if B < 1:
        raise InputError("B must be at least 1")
    if k_max is None:
        k_max = min(p - 1, n - 2)
    if not 2 <= k_max <= p - 1:
        raise InputError(f"k_max must lie in 2..{p - 1}")
    h_x = merge_heights(hclust(correlation_dissimilarity(X), linkage))
    ref = np.empty((B, p - 1))
    for b in range(B):
        U = reference_matrix(X, seed=seed * 100003 + b, scheme=scheme)
        ref[b] = merge_heights(hclust(correlation_dissimilarity(U), linkage))
    h_u_mean = ref.mean(axis=0)
    h_u_se = np.sqrt(np.mean((ref - h_u_mean) ** 2, axis=0))
    g_hat = h_u_mean - h_x
    d_hat = np.full(p - 1, np.nan)
    d_hat[1:] = g_hat[1:] - g_hat[:-1]
    search = d_hat[1:k_max]  # k = 2..k_max
    k_hat = int(np.argmax(search)) + 2
    ks = np.arange(1, p)
    return GapCurve(
        ks=ks,
        h_X=h_x,
        h_U_mean=h_u_mean,
        h_U_se=h_u_se,
        g_hat=g_hat,
        d_hat=d_hat,
        K_hat=k_hat,
    )

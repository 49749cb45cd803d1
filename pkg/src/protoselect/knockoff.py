"""Split-sample knockoff filter for the prototype-lasso pipeline.

Clustering is fixed from all rows, prototypes come from the first half of the
data only, knockoffs are built from the full second-half design before
reducing to prototype columns, and selection thresholds the lasso entry-value
differences W_j = Z_j - Z_tilde_j.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .cluster import Clustering
from .dataset import Dataset, standardize
from .errors import InputError, NumericalError
from .lasso import entry_values
from .proto import PrototypeSet, extract_prototypes
from .rng import derived_rng

_GRAM_TOL = 1e-8


@dataclass(frozen=True)
class KnockoffMatrix:
    """Equicorrelated knockoff copy of a design block.

    x_tilde matches the (possibly zero-row augmented) source; s is in the
    Gram scale of the source columns. rows_added counts augmentation rows.
    """

    x_tilde: np.ndarray
    s: np.ndarray
    rows_added: int = 0


@dataclass(frozen=True)
class KnockoffRun:
    protoset: PrototypeSet
    W: np.ndarray  # one statistic per prototype, cluster order
    threshold: float
    selected: np.ndarray  # selected prototype feature indices (0-based)
    q: float

    def to_json(self, path: str, feature_names: list[str]):
        payload = {
            "q": self.q,
            "threshold": None if np.isinf(self.threshold) else float(self.threshold),
            "prototypes": [feature_names[j] for j in self.protoset.prototypes],
            "W": [float(w) for w in self.W],
            "selected": [feature_names[j] for j in self.selected],
        }
        with open(path, "w") as fh:
            json.dump(payload, fh, indent=2)


def make_knockoffs(X_block: np.ndarray) -> KnockoffMatrix:
    """Equicorrelated knockoffs: preserve the Gram matrix exactly while
    damping each original-knockoff cross correlation by a common s.

    Columns must share a common norm (standardized). Designs with fewer than
    2p rows are zero-row augmented first; both Gram identities are certified
    post hoc at 1e-8.
    """
    X = np.asarray(X_block, dtype=float)
    n, p = X.shape
    col_ss = (X**2).sum(axis=0)
    scale = float(col_ss[0])
    if scale <= 0 or np.max(np.abs(col_ss - scale)) > 1e-6 * scale:
        raise InputError("knockoffs need columns with a common norm; standardize first")
    rows_added = max(0, 2 * p - n)
    if rows_added:
        X = np.vstack([X, np.zeros((rows_added, p))])
    Xu = X / np.sqrt(scale)
    sigma_c = Xu.T @ Xu
    vals, vecs = np.linalg.eigh(sigma_c)
    if vals.min() < 1e-10:
        raise NumericalError(
            "column Gram is numerically singular; knockoffs undefined "
            "(the design needs more rows than columns after centering)"
        )
    s = min(1.0, 2.0 * float(vals.min()))
    sigma_inv = vecs @ np.diag(1.0 / vals) @ vecs.T
    # C^T C = 2 s I - s^2 Sigma^{-1}, PSD because s <= 2 lambda_min
    ctc = 2.0 * s * np.eye(p) - s * s * sigma_inv
    cvals, cvecs = np.linalg.eigh(ctc)
    cvals = np.where(cvals < 1e-12, 0.0, cvals)
    C = cvecs @ np.diag(np.sqrt(cvals)) @ cvecs.T
    # orthonormal complement of col(Xu)
    q_full, _ = np.linalg.qr(Xu, mode="complete")
    U = q_full[:, p : 2 * p]
    x_tilde_u = Xu @ (np.eye(p) - s * sigma_inv) + U @ C
    x_tilde = np.sqrt(scale) * x_tilde_u
    s_gram = np.full(p, s * scale)
    _certify_gram(X, x_tilde, s_gram)
    return KnockoffMatrix(x_tilde=x_tilde, s=s_gram, rows_added=rows_added)


def _certify_gram(X, x_tilde, s_gram):
    gram = X.T @ X
    err1 = np.max(np.abs(x_tilde.T @ x_tilde - gram))
    err2 = np.max(np.abs(X.T @ x_tilde - (gram - np.diag(s_gram))))
    if err1 > _GRAM_TOL or err2 > _GRAM_TOL:
        raise NumericalError(
            f"knockoff Gram identities failed: {err1:.2e}, {err2:.2e}"
        )


def knockoff_statistics(
    X_p: np.ndarray, X_tilde_p: np.ndarray, y: np.ndarray
) -> np.ndarray:
    """W_j = Z_j - Z_tilde_j from lasso entry values on the concatenated
    design. Rows of the design beyond len(y) (augmentation) get zero response
    weight."""
    X_p = np.asarray(X_p, dtype=float)
    X_tilde_p = np.asarray(X_tilde_p, dtype=float)
    y = np.asarray(y, dtype=float)
    if X_p.shape != X_tilde_p.shape:
        raise InputError("original and knockoff blocks must match in shape")
    if X_p.shape[0] < y.shape[0]:
        raise InputError("design has fewer rows than the response")
    if X_p.shape[0] > y.shape[0]:
        y = np.concatenate([y, np.zeros(X_p.shape[0] - y.shape[0])])
    both = np.hstack([X_p, X_tilde_p])
    Z = entry_values(both, y).Z
    m = X_p.shape[1]
    return Z[:m] - Z[m:]


def knockoff_threshold(W: np.ndarray, q: float) -> float:
    """Data-dependent threshold T = min{t in {|W_j|} \\ {0} :
    (1 + #{W_j <= -t}) / max(#{W_j >= t}, 1) <= q}; +inf when no t qualifies."""
    if not 0 < q <= 1:
        raise InputError("q must lie in (0, 1]")
    W = np.asarray(W, dtype=float)
    candidates = np.unique(np.abs(W))
    candidates = candidates[candidates > 0]
    for t in candidates:
        ratio = (1 + np.sum(W <= -t)) / max(int(np.sum(W >= t)), 1)
        if ratio <= q:
            return float(t)
    return np.inf


def run_knockoff_protolasso(
    ds: Dataset,
    clustering: Clustering,
    q: float,
    seed: int = 0,
    split: str = "random",
) -> KnockoffRun:
    """Seeded half-split knockoff screening at the prototype level.

    split="random" permutes rows with the seed and sends the first ceil(n/2)
    to the prototyping half; split="first-half" keeps the given row order
    (for designs whose halves were generated separately).
    """
    X, y = ds.X, ds.y
    n = X.shape[0]
    if split == "random":
        perm = derived_rng(seed, 505).permutation(n)
    elif split == "first-half":
        perm = np.arange(n)
    else:
        raise InputError(f"unknown split {split!r}")
    half = (n + 1) // 2
    rows1, rows2 = perm[:half], perm[half:]
    X1s = standardize(X[rows1])
    protoset = extract_prototypes(X1s, y[rows1], clustering)
    X2s = standardize(X[rows2])
    knock = make_knockoffs(X2s)
    if knock.rows_added:
        X2s = np.vstack([X2s, np.zeros((knock.rows_added, X2s.shape[1]))])
    cols = protoset.prototypes
    W = knockoff_statistics(X2s[:, cols], knock.x_tilde[:, cols], y[rows2])
    T = knockoff_threshold(W, q)
    selected = protoset.prototypes[W >= T]
    return KnockoffRun(protoset=protoset, W=W, threshold=T, selected=selected, q=q)


def screen_prototypes(
    X2: np.ndarray,
    y2: np.ndarray,
    protoset: PrototypeSet,
    q: float,
    knock: KnockoffMatrix | None = None,
) -> KnockoffRun:
    """Knockoff screening of a fixed prototype set on the second-half data.

    Accepts a precomputed KnockoffMatrix for X2 so simulation loops can reuse
    one construction across response replications.
    """
    if knock is None:
        knock = make_knockoffs(X2)
    X2 = np.asarray(X2, dtype=float)
    if knock.rows_added:
        X2 = np.vstack([X2, np.zeros((knock.rows_added, X2.shape[1]))])
    cols = protoset.prototypes
    W = knockoff_statistics(X2[:, cols], knock.x_tilde[:, cols], y2)
    T = knockoff_threshold(W, q)
    selected = protoset.prototypes[W >= T]
    return KnockoffRun(protoset=protoset, W=W, threshold=T, selected=selected, q=q)


def fdp_power(
    run: KnockoffRun, clustering: Clustering, beta: np.ndarray
) -> tuple[float, float]:
    """Cluster-level false discovery proportion and power.

    A selected prototype is a true positive iff its cluster contains at least
    one nonzero coefficient; power is relative to the number of signal
    clusters."""
    beta = np.asarray(beta, dtype=float)
    signal_clusters = {
        k for k in range(1, clustering.K + 1) if np.any(beta[clustering.members(k)] != 0)
    }
    if run.selected.size == 0:
        return 0.0, 0.0
    labels = clustering.labels[run.selected]
    true_pos = sum(1 for lab in labels if lab in signal_clusters)
    false_pos = run.selected.size - true_pos
    fdp = false_pos / max(run.selected.size, 1)
    power = true_pos / len(signal_clusters) if signal_clusters else 0.0
    return float(fdp), float(power)

"""Supervised prototype extraction and the marginal-screening polyhedron."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .cluster import Clustering
from .errors import InputError

TAG_SCREENING = "screening"
TAG_LASSO = "lasso"


@dataclass(frozen=True)
class PrototypeSet:
    """One prototype per cluster: the member maximizing |x_j^T y|, with the
    sign of that inner product."""

    prototypes: np.ndarray  # K 0-based feature indices, ordered by cluster id
    signs: np.ndarray  # K values in {-1, +1}

    def __post_init__(self):
        protos = np.asarray(self.prototypes, dtype=int)
        signs = np.asarray(self.signs, dtype=int)
        object.__setattr__(self, "prototypes", protos)
        object.__setattr__(self, "signs", signs)
        if protos.shape != signs.shape:
            raise InputError("prototypes and signs must align")
        if not np.all(np.isin(signs, (-1, 1))):
            raise InputError("signs must be -1 or +1")

    @property
    def K(self) -> int:
        return self.prototypes.shape[0]

    def to_csv(self, path: str, feature_names: list[str]):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["cluster_id", "prototype_feature", "sign"])
            for k, (j, s) in enumerate(zip(self.prototypes, self.signs), start=1):
                writer.writerow([k, feature_names[j], int(s)])


@dataclass(frozen=True)
class Polyhedron:
    """Affine selection event {y : A y <= b} with per-row provenance tags."""

    A: np.ndarray
    b: np.ndarray
    row_tags: list[str] = field(default_factory=list)

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        b = np.asarray(self.b, dtype=float).ravel()
        if A.size == 0:
            A = A.reshape(0, A.shape[1] if A.ndim == 2 and A.shape[1] else 0)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)
        if A.shape[0] != b.shape[0]:
            raise InputError("A and b row counts differ")
        if not self.row_tags:
            object.__setattr__(self, "row_tags", [TAG_SCREENING] * A.shape[0])
        elif len(self.row_tags) != A.shape[0]:
            raise InputError("row_tags length does not match A")

    @property
    def m(self) -> int:
        return self.A.shape[0]

    def contains(self, y: np.ndarray, slack: float = 1e-8) -> bool:
        if self.m == 0:
            return True
        return bool(np.all(self.A @ y <= self.b + slack))


def empty_polyhedron(n: int) -> Polyhedron:
    return Polyhedron(A=np.zeros((0, n)), b=np.zeros(0), row_tags=[])


def stack(*polys: Polyhedron) -> Polyhedron:
    polys = [q for q in polys if q.m > 0]
    if not polys:
        raise InputError("cannot stack only empty polyhedra without a dimension")
    return Polyhedron(
        A=np.vstack([q.A for q in polys]),
        b=np.concatenate([q.b for q in polys]),
        row_tags=[t for q in polys for t in q.row_tags],
    )


def extract_prototypes(
    X: np.ndarray, y: np.ndarray, clustering: Clustering
) -> PrototypeSet:
    """Per cluster k, the argmax of |x_j^T y| over members, ties to the lowest
    feature index."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    corr = X.T @ y
    protos = np.empty(clustering.K, dtype=int)
    signs = np.empty(clustering.K, dtype=int)
    for k in range(1, clustering.K + 1):
        members = clustering.members(k)
        best = members[np.argmax(np.abs(corr[members]))]
        protos[k - 1] = best
        signs[k - 1] = 1 if corr[best] >= 0 else -1
    return PrototypeSet(prototypes=protos, signs=signs)


def screening_constraints(
    X: np.ndarray,
    clustering: Clustering,
    protoset: PrototypeSet,
    y: np.ndarray | None = None,
) -> Polyhedron:
    """Selection event of the prototyping step.

    Per cluster with prototype P and sign s, each other member j contributes
    the two rows (x_j - s x_P)^T y <= 0 and (-x_j - s x_P)^T y <= 0, i.e.
    |x_j^T y| <= s x_P^T y. Singleton clusters contribute nothing. If y is
    supplied, the prototype set is checked to actually be maximal for it.
    """
    X = np.asarray(X, dtype=float)
    n = X.shape[0]
    if protoset.K != clustering.K:
        raise InputError("prototype set does not match the clustering")
    if y is not None:
        refit = extract_prototypes(X, y, clustering)
        if not (
            np.array_equal(refit.prototypes, protoset.prototypes)
            and np.array_equal(refit.signs, protoset.signs)
        ):
            raise InputError("prototype set is not maximal for the supplied y")
    rows = []
    for k in range(clustering.K):
        members = clustering.members(k + 1)
        proto = protoset.prototypes[k]
        if proto not in members:
            raise InputError(f"prototype {proto} outside its cluster {k + 1}")
        s = protoset.signs[k]
        others = members[members != proto]
        if others.size == 0:
            continue
        xp = s * X[:, proto]
        rows.append(X[:, others].T - xp)
        rows.append(-X[:, others].T - xp)
    if not rows:
        return empty_polyhedron(n)
    A = np.vstack(rows)
    return Polyhedron(A=A, b=np.zeros(A.shape[0]), row_tags=[TAG_SCREENING] * A.shape[0])

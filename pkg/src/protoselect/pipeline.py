"""End-to-end prototype-lasso pipeline: cluster cut or supplied grouping,
prototype extraction, second-stage lasso, stacked selection polyhedron, and
selective inference for prototypes and their cluster mates."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cluster import Clustering
from .dataset import Dataset
from .errors import InputError
from .lasso import LassoFit, cv_lambda, fit_lasso, lambda_for_size, lambda_max, lasso_constraints
from .polyhedra import (
    FeatureInference,
    InferenceReport,
    prototype_contrast,
    selective_ci,
    selective_pvalue,
    swap_contrast,
)
from .proto import Polyhedron, PrototypeSet, extract_prototypes, screening_constraints, stack


@dataclass(frozen=True)
class ProtolassoResult:
    clustering: Clustering
    protoset: PrototypeSet
    fit: LassoFit | None
    lam: float
    selected: np.ndarray  # selected prototype feature indices (0-based)
    polyhedron: Polyhedron | None
    report: InferenceReport

    @property
    def entertained(self) -> np.ndarray:
        """Selected prototypes plus every member of their clusters."""
        return entertained_from(self.clustering, self.protoset, self.selected)


def entertained_from(
    clustering: Clustering, protoset: PrototypeSet, selected: np.ndarray
) -> np.ndarray:
    members = []
    for k in range(clustering.K):
        if protoset.prototypes[k] in selected:
            members.append(clustering.members(k + 1))
    if not members:
        return np.array([], dtype=int)
    return np.unique(np.concatenate(members))


def run_protolasso(
    ds: Dataset,
    clustering: Clustering,
    lam: float | None = None,
    cv: bool = False,
    n_select: int | None = None,
    alpha: float = 0.05,
    seed: int = 0,
    swap_in: bool = True,
) -> ProtolassoResult:
    """Run the full pipeline on a standardized dataset with known or
    estimable noise scale.

    Exactly one of lam / cv / n_select chooses the second-stage penalty.
    """
    if sum(x is not None and x is not False for x in (lam, cv or None, n_select)) != 1:
        raise InputError("choose exactly one of lam, cv, or n_select")
    if not ds.standardized:
        raise InputError("dataset must be standardized before running the pipeline")
    sigma = ds.resolve_sigma()
    X, y = ds.X, ds.y
    protoset = extract_prototypes(X, y, clustering)
    screen_poly = screening_constraints(X, clustering, protoset, y=y)
    X_P = X[:, protoset.prototypes]
    if cv:
        lam = cv_lambda(X_P, y, seed=seed)
    elif n_select is not None:
        lam = lambda_for_size(X_P, y, n_select)
    if lam >= lambda_max(X_P, y):
        # nothing can enter the model; empty report by construction
        return ProtolassoResult(
            clustering=clustering,
            protoset=protoset,
            fit=None,
            lam=float(lam),
            selected=np.array([], dtype=int),
            polyhedron=None,
            report=InferenceReport(records=[], alpha=alpha),
        )
    fit = fit_lasso(X_P, y, lam)
    selected = protoset.prototypes[fit.active]
    lasso_poly = lasso_constraints(X_P, fit.active, fit.signs, lam)
    poly = stack(screen_poly, lasso_poly) if screen_poly.m else lasso_poly
    records = []
    for pos in fit.active:
        k = pos + 1  # cluster id of this prototype
        proto_feature = protoset.prototypes[pos]
        contrast = prototype_contrast(X, selected, proto_feature)
        records.append(
            _infer(ds, contrast.eta, poly, sigma, alpha, proto_feature, "prototype", k)
        )
        if swap_in:
            for j in clustering.members(k):
                if j == proto_feature:
                    continue
                sc = swap_contrast(X, selected, proto_feature, j)
                records.append(
                    _infer(ds, sc.eta, poly, sigma, alpha, j, "swap_in", k)
                )
    return ProtolassoResult(
        clustering=clustering,
        protoset=protoset,
        fit=fit,
        lam=float(lam),
        selected=selected,
        polyhedron=poly,
        report=InferenceReport(records=records, alpha=alpha),
    )


def _infer(ds, eta, poly, sigma, alpha, feature, role, cluster_id) -> FeatureInference:
    from .polyhedra import truncation_bounds

    bounds = truncation_bounds(poly, eta, ds.y, sigma)
    p_value = selective_pvalue(eta, ds.y, poly, sigma)
    lo, hi = selective_ci(eta, ds.y, poly, sigma, alpha=alpha)
    return FeatureInference(
        feature=ds.feature_names[feature],
        role=role,
        cluster_id=int(cluster_id),
        estimate=float(eta @ ds.y),
        p_value=p_value,
        ci_low=lo,
        ci_high=hi,
        v_minus=bounds.v_minus,
        v_plus=bounds.v_plus,
    )

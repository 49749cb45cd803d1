"""Selective inference engine: truncation bounds, truncated Gaussian pivot,
selective p-values / confidence intervals, and contrast builders.

The core fact: conditional on the affine selection event {A y <= b} and the
component of y orthogonal to the contrast eta, the statistic eta^T y follows
a Gaussian truncated to an interval [V-, V+] computable from (A, b, eta, y).
Evaluating that truncated CDF at the observed value gives an exactly
Uniform(0,1) pivot under the null.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field

import numpy as np
from scipy.special import log_ndtr, ndtr

from .errors import InputError, NumericalError
from .proto import Polyhedron


@dataclass(frozen=True)
class TruncationInterval:
    v_minus: float  # may be -inf
    v_plus: float  # may be +inf

    def __post_init__(self):
        if not self.v_minus < self.v_plus:
            raise NumericalError(
                f"degenerate truncation interval [{self.v_minus}, {self.v_plus}]"
            )


@dataclass(frozen=True)
class Contrast:
    eta: np.ndarray
    target_label: str

    def __post_init__(self):
        eta = np.asarray(self.eta, dtype=float)
        object.__setattr__(self, "eta", eta)
        if not np.any(eta):
            raise InputError("contrast vector must be nonzero")


@dataclass(frozen=True)
class FeatureInference:
    feature: str
    role: str  # "prototype" or "swap_in"
    cluster_id: int
    estimate: float
    p_value: float
    ci_low: float
    ci_high: float
    v_minus: float
    v_plus: float
    target: str = "partial correlation given the selected model"


@dataclass(frozen=True)
class InferenceReport:
    records: list[FeatureInference] = field(default_factory=list)
    alpha: float = 0.05

    def to_json(self, path: str):
        payload = {
            "alpha": self.alpha,
            "records": [vars(r) for r in self.records],
        }
        with open(path, "w") as fh:
            json.dump(payload, fh, indent=2, default=float)

    def to_csv(self, path: str):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(
                ["feature", "role", "estimate", "lo", "hi", "cluster_id", "p_value"]
            )
            for r in self.records:
                writer.writerow(
                    [
                        r.feature,
                        r.role,
                        repr(r.estimate),
                        repr(r.ci_low),
                        repr(r.ci_high),
                        r.cluster_id,
                        repr(r.p_value),
                    ]
                )


def truncation_bounds(
    poly: Polyhedron, eta: np.ndarray, y: np.ndarray, sigma: float
) -> TruncationInterval:
    """Feasible range of eta^T y inside the polyhedron, holding the component
    of y orthogonal to eta fixed.

    With c = eta / (eta^T eta) and z = y - c (eta^T y):
    V- = max over rows with (A c)_j < 0 of (b_j - (A z)_j) / (A c)_j, and
    V+ = the min over rows with (A c)_j > 0. (The noise scale cancels for
    spherical covariance; sigma is accepted for interface symmetry.)
    """
    eta = np.asarray(eta, dtype=float)
    y = np.asarray(y, dtype=float)
    if poly.m == 0:
        return TruncationInterval(-np.inf, np.inf)
    if not poly.contains(y):
        raise NumericalError("observed y violates the selection constraints")
    eta_sq = float(eta @ eta)
    c = eta / eta_sq
    observed = float(eta @ y)
    z = y - c * observed
    Ac = poly.A @ c
    Az = poly.A @ z
    slack = poly.b - Az
    v_minus, v_plus = -np.inf, np.inf
    neg = Ac < 0
    pos = Ac > 0
    if neg.any():
        v_minus = float(np.max(slack[neg] / Ac[neg]))
    if pos.any():
        v_plus = float(np.min(slack[pos] / Ac[pos]))
    zero = ~neg & ~pos
    if zero.any() and np.any(slack[zero] < -1e-8):
        raise NumericalError("constraints orthogonal to the contrast are violated")
    return TruncationInterval(v_minus, v_plus)


def truncated_gaussian_cdf(
    x: float, mu: float, sigma2: float, a: float, b: float
) -> float:
    """CDF of N(mu, sigma2) truncated to [a, b], evaluated at x.

    Computed via normal CDF ratios in whichever tail holds the mass, so the
    value stays accurate far into the tails. Raises when the truncation cell
    mass degenerates (an unreliable pivot is reported, never fabricated).
    """
    if not a < b:
        raise InputError(f"need a < b, got a={a}, b={b}")
    if sigma2 <= 0:
        raise InputError("sigma2 must be positive")
    sd = np.sqrt(sigma2)
    alpha = (a - mu) / sd
    beta = (b - mu) / sd
    xi = np.clip((x - mu) / sd, alpha, beta)
    with np.errstate(invalid="ignore"):
        if alpha > 0:
            # right tail: ratios of survival functions
            num = -np.expm1(log_ndtr(-xi) - log_ndtr(-alpha))
            den = -np.expm1(log_ndtr(-beta) - log_ndtr(-alpha))
        elif beta < 0:
            num = np.exp(log_ndtr(xi) - log_ndtr(beta)) - np.exp(
                log_ndtr(alpha) - log_ndtr(beta)
            )
            den = -np.expm1(log_ndtr(alpha) - log_ndtr(beta))
        else:
            num = ndtr(xi) - ndtr(alpha)
            den = ndtr(beta) - ndtr(alpha)
    if not np.isfinite(den) or den < 1e-300:
        raise NumericalError("truncation cell mass underflows; pivot unreliable")
    return float(np.clip(num / den, 0.0, 1.0))


def selective_pvalue(
    eta: np.ndarray,
    y: np.ndarray,
    poly: Polyhedron,
    sigma: float,
    null: float = 0.0,
) -> float:
    """Two-sided selective p-value for H0: eta^T mu = null."""
    eta = np.asarray(eta, dtype=float)
    bounds = truncation_bounds(poly, eta, y, sigma)
    var = sigma**2 * float(eta @ eta)
    u = truncated_gaussian_cdf(
        float(eta @ y), null, var, bounds.v_minus, bounds.v_plus
    )
    return 2.0 * min(u, 1.0 - u)


def selective_ci(
    eta: np.ndarray,
    y: np.ndarray,
    poly: Polyhedron,
    sigma: float,
    alpha: float = 0.05,
) -> tuple[float, float]:
    """Equal-tailed interval for eta^T mu by inverting the truncated pivot.

    The pivot u(m) = F^{[V-,V+]}_{m, sigma^2 eta^T eta}(eta^T y) is strictly
    decreasing in m; the endpoints solve u = 1 - alpha/2 and u = alpha/2 by
    monotone bisection, tolerance 1e-8 * sigma * ||eta||.
    """
    if not 0 < alpha < 1:
        raise InputError("alpha must lie in (0, 1)")
    eta = np.asarray(eta, dtype=float)
    bounds = truncation_bounds(poly, eta, y, sigma)
    scale = sigma * float(np.sqrt(eta @ eta))
    var = scale**2
    observed = float(eta @ y)

    def pivot(m: float) -> float:
        return truncated_gaussian_cdf(observed, m, var, bounds.v_minus, bounds.v_plus)

    lo = _invert_pivot(pivot, 1.0 - alpha / 2.0, observed, scale)
    hi = _invert_pivot(pivot, alpha / 2.0, observed, scale)
    return lo, hi


def _invert_pivot(pivot, target: float, observed: float, scale: float) -> float:
    """Solve pivot(m) = target for m (pivot decreasing in m) by bisection."""
    # expand a bracket around the observed statistic
    width = scale
    lo, hi = observed - width, observed + width
    for _ in range(60):
        if pivot(lo) >= target:
            break
        width *= 2.0
        lo = observed - width
    else:
        raise NumericalError("confidence bracket expansion failed (lower)")
    width = scale
    for _ in range(60):
        if pivot(hi) <= target:
            break
        width *= 2.0
        hi = observed + width
    else:
        raise NumericalError("confidence bracket expansion failed (upper)")
    tol = 1e-8 * scale
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if pivot(mid) >= target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def prototype_contrast(X: np.ndarray, M: np.ndarray, j: int) -> Contrast:
    """Contrast for the coefficient of feature j in the regression of mu on
    the selected design: the j-th column of (X_M^T)^+."""
    X = np.asarray(X, dtype=float)
    M = np.asarray(M, dtype=int)
    if j not in M:
        raise InputError(f"feature {j} is not in the selected set")
    X_M = X[:, M]
    gram = X_M.T @ X_M
    if np.linalg.matrix_rank(gram) < M.size:
        raise NumericalError("selected design is rank deficient")
    pinv_t = X_M @ np.linalg.inv(gram)  # columns of (X_M^T)^+
    pos = int(np.where(M == j)[0][0])
    return Contrast(eta=pinv_t[:, pos], target_label=f"coef[{j}] on selected design")


def swap_contrast(
    X: np.ndarray, M: np.ndarray, prototype_k: int, swap_j: int
) -> Contrast:
    """Contrast for swap_j after replacing its cluster's prototype in the
    selected design (same position, same polyhedron)."""
    X = np.asarray(X, dtype=float)
    M = np.asarray(M, dtype=int)
    if prototype_k not in M:
        raise InputError(f"prototype {prototype_k} is not in the selected set")
    swapped = M.copy()
    pos = int(np.where(M == prototype_k)[0][0])
    swapped[pos] = swap_j
    X_S = X[:, swapped]
    gram = X_S.T @ X_S
    if np.linalg.matrix_rank(gram) < swapped.size:
        raise NumericalError(
            f"design is rank deficient after swapping in feature {swap_j}"
        )
    pinv_t = X_S @ np.linalg.inv(gram)
    return Contrast(
        eta=pinv_t[:, pos], target_label=f"coef[{swap_j}] on swapped design"
    )

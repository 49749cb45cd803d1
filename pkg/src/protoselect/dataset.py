"""Data model, standardization, synthetic generators and noise-scale estimation.

Standardization convention: each column is centered and rescaled so its sum
of squares equals n (i.e. ||x_j||_2 = sqrt(n), making x_j^T x_j / n = 1).
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import InputError, NumericalError
from .rng import derived_rng

_MEAN_TOL = 1e-10
_SS_TOL = 1e-8


@dataclass(frozen=True)
class Dataset:
    """Design matrix, response and (optional) noise scale.

    Immutable after construction; safe to share across parallel workers.
    sigma is None when the noise standard deviation is unknown.
    """

    X: np.ndarray
    y: np.ndarray
    feature_names: list[str] = field(default_factory=list)
    sigma: float | None = None
    standardized: bool = False
    y_offset: float = 0.0

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        y = np.asarray(self.y, dtype=float)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        n, p = X.shape
        if n < 2 or p < 1:
            raise InputError(f"need n >= 2 and p >= 1, got n={n}, p={p}")
        if y.shape != (n,):
            raise InputError(f"response length {y.shape} does not match n={n}")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
            raise InputError("non-finite entries in X or y")
        if self.sigma is not None and self.sigma <= 0:
            raise InputError("sigma must be positive when supplied")
        if not self.feature_names:
            object.__setattr__(self, "feature_names", [f"x{j+1}" for j in range(p)])
        elif len(self.feature_names) != p:
            raise InputError("feature_names length does not match p")
        if self.standardized:
            means = X.mean(axis=0)
            ss = (X**2).sum(axis=0)
            if np.max(np.abs(means)) > _MEAN_TOL or np.max(np.abs(ss - n)) > _SS_TOL:
                raise InputError("standardized flag set but columns fail the check")

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]

    def resolve_sigma(self) -> float:
        """Known sigma if supplied, else least squares estimate (needs n > p)."""
        if self.sigma is not None:
            return self.sigma
        return least_squares_sigma(self.X, self.y)


@dataclass(frozen=True)
class BlockDesignSpec:
    """Block-correlated Gaussian design: 1 on the diagonal, rho within blocks,
    0 across blocks."""

    n: int
    block_sizes: tuple[int, ...]
    rho: float
    seed: int

    def __post_init__(self):
        object.__setattr__(self, "block_sizes", tuple(int(b) for b in self.block_sizes))
        if self.n < 2:
            raise InputError("n must be at least 2")
        if any(b < 1 for b in self.block_sizes):
            raise InputError("block sizes must be positive")
        if not 0.0 <= self.rho < 1.0:
            raise InputError("rho must lie in [0, 1)")

    @property
    def p(self) -> int:
        return sum(self.block_sizes)


def standardize(X: np.ndarray) -> np.ndarray:
    """Center each column and rescale to sum of squares = n."""
    X = np.asarray(X, dtype=float)
    n = X.shape[0]
    centered = X - X.mean(axis=0)
    ss = (centered**2).sum(axis=0)
    bad = np.where(ss <= 0)[0]
    if bad.size:
        raise InputError(f"constant column at index {bad[0]} cannot be standardized")
    return centered * np.sqrt(n / ss)


def standardize_dataset(ds: Dataset, center_response: bool = True) -> Dataset:
    """Standardized copy of a dataset. Centers y by default, recording the
    offset (interpretation choice: the centering of y is not forced by the
    model, only the column standardization is)."""
    offset = float(ds.y.mean()) if center_response else 0.0
    return replace(
        ds,
        X=standardize(ds.X),
        y=ds.y - offset,
        standardized=True,
        y_offset=ds.y_offset + offset,
    )


def generate_block_design(spec: BlockDesignSpec) -> np.ndarray:
    """Rows i.i.d. Gaussian with the block covariance, then standardized."""
    rng = derived_rng(spec.seed, 101)
    cols = []
    for b, size in enumerate(spec.block_sizes):
        shared = rng.standard_normal((spec.n, 1))
        indep = rng.standard_normal((spec.n, size))
        # equicorrelated block: sqrt(rho)*shared + sqrt(1-rho)*independent
        cols.append(np.sqrt(spec.rho) * shared + np.sqrt(1.0 - spec.rho) * indep)
    return standardize(np.hstack(cols))


def generate_response(
    X: np.ndarray, beta: np.ndarray, sigma: float, seed: int
) -> np.ndarray:
    """y = X beta + eps with eps i.i.d. N(0, sigma^2); sigma=0 is noiseless."""
    X = np.asarray(X, dtype=float)
    beta = np.asarray(beta, dtype=float)
    if beta.shape != (X.shape[1],):
        raise InputError("beta length does not match the number of columns")
    if sigma < 0:
        raise InputError("sigma must be nonnegative")
    mu = X @ beta
    if sigma == 0:
        return mu
    rng = derived_rng(seed, 202)
    return mu + sigma * rng.standard_normal(X.shape[0])


def least_squares_sigma(X: np.ndarray, y: np.ndarray) -> float:
    """sigma_hat from the full least squares fit: RSS / (n - p)."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n, p = X.shape
    if n <= p:
        raise NumericalError(
            "least squares sigma needs n > p; supply sigma explicitly"
        )
    if np.linalg.matrix_rank(X) < p:
        raise NumericalError(
            "X is rank deficient; least squares sigma undefined, supply sigma"
        )
    coef, _, _, _ = np.linalg.lstsq(X, y, rcond=None)
    rss = float(np.sum((y - X @ coef) ** 2))
    return float(np.sqrt(max(rss, 0.0) / (n - p)))


def load_csv(
    path: str,
    response: str | None = None,
    response_path: str | None = None,
) -> Dataset:
    """Read a dataset from CSV: header row of feature names, one observation
    per row. The response is either a named column or a separate single-column
    file. Missing values are rejected."""
    if (response is None) == (response_path is None):
        raise InputError("supply exactly one of a response column or response file")
    with _open_csv(path) as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise InputError(f"{path}: empty file") from None
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise InputError(f"{path}:{lineno}: expected {len(header)} fields")
            try:
                rows.append([_parse_cell(c, path, lineno) for c in row])
            except ValueError as exc:
                raise InputError(str(exc)) from None
    if not rows:
        raise InputError(f"{path}: no data rows")
    data = np.array(rows, dtype=float)
    if response is not None:
        if response not in header:
            raise InputError(f"response column {response!r} not in header")
        j = header.index(response)
        y = data[:, j]
        X = np.delete(data, j, axis=1)
        names = [h for i, h in enumerate(header) if i != j]
    else:
        X = data
        names = header
        y = _load_response_file(response_path)
        if y.shape[0] != X.shape[0]:
            raise InputError("response file length does not match data rows")
    return Dataset(X=X, y=y, feature_names=names)


def _open_csv(path: str):
    try:
        return open(path, newline="")
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None


def load_feature_csv(path: str) -> tuple[np.ndarray, list[str]]:
    """Read a feature-only CSV (header of names, one observation per row)."""
    with _open_csv(path) as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise InputError(f"{path}: empty file") from None
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise InputError(f"{path}:{lineno}: expected {len(header)} fields")
            try:
                rows.append([_parse_cell(c, path, lineno) for c in row])
            except ValueError as exc:
                raise InputError(str(exc)) from None
    if not rows:
        raise InputError(f"{path}: no data rows")
    return np.array(rows, dtype=float), header


def _parse_cell(cell: str, path: str, lineno: int) -> float:
    text = cell.strip()
    if text == "" or text.upper() in {"NA", "NAN"}:
        raise ValueError(f"{path}:{lineno}: missing value")
    return float(text)


def _load_response_file(path: str) -> np.ndarray:
    with _open_csv(path) as fh:
        reader = csv.reader(fh)
        vals = []
        for lineno, row in enumerate(reader, start=1):
            if not row:
                continue
            if len(row) != 1:
                raise InputError(f"{path}:{lineno}: expected a single column")
            text = row[0].strip()
            if lineno == 1:
                try:
                    float(text)
                except ValueError:
                    continue  # header line
            try:
                vals.append(float(text))
            except ValueError:
                raise InputError(f"{path}:{lineno}: bad value {text!r}") from None
    if not vals:
        raise InputError(f"{path}: no response values")
    return np.array(vals, dtype=float)

"""Datasets, standardization, validation splits and K-fold partitions.

Conventions used throughout the package:

* Standardization uses the denominator-n ("population") standard deviation,
  so a standardized column satisfies mean(x) = 0 and (1/n) * sum(x^2) = 1.
  This matches the 1/n error functionals used by the estimators and bounds.
* ``col_means`` / ``col_scales`` always refer to the ORIGINAL units of the
  data, with the outcome at index 0 and covariate j at index j.  Standardizing
  a subset of an already-standardized dataset composes the transforms, so
  predictions can always be mapped back to original units.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    BadK,
    ConstantColumn,
    DegenerateSplit,
    DimensionMismatch,
    EmptyData,
    ParseError,
    RaggedRow,
)
from .rng import derive_rng, fisher_yates

_STD_TOL = 1e-10


@dataclass(frozen=True)
class Dataset:
    """Outcome vector plus covariate matrix with standardization provenance.

    ``y`` has length n, ``x`` is n-by-p.  When ``standardized`` is true every
    column (outcome included) has mean 0 and denominator-n sd 1 within 1e-10,
    except columns that are exactly constant (those are centered only).
    ``dropped_columns`` records 1-based covariate positions removed by
    ``standardize(..., on_constant="drop")``.
    """

    y: np.ndarray
    x: np.ndarray
    col_means: np.ndarray
    col_scales: np.ndarray
    standardized: bool
    dropped_columns: tuple = ()

    def __post_init__(self):
        y = np.asarray(self.y, dtype=float)
        x = np.asarray(self.x, dtype=float)
        if x.ndim != 2:
            raise EmptyData("covariate matrix must be 2-dimensional")
        if y.shape[0] == 0 or x.shape[1] == 0:
            raise EmptyData("need n >= 1 and p >= 1")
        if y.shape[0] != x.shape[0]:
            raise EmptyData(
                f"outcome has {y.shape[0]} rows but covariates have {x.shape[0]}"
            )
        means = np.asarray(self.col_means, dtype=float)
        scales = np.asarray(self.col_scales, dtype=float)
        if means.shape[0] != x.shape[1] + 1 or scales.shape[0] != x.shape[1] + 1:
            raise EmptyData("provenance vectors must have length p + 1")
        if not np.all(scales > 0):
            raise EmptyData("col_scales entries must be strictly positive")
        for arr, name in ((y, "y"), (x, "x"), (means, "col_means"), (scales, "col_scales")):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if self.standardized:
            cols = np.column_stack([y, x])
            mu = cols.mean(axis=0)
            sd = cols.std(axis=0)  # denominator n
            if np.any(np.abs(mu) > _STD_TOL):
                raise EmptyData("standardized dataset has a column mean off zero")
            nonconst = sd > 0
            if np.any(np.abs(sd[nonconst] - 1.0) > _STD_TOL):
                raise EmptyData("standardized dataset has a column sd off one")

    @property
    def n(self) -> int:
        return self.y.shape[0]

    @property
    def p(self) -> int:
        return self.x.shape[1]

    @classmethod
    def from_arrays(cls, y, x) -> "Dataset":
        """Wrap raw (original-unit) arrays; provenance is the identity transform."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if x.shape[0] == 1 and np.asarray(y).shape[0] != 1:
            x = x.T
        p = x.shape[1]
        return cls(
            y=np.asarray(y, dtype=float).copy(),
            x=x.copy(),
            col_means=np.zeros(p + 1),
            col_scales=np.ones(p + 1),
            standardized=False,
        )

    def subset(self, rows) -> "Dataset":
        """Row subset, keeping provenance; the result is not marked standardized."""
        rows = np.asarray(rows, dtype=np.int64)
        return Dataset(
            y=self.y[rows].copy(),
            x=self.x[rows].copy(),
            col_means=self.col_means.copy(),
            col_scales=self.col_scales.copy(),
            standardized=False,
            dropped_columns=self.dropped_columns,
        )

    def metadata(self) -> dict:
        """JSON-serializable description (no data values)."""
        return {
            "n": self.n,
            "p": self.p,
            "standardized": self.standardized,
            "col_means": [float(v) for v in self.col_means],
            "col_scales": [float(v) for v in self.col_scales],
            "dropped_columns": list(self.dropped_columns),
        }


@dataclass(frozen=True)
class SplitPair:
    """A train/test partition; both parts re-standardized independently."""

    train: Dataset
    test: Dataset
    seed: int
    ratio: float
    train_rows: tuple = ()
    test_rows: tuple = ()


@dataclass(frozen=True)
class FoldSet:
    """K disjoint row-index folds covering 0..n-1, sizes differing by at most 1."""

    folds: tuple
    K: int
    seed: int
    n: int

    def __post_init__(self):
        seen = np.concatenate([np.asarray(f, dtype=np.int64) for f in self.folds])
        if len(self.folds) != self.K:
            raise BadK(f"expected {self.K} folds, got {len(self.folds)}")
        if sorted(seen.tolist()) != list(range(self.n)):
            raise BadK("folds must partition the row indices exactly")
        sizes = [len(f) for f in self.folds]
        if max(sizes) - min(sizes) > 1:
            raise BadK("fold sizes must differ by at most 1")


def _column_stats(y: np.ndarray, x: np.ndarray):
    cols = np.column_stack([y, x])
    mu = cols.mean(axis=0)
    sd = cols.std(axis=0)
    const = sd <= 1e-12 * np.maximum(1.0, np.abs(mu))
    return mu, sd, const


def standardize(raw: Dataset, on_constant: str = "error") -> Dataset:
    """Center and scale every column to mean 0, denominator-n sd 1.

    ``on_constant`` controls zero-variance columns:

    * ``"error"`` (default): raise ConstantColumn.  A constant outcome always
      raises (column index 0).
    * ``"drop"``: remove constant covariates and record them in
      ``dropped_columns`` (1-based positions in the input).
    * ``"center"``: keep them, centered with scale 1.  Used internally when
      re-standardizing small split/fold parts, where a column can be constant
      by subsampling accident (or the part has a single row).

    Provenance composes: the returned ``col_means`` / ``col_scales`` map the
    new units back to the ORIGINAL units of the data, however many
    standardizations deep.
    """
    if on_constant not in ("error", "drop", "center"):
        raise ValueError(f"unknown on_constant mode {on_constant!r}")
    if raw.n == 0:
        raise EmptyData("cannot standardize an empty dataset")
    mu, sd, const = _column_stats(raw.y, raw.x)

    if const[0] and on_constant != "center":
        raise ConstantColumn(0)
    keep = np.arange(raw.p)
    dropped = ()
    if np.any(const[1:]):
        if on_constant == "error":
            raise ConstantColumn(int(np.flatnonzero(const[1:])[0]) + 1)
        if on_constant == "drop":
            keep = np.flatnonzero(~const[1:])
            if keep.size == 0:
                raise EmptyData("all covariates are constant")
            dropped = tuple(int(j) + 1 for j in np.flatnonzero(const[1:]))

    scale = np.where(const, 1.0, sd)
    y_std = (raw.y - mu[0]) / scale[0]
    x_std = (raw.x - mu[1:]) / scale[1:]
    x_std = x_std[:, keep]
    sel = np.concatenate([[0], keep + 1])
    return Dataset(
        y=y_std,
        x=x_std,
        col_means=(raw.col_means + raw.col_scales * mu)[sel],
        col_scales=(raw.col_scales * scale)[sel],
        standardized=True,
        dropped_columns=raw.dropped_columns + dropped,
    )


def transform_like(reference: Dataset, part: Dataset) -> Dataset:
    """Apply ``reference``'s own-sample transform to ``part``.

    ``reference`` must be a standardized dataset; ``part`` must share its
    parent units.  The result is NOT marked standardized (its columns are in
    reference units, not centered on its own sample).  Used for
    cross-validation test folds, which can be too small to standardize.
    """
    # Both provenances map to original units, so the map from part units to
    # reference units is (v * s_p + m_p - m_r) / s_r, column by column.
    m_r, s_r = reference.col_means, reference.col_scales
    m_p, s_p = part.col_means, part.col_scales
    if m_r.shape != m_p.shape:
        raise DimensionMismatch("reference and part have different column counts")
    y = (part.y * s_p[0] + m_p[0] - m_r[0]) / s_r[0]
    x = (part.x * s_p[1:] + m_p[1:] - m_r[1:]) / s_r[1:]
    return Dataset(
        y=y,
        x=x,
        col_means=m_r.copy(),
        col_scales=s_r.copy(),
        standardized=False,
        dropped_columns=part.dropped_columns,
    )


def split_validation(data: Dataset, ratio: float, seed: int) -> SplitPair:
    """Random train/test partition with both parts re-standardized.

    Deterministic given ``seed``; n_t = round(ratio * n) (half away from
    zero).  Warns when the training part is smaller than p + 1.
    """
    if not 0.0 < ratio < 1.0:
        raise DegenerateSplit(f"ratio must be in (0, 1), got {ratio}")
    if data.n < 2:
        raise DegenerateSplit("need at least 2 rows to split")
    n_t = int(np.floor(ratio * data.n + 0.5))
    n_s = data.n - n_t
    if n_t < 1 or n_s < 1:
        raise DegenerateSplit(f"split {n_t}/{n_s} leaves an empty part")
    if int(np.floor(ratio * data.n)) < data.p + 1:
        warnings.warn(
            f"training part ({n_t} rows) smaller than p + 1 = {data.p + 1}; "
            "unpenalized fits will be underdetermined",
            stacklevel=2,
        )
    perm = fisher_yates(data.n, derive_rng(seed, "split"))
    train_rows = np.sort(perm[:n_t])
    test_rows = np.sort(perm[n_t:])
    return SplitPair(
        train=standardize(data.subset(train_rows), on_constant="center"),
        test=standardize(data.subset(test_rows), on_constant="center"),
        seed=seed,
        ratio=ratio,
        train_rows=tuple(int(i) for i in train_rows),
        test_rows=tuple(int(i) for i in test_rows),
    )


def make_folds(data: Dataset, K: int, seed: int) -> FoldSet:
    """Random K-fold partition of the row indices; deterministic given seed."""
    if K < 2 or K > data.n:
        raise BadK(f"K must satisfy 2 <= K <= n = {data.n}, got {K}")
    perm = fisher_yates(data.n, derive_rng(seed, "folds"))
    base, extra = divmod(data.n, K)
    folds = []
    start = 0
    for q in range(K):
        size = base + (1 if q < extra else 0)
        folds.append(tuple(int(i) for i in np.sort(perm[start : start + size])))
        start += size
    return FoldSet(folds=tuple(folds), K=K, seed=seed, n=data.n)


def cv_round(data: Dataset, foldset: FoldSet, q: int):
    """Training/test datasets for round q.

    The training part (all folds but q) is re-standardized on its own sample;
    the test fold is mapped into the training part's units.  Mapping the test
    fold through the training transform keeps single-row folds (K = n)
    meaningful, which independent re-standardization cannot do.
    """
    test_rows = np.asarray(foldset.folds[q], dtype=np.int64)
    mask = np.ones(data.n, dtype=bool)
    mask[test_rows] = False
    train = standardize(data.subset(np.flatnonzero(mask)), on_constant="center")
    test = transform_like(train, data.subset(test_rows))
    return train, test


def load_csv(path: str) -> Dataset:
    """Parse a UTF-8 comma-separated file: header row, outcome in column 1.

    Returns the raw (unstandardized) dataset.  Raises ParseError(line) on a
    non-numeric field and RaggedRow when a line's field count differs from
    the header's.
    """
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.rstrip("\n").rstrip("\r") for ln in fh]
    lines = [ln for ln in lines if ln != ""]
    if not lines:
        raise EmptyData(f"{path} is empty")
    header = lines[0].split(",")
    if len(header) < 2:
        raise ParseError(1, "need an outcome column plus at least one covariate")
    width = len(header)
    rows = []
    for lineno, ln in enumerate(lines[1:], start=2):
        fields = ln.split(",")
        if len(fields) != width:
            raise RaggedRow(lineno, width, len(fields))
        try:
            rows.append([float(v) for v in fields])
        except ValueError as exc:
            raise ParseError(lineno, str(exc)) from None
    if not rows:
        raise EmptyData(f"{path} has a header but no data rows")
    arr = np.asarray(rows, dtype=float)
    return Dataset.from_arrays(arr[:, 0], arr[:, 1:])


def save_csv(data: Dataset, path: str, header=None) -> None:
    """Inverse of load_csv at full double precision (%.17g)."""
    if header is None:
        header = ["y"] + [f"x{j}" for j in range(1, data.p + 1)]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(header) + "\n")
        for i in range(data.n):
            vals = [data.y[i]] + list(data.x[i])
            fh.write(",".join(f"{v:.17g}" for v in vals) + "\n")


def to_original_coefficients(b_std: np.ndarray, data: Dataset):
    """Map standardized-unit coefficients to original units.

    Returns ``(slopes, intercept)`` such that predictions on original-unit
    covariates are ``intercept + X @ slopes``.
    """
    b_std = np.asarray(b_std, dtype=float)
    slopes = b_std * data.col_scales[0] / data.col_scales[1:]
    intercept = data.col_means[0] - float(slopes @ data.col_means[1:])
    return slopes, intercept

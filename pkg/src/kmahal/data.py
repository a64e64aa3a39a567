"""Core data containers and the CSV interchange format.

A :class:`Dataset` couples an ``(n, p)`` value matrix with a boolean
observation mask (True means observed). Masked cells hold NaN and are never
read by any routine in the package; all access goes through the mask.
Datasets, assignment matrices and cluster models are immutable after
construction.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "ConfigurationError",
    "Dataset",
    "split_row",
    "AssignmentMatrix",
    "ClusterModel",
    "EngineConfig",
    "ALGORITHMS",
    "read_dataset_csv",
    "write_dataset_csv",
    "dataset_to_csv",
    "dataset_from_csv",
    "format_value",
]

ALGORITHMS = ("kmeans", "unified-kmeans", "kmahal")

# 17 significant digits round-trip any IEEE double exactly.
FLOAT_FORMAT = "%.17g"

MISSING_TOKENS = ("", "NA")


class ConfigurationError(ValueError):
    """Raised for invalid configuration values or malformed config input."""


def format_value(v: float) -> str:
    """Render a float so that parsing the text recovers the exact bits."""
    return FLOAT_FORMAT % v


def _freeze(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Dataset:
    """Immutable numeric table with an observation mask and optional labels.

    Parameters
    ----------
    values : (n, p) float array. Entries where ``mask`` is False are ignored
        and stored as NaN.
    mask : (n, p) bool array, True where the cell is observed. Defaults to
        fully observed.
    labels : optional (n,) integer array of ground-truth cluster ids.
    """

    values: np.ndarray
    mask: np.ndarray | None = None
    labels: np.ndarray | None = None

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim != 2 or values.shape[0] < 1 or values.shape[1] < 1:
            raise ValueError(f"values must be a non-empty 2-D array, got shape {values.shape}")
        if self.mask is None:
            mask = np.ones(values.shape, dtype=bool)
        else:
            mask = np.array(self.mask, dtype=bool)
        if mask.shape != values.shape:
            raise ValueError(f"mask shape {mask.shape} does not match values shape {values.shape}")
        rows_all_missing = ~mask.any(axis=1)
        if rows_all_missing.any():
            bad = int(np.flatnonzero(rows_all_missing)[0])
            raise ValueError(f"row {bad} has no observed coordinates")
        if not np.isfinite(values[mask]).all():
            raise ValueError("observed cells must be finite")
        values = values.copy()
        values[~mask] = np.nan
        labels = self.labels
        if labels is not None:
            labels = np.array(labels, dtype=int)
            if labels.shape != (values.shape[0],):
                raise ValueError(
                    f"labels shape {labels.shape} does not match row count {values.shape[0]}"
                )
            labels = _freeze(labels)
        object.__setattr__(self, "values", _freeze(values))
        object.__setattr__(self, "mask", _freeze(mask))
        object.__setattr__(self, "labels", labels)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def p(self) -> int:
        return self.values.shape[1]

    @property
    def complete(self) -> bool:
        return bool(self.mask.all())

    @property
    def n_missing_cells(self) -> int:
        return int((~self.mask).sum())

    def filled_with(self, values) -> "Dataset":
        """A fully observed copy of this dataset with ``values`` substituted.

        Observed cells must be passed through unchanged; this is how
        imputation methods materialize their result.
        """
        values = np.asarray(values, dtype=float)
        if values.shape != self.values.shape:
            raise ValueError("filled values must match the dataset shape")
        if not np.array_equal(values[self.mask], self.values[self.mask]):
            raise ValueError("filled values must preserve observed cells")
        return Dataset(values=values, labels=self.labels)


def split_row(ds: Dataset, i: int):
    """Partition row ``i`` into observed and missing column indices.

    Returns
    -------
    (observed_idx, missing_idx, observed_values) where the index arrays are
    0-based, disjoint, and together cover all p columns.
    """
    if not 0 <= i < ds.n:
        raise IndexError(f"row index {i} out of range for {ds.n} rows")
    row_mask = ds.mask[i]
    observed = np.flatnonzero(row_mask)
    missing = np.flatnonzero(~row_mask)
    return observed, missing, ds.values[i, observed]


@dataclass(frozen=True)
class AssignmentMatrix:
    """Hard cluster assignment: one cluster id in 1..K per row."""

    n_clusters: int
    assignment: np.ndarray

    def __post_init__(self):
        assignment = np.array(self.assignment, dtype=int)
        if assignment.ndim != 1 or assignment.size < 1:
            raise ValueError("assignment must be a non-empty 1-D integer array")
        if self.n_clusters < 1:
            raise ValueError(f"n_clusters must be positive, got {self.n_clusters}")
        if assignment.min() < 1 or assignment.max() > self.n_clusters:
            raise ValueError(f"cluster ids must lie in 1..{self.n_clusters}")
        object.__setattr__(self, "assignment", _freeze(assignment))

    @property
    def n(self) -> int:
        return self.assignment.shape[0]

    def to_labels(self) -> list[int]:
        """Serialize as a plain integer list (lossless)."""
        return [int(z) for z in self.assignment]

    @classmethod
    def from_labels(cls, labels, n_clusters: int | None = None) -> "AssignmentMatrix":
        labels = np.asarray(labels, dtype=int)
        if n_clusters is None:
            n_clusters = int(labels.max()) if labels.size else 0
        return cls(n_clusters=n_clusters, assignment=labels)


@dataclass(frozen=True)
class ClusterModel:
    """Per-cluster Gaussian parameters: centers, covariances, member counts."""

    centers: np.ndarray
    covariances: np.ndarray
    counts: np.ndarray

    def __post_init__(self):
        centers = np.array(self.centers, dtype=float)
        covariances = np.array(self.covariances, dtype=float)
        counts = np.array(self.counts, dtype=int)
        if centers.ndim != 2:
            raise ValueError("centers must be a (K, p) array")
        K, p = centers.shape
        if covariances.shape != (K, p, p):
            raise ValueError(f"covariances must have shape ({K}, {p}, {p}), got {covariances.shape}")
        if counts.shape != (K,):
            raise ValueError(f"counts must have shape ({K},), got {counts.shape}")
        if (counts < 0).any():
            raise ValueError("counts must be non-negative")
        object.__setattr__(self, "centers", _freeze(centers))
        object.__setattr__(self, "covariances", _freeze(covariances))
        object.__setattr__(self, "counts", _freeze(counts))

    @property
    def n_clusters(self) -> int:
        return self.centers.shape[0]

    @property
    def p(self) -> int:
        return self.centers.shape[1]


@dataclass(frozen=True)
class EngineConfig:
    """Settings shared by all clustering engines.

    ``cov_floor`` scales the eigenvalue floor used to regularize covariance
    estimates: the working floor of a fit is ``cov_floor`` times the mean
    diagonal of the pooled covariance of the (completed) input data.
    """

    algorithm: str
    n_clusters: int
    epsilon0: float = 1e-6
    max_iter: int = 200
    restarts: int = 1
    cov_floor: float = 1e-6
    seed: int = 0
    # Restart selection for kmahal prefers the smallest model criterion; set
    # this to pick the largest instead, for replication studies.
    prefer_high_criterion_a: bool = False

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ConfigurationError(
                f"algorithm must be one of {ALGORITHMS}, got {self.algorithm!r}"
            )
        if not (isinstance(self.n_clusters, int) and self.n_clusters >= 1):
            raise ConfigurationError(f"n_clusters must be a positive integer, got {self.n_clusters!r}")
        if not self.epsilon0 > 0:
            raise ConfigurationError(f"epsilon0 must be positive, got {self.epsilon0!r}")
        if not (isinstance(self.max_iter, int) and self.max_iter >= 1):
            raise ConfigurationError(f"max_iter must be a positive integer, got {self.max_iter!r}")
        if not (isinstance(self.restarts, int) and self.restarts >= 1):
            raise ConfigurationError(f"restarts must be a positive integer, got {self.restarts!r}")
        if not self.cov_floor > 0:
            raise ConfigurationError(f"cov_floor must be positive, got {self.cov_floor!r}")
        if not (isinstance(self.seed, int) and self.seed >= 0):
            raise ConfigurationError(f"seed must be a non-negative integer, got {self.seed!r}")


def _header(p: int, with_labels: bool) -> list[str]:
    cols = [f"c{j}" for j in range(1, p + 1)]
    if with_labels:
        cols.append("label")
    return cols


def dataset_to_csv(ds: Dataset) -> str:
    """Render a dataset in the interchange format.

    Columns are named c1..cp with an optional trailing ``label`` column.
    Missing cells are written as the empty string; observed cells carry 17
    significant digits so that a read-back is bit-exact.
    """
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(_header(ds.p, ds.labels is not None))
    for i in range(ds.n):
        row = [
            format_value(ds.values[i, j]) if ds.mask[i, j] else ""
            for j in range(ds.p)
        ]
        if ds.labels is not None:
            row.append(str(int(ds.labels[i])))
        writer.writerow(row)
    return buf.getvalue()


def dataset_from_csv(text: str) -> Dataset:
    """Parse a dataset from the interchange format (see dataset_to_csv)."""
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise ValueError("empty CSV input") from None
    header = [h.strip() for h in header]
    with_labels = bool(header) and header[-1] == "label"
    p = len(header) - 1 if with_labels else len(header)
    if p < 1 or header[:p] != _header(p, False):
        raise ValueError(f"expected header c1..c{max(p, 1)}[,label], got {header!r}")
    values, mask, labels = [], [], []
    for lineno, cells in enumerate(reader, start=2):
        if not cells:
            continue
        if len(cells) != len(header):
            raise ValueError(f"line {lineno}: expected {len(header)} cells, got {len(cells)}")
        row_vals, row_mask = [], []
        for j in range(p):
            token = cells[j].strip()
            if token in MISSING_TOKENS:
                row_vals.append(np.nan)
                row_mask.append(False)
            else:
                try:
                    row_vals.append(float(token))
                except ValueError:
                    raise ValueError(f"line {lineno}: cannot parse value {token!r}") from None
                row_mask.append(True)
        values.append(row_vals)
        mask.append(row_mask)
        if with_labels:
            try:
                labels.append(int(cells[p].strip()))
            except ValueError:
                raise ValueError(f"line {lineno}: cannot parse label {cells[p]!r}") from None
    if not values:
        raise ValueError("CSV contains a header but no data rows")
    return Dataset(
        values=np.asarray(values, dtype=float),
        mask=np.asarray(mask, dtype=bool),
        labels=np.asarray(labels, dtype=int) if with_labels else None,
    )


def write_dataset_csv(ds: Dataset, path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(dataset_to_csv(ds))


def read_dataset_csv(path) -> Dataset:
    with open(path, "r", newline="") as fh:
        return dataset_from_csv(fh.read())

"""Clustering engines: Lloyd K-means, K-means unified with center filling,
and covariance-aware K-means that re-imputes missing cells each cycle.

All engines alternate hard assignment and parameter updates, record one
objective value per cycle, and stop when the relative objective decrease
falls to ``epsilon0`` or the cycle budget runs out. Restarts are driven by
independent derived random streams, so results are reproducible and
restart-order independent.

The covariance-aware engine assigns each row to the cluster minimizing the
squared Mahalanobis distance and traces the fit value

    F = sum_i mahal_sq(x_i, mu_{z_i}, Sigma_{z_i}) + sum_k n_k log det Sigma_k,

the hard-assignment Gaussian negative log likelihood up to a constant.
The parameter refit (joint mean and eigenvalue-floored covariance, an exact
constrained maximum-likelihood step) and the conditional-mean filling of
missing cells both weakly decrease F; the distance-only reassignment
usually does as well but carries no guarantee, so a cycle that would
raise F is rolled back and the fit stops there. The trace is therefore
non-increasing by construction. The plain squared Mahalanobis sum cannot
serve as the trace: after every maximum-likelihood covariance refit it
collapses to n * p identically, carrying no information. Assigning by
distance rather than by full log density is deliberate: a log det bonus
in the assignment rule lets near-degenerate clusters capture rows lying
on imputation artifacts (many rows filled with the same column mean),
while the pure distance repels them, since a shrunken variance makes any
off-center row expensive.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from . import numerics
from .data import (
    AssignmentMatrix,
    ClusterModel,
    ConfigurationError,
    Dataset,
    EngineConfig,
    dataset_from_csv,
    dataset_to_csv,
)
from .imputation import mean_impute
from .rng import stream

__all__ = [
    "FitResult",
    "mahalanobis_sq",
    "conditional_mean",
    "criterion_a",
    "fit_kmeans",
    "fit_unified_kmeans",
    "fit_kmahal",
    "fit",
]

# Guard against division by zero in the relative-change stopping rule.
_TINY = np.finfo(float).tiny


def mahalanobis_sq(x, center, cov) -> float:
    """Squared Mahalanobis distance (x - center)^T cov^{-1} (x - center)."""
    x = np.asarray(x, dtype=float)
    center = np.asarray(center, dtype=float)
    if x.shape != center.shape or x.ndim != 1:
        raise ValueError(f"x and center must be equal-length vectors, got {x.shape} and {center.shape}")
    L = numerics.cholesky_lower(cov)
    if L.shape[0] != x.shape[0]:
        raise ValueError(f"cov shape {L.shape} does not match vector length {x.shape[0]}")
    return float(numerics.chol_mahalanobis_sq(L, (x - center)[None, :])[0])


def conditional_mean(row_parts, center, cov) -> np.ndarray:
    """Expected values of a row's missing coordinates under a Gaussian.

    Parameters
    ----------
    row_parts : (observed_idx, missing_idx, observed_values) triple as
        produced by :func:`kmahal.data.split_row`.
    center, cov : parameters of the cluster the row is assigned to.

    Returns
    -------
    Values for the missing coordinates, in ``missing_idx`` order. With no
    missing coordinates the result is empty. When the covariance has no
    cross terms between missing and observed blocks this reduces exactly to
    ``center[missing_idx]``.
    """
    observed, missing, x_obs = row_parts
    observed = np.asarray(observed, dtype=int)
    missing = np.asarray(missing, dtype=int)
    x_obs = np.asarray(x_obs, dtype=float)
    center = np.asarray(center, dtype=float)
    cov = np.asarray(cov, dtype=float)
    if observed.size == 0:
        raise ValueError("a row with no observed coordinates cannot be completed")
    if x_obs.shape != observed.shape:
        raise ValueError("observed_values must align with observed_idx")
    if missing.size == 0:
        return np.empty(0, dtype=float)
    cov_oo = cov[np.ix_(observed, observed)]
    cov_mo = cov[np.ix_(missing, observed)]
    return center[missing] + cov_mo @ numerics.spd_solve(cov_oo, x_obs - center[observed])


def criterion_a(model: ClusterModel) -> float:
    """Sum over clusters of count times covariance log determinant.

    This is the count-weighted log determinant criterion used to rank
    restarts of the covariance-aware engine; smaller values correspond to
    larger classification likelihoods. Empty clusters contribute zero.
    """
    total = 0.0
    for k in range(model.n_clusters):
        n_k = int(model.counts[k])
        if n_k > 0:
            total += n_k * numerics.log_det(model.covariances[k])
    return total


@dataclass(frozen=True)
class FitResult:
    """Outcome of one engine fit (the best restart).

    ``objective_trace`` holds one value per cycle; the covariance-aware
    engine prepends the objective of its initialization state. The trace is
    non-increasing within floating-point tolerance. ``iterations`` counts
    executed cycles. ``completed`` is the input data with missing cells
    holding the engine's final imputed values.
    """

    model: ClusterModel
    assignment: AssignmentMatrix
    completed: Dataset
    objective_trace: tuple
    criterion_a: float
    iterations: int
    converged: bool
    restart: int

    @property
    def objective(self) -> float:
        return self.objective_trace[-1]

    def to_document(self) -> str:
        """Serialize to a JSON text document (covariances row-major)."""
        payload = {
            "assignments": self.assignment.to_labels(),
            "n_clusters": self.model.n_clusters,
            "centers": [[float(v) for v in row] for row in self.model.centers],
            "covariances": [
                [float(v) for v in cov.ravel(order="C")] for cov in self.model.covariances
            ],
            "counts": [int(c) for c in self.model.counts],
            "objective_trace": [float(v) for v in self.objective_trace],
            "criterion_a": float(self.criterion_a),
            "iterations": self.iterations,
            "converged": self.converged,
            "restart": self.restart,
            "completed_data_csv": dataset_to_csv(self.completed),
        }
        return json.dumps(payload, indent=2)

    @classmethod
    def from_document(cls, text: str) -> "FitResult":
        doc = json.loads(text)
        K = int(doc["n_clusters"])
        centers = np.asarray(doc["centers"], dtype=float)
        p = centers.shape[1]
        covariances = np.asarray(
            [np.asarray(flat, dtype=float).reshape(p, p) for flat in doc["covariances"]]
        )
        model = ClusterModel(centers=centers, covariances=covariances, counts=doc["counts"])
        return cls(
            model=model,
            assignment=AssignmentMatrix.from_labels(doc["assignments"], K),
            completed=dataset_from_csv(doc["completed_data_csv"]),
            objective_trace=tuple(float(v) for v in doc["objective_trace"]),
            criterion_a=float(doc["criterion_a"]),
            iterations=int(doc["iterations"]),
            converged=bool(doc["converged"]),
            restart=int(doc["restart"]),
        )


# ---------------------------------------------------------------------------
# shared pieces


def _validate_common(ds: Dataset, cfg: EngineConfig, initial_centers):
    if cfg.n_clusters > ds.n:
        raise ConfigurationError(f"n_clusters={cfg.n_clusters} exceeds the {ds.n} data rows")
    if initial_centers is not None:
        initial_centers = np.asarray(initial_centers, dtype=float)
        if initial_centers.shape != (cfg.n_clusters, ds.p):
            raise ConfigurationError(
                f"initial_centers must have shape ({cfg.n_clusters}, {ds.p}),"
                f" got {initial_centers.shape}"
            )
        if cfg.restarts != 1:
            raise ConfigurationError("explicit initial_centers require restarts=1")
    return initial_centers


def _resolve_initial_fill(ds: Dataset, initial_fill) -> np.ndarray:
    """Starting values for the working matrix: the given completion, or
    column means when none is supplied."""
    if initial_fill is None:
        return mean_impute(ds).values.copy()
    if isinstance(initial_fill, Dataset):
        filled = initial_fill
    else:
        filled = ds.filled_with(initial_fill)
    if not filled.complete:
        raise ConfigurationError("initial_fill must be fully observed")
    if filled.values.shape != ds.values.shape:
        raise ConfigurationError("initial_fill shape does not match the dataset")
    if not np.array_equal(filled.values[ds.mask], ds.values[ds.mask]):
        raise ConfigurationError("initial_fill must preserve observed cells")
    return filled.values.copy()


def _fit_floor(X0: np.ndarray, cov_floor: float) -> float:
    """Absolute eigenvalue floor for one fit.

    The floor is held constant across cycles and restarts so that every
    covariance refit minimizes over the same feasible set; this is what
    makes the refit step a descent step. It scales with the mean diagonal
    of the pooled covariance of the starting matrix.
    """
    mean_var = float(X0.var(axis=0).mean())
    return cov_floor * mean_var if mean_var > 0 else cov_floor


def _initial_center_rows(X: np.ndarray, K: int, rng) -> np.ndarray:
    idx = rng.choice(X.shape[0], size=K, replace=False)
    return X[idx].copy()


def _squared_distances(X: np.ndarray, centers: np.ndarray) -> np.ndarray:
    diff = X[:, None, :] - centers[None, :, :]
    return np.einsum("nkp,nkp->nk", diff, diff)


def _repair_empty(labels: np.ndarray, point_cost: np.ndarray, K: int):
    """Move one far point into each empty cluster.

    ``point_cost`` is each row's current cost at its assigned cluster. The
    donor row is the one with the largest cost among rows whose cluster
    keeps at least one other member; moving it can only lower the summed
    cost. Returns the indices of the moved rows.
    """
    counts = np.bincount(labels, minlength=K)
    moved = []
    for k in range(K):
        if counts[k] > 0:
            continue
        eligible = counts[labels] >= 2
        if not eligible.any():
            raise RuntimeError("cannot repair empty cluster: no donor cluster has two members")
        costs = np.where(eligible, point_cost, -np.inf)
        donor_row = int(np.argmax(costs))
        counts[labels[donor_row]] -= 1
        labels[donor_row] = k
        counts[k] = 1
        point_cost[donor_row] = 0.0
        moved.append(donor_row)
    return moved


def _centers_from_labels(X: np.ndarray, labels: np.ndarray, K: int) -> np.ndarray:
    counts = np.bincount(labels, minlength=K).astype(float)
    sums = np.zeros((K, X.shape[1]))
    np.add.at(sums, labels, X)
    return sums / counts[:, None]


def _ml_covariance(diffs: np.ndarray) -> np.ndarray:
    n_k = diffs.shape[0]
    S = diffs.T @ diffs / n_k
    return 0.5 * (S + S.T)


def _cluster_models(X: np.ndarray, labels: np.ndarray, centers: np.ndarray, K: int, floor: float):
    """Regularized per-cluster covariances plus counts for the final model."""
    covariances = np.empty((K, X.shape[1], X.shape[1]))
    counts = np.bincount(labels, minlength=K)
    for k in range(K):
        members = labels == k
        if counts[k] == 0:
            covariances[k] = np.eye(X.shape[1]) * floor
            continue
        covariances[k] = numerics.regularize_spd(_ml_covariance(X[members] - centers[k]), floor)
    return covariances, counts


def _converged(prev: float, current: float, epsilon0: float) -> bool:
    return prev - current <= epsilon0 * max(abs(current), _TINY)


# ---------------------------------------------------------------------------
# Euclidean engines


def _euclidean_run(X0, missing, K, cfg, init_centers):
    """One Lloyd run; when ``missing`` is given, missing cells are refilled
    with the assigned center's coordinates after every center update."""
    X = X0.copy()
    centers = init_centers.copy()
    fill_rows = fill_cols = None
    if missing is not None and missing.any():
        fill_rows, fill_cols = np.nonzero(missing)
    trace = []
    converged = False
    labels = None
    for _ in range(cfg.max_iter):
        d2 = _squared_distances(X, centers)
        labels = np.argmin(d2, axis=1)
        point_cost = d2[np.arange(X.shape[0]), labels]
        # Repairing an empty cluster re-seeds it at the moved row, so the
        # recomputed means can only lower the summed cost.
        _repair_empty(labels, point_cost, K)
        centers = _centers_from_labels(X, labels, K)
        if fill_rows is not None:
            X[fill_rows, fill_cols] = centers[labels[fill_rows], fill_cols]
        diff = X - centers[labels]
        obj = float(np.einsum("np,np->", diff, diff))
        trace.append(obj)
        if len(trace) >= 2 and _converged(trace[-2], obj, cfg.epsilon0):
            converged = True
            break
    return labels, centers, X, trace, converged


def _finish_euclidean(ds, cfg, labels, centers, X, trace, converged, floor, restart):
    covariances, counts = _cluster_models(X, labels, centers, cfg.n_clusters, floor)
    model = ClusterModel(centers=centers, covariances=covariances, counts=counts)
    return FitResult(
        model=model,
        assignment=AssignmentMatrix(cfg.n_clusters, labels + 1),
        completed=ds.filled_with(X),
        objective_trace=tuple(trace),
        criterion_a=criterion_a(model),
        iterations=len(trace),
        converged=converged,
        restart=restart,
    )


def fit_kmeans(ds: Dataset, cfg: EngineConfig, initial_centers=None) -> FitResult:
    """Lloyd K-means on a fully observed dataset.

    The dataset must be complete; impute first when clustering incomplete
    data with this baseline. Of ``cfg.restarts`` independent runs the one
    with the lowest final objective is returned (ties keep the earliest
    restart).
    """
    initial_centers = _validate_common(ds, cfg, initial_centers)
    if not ds.complete:
        raise ValueError("fit_kmeans requires a fully observed dataset; impute first")
    X0 = ds.values
    floor = _fit_floor(X0, cfg.cov_floor)
    best = None
    for r in range(cfg.restarts):
        init = initial_centers if initial_centers is not None else _initial_center_rows(
            X0, cfg.n_clusters, stream(cfg.seed, r)
        )
        labels, centers, X, trace, converged = _euclidean_run(X0, None, cfg.n_clusters, cfg, init)
        if best is None or trace[-1] < best[0]:
            best = (trace[-1], r, labels, centers, X, trace, converged)
    _, r, labels, centers, X, trace, converged = best
    return _finish_euclidean(ds, cfg, labels, centers, X, trace, converged, floor, r)


def fit_unified_kmeans(ds: Dataset, cfg: EngineConfig, initial_fill=None, initial_centers=None) -> FitResult:
    """K-means that treats missing cells as part of the optimization.

    Missing cells start at ``initial_fill`` (column means by default) and
    are overwritten with the assigned cluster center's coordinates after
    every center update, which weakly decreases the same squared-distance
    objective that drives the assignments. On a complete dataset the
    trajectory is identical to :func:`fit_kmeans`.
    """
    initial_centers = _validate_common(ds, cfg, initial_centers)
    X0 = _resolve_initial_fill(ds, initial_fill)
    floor = _fit_floor(X0, cfg.cov_floor)
    missing = ~ds.mask
    best = None
    for r in range(cfg.restarts):
        init = initial_centers if initial_centers is not None else _initial_center_rows(
            X0, cfg.n_clusters, stream(cfg.seed, r)
        )
        labels, centers, X, trace, converged = _euclidean_run(X0, missing, cfg.n_clusters, cfg, init)
        if best is None or trace[-1] < best[0]:
            best = (trace[-1], r, labels, centers, X, trace, converged)
    _, r, labels, centers, X, trace, converged = best
    return _finish_euclidean(ds, cfg, labels, centers, X, trace, converged, floor, r)


# ---------------------------------------------------------------------------
# covariance-aware engine


def _mahal_sq_matrix(X, centers, cholesky_factors):
    """(n, K) matrix of squared Mahalanobis distances to every cluster."""
    n, K = X.shape[0], centers.shape[0]
    out = np.empty((n, K))
    for k in range(K):
        out[:, k] = numerics.chol_mahalanobis_sq(cholesky_factors[k], X - centers[k])
    return out


def _group_fill(X, labels, mask, centers, covariances):
    """Replace missing cells with conditional means of the assigned cluster.

    Rows are grouped by (cluster, missing pattern) so each group costs one
    factorization. The per-group math matches :func:`conditional_mean`.
    """
    incomplete = np.flatnonzero(~mask.all(axis=1))
    groups = {}
    for i in incomplete:
        key = (labels[i], mask[i].tobytes())
        groups.setdefault(key, []).append(i)
    for (k, _), rows in groups.items():
        rows = np.asarray(rows)
        row_mask = mask[rows[0]]
        observed = np.flatnonzero(row_mask)
        miss = np.flatnonzero(~row_mask)
        cov = covariances[k]
        cov_oo = cov[np.ix_(observed, observed)]
        cov_om = cov[np.ix_(observed, miss)]
        gain = numerics.spd_solve(cov_oo, cov_om)
        diffs = X[np.ix_(rows, observed)] - centers[k, observed]
        X[np.ix_(rows, miss)] = centers[k, miss] + diffs @ gain


def _kmahal_objective(X, labels, centers, cholesky_factors, log_dets, K):
    total = 0.0
    for k in range(K):
        members = labels == k
        if not members.any():
            continue
        m2 = numerics.chol_mahalanobis_sq(cholesky_factors[k], X[members] - centers[k])
        total += float(m2.sum()) + log_dets[k] * int(members.sum())
    return total


def _kmahal_run(ds, cfg, X0, floor, init_centers, freeze_identity):
    p = ds.p
    K = cfg.n_clusters
    labels, centers, _, _, _ = _euclidean_run(X0, None, K, cfg, init_centers)
    X = X0.copy()

    if freeze_identity:
        covariances = np.broadcast_to(np.eye(p), (K, p, p)).copy()
    else:
        covariances, _ = _cluster_models(X, labels, centers, K, floor)
    factors = [numerics.cholesky_lower(covariances[k]) for k in range(K)]
    log_dets = np.array([numerics.chol_log_det(L) for L in factors])

    trace = [_kmahal_objective(X, labels, centers, factors, log_dets, K)]
    converged = False
    has_missing = not ds.complete
    state = (labels, centers, covariances, X.copy())
    for _ in range(cfg.max_iter):
        distances = _mahal_sq_matrix(X, centers, factors)
        labels = np.argmin(distances, axis=1)
        point_cost = distances[np.arange(X.shape[0]), labels]
        _repair_empty(labels, point_cost, K)
        centers = _centers_from_labels(X, labels, K)
        if not freeze_identity:
            covariances, _ = _cluster_models(X, labels, centers, K, floor)
            factors = [numerics.cholesky_lower(covariances[k]) for k in range(K)]
            log_dets = np.array([numerics.chol_log_det(L) for L in factors])
        if has_missing:
            _group_fill(X, labels, ds.mask, centers, covariances)
        obj = _kmahal_objective(X, labels, centers, factors, log_dets, K)
        if obj > trace[-1]:
            # The refit and fill steps cannot raise the fit value, but the
            # distance-only reassignment occasionally can; roll back to the
            # last state so the trace stays non-increasing.
            labels, centers, covariances, X = state
            converged = True
            break
        trace.append(obj)
        if _converged(trace[-2], obj, cfg.epsilon0):
            converged = True
            break
        state = (labels, centers, covariances, X.copy())

    counts = np.bincount(labels, minlength=K)
    model = ClusterModel(centers=centers, covariances=covariances, counts=counts)
    return labels, model, X, trace, converged


def fit_kmahal(
    ds: Dataset,
    cfg: EngineConfig,
    initial_fill=None,
    initial_centers=None,
    freeze_identity_covariances=False,
) -> FitResult:
    """Covariance-aware K-means with integrated conditional-mean imputation.

    Each restart first runs Lloyd K-means on the completed starting matrix
    (``initial_fill``, column means by default) and adopts its partition as
    the initial state. The main loop then alternates (a) reassigning every
    row to its squared-Mahalanobis-nearest cluster, (b) refitting cluster
    means and eigenvalue-floored covariances, and (c) refilling every
    missing cell with its conditional mean given the assigned cluster. A
    cycle that would raise the traced fit value is rolled back and ends
    the run. Among restarts the result with the smallest count-weighted
    log determinant criterion is returned (largest if
    ``cfg.prefer_high_criterion_a`` is set; ties keep the earliest
    restart).

    ``freeze_identity_covariances`` pins every covariance to the identity,
    reducing the engine to Lloyd K-means; it exists for equivalence testing.
    """
    initial_centers = _validate_common(ds, cfg, initial_centers)
    X0 = _resolve_initial_fill(ds, initial_fill)
    floor = _fit_floor(X0, cfg.cov_floor)
    best = None
    for r in range(cfg.restarts):
        init = initial_centers if initial_centers is not None else _initial_center_rows(
            X0, cfg.n_clusters, stream(cfg.seed, r)
        )
        labels, model, X, trace, converged = _kmahal_run(
            ds, cfg, X0, floor, init, freeze_identity_covariances
        )
        crit = criterion_a(model)
        key = -crit if cfg.prefer_high_criterion_a else crit
        if best is None or key < best[0]:
            best = (key, crit, r, labels, model, X, trace, converged)
    _, crit, r, labels, model, X, trace, converged = best
    return FitResult(
        model=model,
        assignment=AssignmentMatrix(cfg.n_clusters, labels + 1),
        completed=ds.filled_with(X),
        objective_trace=tuple(trace),
        criterion_a=crit,
        iterations=len(trace) - 1,
        converged=converged,
        restart=r,
    )


def fit(ds: Dataset, cfg: EngineConfig, initial_fill=None) -> FitResult:
    """Run the engine named by ``cfg.algorithm``."""
    if cfg.algorithm == "kmeans":
        base = ds if ds.complete else mean_impute(ds)
        if initial_fill is not None:
            base = initial_fill if isinstance(initial_fill, Dataset) else ds.filled_with(initial_fill)
        return fit_kmeans(base, cfg)
    if cfg.algorithm == "unified-kmeans":
        return fit_unified_kmeans(ds, cfg, initial_fill=initial_fill)
    return fit_kmahal(ds, cfg, initial_fill=initial_fill)

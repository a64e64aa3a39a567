"""Synthetic Gaussian mixture generation, missingness injection, and the
bundled reference dataset.

The generator draws component means uniformly in the unit hypercube and
covariances with log-uniform eigenvalue spectra, then rescales the means
about their centroid until the largest pairwise overlap between components
matches a target. Overlap between two components is the two-sided
misclassification mass, estimated by Monte Carlo with common random numbers
so the calibration search sees a deterministic, monotone curve.
"""

from __future__ import annotations

import hashlib
import importlib.resources
import math
from dataclasses import dataclass

import numpy as np

from . import numerics
from .data import ConfigurationError, Dataset, dataset_from_csv
from .rng import stream

__all__ = [
    "CalibrationError",
    "LoadError",
    "MixtureSpec",
    "MissingnessPlan",
    "MixtureInfo",
    "estimate_pairwise_overlap",
    "estimate_max_pairwise_overlap",
    "generate_mixture",
    "inject_missing",
    "load_iris",
]

EIGENVALUE_RANGE = (0.05, 1.0)

# Sampling chunk that bounds estimator memory regardless of sample count.
_CHUNK = 500_000

# Stream sub-keys (second key after the user seed).
_MEANS_KEY = 0
_COVS_KEY = 1
_SAMPLES_KEY = 2
_OVERLAP_KEY = 3


class CalibrationError(RuntimeError):
    """Raised when overlap calibration cannot reach the target."""

    def __init__(self, message: str, achieved: float | None = None):
        super().__init__(message)
        self.achieved = achieved


class LoadError(RuntimeError):
    """Raised when a bundled resource is missing or corrupt."""


@dataclass(frozen=True)
class MixtureSpec:
    """Recipe for a calibrated Gaussian mixture sample."""

    n_clusters: int
    n_coords: int
    n_rows: int
    target_overlap: float
    seed: int = 0
    mc_samples: int = 20_000
    calibration_rel_tol: float = 0.1

    def __post_init__(self):
        if not (isinstance(self.n_clusters, int) and self.n_clusters >= 2):
            raise ConfigurationError(f"n_clusters must be an integer >= 2, got {self.n_clusters!r}")
        if not (isinstance(self.n_coords, int) and self.n_coords >= 1):
            raise ConfigurationError(f"n_coords must be a positive integer, got {self.n_coords!r}")
        if not (isinstance(self.n_rows, int) and self.n_rows >= self.n_clusters):
            raise ConfigurationError(
                f"n_rows must be an integer >= n_clusters, got {self.n_rows!r}"
            )
        if not 0.0 < self.target_overlap < 2.0:
            raise ConfigurationError(
                f"target_overlap must lie in (0, 2), got {self.target_overlap!r}"
            )
        if not (isinstance(self.mc_samples, int) and self.mc_samples >= 1):
            raise ConfigurationError(f"mc_samples must be a positive integer, got {self.mc_samples!r}")
        if not self.calibration_rel_tol > 0:
            raise ConfigurationError(
                f"calibration_rel_tol must be positive, got {self.calibration_rel_tol!r}"
            )
        if not (isinstance(self.seed, int) and self.seed >= 0):
            raise ConfigurationError(f"seed must be a non-negative integer, got {self.seed!r}")


@dataclass(frozen=True)
class MissingnessPlan:
    """Which coordinates to degrade and how heavily.

    ``coords`` lists one or two 1-based coordinate numbers (matching the
    c1..cp column names). With ``per_coordinate`` set, each listed
    coordinate is masked in an independently drawn set of rows; otherwise
    one row set is shared by all listed coordinates.
    """

    coords: tuple
    d_percent: float
    per_coordinate: bool = True

    def __post_init__(self):
        coords = tuple(int(c) for c in self.coords)
        if len(coords) not in (1, 2):
            raise ConfigurationError(f"coords must list 1 or 2 coordinates, got {coords!r}")
        if len(set(coords)) != len(coords):
            raise ConfigurationError(f"coords must be distinct, got {coords!r}")
        if min(coords) < 1:
            raise ConfigurationError(f"coords are 1-based, got {coords!r}")
        if not 0.0 <= self.d_percent <= 100.0:
            raise ConfigurationError(f"d_percent must lie in [0, 100], got {self.d_percent!r}")
        object.__setattr__(self, "coords", coords)


@dataclass(frozen=True)
class MixtureInfo:
    """Calibrated mixture parameters and the achieved overlap."""

    means: np.ndarray
    covariances: np.ndarray
    weights: np.ndarray
    scale: float
    achieved_overlap: float


def _component_params(component):
    mean, cov, weight = component
    mean = np.asarray(mean, dtype=float)
    L = numerics.cholesky_lower(cov)
    return mean, L, numerics.chol_log_det(L), float(weight)


def _side_exceed_probability(mean_own, L_own, ld_own, logw_own,
                             mean_oth, L_oth, ld_oth, logw_oth,
                             n_samples, gen):
    """P[the other component's weighted density exceeds our own] on draws
    from our own component. Exact density ties count one half."""
    exceed = 0.0
    remaining = n_samples
    while remaining > 0:
        m = min(remaining, _CHUNK)
        z = gen.standard_normal((m, mean_own.shape[0]))
        x = mean_own + z @ L_own.T
        score_own = logw_own - 0.5 * (numerics.chol_mahalanobis_sq(L_own, x - mean_own) + ld_own)
        score_oth = logw_oth - 0.5 * (numerics.chol_mahalanobis_sq(L_oth, x - mean_oth) + ld_oth)
        exceed += float((score_oth > score_own).sum()) + 0.5 * float((score_oth == score_own).sum())
        remaining -= m
    return exceed / n_samples


def estimate_pairwise_overlap(component_i, component_j, mc_samples=20_000, seed=0,
                              return_se=False):
    """Two-sided misclassification mass between two weighted Gaussians.

    Each component is a ``(mean, covariance, weight)`` triple. The overlap
    is the probability that a draw from one component scores higher under
    the other component's weighted density, summed over both directions, so
    it lies in [0, 2] and equals 1.0 for two identical equal-weight
    components. With ``return_se`` the Monte Carlo standard error of the
    estimate is returned as well.
    """
    if mc_samples < 1:
        raise ConfigurationError(f"mc_samples must be positive, got {mc_samples!r}")
    mean_i, L_i, ld_i, w_i = _component_params(component_i)
    mean_j, L_j, ld_j, w_j = _component_params(component_j)
    logw_i, logw_j = math.log(w_i), math.log(w_j)
    p_i = _side_exceed_probability(
        mean_i, L_i, ld_i, logw_i, mean_j, L_j, ld_j, logw_j, mc_samples, stream(seed, 0)
    )
    p_j = _side_exceed_probability(
        mean_j, L_j, ld_j, logw_j, mean_i, L_i, ld_i, logw_i, mc_samples, stream(seed, 1)
    )
    overlap = p_i + p_j
    if not return_se:
        return overlap
    se = math.sqrt((p_i * (1 - p_i) + p_j * (1 - p_j)) / mc_samples)
    return overlap, se


def estimate_max_pairwise_overlap(components, mc_samples=20_000, seed=0, return_se=False):
    """Largest pairwise overlap over all component pairs."""
    best, best_se = -1.0, 0.0
    for i in range(len(components)):
        for j in range(i + 1, len(components)):
            est, se = estimate_pairwise_overlap(
                components[i], components[j], mc_samples, seed, return_se=True
            )
            if est > best:
                best, best_se = est, se
    return (best, best_se) if return_se else best


# ---------------------------------------------------------------------------
# calibrated generation


class _OverlapEvaluator:
    """Max pairwise overlap as a function of the mean scale factor.

    Every evaluation replays the same random streams (one per ordered
    component pair and side), so the curve is a deterministic function of
    the scale and decreases as the means spread out. All pairs are screened
    at the base sample count; pairs statistically close to the maximum are
    re-estimated at ``fine_samples`` for resolution near the target.
    """

    def __init__(self, means, covariances, seed, coarse_samples, fine_samples):
        self.means0 = means
        self.centroid = means.mean(axis=0)
        self.seed = seed
        self.coarse = coarse_samples
        self.fine = fine_samples
        K = means.shape[0]
        self.factors = [numerics.cholesky_lower(covariances[k]) for k in range(K)]
        self.log_dets = [numerics.chol_log_det(L) for L in self.factors]
        self.pairs = [(i, j) for i in range(K) for j in range(K) if i < j]

    def scaled_means(self, s):
        return self.centroid + s * (self.means0 - self.centroid)

    def _pair_overlap(self, means, i, j, n_samples):
        acc = 0.0
        for own, oth in ((i, j), (j, i)):
            acc += _side_exceed_probability(
                means[own], self.factors[own], self.log_dets[own], 0.0,
                means[oth], self.factors[oth], self.log_dets[oth], 0.0,
                n_samples, stream(self.seed, _OVERLAP_KEY, own, oth),
            )
        return acc

    def max_overlap(self, s, refine):
        means = self.scaled_means(s)
        ests = np.array([self._pair_overlap(means, i, j, self.coarse) for i, j in self.pairs])
        ses = np.sqrt(np.maximum(ests * (2.0 - ests), 1e-12) / self.coarse)
        best = int(np.argmax(ests))
        if refine and self.fine > self.coarse:
            near = ests + 3 * ses >= ests[best] - 3 * ses[best]
            for idx in np.flatnonzero(near):
                i, j = self.pairs[idx]
                ests[idx] = self._pair_overlap(means, i, j, self.fine)
        return float(ests.max())


def _draw_components(spec: MixtureSpec):
    means = stream(spec.seed, _MEANS_KEY).uniform(size=(spec.n_clusters, spec.n_coords))
    gen = stream(spec.seed, _COVS_KEY)
    lo, hi = EIGENVALUE_RANGE
    covariances = np.empty((spec.n_clusters, spec.n_coords, spec.n_coords))
    for k in range(spec.n_clusters):
        eigvals = np.exp(gen.uniform(math.log(lo), math.log(hi), size=spec.n_coords))
        g = gen.standard_normal((spec.n_coords, spec.n_coords))
        q, r = np.linalg.qr(g)
        q = q * np.sign(np.diag(r))
        cov = (q * eigvals) @ q.T
        covariances[k] = 0.5 * (cov + cov.T)
    return means, covariances


def _calibrate_scale(evaluator: _OverlapEvaluator, spec: MixtureSpec):
    """Bisection on the scale factor; returns (scale, achieved overlap)."""
    target = spec.target_overlap
    tol = spec.calibration_rel_tol * target
    budget = 60
    achieved = None

    def coarse(s):
        return evaluator.max_overlap(s, refine=False)

    def fine(s):
        return evaluator.max_overlap(s, refine=True)

    # Bracket so that overlap(s_lo) >= target >= overlap(s_hi).
    s_lo = s_hi = 1.0
    f_here = coarse(1.0)
    budget -= 1
    if f_here >= target:
        while budget > 0:
            s_hi *= 2.0
            budget -= 1
            if coarse(s_hi) <= target:
                break
        else:
            raise CalibrationError("could not bracket the target overlap from above", f_here)
    else:
        while budget > 0:
            s_lo *= 0.5
            budget -= 1
            f_lo = coarse(s_lo)
            if f_lo >= target:
                break
            if s_lo < 1e-9:
                raise CalibrationError(
                    f"target overlap {target} is unreachable even with coincident means",
                    f_lo,
                )
        else:
            raise CalibrationError("could not bracket the target overlap from below", None)

    # Coarse bisection until the estimate is within its own noise of the
    # target, then refined bisection down to a fraction of the tolerance.
    coarse_se = math.sqrt(max(target * (2.0 - target), 1e-12) / evaluator.coarse)
    while budget > 0:
        s_mid = 0.5 * (s_lo + s_hi)
        f_mid = coarse(s_mid)
        budget -= 1
        if abs(f_mid - target) <= 3 * coarse_se:
            break
        if f_mid > target:
            s_lo = s_mid
        else:
            s_hi = s_mid
    while budget > 0:
        s_mid = 0.5 * (s_lo + s_hi)
        achieved = fine(s_mid)
        budget -= 1
        if abs(achieved - target) <= 0.2 * tol:
            return s_mid, achieved
        if achieved > target:
            s_lo = s_mid
        else:
            s_hi = s_mid
    raise CalibrationError(
        f"calibration did not converge within 60 steps (achieved {achieved})", achieved
    )


def _fine_samples(spec: MixtureSpec) -> int:
    # Resolving a 10% relative band around small targets needs the Monte
    # Carlo standard error sqrt(omega / M) to sit well inside the band.
    needed = int(math.ceil(6000.0 / spec.target_overlap))
    return min(max(spec.mc_samples, needed), 8_000_000)


def _coarse_samples(spec: MixtureSpec) -> int:
    # Screening every pair at a standard error near 6% of the target keeps
    # the candidate set for fine re-estimation small at tiny targets.
    needed = int(math.ceil(600.0 / spec.target_overlap))
    return min(max(spec.mc_samples, needed), 1_000_000)


def generate_mixture(spec: MixtureSpec, return_info: bool = False):
    """Sample a labeled dataset from a calibrated Gaussian mixture.

    Component means are drawn uniformly in the unit hypercube, covariances
    get log-uniform eigenvalues in [0.05, 1] with Haar-random orientations,
    and weights are equal. The means are then scaled about their centroid
    so the maximum pairwise overlap matches ``spec.target_overlap`` within
    ``spec.calibration_rel_tol`` (relative). Rows are sampled with
    multinomial component counts; labels hold component ids 1..K.

    The same spec always produces bit-identical output. With
    ``return_info`` the calibrated parameters and achieved overlap are
    returned alongside the dataset.
    """
    means0, covariances = _draw_components(spec)
    evaluator = _OverlapEvaluator(
        means0, covariances, spec.seed, _coarse_samples(spec), _fine_samples(spec)
    )
    scale, achieved = _calibrate_scale(evaluator, spec)
    means = evaluator.scaled_means(scale)

    gen = stream(spec.seed, _SAMPLES_KEY)
    weights = np.full(spec.n_clusters, 1.0 / spec.n_clusters)
    counts = gen.multinomial(spec.n_rows, weights)
    blocks, labels = [], []
    for k in range(spec.n_clusters):
        z = gen.standard_normal((int(counts[k]), spec.n_coords))
        blocks.append(means[k] + z @ evaluator.factors[k].T)
        labels.append(np.full(int(counts[k]), k + 1, dtype=int))
    ds = Dataset(values=np.concatenate(blocks), labels=np.concatenate(labels))
    if not return_info:
        return ds
    info = MixtureInfo(
        means=means,
        covariances=covariances,
        weights=weights,
        scale=scale,
        achieved_overlap=achieved,
    )
    return ds, info


# ---------------------------------------------------------------------------
# missingness injection


def _mask_count(n_rows: int, d_percent: float) -> int:
    # Round half away from zero; d_percent is non-negative here.
    return int(math.floor(n_rows * d_percent / 100.0 + 0.5))


def inject_missing(ds: Dataset, plan: MissingnessPlan, seed: int) -> Dataset:
    """Mask a fixed count of rows in each planned coordinate.

    Exactly ``round(n * d_percent / 100)`` distinct rows are masked per
    listed coordinate (one shared row set when ``per_coordinate`` is
    false). No row ever loses all of its coordinates: when every
    coordinate is listed, colliding masks are moved to the lowest-index
    rows that can absorb them.
    """
    if not ds.complete:
        raise ValueError("inject_missing expects a fully observed dataset")
    if max(plan.coords) > ds.p:
        raise ConfigurationError(
            f"plan coordinate {max(plan.coords)} exceeds dataset width {ds.p}"
        )
    n_mask = _mask_count(ds.n, plan.d_percent)
    if n_mask == 0:
        return ds

    mask = ds.mask.copy()
    if plan.per_coordinate:
        row_sets = {
            c: stream(seed, c).choice(ds.n, size=n_mask, replace=False) for c in plan.coords
        }
    else:
        shared = stream(seed, 0).choice(ds.n, size=n_mask, replace=False)
        row_sets = {c: shared for c in plan.coords}
    for c, rows in row_sets.items():
        mask[rows, c - 1] = False

    # Only a plan covering every coordinate can produce an all-missing row.
    if len(plan.coords) == ds.p:
        _spread_full_rows(mask, plan.coords)

    return Dataset(values=ds.values, mask=mask, labels=ds.labels)


def _spread_full_rows(mask: np.ndarray, coords) -> None:
    while True:
        dead = np.flatnonzero(~mask.any(axis=1))
        if dead.size == 0:
            return
        row = int(dead[0])
        for c in reversed(coords):
            col = c - 1
            if mask[row, col]:
                continue
            # Move this mask to the lowest-index row that observes the
            # coordinate and has another observed cell to spare.
            takers = np.flatnonzero(mask[:, col] & (mask.sum(axis=1) >= 2))
            if takers.size == 0:
                continue
            mask[row, col] = True
            mask[int(takers[0]), col] = False
            break
        else:
            raise ConfigurationError(
                "missingness plan cannot be satisfied without an all-missing row"
            )


# ---------------------------------------------------------------------------
# bundled data

_IRIS_SHA256 = "b6c20d5df62093927944b882a1ddfdb9f68245023bb523b1605d2bfc5584889d"


def load_iris() -> Dataset:
    """The bundled 150 x 4 labeled measurement dataset (three classes)."""
    try:
        resource = importlib.resources.files("kmahal").joinpath("resources/iris.csv")
        raw = resource.read_bytes()
    except (FileNotFoundError, ModuleNotFoundError) as exc:
        raise LoadError(f"bundled dataset is missing: {exc}") from exc
    digest = hashlib.sha256(raw).hexdigest()
    if digest != _IRIS_SHA256:
        raise LoadError(
            f"bundled dataset is corrupt: sha256 {digest} != expected {_IRIS_SHA256}"
        )
    return dataset_from_csv(raw.decode("ascii"))

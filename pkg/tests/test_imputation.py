import numpy as np
import pytest

from kmahal import (
    ConfigurationError,
    Dataset,
    ImputationConfig,
    ImputationError,
    impute,
    knn_impute,
    mean_impute,
)

from conftest import random_incomplete
from oracles import knn_fill_by_hand


def test_mean_impute_uses_observed_means():
    ds = Dataset(
        values=[[1.0, 10.0], [3.0, 0.0], [0.0, 30.0]],
        mask=[[True, True], [True, False], [False, True]],
    )
    out = mean_impute(ds)
    assert out.complete
    assert out.values[1, 1] == 20.0  # mean of 10 and 30
    assert out.values[2, 0] == 2.0  # mean of 1 and 3
    # observed cells untouched
    assert out.values[0, 0] == 1.0 and out.values[0, 1] == 10.0


def test_complete_dataset_passes_through():
    ds = Dataset(values=np.arange(6.0).reshape(2, 3))
    assert mean_impute(ds) is ds
    assert knn_impute(ds) is ds


def test_all_missing_column_is_an_error():
    ds = Dataset(values=np.ones((2, 2)), mask=[[True, False], [True, False]])
    with pytest.raises(ImputationError, match="c2"):
        mean_impute(ds)
    with pytest.raises(ImputationError, match="c2"):
        knn_impute(ds)


def test_knn_hand_case():
    """Integer-valued case where every distance is exact.

    Row 3 misses c2. Partial distances from row 3 (observed c1=0):
    to row 0: (0-0)^2 * 2/1 = 0, to row 1: (0-4)^2 * 2/1 = 32,
    to row 2: (0-1)^2 * 2/1 = 2. With k=2 the neighbors are rows 0 and 2
    (both observe c2), so the fill is (10 + 14) / 2.
    """
    ds = Dataset(
        values=[[0.0, 10.0], [4.0, 6.0], [1.0, 14.0], [0.0, 0.0]],
        mask=[[True, True], [True, True], [True, True], [True, False]],
    )
    out = knn_impute(ds, ImputationConfig(method="knn", k_neighbors=2))
    assert out.values[3, 1] == 12.0


def test_knn_ties_break_toward_lower_row():
    # rows 0 and 2 are equidistant from row 3; k=1 must pick row 0
    ds = Dataset(
        values=[[1.0, 5.0], [9.0, 6.0], [3.0, 7.0], [2.0, 0.0]],
        mask=[[True, True], [True, True], [True, True], [True, False]],
    )
    out = knn_impute(ds, ImputationConfig(method="knn", k_neighbors=1))
    assert out.values[3, 1] == 5.0


def test_knn_candidates_must_observe_the_column():
    # row 1 is nearest to row 2 but does not observe c2, so row 0 fills it
    ds = Dataset(
        values=[[8.0, 3.0], [1.0, 0.0], [0.0, 0.0]],
        mask=[[True, True], [True, False], [True, False]],
    )
    out = knn_impute(ds, ImputationConfig(method="knn", k_neighbors=1))
    assert out.values[2, 1] == 3.0
    assert out.values[1, 1] == 3.0


def test_knn_falls_back_to_column_mean():
    # rows 0/1 observe only c1, row 2 observes only c2: no shared coordinate
    ds = Dataset(
        values=[[1.0, 0.0], [5.0, 0.0], [0.0, 7.0]],
        mask=[[True, False], [True, False], [False, True]],
    )
    out, fallbacks = knn_impute(
        ds, ImputationConfig(method="knn", k_neighbors=1), return_fallback_count=True
    )
    assert fallbacks == 3
    assert out.values[0, 1] == 7.0 and out.values[1, 1] == 7.0
    assert out.values[2, 0] == 3.0


def test_knn_matches_brute_force_oracle():
    rng = np.random.default_rng(17)
    for trial in range(40):
        values, mask = random_incomplete(rng, n=int(rng.integers(4, 13)), p=3)
        ds = Dataset(values=values, mask=mask)
        k = int(rng.integers(1, 5))
        out = knn_impute(ds, ImputationConfig(method="knn", k_neighbors=k))
        expected = knn_fill_by_hand(np.where(mask, values, np.nan), mask, k)
        np.testing.assert_allclose(out.values, np.where(mask, values, expected), rtol=1e-12, atol=1e-12)


def test_imputed_output_is_complete_and_faithful():
    rng = np.random.default_rng(18)
    for _ in range(20):
        values, mask = random_incomplete(rng, n=10, p=4, missing_frac=0.3)
        ds = Dataset(values=values, mask=mask)
        for method in (mean_impute, knn_impute):
            out = method(ds)
            assert out.complete
            assert np.array_equal(out.values[mask], ds.values[mask])


def test_impute_dispatch_and_config_validation():
    ds = Dataset(values=[[1.0, 2.0], [3.0, 0.0]], mask=[[True, True], [True, False]])
    by_mean = impute(ds, ImputationConfig(method="mean"))
    assert by_mean.values[1, 1] == 2.0
    by_knn = impute(ds, ImputationConfig(method="knn", k_neighbors=1))
    assert by_knn.values[1, 1] == 2.0
    with pytest.raises(ConfigurationError):
        ImputationConfig(method="hot-deck")
    with pytest.raises(ConfigurationError):
        ImputationConfig(method="knn", k_neighbors=0)

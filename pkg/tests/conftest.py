import numpy as np
import pytest

from kmahal import load_iris


@pytest.fixture(scope="session")
def iris():
    return load_iris()


def random_incomplete(rng, n, p, missing_frac=0.2):
    """Random dataset with MCAR holes, guaranteed valid.

    Every row keeps at least one observed cell and every column keeps at
    least two, so both imputation methods are applicable.
    """
    values = rng.standard_normal((n, p))
    mask = rng.random((n, p)) >= missing_frac
    for i in range(n):
        if not mask[i].any():
            mask[i, rng.integers(p)] = True
    for j in range(p):
        observed = np.flatnonzero(mask[:, j])
        if observed.size < 2:
            need = 2 - observed.size
            hidden = np.flatnonzero(~mask[:, j])
            mask[hidden[:need], j] = True
    return values, mask

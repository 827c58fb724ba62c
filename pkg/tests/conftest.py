from __future__ import annotations

import numpy as np
import pytest

from bitquant import SyntheticSpec, generate

_DISTS = (
    ("normal", ()),
    ("laplace", (1.0,)),
    ("uniform", (-2.0, 3.0)),
    ("lognormal", (0.0, 0.75)),
)


def make_vectors(count: int, max_n: int, base_seed: int = 0, min_n: int = 4):
    """Deterministic battery of float vectors across the built-in
    distributions, sized by a cheap arithmetic schedule."""
    out = []
    for i in range(count):
        dist, params = _DISTS[i % len(_DISTS)]
        n = min_n + (i * 37) % (max_n - min_n + 1)
        spec = SyntheticSpec(dist, n, base_seed + i, params)
        out.append(generate(spec))
    return out


@pytest.fixture(scope="session")
def vector_battery():
    return make_vectors(48, 240, base_seed=100)


@pytest.fixture(scope="session")
def normal_matrix():
    data = generate(SyntheticSpec("normal", 20 * 15, 7))
    return data.reshape(20, 15)


def assert_close(actual, expected, rel=1e-12, abs_tol=0.0):
    actual = np.asarray(actual, dtype=np.float64)
    expected = np.asarray(expected, dtype=np.float64)
    np.testing.assert_allclose(actual, expected, rtol=rel, atol=abs_tol)

import numpy as np
import pytest

from planar_antenna import kernels
from planar_antenna.photophysics import ThreeLevelRates, estimate_g2, simulate_trajectory

compiled = pytest.mark.skipif("compiled" not in kernels.BACKENDS, reason="extension not built")


def test_default_backend_and_override(monkeypatch):
    assert kernels.load() is kernels.BACKENDS[kernels.default_name()]
    monkeypatch.setenv("PLANAR_ANTENNA_PURE_PYTHON", "1")
    assert kernels.load() is kernels.BACKENDS["python"]
    with pytest.raises(ValueError):
        kernels.load("fortran")


def _brute_histogram(t, b, half):
    d = (t[None, :] - t[:, None]).ravel()
    d = d[d != 0]
    k = np.floor(d / b + 0.5).astype(np.int64)
    k = k[np.abs(k) <= half]
    return np.bincount(k + half, minlength=2 * half + 1)


@pytest.mark.parametrize("backend", sorted(kernels.BACKENDS))
def test_pair_histogram_against_all_pairs(backend):
    rng = np.random.default_rng(1)
    t = np.sort(rng.uniform(0, 1e-5, 1500))
    got = kernels.load(backend).pair_histogram(t, 1e-8, 40)
    np.testing.assert_array_equal(got, _brute_histogram(t, 1e-8, 40))


@compiled
@pytest.mark.parametrize("rates,p", [
    (ThreeLevelRates(6.3e7, 1.26e8), 1.0),
    (ThreeLevelRates(6.3e7, 1.26e8), 0.37),
    (ThreeLevelRates(1e8, 1.26e8, 2e5, 1e5), 0.5),
])
def test_simulation_backends_are_bitwise_identical(rates, p):
    # long enough to cross several random-number block refills
    a = simulate_trajectory(rates, p, 3e-3, seed=8, backend="compiled")
    b = simulate_trajectory(rates, p, 3e-3, seed=8, backend="python")
    assert a.timestamps.size > 1000
    np.testing.assert_array_equal(a.timestamps, b.timestamps)
    np.testing.assert_array_equal(a.occupancy, b.occupancy)


@compiled
def test_g2_backends_agree():
    stamps = simulate_trajectory(ThreeLevelRates(6.3e7, 1.26e8), 1.0, 2e-3, seed=4).timestamps
    a = estimate_g2(stamps, 0.5e-9, 40e-9, backend="compiled")
    b = estimate_g2(stamps, 0.5e-9, 40e-9, backend="python")
    np.testing.assert_array_equal(a.counts, b.counts)

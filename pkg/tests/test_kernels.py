import math

import numpy as np
import pytest
import scipy.special as sc

from vortex_spectra import kernels
from vortex_spectra.kernels import build_family, kernel_K, kernel_K_deriv

PHI_SCALE = math.sqrt(2 * math.pi) / 2      # phi / |W| = PHI_SCALE J1(xi r) for the uniform profile


def uniform_phi(r, xi):
    return PHI_SCALE * sc.j1(xi * r)


@pytest.fixture(scope="module")
def ufam(uniform):
    return build_family(uniform, 0.5, [1.0, 2.0], omega=1.0)


@pytest.fixture(scope="module")
def cfam(coriolis):
    return build_family(coriolis, 0.6, [1.0, 2.0], omega=1.0)


def test_chi_cutoff():
    x = np.array([0.0, 0.5, 1.0, 1.5, 2.0, 3.0])
    np.testing.assert_array_equal(kernels.chi(x)[[0, 1, 2, 4, 5]], [1, 1, 1, 0, 0])
    assert 0 < kernels.chi(1.5) < 1
    assert np.all(np.diff(kernels.chi(np.linspace(1, 2, 50))) <= 0)


def test_family_is_bessel(ufam):
    ref = uniform_phi(ufam.radii[None, :], ufam.xi[:, None])
    np.testing.assert_allclose(ufam.phi, ref, atol=1e-7)


def test_zero_height_vanishes(ufam, cfam):
    assert kernel_K(ufam, 1.0, 2.0, 0.0).value == 0
    assert kernel_K(cfam, 1.0, 2.0, 0.0).value == 0


def test_symmetric_in_r_s(cfam):
    a = kernel_K(cfam, 1.0, 2.0, 0.5).value
    b = kernel_K(cfam, 2.0, 1.0, 0.5).value
    assert abs(a - b) < 1e-14 * abs(a)


def test_odd_in_z_and_imaginary(cfam):
    a = kernel_K(cfam, 1.0, 2.0, 0.5).value
    b = kernel_K(cfam, 1.0, 2.0, -0.5).value
    assert abs(a + b) < 1e-14 * abs(a)
    assert abs(a.real) < 1e-15 * abs(a)


def test_truncated_matches_bruteforce(ufam):
    kv = kernel_K(ufam, 1.0, 2.0, 0.5)
    ref = kernels.kernel_bruteforce(uniform_phi, 1.0, 2.0, 0.5, 0.5, ufam.xi_max, n=400000)
    assert abs(kv.truncated - ref) < 1e-8


def test_tail_matches_long_bruteforce(ufam):
    kv = kernel_K(ufam, 1.0, 2.0, 0.5)
    ref = kernels.kernel_bruteforce(uniform_phi, 1.0, 2.0, 0.5, 0.5, 1000.0, n=2000000)
    assert abs(kv.value - ref) < 1e-4
    assert kv.tail_fit_residual < 1e-2


def test_band_partition(cfam):
    K = kernel_K(cfam, 1.0, 2.0, 0.5).value
    L = kernel_K_deriv(cfam, 0, 0, 0, "L", 1.0, 2.0, 0.5, M=2.0).value
    H = kernel_K_deriv(cfam, 0, 0, 0, "H", 1.0, 2.0, 0.5, M=2.0).value
    assert abs(L + H - K) < 1e-12 * abs(K)


def test_derivative_kernels_finite(cfam):
    for lp, l, m in [(1, 0, 0), (0, 1, 0), (1, 1, 1), (0, 0, 2)]:
        v = kernel_K_deriv(cfam, lp, l, m, "H", 1.0, 2.0, 0.5, M=2.0).value
        assert np.isfinite(v)


def test_invalid_requests(cfam):
    with pytest.raises(ValueError):
        kernel_K_deriv(cfam, 0, 0, 0, "X", 1.0, 2.0, 0.5)
    with pytest.raises(ValueError):
        kernel_K_deriv(cfam, 0, 0, 0, "H", 1.0, 2.0, 0.5, M=10.0)
    with pytest.raises(ValueError):
        kernel_K(cfam, 1.0, 3.0, 0.5)
    with pytest.raises(ValueError):
        kernel_K(cfam, 1.0, 2.0, 1e3)


def test_c_grid_nests():
    coarse, fine = kernels.c_grid(64), kernels.c_grid(129)
    np.testing.assert_allclose(fine[1::2], coarse, rtol=1e-15)
    assert 0 < fine[0] and fine[-1] < 1


def test_dc_integral_exact_for_monotone():
    c = kernels.c_grid(200)
    assert kernels.dc_integral(c, c ** 2) == pytest.approx(c[-1] ** 2 - c[0] ** 2, rel=1e-10)
    assert kernels.dc_integral(c, np.sin(2 * np.pi * c)) == pytest.approx(4.0, rel=1e-3)


@pytest.mark.slow
def test_small_scan(uniform, tmp_path):
    rep = kernels.dc_scan(uniform, [(1.0, 2.0, 0.25)], n_c=64, xi_max=20.0)
    assert rep.K.shape == (1, 129)
    assert np.all(np.isfinite(rep.integrals))
    assert rep.grid_change[0] < 0.1
    path = tmp_path / "k.csv"
    kernels.write_scan_csv(path, rep)
    assert path.read_text().splitlines()[0] == "r,s,z,c,K"
    with pytest.raises(ValueError):
        kernels.dc_scan(uniform, [(1.0, 2.0, 0.25)], n_c=16)

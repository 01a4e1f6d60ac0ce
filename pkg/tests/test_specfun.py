import numpy as np
import pytest
import scipy.special as sc
from scipy.integrate import quad

from vortex_spectra import specfun
from vortex_spectra.kernels import fourier_half_line

X = np.concatenate([np.linspace(1e-3, 5.0, 60), np.linspace(5.0, 60.0, 80), [150.0, 400.0]])


@pytest.mark.parametrize("kind,ref", [("J0", sc.j0), ("J1", sc.j1), ("Y0", sc.y0),
                                      ("Y1", sc.y1), ("I0", sc.i0), ("I1", sc.i1),
                                      ("K0", sc.k0), ("K1", sc.k1)])
def test_bessel_against_scipy(kind, ref):
    x = X[X < 600] if kind[0] != "I" else X[X < 300]
    got = specfun.bessel(kind, x)
    want = ref(x)
    np.testing.assert_allclose(got, want, rtol=1e-12, atol=1e-14 * np.max(np.abs(want)))


def test_scaled_modified_bessel():
    x = np.linspace(0.01, 200.0, 300)
    np.testing.assert_allclose(specfun.i1e(x), sc.i1e(x), rtol=1e-12)
    np.testing.assert_allclose(specfun.k1e(x), sc.k1e(x), rtol=1e-12)


@pytest.mark.parametrize("kind,idx", [("Ai", 0), ("Aip", 1), ("Bi", 2), ("Bip", 3)])
def test_airy_against_scipy(kind, idx):
    x = np.linspace(-30.0, 30.0, 241)
    ref = sc.airy(x)[idx]
    got = specfun.airy(kind, x)
    scale = np.maximum(1.0, np.abs(ref))
    assert np.max(np.abs(got - ref) / scale) < 1e-11


def test_bessel_wronskians():
    x = np.linspace(0.05, 80.0, 400)
    wj = specfun.j1(x) * specfun.bessel_deriv("Y1", x) - specfun.bessel_deriv("J1", x) * specfun.y1(x)
    np.testing.assert_allclose(wj * np.pi * x / 2, 1.0, atol=1e-12)
    x = np.linspace(0.05, 30.0, 200)
    wi = specfun.i1(x) * specfun.bessel_deriv("K1", x) - specfun.bessel_deriv("I1", x) * specfun.k1(x)
    np.testing.assert_allclose(wi * x, -1.0, atol=1e-12)


def test_airy_wronskian():
    x = np.linspace(-30.0, 8.0, 300)
    w = specfun.airy("Ai", x) * specfun.airy("Bip", x) - specfun.airy("Aip", x) * specfun.airy("Bi", x)
    np.testing.assert_allclose(w * np.pi, 1.0, atol=1e-12)


def test_hankel_and_oscillatory_airy():
    z = np.linspace(0.1, 40.0, 50)
    np.testing.assert_allclose(specfun.hankel_plus(z), sc.hankel1(1, z), rtol=1e-12)
    ai, _, bi, _ = sc.airy(-z[z < 30])
    np.testing.assert_allclose(specfun.oscillatory_airy(z[z < 30]), ai - 1j * bi, rtol=1e-11)


def test_domain_errors():
    with pytest.raises(ValueError):
        specfun.bessel("Y1", 0.0)
    with pytest.raises(ValueError):
        specfun.bessel("J7", 1.0)
    with pytest.raises(ValueError):
        specfun.airy("Ai", 31.0)
    with pytest.raises(ValueError):
        specfun.j1_fourier_pair(1.0)


@pytest.mark.parametrize("y", [0.0, 0.3, -0.3, 0.6, -0.6, 0.9, -0.9, 2.0, -2.0])
def test_j1_fourier_pair_against_oscillatory_quadrature(y):
    s, c = specfun.j1_fourier_pair(y)
    full_odd = fourier_half_line(specfun.j1, y) - fourier_half_line(specfun.j1, -y)
    even = lambda e: specfun.j1(e) / e
    full_even = fourier_half_line(even, y) + fourier_half_line(even, -y)
    assert abs(full_odd - 2j * s) < 1e-6
    assert abs(full_even - 2 * c) < 1e-6


def test_j1_fourier_pair_against_qawf():
    for y in (0.3, 0.6, 1.5):
        s, c = specfun.j1_fourier_pair(y)
        qs = quad(sc.j1, 0.0, np.inf, weight="sin", wvar=y, limlst=500)[0]
        assert abs(s - qs) < 1e-6

import math

import numpy as np
import pytest
import scipy.special as sc

from vortex_spectra import spectral
from vortex_spectra.spectral import RadialFunction, uniform_grid


def exact_pair(r, k):
    """u = r exp(-r^2) and Delta_{1,k} u."""
    e = np.exp(-r ** 2)
    return r * e, (4 * r ** 3 - 8 * r - k * k * r) * e


@pytest.mark.parametrize("k", [0.5, 1.0, 3.0])
def test_delta_inverse_is_fourth_order(k):
    errs = []
    for n in (200, 400):
        r = uniform_grid(8.0, n)
        u, lap = exact_pair(r, k)
        got = spectral.delta1k_inverse(RadialFunction(r, lap), k).values
        errs.append(np.max(np.abs(got - u)))
    assert errs[1] < 2e-6
    assert errs[0] / errs[1] > 12.0


def test_green_matrix_matches_fast_apply():
    r = uniform_grid(6.0, 120)
    w = r ** 2 * np.exp(-r ** 2)
    S = spectral.green_matrix(r, 1.3)
    dense = S @ (spectral.trapezoid_weights(r) * r * w)
    fast = spectral.delta1k_inverse(RadialFunction(r, w), 1.3).values
    np.testing.assert_allclose(fast, dense, rtol=1e-12, atol=1e-14)
    assert np.all(np.linalg.eigvalsh(-0.5 * (S + S.T)) > 0)


def test_green_function_against_scipy():
    r = uniform_grid(5.0, 50)
    S = spectral.green_matrix(r, 2.0, kink_correction=False)
    i, j = 10, 30
    assert S[i, j] == pytest.approx(-sc.i1(2 * r[i]) * sc.k1(2 * r[j]), rel=1e-12)


def test_spectrum_containment_random(coriolis):
    rng = np.random.default_rng(7)
    k = 1.0
    r = uniform_grid(20.0, 400)
    for _ in range(20):
        centre = rng.uniform(1.0, 8.0)
        width = rng.uniform(0.3, 2.0)
        coef = rng.normal(size=3)
        v = RadialFunction(r, r * np.exp(-((r - centre) / width) ** 2)
                           * (coef[0] + coef[1] * r + coef[2] * np.sin(r)))
        Av = spectral.apply_A(v, coriolis, k)
        nv = spectral.inner_H(v, v, coriolis).real
        a = spectral.inner_H(Av, v, coriolis).real
        assert a >= -1e-10 * nv
        assert nv - k * k * a >= -1e-10 * nv


def test_c_quadrature_integrates_density():
    q = spectral.make_c_quadrature(1.0, c_min=1e-4, omega=10.0)
    # int_{c_min}^{1 - c_min} dc
    assert np.sum(q.weights) == pytest.approx(1 - 2e-4, rel=1e-12)
    assert np.all(np.diff(q.edges) > 0)
    fine = q.refine()
    assert fine.size == 2 * q.size
    assert np.sum(fine.weights * fine.c ** 2) == pytest.approx(np.sum(q.weights * q.c ** 2), rel=1e-12)


@pytest.fixture(scope="module")
def uniform_table(uniform):
    return spectral.build_basis_table(uniform, 1.0, uniform_grid(15.0, 500), c_min=1e-4)


def test_uniform_table_is_bessel(uniform_table):
    t = uniform_table
    ref = 2 * sc.j1(np.outer(t.quad.xi, t.grid)) / (4 / math.sqrt(2 * math.pi))
    np.testing.assert_allclose(t.phi_tilde, ref, atol=1e-6)


def test_plancherel_and_resolution_uniform(uniform_table):
    r = uniform_table.grid
    v = RadialFunction(r, r * np.exp(-r ** 2))
    assert spectral.plancherel_residual(v, uniform_table) < 1e-3
    assert spectral.resolution_residual(v, uniform_table) < 1e-3


def test_function_of_A_matches_iterated_green(uniform, uniform_table):
    r = uniform_table.grid
    v = RadialFunction(r, r ** 2 * np.exp(-(r - 2) ** 2))
    A3 = spectral.apply_A(spectral.apply_A(spectral.apply_A(v, uniform, 1.0), uniform, 1.0),
                          uniform, 1.0)
    res = spectral.apply_function_of_A(lambda lam: lam ** 3, v, uniform_table)
    assert not res.flagged
    err = np.linalg.norm(res.value.values - A3.values) / np.linalg.norm(A3.values)
    assert err < 1e-3


def test_support_check(uniform_table):
    r = uniform_table.grid
    with pytest.raises(ValueError):
        spectral.forward_transform(uniform_table, RadialFunction(r, np.exp(-0.01 * r)))


def test_spectral_csv(tmp_path, uniform_table):
    r = uniform_table.grid
    a = spectral.forward_transform(uniform_table, RadialFunction(r, r * np.exp(-r ** 2)))
    path = tmp_path / "s.csv"
    spectral.write_spectral_csv(path, a, uniform_table.log_absW)
    lines = path.read_text().splitlines()
    assert lines[0] == "c,a_re,a_im,absW,density"
    assert len(lines) == uniform_table.quad.size + 1

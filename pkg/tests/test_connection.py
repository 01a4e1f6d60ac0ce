import math

import numpy as np
import pytest
import scipy.special as sc

from vortex_spectra import connection
from vortex_spectra.connection import SolverOptions, compute_basis, solve_column
from vortex_spectra.langer import langer_point
from vortex_spectra.profiles import make_profile, turning_point

R = np.linspace(0.1, 20.0, 400)
ABS_W_UNIFORM = 4.0 / math.sqrt(2.0 * math.pi)


@pytest.mark.parametrize("c,k", [(0.3, 1.0), (0.5, 1.0), (0.7, 2.0)])
def test_uniform_basis_is_bessel(uniform, c, k):
    sl = compute_basis(uniform, c, k, R)
    x = sl.xi * R
    j = sc.j1(x)
    ok = np.abs(j) > 1e-3
    assert np.max(np.abs(sl.phi[ok] / (2 * j[ok]) - 1)) < 1e-6
    ref = math.sqrt(math.pi / 2) * np.exp(0.75j * math.pi) * sc.hankel1(1, x)
    assert np.max(np.abs(sl.fplus / ref - 1)) < 1e-6
    assert abs(sl.absW - ABS_W_UNIFORM) < 1e-6
    assert sl.w_residual < 1e-8
    assert sl.w_radii.size >= 10


@pytest.mark.parametrize("c,k", [(0.3, 1.0), (0.6, 1.0), (0.9, 2.0), (0.5, 0.2)])
def test_outgoing_flux(coriolis, c, k):
    sl = compute_basis(coriolis, c, k, np.linspace(0.5, 15.0, 5))
    np.testing.assert_allclose(sl.flux(), 1.0, atol=1e-6)


def test_coriolis_wronskian_constant(coriolis):
    sl = compute_basis(coriolis, 0.6, 3.0)
    assert sl.w_residual < 1e-6
    assert sl.regime is not None


def test_phi_solves_the_ode(coriolis):
    c, k = 0.6, 1.5
    r = np.linspace(1.0, 6.0, 2001)
    sl = compute_basis(coriolis, c, k, r)
    xi = sl.xi
    phi = sl.phi
    h = r[1] - r[0]
    d2 = (phi[2:] - 2 * phi[1:-1] + phi[:-2]) / h ** 2
    rr = r[1:-1]
    Q = (coriolis.V(rr) - c) / (1 - c)
    resid = d2 + sl.dphi[1:-1] / rr - phi[1:-1] / rr ** 2 + xi ** 2 * Q * phi[1:-1]
    assert np.max(np.abs(resid)) < 1e-4 * np.max(np.abs(phi))


def test_solve_column_matches_compute_basis(coriolis):
    grid = np.linspace(0.05, 20.0, 400)
    col = solve_column(coriolis, 0.6, 1.0, grid)
    sl = compute_basis(coriolis, 0.6, 1.0, grid)
    np.testing.assert_allclose(col.phi_tilde, sl.phi / sl.absW, rtol=1e-8, atol=1e-10)


def test_barrier_growth_does_not_overflow(coriolis):
    sl = compute_basis(coriolis, 0.95, 200.0, np.linspace(0.1, 10.0, 50))
    assert math.isfinite(sl.log_absW)
    assert sl.log_absW > 50.0


def test_invalid_inputs(coriolis):
    with pytest.raises(ValueError):
        compute_basis(coriolis, 1.0, 1.0)
    with pytest.raises(ValueError):
        compute_basis(coriolis, 0.5, 0.0)


def test_volterra_uniform_is_bessel(uniform):
    v = connection.volterra_phi(uniform, 0.5, 1.0, 1.0, 4)
    np.testing.assert_allclose(1 + v.remainder, 2 * sc.j1(v.r) / v.r, atol=1e-6)


@pytest.mark.parametrize("c,xi", [(0.6, 2.0), (0.9, 3.0)])
def test_volterra_phi_bound_and_positivity(coriolis, c, xi):
    qmax = max(abs(coriolis.V0 - c), 1 - c) / (1 - c)
    r_stop = min(turning_point(coriolis, c), math.sqrt(8 / (xi ** 2 * qmax)))
    v = connection.volterra_phi(coriolis, c, xi, r_stop, 6)
    const = np.max(np.abs(v.remainder) * (1 - c) / (xi ** 2 * v.r ** 2))
    assert const <= 10.0
    assert v.positive


def test_volterra_phi_matches_solver(coriolis):
    c, xi = 0.3, 1.0
    k = xi / math.sqrt(1 / c - 1)
    v = connection.volterra_phi(coriolis, c, xi, 2.0, 12)
    sl = compute_basis(coriolis, c, k, v.r)
    np.testing.assert_allclose(v.solution, sl.phi, rtol=1e-8)


@pytest.mark.parametrize("c,xi", [(0.3, 0.5), (0.9, 0.2)])
def test_volterra_fplus_bound(coriolis, c, xi):
    v = connection.volterra_fplus(coriolis, c, xi, 1 / xi, 6, r_end=10 / xi)
    const = np.max(np.abs(v.remainder) * (1 - c) * v.r ** 2 / xi)
    assert const <= 10.0


def test_volterra_window_enforced(coriolis):
    with pytest.raises(ValueError):
        connection.volterra_phi(coriolis, 0.5, 10.0, 5.0, 4)
    with pytest.raises(ValueError):
        connection.volterra_fplus(coriolis, 0.5, 2.0, 1.0, 4)


def test_volterra_zeroth_iterate(coriolis):
    v = connection.volterra_phi(coriolis, 0.8, 2.0, 0.3, 0)
    np.testing.assert_array_equal(v.remainder, 0.0)
    np.testing.assert_allclose(v.solution, 2.0 * v.r)


def test_volterra_positivity_above_v0(coriolis):
    rc = turning_point(coriolis, 0.8)
    assert connection.volterra_phi(coriolis, 0.8, 0.5, rc, 6).positive


def test_volterra_fplus_matches_solver(coriolis):
    c, xi = 0.3, 0.2
    v = connection.volterra_fplus(coriolis, c, xi, 10.0, 6, r_end=100.0)
    assert np.max(np.abs(v.remainder) * (1 - c) * v.r ** 2 / xi) <= 10.0
    sl = compute_basis(coriolis, c, xi / math.sqrt(1 / c - 1), v.r[::50])
    ratio = sl.fplus / v.solution[::50]
    # the outgoing solutions differ by the constant normalization only
    assert np.max(np.abs(ratio / ratio[0] - 1)) < 1e-4
    assert abs(ratio[0] - math.sqrt(math.pi / 2) * np.exp(0.75j * math.pi)) < 1e-6


def test_uniform_normalized_sup():
    sl = compute_basis(make_profile("uniform"), 0.5, 1.0, np.linspace(0.01, 10.0, 5000))
    assert np.max(np.abs(connection.normalized_phi(sl))) == pytest.approx(2 * 0.581865 / 1.595769, rel=1e-5)


@pytest.mark.parametrize("c,xi", [(0.95, 30.0), (0.8, 50.0)])
def test_evanescent_decay_rate(coriolis, c, xi):
    rc = turning_point(coriolis, c)
    k = xi / math.sqrt(1 / c - 1)
    r = np.array([0.3 * rc, 0.6 * rc])
    sl = compute_basis(coriolis, c, k, r)
    x = [langer_point(coriolis, ri, c, xi).x for ri in r]
    log_ratio = math.log(abs(sl.phi[0] / sl.phi[1]))
    assert abs(log_ratio + (2 / 3) * (abs(x[0]) - abs(x[1]))) < math.log(10.0)

from dataclasses import replace

import numpy as np
import pytest

from vortex_spectra import oracle, propagator, spectral
from vortex_spectra.spectral import RadialFunction, uniform_grid

K = 1.0


@pytest.fixture(scope="module")
def setup(coriolis):
    grid = uniform_grid(15.0, 500)
    table = spectral.build_basis_table(coriolis, K, grid, omega=15.0 + 0.385 * 5 + 5)
    om = RadialFunction(grid, grid * np.exp(-grid ** 2))
    ut = RadialFunction(grid, 0.5 * grid ** 2 * np.exp(-grid ** 2))
    s0 = propagator.initial_mode(om, ut, coriolis, K)
    return table, s0


def rel(a, b, grid):
    return oracle.l2_rdr(a - b, grid) / oracle.l2_rdr(b, grid)


def test_time_zero_is_identity(setup):
    table, s0 = setup
    s = propagator.evolve_mode(s0, 0.0, table)
    for n in ("ur", "utheta", "uz"):
        np.testing.assert_array_equal(getattr(s, n), getattr(s0, n))


def test_against_oracle(setup, coriolis):
    table, s0 = setup
    times = [1.0, 3.0, 5.0]
    ev = propagator.SpectralEvolver(s0, table)
    fd = oracle.run_fd(s0.h_hat, s0.g_hat, table.grid, coriolis, K, times, dt=0.02)
    for t, st in zip(times, fd.states):
        sp = ev.state(t)
        ref = propagator.recover_velocity(propagator.ModeState(K, t, table.grid, st.h, st.g), coriolis)
        for n in ("ur", "utheta", "uz"):
            assert rel(getattr(sp, n), getattr(ref, n), table.grid) < 2e-2
        assert sp.clip_sensitivity < 1e-2


def test_semigroup_through_coefficients(setup):
    table, s0 = setup
    direct = propagator.evolve_mode(s0, 5.0, table)
    two = propagator.evolve_mode(propagator.evolve_mode(s0, 2.0, table), 3.0, table)
    for n in ("h_hat", "g_hat"):
        assert rel(getattr(two, n), getattr(direct, n), table.grid) < 1e-10


def test_spectral_energy_conserved(setup):
    table, s0 = setup
    ev = propagator.SpectralEvolver(s0, table)
    e = [ev.spectral_energy(t) for t in (0.0, 3.0, 50.0)]
    np.testing.assert_allclose(e, e[0], rtol=1e-12)


def test_spectral_energy_matches_discrete_energy(setup, coriolis):
    table, s0 = setup
    ev = propagator.SpectralEvolver(s0, table)
    form = oracle.EnergyForm(table.grid, coriolis, K)
    assert ev.spectral_energy(0.0) == pytest.approx(form(s0.h_hat, s0.g_hat), rel=1e-2)


def test_retransform_check(setup):
    table, s0 = setup
    out = propagator.retransform_check(s0, 2.0, 3.0, table, refine=False)
    assert out["passed"]
    assert not out["refined"]


def test_divergence_free(setup):
    table, s0 = setup
    s = propagator.evolve_mode(s0, 2.0, table)
    assert np.max(np.abs(propagator.divergence(s))) < 1e-10 * np.max(np.abs(s.uz))


def test_synthesis_is_real_and_periodic(setup):
    table, s0 = setup
    s = propagator.evolve_mode(s0, 1.0, table)
    z = np.linspace(0, 2 * np.pi, 16, endpoint=False)
    f = propagator.synthesize_z([s, propagator.mirror(s)], z)
    assert f["ur"].shape == (table.grid.size, 16)
    np.testing.assert_allclose(f["ur"][:, 0], 2 * s.ur.real, atol=1e-14)
    with pytest.raises(ValueError):
        propagator.synthesize_z([s], z)


def test_decay_fit_recovers_power():
    t = np.geomspace(20, 200, 16)
    fit = propagator.decay_fit(t, 3.0 * t ** -1.1)
    assert fit.p == pytest.approx(1.1, abs=1e-12)
    assert fit.C == pytest.approx(3.0, rel=1e-10)
    with pytest.raises(ValueError):
        propagator.decay_fit(t[:5], t[:5])


def test_wrong_table_rejected(setup):
    table, s0 = setup
    with pytest.raises(ValueError):
        propagator.SpectralEvolver(replace(s0, k=2.0), table)
    with pytest.raises(ValueError):
        propagator.evolve_mode(s0, -1.0, table)

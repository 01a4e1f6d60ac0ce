"""
Acceptance suite.  Each test prints one ``criterion N [PASS|FAIL]`` line,
collected again in the terminal summary, then asserts the same condition.
"""
import json
import math

import numpy as np
import pytest
import scipy.special as sc

from vortex_spectra import cli, connection, spectral, specfun
from vortex_spectra.connection import compute_basis
from vortex_spectra.kernels import fourier_half_line
from vortex_spectra.profiles import turning_point
from vortex_spectra.spectral import RadialFunction, uniform_grid

ABS_W_UNIFORM = 4.0 / math.sqrt(2.0 * math.pi)


def run_cli(out, *args):
    code = cli.main(list(args) + ["--out-dir", str(out)])
    assert code == 0, f"{args[0]} exited with {code}"
    return out


def load(path):
    return json.loads(path.read_text())


def test_01_homogeneous_basis(uniform, acceptance):
    r = np.linspace(0.1, 20.0, 2000)
    worst_phi = worst_f = 0.0
    for c, k in [(0.3, 1.0), (0.5, 1.0), (0.7, 2.0)]:
        sl = compute_basis(uniform, c, k, r)
        x = sl.xi * r
        j = sc.j1(x)
        # the ratio is 0/0 at the zeros of J1; compare there in absolute terms
        ok = np.abs(j) > 1e-3
        worst_phi = max(worst_phi, np.max(np.abs(sl.phi[ok] / (2 * j[ok]) - 1)),
                        np.max(np.abs(sl.phi[~ok] - 2 * j[~ok]), initial=0.0) / 1e-3)
        ref = math.sqrt(math.pi / 2) * np.exp(0.75j * math.pi) * sc.hankel1(1, x)
        worst_f = max(worst_f, np.max(np.abs(sl.fplus / ref - 1)))
    ok = worst_phi <= 1e-6 and worst_f <= 1e-6
    acceptance(1, "homogeneous basis", ok, f"phi {worst_phi:.2e}, f+ {worst_f:.2e} (tol 1e-6)")
    assert ok


def test_02_homogeneous_wronskian(uniform, acceptance):
    errs, resid, radii = [], [], []
    for c, k in [(0.3, 1.0), (0.5, 1.0), (0.7, 2.0), (0.9, 0.5)]:
        sl = compute_basis(uniform, c, k)
        errs.append(abs(sl.absW - ABS_W_UNIFORM))
        resid.append(sl.w_residual)
        radii.append(sl.w_radii.size)
    ok = max(errs) <= 1e-6 and max(resid) <= 1e-8 and min(radii) >= 10
    acceptance(2, "homogeneous Wronskian", ok,
               f"||W| - 4/sqrt(2pi)| {max(errs):.2e}, w_residual {max(resid):.2e} "
               f"over >= {min(radii)} radii")
    assert ok


def test_03_outgoing_flux(uniform, coriolis, acceptance):
    worst, count = 0.0, 0
    for p in (uniform, coriolis):
        for c in (0.1, 0.3, 0.5, 0.7, 0.9):
            for k in (0.2, 1.0, 3.0):
                sl = compute_basis(p, c, k, np.linspace(0.5, 15.0, 5))
                worst = max(worst, float(np.max(np.abs(sl.flux() - 1.0))))
                count += 1
    ok = worst <= 1e-6
    acceptance(3, "outgoing flux", ok, f"max |flux - 1| {worst:.2e} over {count} slices")
    assert ok


@pytest.mark.slow
def test_04_wronskian_regime_law(tmp_path, acceptance):
    out = run_cli(tmp_path, "wronskian-scan", "--profile", "coriolis_example",
                  "--c", "0.05:0.95:20", "--xi", "0.05:50:log20")
    rep = load(out / "wronskian_scan.json")
    rows = np.genfromtxt(out / "wronskian_scan.csv", delimiter=",", names=True, dtype=None,
                         encoding="utf-8")
    regions = sorted(set(rows["region"]))
    ok = rep["C"] <= 10.0 and rep["n_admissible"] > 0 and not rep["skipped"]
    acceptance(4, "Wronskian regime law", ok,
               f"ratio in [{rep['ratio_min']:.3f}, {rep['ratio_max']:.3f}], C = {rep['C']:.2f}, "
               f"{rep['n_admissible']}/{rep['n_points']} points, regions {','.join(regions)}")
    assert ok
    assert len(regions) == 7


def test_05_spectrum_containment(uniform, coriolis, acceptance):
    rng = np.random.default_rng(2024)
    k = 1.0
    r = uniform_grid(20.0, 400)
    worst = np.inf
    for p in (uniform, coriolis):
        for _ in range(50):
            centre = rng.uniform(1.0, 10.0)
            width = rng.uniform(0.3, 3.0)
            coef = rng.normal(size=4)
            v = RadialFunction(r, r * np.exp(-((r - centre) / width) ** 2)
                               * (coef[0] + coef[1] * r + coef[2] * np.sin(r)
                                  + coef[3] * np.cos(3 * r)))
            Av = spectral.apply_A(v, p, k)
            nv = spectral.inner_H(v, v, p).real
            a = spectral.inner_H(Av, v, p).real
            worst = min(worst, a / nv, (nv - k * k * a) / nv)
    ok = worst >= -1e-10
    acceptance(5, "spectrum containment", ok,
               f"min normalized form {worst:.2e} over 100 random v (tol -1e-10)")
    assert ok


@pytest.fixture(scope="module")
def tables(uniform, coriolis):
    grid = uniform_grid(20.0, 1000)
    return {name: spectral.build_basis_table(p, 1.0, grid, c_min=spectral.DEFAULT_CMIN)
            for name, p in (("uniform", uniform), ("coriolis", coriolis))}


TOL = {"uniform": 1e-3, "coriolis": 1e-2}


@pytest.mark.slow
def test_06_resolution_of_identity(tables, acceptance):
    res = {}
    for name, tab in tables.items():
        for fn_name, fn in sorted(cli.TEST_FUNCTIONS.items()):
            v = RadialFunction(tab.grid, fn(tab.grid))
            res[(name, fn_name)] = spectral.resolution_residual(v, tab)
    ok = all(val <= TOL[name] for (name, _), val in res.items())
    detail = ", ".join(f"{n}/{f} {v:.1e}" for (n, f), v in res.items())
    acceptance(6, "resolution of identity", ok, detail)
    assert ok


@pytest.mark.slow
def test_07_plancherel(tables, acceptance):
    res = {}
    for name, tab in tables.items():
        for fn_name, fn in sorted(cli.TEST_FUNCTIONS.items()):
            v = RadialFunction(tab.grid, fn(tab.grid))
            res[(name, fn_name)] = spectral.plancherel_residual(v, tab)
    ok = all(val <= TOL[name] for (name, _), val in res.items())
    detail = ", ".join(f"{n}/{f} {v:.1e}" for (n, f), v in res.items())
    acceptance(7, "Plancherel", ok, detail)
    assert ok


@pytest.mark.slow
def test_08_propagator_vs_oracle(tmp_path, acceptance):
    tol = {"uniform": 1e-2, "coriolis_example": 2e-2}
    reps = {}
    for name in tol:
        out = run_cli(tmp_path / name, "oracle-compare", "--profile", name, "--k", "1",
                      "--t", "0:20:5", "--r-max", "30", "--h", "0.03", "--drift-t", "100")
        reps[name] = load(out / "oracle_compare.json")
    ok = all(reps[n]["max_error"] <= tol[n] and reps[n]["long_energy_drift"] <= 1e-6
             for n in tol)
    detail = ", ".join(f"{n} err {reps[n]['max_error']:.1e} drift(t=100) "
                       f"{reps[n]['long_energy_drift']:.1e}" for n in tol)
    acceptance(8, "propagator vs oracle", ok, detail)
    assert ok


@pytest.mark.slow
def test_09_decay_surrogate(tmp_path, acceptance):
    fits = {}
    for name in ("uniform", "coriolis_example"):
        out = run_cli(tmp_path / name, "decay", "--profile", name, "--k", "1,2",
                      "--t", "20:200:16", "--synth-k", "1,2,3,4")
        rep = load(out / "decay.json")
        for k, entry in rep["modes"].items():
            fits[(name, f"k={k}")] = entry["p"]
        fits[(name, "synth")] = rep["synthesis"]["p"]
    ok = all(0.85 <= p <= 1.3 for p in fits.values())
    detail = ", ".join(f"{n} {m} p={p:.2f}" for (n, m), p in fits.items())
    acceptance(9, "decay surrogate", ok, detail + " (window [0.85, 1.3])")
    assert ok


def test_10_volterra(uniform, coriolis, acceptance):
    v = connection.volterra_phi(uniform, 0.5, 1.0, 1.0, 4)
    err_u = float(np.max(np.abs(1 + v.remainder - 2 * sc.j1(v.r) / v.r)))
    small, large, positive = [], [], True
    for c, xi in [(0.3, 1.0), (0.6, 2.0), (0.8, 0.5), (0.9, 3.0)]:
        qmax = max(abs(coriolis.V0 - c), 1 - c) / (1 - c)
        rc = turning_point(coriolis, c) if c > coriolis.V0 else np.inf
        r_stop = min(rc, math.sqrt(8 / (xi ** 2 * qmax)))
        vp = connection.volterra_phi(coriolis, c, xi, r_stop, 6)
        small.append(float(np.max(np.abs(vp.remainder) * (1 - c) / (xi ** 2 * vp.r ** 2))))
        if c > coriolis.V0:
            positive &= bool(vp.positive)
    for c, xi in [(0.3, 0.5), (0.6, 0.3), (0.9, 0.2)]:
        vf = connection.volterra_fplus(coriolis, c, xi, 1 / xi, 6, r_end=10 / xi)
        large.append(float(np.max(np.abs(vf.remainder) * (1 - c) * vf.r ** 2 / xi)))
    ok = err_u <= 1e-6 and max(small) <= 10 and max(large) <= 10 and positive
    acceptance(10, "Volterra cross-validation", ok,
               f"uniform {err_u:.1e}, small-r C {max(small):.2f}, large-r C {max(large):.2f}, "
               f"positivity {positive}")
    assert ok


def test_11_special_functions(acceptance):
    x = np.linspace(0.05, 80.0, 400)
    wj = specfun.j1(x) * specfun.bessel_deriv("Y1", x) - specfun.bessel_deriv("J1", x) * specfun.y1(x)
    xi_ = np.linspace(0.05, 30.0, 200)
    wi = (specfun.i1(xi_) * specfun.bessel_deriv("K1", xi_)
          - specfun.bessel_deriv("I1", xi_) * specfun.k1(xi_))
    xa = np.linspace(-30.0, 8.0, 300)
    wa = specfun.airy("Ai", xa) * specfun.airy("Bip", xa) - specfun.airy("Aip", xa) * specfun.airy("Bi", xa)
    w_err = max(np.max(np.abs(wj * np.pi * x / 2 - 1)), np.max(np.abs(wi * xi_ + 1)),
                np.max(np.abs(wa * np.pi - 1)))
    pair_err = 0.0
    for y in (0.0, 0.3, -0.3, 0.6, -0.6, 0.9, -0.9, 2.0, -2.0):
        exact = 2j * y / math.sqrt(1 - y * y) if abs(y) < 1 else 0.0
        full = fourier_half_line(specfun.j1, y) - fourier_half_line(specfun.j1, -y)
        pair_err = max(pair_err, abs(full - exact))
    ok = w_err <= 1e-12 and pair_err <= 1e-4
    acceptance(11, "special-function identities", ok,
               f"Wronskians {w_err:.1e} (tol 1e-12), J1 pair {pair_err:.1e} (tol 1e-4)")
    assert ok


@pytest.mark.slow
def test_12_kernel_scan(tmp_path, coriolis, acceptance):
    from vortex_spectra.kernels import build_family, kernel_K
    fam = build_family(coriolis, 0.5, [1.0, 2.0])
    zero = kernel_K(fam, 1.0, 2.0, 0.0).value
    out = run_cli(tmp_path, "kernel-scan", "--profile", "coriolis_example")
    rep = load(out / "kernel_scan.json")
    ok = zero == 0 and rep["passed"]
    acceptance(12, "kernel scans", ok,
               f"K(z=0) = {abs(zero)}, C_fit {rep['C_fit']:.2f}, "
               f"max grid change {rep['max_grid_change']:.3f}, {len(rep['triples'])} triples")
    assert ok


def test_13_determinism(tmp_path, acceptance):
    runs = [
        ("profile-check", "--profile", "coriolis_example"),
        ("basis", "--profile", "coriolis_example", "--n", "100"),
        ("wronskian-scan", "--profile", "coriolis_example", "--c", "0.2,0.8", "--xi", "0.1,10"),
        ("transform", "--profile", "uniform", "--r-max", "10", "--n", "200"),
        ("evolve", "--profile", "coriolis_example", "--t", "0,2", "--r-max", "8", "--h", "0.08"),
    ]
    differing = []
    for args in runs:
        a = run_cli(tmp_path / "a" / args[0], *args)
        b = run_cli(tmp_path / "b" / args[0], *args)
        for f in sorted(a.iterdir()):
            if f.read_bytes() != (b / f.name).read_bytes():
                differing.append(f"{args[0]}/{f.name}")
    ok = not differing
    acceptance(13, "determinism", ok,
               f"{len(runs)} commands byte-identical" if ok else "differ: " + ", ".join(differing))
    assert ok

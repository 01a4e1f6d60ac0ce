"""
Oscillatory kernels of the spectral representation
==================================================

For the normalized regular solution phi~ = phi/|W|, odd in xi, the kernel

    K(r, s, z, c) = p.v. int_R phi~(r, xi) phi~(s, xi) exp(i xi a z) / xi dxi,
    a(c) = sqrt(c/(1 - c)),

is evaluated on xi > 0 after symmetrization.  For an integrand u v whose
parity under xi -> -xi is sigma,

    p.v. int_R u v exp(i xi a z)/xi dxi = int_0^inf u v (exp(i xi a z) - sigma exp(-i xi a z))/xi dxi,

so sigma = +1 gives 2i int u v sin(xi a z)/xi and z = 0 returns exactly 0.

Banded kernels weight the integrand by chi(M^2 (1-c)^1/2 / xi) (high band)
or its complement (low band) and apply the radial operators

    D_{l',m}   = ((1-c)^1/2 d_r / xi)^m ((1-c)^1/2 (d_r + 1/r) / xi)^l',
    D^L_{l',m} = d_r^m ((1-c)^1/2 (d_r + 1/r) / xi)^l'.

Radial derivatives come from the solver's phi' and, for the second
derivative, from the ODE itself.

The xi-integral runs over Gauss-Legendre panels up to xi_max.  Beyond it
phi~(r, xi) is replaced by its large-xi form xi^-1/2 (alpha cos xi Phi(r) +
beta sin xi Phi(r)), Phi the phase integral of sqrt(Q), with alpha and beta
fitted on the last panels; the remaining integrals of exp(i w xi)/xi^2 are
closed-form in Si and Ci.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.special import fresnel, sici

from .io import write_csv
from .connection import SolverOptions, solve_column, wkb_indicator
from .langer import DEFAULT_M, phase_integral
from .profiles import VortexProfile, turning_point

DEFAULT_XI_MAX = 40.0
DEFAULT_DELTA = 0.1

# Gauss-Legendre points per panel and the minimum number per sin period
_N_GAUSS = 16
_POINTS_PER_PERIOD = 12
_FAMILY_RTOL = 1e-9
_FAMILY_WKB = 1e-8
# breaks of the geometric panels near xi = 0
_SMALL_XI = (0.0, 1e-3, 1e-2, 0.1, 0.5, 1.0)


def chi(x):
    """
    Smooth cutoff: 1 for |x| <= 1, 0 for |x| >= 2, monotone C-infinity bridge.
    """
    x = np.abs(np.asarray(x, dtype=float))
    t = np.clip(x - 1.0, 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore"):
        f0 = np.where(t < 1.0, np.exp(-1.0 / np.maximum(1.0 - t, 1e-300)), 0.0)
        f1 = np.where(t > 0.0, np.exp(-1.0 / np.maximum(t, 1e-300)), 0.0)
    return f0 / (f0 + f1)


def a_of(c: float) -> float:
    """z-scaling sqrt(c/(1-c))."""
    return math.sqrt(c / (1.0 - c))


@dataclass(frozen=True)
class KernelFamily:
    """
    phi~ and its radial derivatives on a xi-quadrature at fixed c.

    Attributes
    ----------
    c : float
    radii : ndarray
        Radii at which phi~ is stored (sorted, unique).
    xi, weights : ndarray
        Gauss-Legendre nodes and weights on (0, xi_max].
    xi_max : float
    phi, dphi, d2phi : ndarray, shape (n_xi, n_r)
        phi~, d_r phi~ and d_r^2 phi~ (the last from the ODE).
    phase : ndarray
        Phi(r) = phase integral of sqrt(Q); 0 inside the barrier.
    max_w_residual : float
    max_spacing : float
        Largest mean node spacing of a panel, used by the resolution check.
    """

    profile: VortexProfile
    c: float
    radii: np.ndarray
    xi: np.ndarray
    weights: np.ndarray
    xi_max: float
    phi: np.ndarray
    dphi: np.ndarray
    d2phi: np.ndarray
    phase: np.ndarray
    max_w_residual: float
    max_spacing: float

    def index(self, r: float) -> int:
        i = int(np.argmin(np.abs(self.radii - r)))
        if abs(self.radii[i] - r) > 1e-12 * max(1.0, r):
            raise ValueError(f"radius {r} not in the family")
        return i


def _xi_panels(xi_max: float, omega: float) -> np.ndarray:
    """Panel edges: geometric near 0, then uniform with >= 12 nodes per period."""
    width = min(1.0, _N_GAUSS * 2.0 * math.pi / (_POINTS_PER_PERIOD * max(omega, 1e-12)))
    coarse = [e for e in _SMALL_XI if e < xi_max] + [xi_max]
    edges = [coarse[0]]
    for a, b in zip(coarse[:-1], coarse[1:]):
        n = max(1, int(math.ceil((b - a) / width)))
        edges.extend(np.linspace(a, b, n + 1)[1:])
    return np.array(edges)


def _gauss_rule(edges):
    x, w = np.polynomial.legendre.leggauss(_N_GAUSS)
    a, b = edges[:-1, None], edges[1:, None]
    return ((b - a) / 2 * x + (a + b) / 2).ravel(), ((b - a) / 2 * w).ravel()


def _phase(p: VortexProfile, c: float, r: float) -> float:
    rc = turning_point(p, c)
    if rc is not None and r <= rc:
        return 0.0
    return phase_integral(p, c, r)


def _family_r_max(p, c, xi, r0):
    # smallest radius where the outgoing WKB data are accurate; large xi
    # allows much shorter integrations than the solver's generic default
    r = r0
    while wkb_indicator(p, c, xi, r) > _FAMILY_WKB:
        r *= 1.25
    return r


def _solve_node(p, c, grid, xi, rc):
    k = xi / math.sqrt(1.0 / c - 1.0)
    opts = SolverOptions(rtol=_FAMILY_RTOL)
    if xi >= 1.0:
        opts = SolverOptions(rtol=_FAMILY_RTOL,
                             r_max=_family_r_max(p, c, xi, max(1.2 * grid[-1], 3.0 * (rc or 0.0))))
    return solve_column(p, c, k, grid, opts)


def build_family(p: VortexProfile, c: float, radii: Sequence[float], *,
                 xi_max: float = DEFAULT_XI_MAX, omega: float = 1.0,
                 threads: int = 1) -> KernelFamily:
    """
    Solve for phi~ at every xi node.

    ``omega`` is the largest oscillation rate the quadrature has to resolve,
    normally a(c) max|z| plus the phases of the requested radii.
    """
    if not 0.0 < c < 1.0:
        raise ValueError("c must lie in (0, 1)")
    radii = np.unique(np.asarray(radii, dtype=float))
    if radii.size == 0 or radii[0] <= 0:
        raise ValueError("radii must be positive")
    rc = turning_point(p, c)
    phase = np.array([_phase(p, c, r) for r in radii])
    omega = max(omega, 2.0 * float(phase.max()))
    edges = _xi_panels(xi_max, omega)
    xi, w = _gauss_rule(edges)
    # Wronskian radii beyond the turning point
    a = 1.1 * max(rc or 0.0, 1.0)
    grid = np.unique(np.concatenate([radii, np.linspace(a, a + 2.0, 12)]))
    sel = np.searchsorted(grid, radii)

    def one(x):
        col = _solve_node(p, c, grid, x, rc)
        return col.phi_tilde[sel], col.dphi_tilde[sel], col.w_residual

    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            cols = list(ex.map(one, xi))
    else:
        cols = [one(x) for x in xi]
    phi = np.array([cc[0] for cc in cols])
    dphi = np.array([cc[1] for cc in cols])
    Qr = (p.V(radii) - c) / (1.0 - c)
    d2phi = -dphi / radii + phi / radii ** 2 - (xi ** 2)[:, None] * Qr * phi
    return KernelFamily(profile=p, c=c, radii=radii, xi=xi, weights=w, xi_max=float(xi_max),
                        phi=phi, dphi=dphi, d2phi=d2phi, phase=phase,
                        max_w_residual=float(max(cc[2] for cc in cols)),
                        max_spacing=float(np.max(np.diff(edges))) / _N_GAUSS)


# ---------------------------------------------------------------------------
# radial operators
# ---------------------------------------------------------------------------

def _operator_values(fam: KernelFamily, r: float, lp: int, m: int, low: bool):
    """(D phi~)(r, xi) on the nodes and the parity of the result in xi."""
    if lp not in (0, 1) or m < 0 or m + lp > 2:
        raise ValueError("supported operators: l' in {0, 1}, m >= 0, m + l' <= 2")
    i = fam.index(r)
    f, df, d2f = fam.phi[:, i], fam.dphi[:, i], fam.d2phi[:, i]
    s = math.sqrt(1.0 - fam.c) / fam.xi
    # apply (d_r + 1/r) first, then d_r^m
    if lp == 1:
        g = (df + f / r, d2f + df / r - f / r ** 2)
        g = (s * g[0], s * g[1])
    else:
        g = (f, df)
    if m == 0:
        out = g[0]
    elif m == 1:
        out = g[1]
    else:
        out = d2f
    scale_m = 1.0 if low else s ** m
    parity = (-1) ** (1 + lp + (0 if low else m))
    return out * scale_m, parity


# ---------------------------------------------------------------------------
# closed-form tail
# ---------------------------------------------------------------------------

def _exp_over_xi2(w: float, X: float) -> complex:
    """int_X^inf exp(i w xi) / xi^2 dxi."""
    if w == 0.0:
        return 1.0 / X
    aw = abs(w)
    si, ci = sici(aw * X)
    re = math.cos(aw * X) / X - aw * (0.5 * math.pi - si)
    im = math.sin(aw * X) / X - aw * ci
    return complex(re, math.copysign(1.0, w) * im)


def _fit_tail(fam: KernelFamily, values, phase: float):
    """
    Fit sqrt(xi) values ~ alpha cos(xi Phi) + beta sin(xi Phi) on the last
    quarter of the xi range; returns (gamma = alpha - i beta, relative residual).
    """
    if phase <= 0.0:
        return 0j, 0.0
    sel = fam.xi >= 0.75 * fam.xi_max
    x = fam.xi[sel]
    y = values[sel] * np.sqrt(x)
    X = np.column_stack([np.cos(x * phase), np.sin(x * phase)])
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    res = y - X @ coef
    ny = np.linalg.norm(y)
    rel = float(np.linalg.norm(res) / ny) if ny > 0 else 0.0
    return complex(coef[0], -coef[1]), rel


def _tail(fam, gr, pr, gs, ps, az, sigma):
    """int_Xi^inf u v (exp(i xi az) - sigma exp(-i xi az)) / xi dxi for the fitted forms."""
    X = fam.xi_max
    total = 0j
    for c1, f1 in ((0.5 * gr, pr), (0.5 * np.conj(gr), -pr)):
        for c2, f2 in ((0.5 * gs, ps), (0.5 * np.conj(gs), -ps)):
            base = c1 * c2
            total += base * (_exp_over_xi2(f1 + f2 + az, X) - sigma * _exp_over_xi2(f1 + f2 - az, X))
    return total


def _exp_over_sqrt(nu: float, X: float) -> complex:
    """int_X^inf exp(i nu xi) / sqrt(xi) dxi for nu != 0."""
    if nu == 0.0:
        raise ValueError("the tail integral diverges at zero frequency")
    a = abs(nu)
    S, C = fresnel(math.sqrt(2.0 * a * X / math.pi))
    val = math.sqrt(2.0 * math.pi / a) * complex(0.5 - C, 0.5 - S)
    return val if nu > 0 else val.conjugate()


def _exp_over_xi32(nu: float, X: float) -> complex:
    """int_X^inf exp(i nu xi) / xi^(3/2) dxi, by parts from the 1/sqrt form."""
    return 2.0 * np.exp(1j * nu * X) / math.sqrt(X) + 2j * nu * _exp_over_sqrt(nu, X)


def fourier_half_line(fn: Callable, w: float, *, phase: float = 1.0,
                      x_max: float = 400.0) -> complex:
    """
    int_0^inf f(xi) exp(i w xi) dxi for f with the large-xi form
    xi^-1/2 ((alpha + gamma/xi) cos xi Phi + (beta + delta/xi) sin xi Phi).

    Gauss-Legendre panels resolve (0, x_max]; the four coefficients are
    fitted on the last quarter and the rest is summed in closed form with
    Fresnel integrals.  Requires |w| != Phi.
    """
    if abs(abs(w) - phase) < 1e-12 or phase <= 0.0:
        raise ValueError("need phase > 0 and |w| != phase")
    x, wt = _gauss_rule(_xi_panels(x_max, abs(w) + phase))
    f = np.asarray(fn(x), dtype=complex)
    near = complex(np.sum(wt * f * np.exp(1j * w * x)))
    sel = x >= 0.75 * x_max
    xs = x[sel]
    basis = np.column_stack([np.cos(xs * phase), np.sin(xs * phase),
                             np.cos(xs * phase) / xs, np.sin(xs * phase) / xs])
    coef, *_ = np.linalg.lstsq(basis, f[sel] * np.sqrt(xs), rcond=None)
    al, be, ga, de = coef
    tail = 0j
    # cos = (e+ + e-)/2, sin = (e+ - e-)/(2i)
    for sgn in (1.0, -1.0):
        nu = w + sgn * phase
        lead = 0.5 * (al - 1j * sgn * be)
        corr = 0.5 * (ga - 1j * sgn * de)
        tail += lead * _exp_over_sqrt(nu, x_max) + corr * _exp_over_xi32(nu, x_max)
    return near + tail


# ---------------------------------------------------------------------------
# kernels
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class KernelValue:
    """
    One kernel evaluation.

    Attributes
    ----------
    value : complex
        Truncated integral plus tail.
    truncated : complex
        Integral over (0, xi_max] only.
    tail : complex
        Closed-form contribution of xi > xi_max.
    tail_fit_residual : float
        Relative residual of the large-xi fit (0 when no tail is used).
    """

    value: complex
    truncated: complex
    tail: complex
    tail_fit_residual: float


def _check_resolution(fam: KernelFamily, az: float):
    if fam.max_spacing * abs(az) > math.pi / 4:
        raise ValueError(f"xi grid too coarse for z: spacing {fam.max_spacing:.3g} x a|z| "
                         f"{abs(az):.3g} exceeds pi/4")


def _kernel(fam, u, pu, v, pv, az, weight, use_tail, r, s, tail_vals=None):
    sigma = pu * pv
    if az == 0.0 and sigma == 1:
        return KernelValue(0j, 0j, 0j, 0.0)
    _check_resolution(fam, az)
    x = fam.xi
    if sigma == 1:
        osc = 2j * np.sin(x * az)
    else:
        osc = 2.0 * np.cos(x * az)
    trunc = complex(np.sum(fam.weights * weight * u * v * osc / x))
    tail, resid = 0j, 0.0
    if use_tail:
        tu, tv = (u, v) if tail_vals is None else tail_vals
        gr, rr = _fit_tail(fam, tu, fam.phase[fam.index(r)])
        gs, rs = _fit_tail(fam, tv, fam.phase[fam.index(s)])
        tail = _tail(fam, gr, fam.phase[fam.index(r)], gs, fam.phase[fam.index(s)], az, sigma)
        resid = max(rr, rs)
    return KernelValue(trunc + tail, trunc, tail, resid)


def kernel_K(fam: KernelFamily, r: float, s: float, z: float, *, tail: bool = True) -> KernelValue:
    """K(r, s, z, c) at the family's c; exactly 0 at z = 0."""
    i, j = fam.index(r), fam.index(s)
    az = a_of(fam.c) * z
    return _kernel(fam, fam.phi[:, i], -1, fam.phi[:, j], -1, az, 1.0, tail, r, s)


def kernel_K_deriv(fam: KernelFamily, lp: int, l: int, m: int, band: str,
                   r: float, s: float, z: float, *, M: float = DEFAULT_M,
                   tail: bool = True) -> KernelValue:
    """
    Banded kernel K^F_{l',l,m}(r, s, z, c), F in {'L', 'H'}.

    The low band is supported on xi <= 2 M^2 (1-c)^1/2 and needs no tail; the
    high band requires xi_max beyond that support so the tail sees chi = 1.
    """
    if band not in ("L", "H"):
        raise ValueError("band must be 'L' or 'H'")
    if l not in (0, 1):
        raise ValueError("l must be 0 or 1")
    low = band == "L"
    edge = M * M * math.sqrt(1.0 - fam.c)
    cut = chi(edge / fam.xi)
    if low:
        weight = 1.0 - cut
        if fam.xi_max < 2.0 * edge:
            raise ValueError(f"xi_max {fam.xi_max} below the low-band support {2 * edge:.4g}")
    else:
        weight = cut
        if tail and fam.xi_max < 2.0 * edge:
            raise ValueError(f"xi_max {fam.xi_max} below the high-band edge {2 * edge:.4g}")
    u, pu = _operator_values(fam, r, lp, m, low)
    v, pv = _operator_values(fam, s, l, 0, low)
    az = a_of(fam.c) * z
    return _kernel(fam, u, pu, v, pv, az, weight, tail and not low, r, s)


def kernel_bruteforce(phi_fn: Callable, r: float, s: float, z: float, c: float,
                      xi_max: float, n: int = 200000) -> complex:
    """
    Two-sided p.v. integral over [-xi_max, xi_max] by the midpoint rule on a
    grid symmetric about 0; n is made even so the singular point is never
    sampled.

    ``phi_fn(r, xi)`` must accept arrays of xi of both signs.
    """
    n += n % 2
    h = 2.0 * xi_max / n
    x = -xi_max + h * (np.arange(n) + 0.5)
    f = phi_fn(r, x) * phi_fn(s, x) * np.exp(1j * x * a_of(c) * z) / x
    return complex(np.sum(f) * h)


# ---------------------------------------------------------------------------
# c-scan of the kernel
# ---------------------------------------------------------------------------

def c_grid(n: int) -> np.ndarray:
    """n nodes c_j = (1 - cos(pi j/(n+1)))/2, clustered at both ends; n -> 2n+1 nests."""
    if n < 2:
        raise ValueError("need at least two c nodes")
    j = np.arange(1, n + 1)
    return 0.5 * (1.0 - np.cos(math.pi * j / (n + 1)))


def dc_integral(c, K) -> float:
    """int |d_c K| dc by second-order central differences (one-sided at the ends)."""
    d = np.gradient(np.asarray(K), np.asarray(c), edge_order=2)
    return float(np.trapezoid(np.abs(d), c))


@dataclass(frozen=True)
class KernelScanReport:
    """
    Sampled d_c-integrability of K.

    Attributes
    ----------
    triples : list of (r, s, z)
    c : ndarray
        Fine c-grid (the coarse grid is every other node).
    K : ndarray, shape (n_triples, n_c)
    integrals, integrals_coarse : ndarray
        int |d_c K| dc on the fine and coarse grids (nan for skipped triples).
    grid_change : ndarray
        |fine - coarse| / fine per triple.
    C_fit : float
        Smallest C with integral <= C (s^-delta + s^delta) over the triples.
    delta : float
    skipped : list of (r, s, z)
    diagnostics : dict
    """

    triples: list
    c: np.ndarray
    K: np.ndarray
    integrals: np.ndarray
    integrals_coarse: np.ndarray
    grid_change: np.ndarray
    C_fit: float
    delta: float
    skipped: list
    diagnostics: dict = field(default_factory=dict)

    def summary(self) -> dict:
        return {"delta": self.delta, "C_fit": self.C_fit,
                "triples": [list(t) for t in self.triples],
                "integrals": self.integrals, "integrals_coarse": self.integrals_coarse,
                "grid_change": self.grid_change, "skipped": [list(t) for t in self.skipped],
                "n_c": int(self.c.size), **self.diagnostics}


def dc_scan(p: VortexProfile, triples: Sequence, n_c: int = 64, *,
            delta: float = DEFAULT_DELTA, xi_max: float = DEFAULT_XI_MAX,
            threads: int = 1) -> KernelScanReport:
    """
    K on the nested c-grids of n_c and 2 n_c + 1 nodes for every (r, s, z)
    triple; reports int |d_c K| dc on both and the fitted constant.

    One basis family per c serves all triples.
    """
    if n_c < 64:
        raise ValueError("the c-grid needs at least 64 nodes")
    triples = [tuple(float(v) for v in t) for t in triples]
    radii = sorted({t[0] for t in triples} | {t[1] for t in triples})
    zmax = max(abs(t[2]) for t in triples)
    cf = c_grid(2 * n_c + 1)
    K = np.zeros((len(triples), cf.size), dtype=complex)
    n_xi, tail_max, fit_max, wres = [], 0.0, 0.0, 0.0

    def one(c):
        fam = build_family(p, c, radii, xi_max=xi_max, omega=a_of(c) * zmax)
        return fam, [kernel_K(fam, r, s, z) for r, s, z in triples]

    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            results = list(ex.map(one, cf))
    else:
        results = [one(c) for c in cf]
    for j, (fam, vals) in enumerate(results):
        n_xi.append(fam.xi.size)
        wres = max(wres, fam.max_w_residual)
        for i, kv in enumerate(vals):
            K[i, j] = kv.value
            tail_max = max(tail_max, abs(kv.tail))
            fit_max = max(fit_max, kv.tail_fit_residual)
    integrals = np.full(len(triples), np.nan)
    coarse = np.full(len(triples), np.nan)
    skipped = []
    for i, t in enumerate(triples):
        if not np.all(np.isfinite(K[i])):
            skipped.append(t)
            continue
        integrals[i] = dc_integral(cf, K[i])
        coarse[i] = dc_integral(cf[1::2], K[i, 1::2])
    with np.errstate(invalid="ignore", divide="ignore"):
        change = np.where(integrals > 0, np.abs(integrals - coarse) / integrals, 0.0)
    s = np.array([t[1] for t in triples])
    ratio = integrals / (s ** -delta + s ** delta)
    C = float(np.nanmax(ratio)) if np.any(np.isfinite(ratio)) else float("nan")
    diag = {"xi_max": xi_max, "n_xi_min": int(min(n_xi)), "n_xi_max": int(max(n_xi)),
            "max_tail": tail_max, "max_tail_fit_residual": fit_max,
            "max_w_residual": wres, "c_min": float(cf[0]), "c_max": float(cf[-1])}
    return KernelScanReport(triples=triples, c=cf, K=K, integrals=integrals,
                            integrals_coarse=coarse, grid_change=change, C_fit=C,
                            delta=delta, skipped=skipped, diagnostics=diag)


def write_scan_csv(path, report: KernelScanReport):
    """Scan CSV "r,s,z,c,K" with K holding Im K (the real part vanishes identically)."""
    rows = []
    for i, (r, s, z) in enumerate(report.triples):
        for j, c in enumerate(report.c):
            rows.append((r, s, z, c, report.K[i, j].imag))
    write_csv(path, ["r", "s", "z", "c", "K"], rows)

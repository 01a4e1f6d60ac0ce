"""
Connection problem for the eigenfunction equation
=================================================

For fixed (c, k) with xi = k sqrt(1/c - 1) we construct

- the regular solution phi,   phi ~ xi r as r -> 0 (real), and
- the outgoing solution f+,   f+ ~ (xi r)^-1/2 exp(i xi Phi(r)) as r -> oo,

of  phi'' + phi'/r - phi/r^2 + xi^2 Q(r, c) phi = 0, and their Wronskian
W = r (phi' f+ - phi f+').

Both are integrated in the Liouville form w = r^(1/2) y,

    w'' = -P(r) w,    P = xi^2 Q - 3/(4 r^2),

with an embedded 8(5,3) Runge-Kutta pair (Dormand-Prince coefficients) in a
numba kernel that lands exactly on the requested nodes.  Inside barriers the
solution grows like exp(int sqrt|P|); the kernel renormalizes whenever the
state exceeds 1e100 and carries the exponent separately, so nothing
overflows.  phi starts at a tiny radius from the two-term Frobenius expansion;
f+ starts far out from second-order WKB data

    w = p^-1/2 exp(i theta),   p^2 = P - P''/(4P) + 5 P'^2/(16 P^2),

whose phase is tied to the branch phase Phi through the convergent tail
int_{r_max}^oo (p - xi Phi') ds.

The Volterra series of the small-r and large-r constructions are provided
as independent validators.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numba
import numpy as np
from scipy.integrate import cumulative_simpson, quad
from scipy.integrate._ivp import dop853_coefficients as _dop

from . import specfun
from .langer import (DEFAULT_DELTA, DEFAULT_M, RegimeTag, classify_regime,
                     phase_integral, xi_of)
from .profiles import VortexProfile, _v_derivs, turning_point

logger = logging.getLogger(__name__)

_A = np.ascontiguousarray(_dop.A[:_dop.N_STAGES, :_dop.N_STAGES])
_B = np.ascontiguousarray(_dop.B)
_C = np.ascontiguousarray(_dop.C[:_dop.N_STAGES])
_E3 = np.ascontiguousarray(_dop.E3)
_E5 = np.ascontiguousarray(_dop.E5)

_LOG_RESCALE = 100.0 * math.log(10.0)

# WKB truncation indicator threshold: the neglected term is ~ indicator^2
WKB_INDICATOR_MAX = 1e-6


class ConnectionError(RuntimeError):
    """Raised when the two-sided construction cannot be certified."""


@dataclass(frozen=True)
class SolverOptions:
    """
    Numerical settings of the connection solver.

    Attributes
    ----------
    rtol : float
        Local relative error per step.
    r_min, r_max : float, optional
        Start radius of phi and of f+; defaults depend on (xi, r_c).
    n_wronskian : int
        Number of radii over which W is sampled.
    max_residual : float
        Rejection threshold of the Wronskian spread.
    target_residual : float
        Spread above which r_max and rtol are escalated once more.
    M, delta : float
        Regime constants for the slice tag.
    """

    rtol: float = 1e-12
    r_min: Optional[float] = None
    r_max: Optional[float] = None
    n_wronskian: int = 16
    max_residual: float = 1e-4
    target_residual: float = 1e-6
    max_escalations: int = 3
    M: float = DEFAULT_M
    delta: float = DEFAULT_DELTA


# ---------------------------------------------------------------------------
# numba integrator
# ---------------------------------------------------------------------------

@numba.njit(cache=True, nogil=True)
def _potential(kind, beta, knots, coefs, tail, xi2, c, r):
    v = _v_derivs(kind, beta, knots, coefs, tail, r)[0]
    return xi2 * (v - c) / (1.0 - c) - 0.75 / (r * r)


@numba.njit(cache=True, nogil=True)
def _rhs(kind, beta, knots, coefs, tail, xi2, c, r, y, out):
    pot = _potential(kind, beta, knots, coefs, tail, xi2, c, r)
    for j in range(0, y.shape[0], 2):
        out[j] = y[j + 1]
        out[j + 1] = -pot * y[j]


@numba.njit(cache=True, nogil=True)
def _err_scale(kind, beta, knots, coefs, tail, xi2, c, r, y, ynew, rtol, scale):
    pot = _potential(kind, beta, knots, coefs, tail, xi2, c, r)
    kap = math.sqrt(abs(pot) + 1.0 / (r * r))
    amp = 0.0
    for j in range(0, y.shape[0], 2):
        a1 = y[j] * y[j] + (y[j + 1] / kap) ** 2
        a2 = ynew[j] * ynew[j] + (ynew[j + 1] / kap) ** 2
        amp += max(a1, a2)
    amp = math.sqrt(amp) * rtol + 1e-300
    for j in range(0, y.shape[0], 2):
        scale[j] = amp
        scale[j + 1] = amp * kap


@numba.njit(cache=True, nogil=True)
def _integrate(kind, beta, knots, coefs, tail, xi2, c, r0, y0, nodes, rtol,
               A, B, C, E3, E5):
    """
    Integrate w'' = -P w from r0 through ``nodes`` (monotone, same direction).

    Returns (Y, logscale, status, nsteps); status 0 ok, -1 step collapse at
    the radius stored in nsteps' companion (returned as the last r).
    """
    n = y0.shape[0]
    m = nodes.shape[0]
    out = np.zeros((m, n))
    logs = np.zeros(m)
    ns = B.shape[0]
    K = np.zeros((ns + 1, n))
    y = y0.copy()
    ytmp = np.zeros(n)
    ynew = np.zeros(n)
    f = np.zeros(n)
    scale = np.zeros(n)
    r = r0
    lg = 0.0
    direction = 1.0
    if m > 0 and nodes[m - 1] < r0:
        direction = -1.0
    _rhs(kind, beta, knots, coefs, tail, xi2, c, r, y, f)
    pot = _potential(kind, beta, knots, coefs, tail, xi2, c, r)
    h = direction * 0.05 / math.sqrt(abs(pot) + 1.0 / (r * r))
    nsteps = 0
    idx = 0
    while idx < m:
        target = nodes[idx]
        while direction * (target - r) > 0.0:
            remaining = target - r
            hit = abs(h) >= abs(remaining)
            ht = remaining if hit else h
            K[0, :] = f
            for s in range(1, ns):
                for i in range(n):
                    acc = 0.0
                    for j in range(s):
                        acc += A[s, j] * K[j, i]
                    ytmp[i] = y[i] + ht * acc
                _rhs(kind, beta, knots, coefs, tail, xi2, c, r + C[s] * ht, ytmp, K[s])
            for i in range(n):
                acc = 0.0
                for j in range(ns):
                    acc += B[j] * K[j, i]
                ynew[i] = y[i] + ht * acc
            rn = target if hit else r + ht
            _rhs(kind, beta, knots, coefs, tail, xi2, c, rn, ynew, K[ns])
            _err_scale(kind, beta, knots, coefs, tail, xi2, c, rn, y, ynew, rtol, scale)
            e5 = 0.0
            e3 = 0.0
            for i in range(n):
                a5 = 0.0
                a3 = 0.0
                for j in range(ns + 1):
                    a5 += E5[j] * K[j, i]
                    a3 += E3[j] * K[j, i]
                e5 += (a5 / scale[i]) ** 2
                e3 += (a3 / scale[i]) ** 2
            if e5 == 0.0 and e3 == 0.0:
                errn = 0.0
            else:
                errn = abs(ht) * e5 / math.sqrt((e5 + 0.01 * e3) * n)
            if errn < 1.0:
                nsteps += 1
                r = rn
                for i in range(n):
                    y[i] = ynew[i]
                    f[i] = K[ns, i]
                fac = 10.0 if errn == 0.0 else min(10.0, 0.9 * errn ** (-1.0 / 8.0))
                if not hit:
                    h = ht * fac
                amax = 0.0
                for i in range(n):
                    amax = max(amax, abs(y[i]))
                if amax > 1e100:
                    for i in range(n):
                        y[i] *= 1e-100
                        f[i] *= 1e-100
                    lg += 230.25850929940458
                elif amax < 1e-100 and amax > 0.0:
                    for i in range(n):
                        y[i] *= 1e100
                        f[i] *= 1e100
                    lg -= 230.25850929940458
            else:
                h = ht * max(0.2, 0.9 * errn ** (-1.0 / 8.0))
                if abs(h) < 1e-13 * abs(r):
                    return out, logs, -1, r
        for i in range(n):
            out[idx, i] = y[i]
        logs[idx] = lg
        idx += 1
    return out, logs, 0, float(nsteps)


def _run(p: VortexProfile, xi: float, c: float, r0: float, y0, nodes, rtol):
    Y, logs, status, info = _integrate(*p.numba_args, xi * xi, c, float(r0),
                                       np.ascontiguousarray(y0, dtype=float),
                                       np.ascontiguousarray(nodes, dtype=float),
                                       rtol, _A, _B, _C, _E3, _E5)
    if status != 0:
        raise ConnectionError(f"step size collapsed at r = {info:.6g} (stiff or singular)")
    return Y, logs


# ---------------------------------------------------------------------------
# initial data
# ---------------------------------------------------------------------------

def default_r_min(p: VortexProfile, c: float, xi: float) -> float:
    kap0 = xi * math.sqrt(abs(p.V0 - c) / (1.0 - c))
    return 1e-3 / max(1.0, xi, kap0)


def _phi_initial(p: VortexProfile, c: float, xi: float, r: float):
    """(w, w') at r from phi = xi r (1 + first Volterra iterate), linear V."""
    ev = p.evaluate(0.0)
    v0, v1 = ev[3, 0], ev[4, 0]
    g = xi ** 3 / (1.0 - c)
    phi = xi * r + g * ((c - v0) * r ** 3 / 8.0 - v1 * r ** 4 / 15.0)
    dphi = xi + g * (3.0 * (c - v0) * r * r / 8.0 - 4.0 * v1 * r ** 3 / 15.0)
    sr = math.sqrt(r)
    return np.array([sr * phi, 0.5 * phi / sr + sr * dphi])


def _wkb_terms(p: VortexProfile, c: float, xi: float, r: float):
    ev = p.evaluate(r)
    x2 = xi * xi / (1.0 - c)
    P = x2 * (ev[3, 0] - c) - 0.75 / (r * r)
    dP = x2 * ev[4, 0] + 1.5 / r ** 3
    d2P = x2 * ev[5, 0] - 4.5 / r ** 4
    corr = -d2P / (4.0 * P) + 5.0 * dP * dP / (16.0 * P * P)
    return P, dP, corr


def wkb_indicator(p: VortexProfile, c: float, xi: float, r: float) -> float:
    """Relative size of the second-order WKB correction at r (inf if evanescent)."""
    P, _, corr = _wkb_terms(p, c, xi, r)
    if P <= 0.0:
        return math.inf
    return abs(corr) / P


def fplus_branch(p: VortexProfile, c: float, xi: float) -> str:
    """Phase convention of f+: 'plain', 'origin' or 'turning'."""
    if xi <= (1.0 - c) ** (1.0 / 3.0):
        return "plain"
    if c <= p.V0:
        return "origin"
    return "turning"


def _wkb_momentum(p, c, xi, s):
    P, _, corr = _wkb_terms(p, c, xi, s)
    return math.sqrt(P + corr)


def _tail_phase(p: VortexProfile, c: float, xi: float, r_max: float, branch: str) -> float:
    """int_{r_max}^oo (p(s) - xi g(s)) ds, g = sqrt(Q) or 1 for the plain branch."""
    def integrand(u):
        s = r_max / u
        ev = p.evaluate(s)
        Qv = (ev[3, 0] - c) / (1.0 - c)
        P, _, corr = _wkb_terms(p, c, xi, s)
        # p - xi sqrt(Q) without cancellation: p^2 - xi^2 Q = corr - 3/(4 s^2)
        val = (corr - 0.75 / (s * s)) / (math.sqrt(P + corr) + xi * math.sqrt(Qv))
        return val * r_max / (u * u)
    total = quad(integrand, 0.0, 1.0, epsabs=1e-13, epsrel=1e-10, limit=200)[0]
    if branch == "plain" and not p.is_uniform:
        # xi (sqrt(Q) - 1); V - 1 is pure roundoff beyond the decay radius
        s_end = _decay_radius(p, 1e-13)
        if s_end > r_max:
            # fixed Gauss rule: the integrand is smooth decay plus roundoff
            gx, gw = np.polynomial.legendre.leggauss(24)
            edges = np.geomspace(r_max, s_end, 25)
            a, b = edges[:-1, None], edges[1:, None]
            sn = (0.5 * (b - a) * (gx + 1.0) + a).ravel()
            wn = (0.5 * (b - a) * gw).ravel()
            V = p.V(sn)
            Qv = (V - c) / (1.0 - c)
            total += float(np.sum(wn * xi * (V - 1.0) / (1.0 - c) / (np.sqrt(Qv) + 1.0)))
    return total


def _fplus_initial(p: VortexProfile, c: float, xi: float, r_max: float, branch: str):
    """(Re w, Re w', Im w, Im w') at r_max from second-order WKB data."""
    P, dP, corr = _wkb_terms(p, c, xi, r_max)
    pm = math.sqrt(P + corr)
    dp = dP / (2.0 * math.sqrt(P))
    if branch == "plain":
        big = xi * r_max
    else:
        big = xi * phase_integral(p, c, r_max)
    theta = big - _tail_phase(p, c, xi, r_max, branch)
    w = pm ** -0.5 * np.exp(1j * theta)
    dw = w * (-0.5 * dp / pm + 1j * pm)
    return np.array([w.real, dw.real, w.imag, dw.imag])


def default_r_max(p: VortexProfile, c: float, xi: float, rc: Optional[float]) -> float:
    r = max(30.0, 30.0 / xi, 3.0 * (rc or 0.0))
    for _ in range(60):
        if wkb_indicator(p, c, xi, r) <= WKB_INDICATOR_MAX:
            return r
        r *= 1.5
    raise ConnectionError("could not find a radius where WKB data is accurate")


# ---------------------------------------------------------------------------
# basis slice
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BasisSlice:
    """
    Regular and outgoing solutions on a radial grid for one (c, k).

    Values are held as mantissas with per-node natural-log scales so that
    exponentially large barrier growth never overflows; the ``phi``,
    ``dphi``, ``fplus``, ``dfplus`` and ``W`` properties expand them.

    Attributes
    ----------
    c, k, xi : float
    grid : ndarray
    phi_m, dphi_m : ndarray
        Mantissas of phi, phi'.
    phi_log : ndarray
        log scale of phi at each node.
    fplus_m, dfplus_m : ndarray (complex)
    fplus_log : ndarray
    W_m : complex
        Mantissa of the Wronskian, W = W_m exp(W_log).
    W_log : float
    w_residual : float
        Largest relative deviation of the sampled Wronskians from their median.
    regime : RegimeTag or None
    r_min, r_max : float
        Start radii of the two integrations.
    branch : str
        Phase convention of f+.
    """

    c: float
    k: float
    xi: float
    grid: np.ndarray
    phi_m: np.ndarray
    dphi_m: np.ndarray
    phi_log: np.ndarray
    fplus_m: np.ndarray
    dfplus_m: np.ndarray
    fplus_log: np.ndarray
    W_m: complex
    W_log: float
    w_residual: float
    regime: Optional[RegimeTag]
    r_min: float
    r_max: float
    branch: str
    w_radii: np.ndarray = field(repr=False, default_factory=lambda: np.zeros(0))

    @staticmethod
    def _expand(m, lg):
        with np.errstate(over="ignore", invalid="ignore"):
            return m * np.exp(lg)

    @property
    def phi(self):
        return self._expand(self.phi_m, self.phi_log)

    @property
    def dphi(self):
        return self._expand(self.dphi_m, self.phi_log)

    @property
    def fplus(self):
        return self._expand(self.fplus_m, self.fplus_log)

    @property
    def dfplus(self):
        return self._expand(self.dfplus_m, self.fplus_log)

    @property
    def W(self) -> complex:
        with np.errstate(over="ignore", invalid="ignore"):
            return complex(self.W_m * np.exp(self.W_log))

    @property
    def log_absW(self) -> float:
        return float(self.W_log + math.log(abs(self.W_m)))

    @property
    def absW(self) -> float:
        lw = self.log_absW
        return math.exp(lw) if lw < 709.0 else math.inf

    def flux(self):
        """Im(r f+' conj f+) at every node (equals 1 for an outgoing wave)."""
        lg2 = 2.0 * self.fplus_log
        with np.errstate(over="ignore", under="ignore"):
            return self.grid * np.imag(self.dfplus_m * np.conj(self.fplus_m)) * np.exp(lg2)

    def metadata(self) -> dict:
        W = self.W
        return {"c": self.c, "k": self.k, "xi": self.xi, "W_re": W.real, "W_im": W.imag,
                "absW": self.absW, "log_absW": self.log_absW,
                "w_residual": self.w_residual,
                "regime": None if self.regime is None else self.regime.region.value}


def _w_form(y, dy, r):
    """Values of w = r^1/2 y and w' from y, y'."""
    sr = np.sqrt(r)
    return sr * y, 0.5 * y / sr + sr * dy


def _from_w(w, dw, r):
    sr = np.sqrt(r)
    y = w / sr
    return y, (dw - 0.5 * y / sr) / sr


def solve_phi(p: VortexProfile, c: float, k: float, grid, opts: SolverOptions = SolverOptions(),
              *, scaled: bool = False):
    """
    Regular solution phi ~ xi r on ``grid``.

    Returns (phi, dphi); with ``scaled=True`` returns (phi_m, dphi_m, log)
    mantissas instead.
    """
    xi = xi_of(c, k)
    grid = np.asarray(grid, dtype=float)
    r0 = opts.r_min if opts.r_min is not None else default_r_min(p, c, xi)
    r0 = min(r0, float(grid[0]))
    y0 = _phi_initial(p, c, xi, r0)
    Y, logs = _run(p, xi, c, r0, y0, grid, opts.rtol)
    phi, dphi = _from_w(Y[:, 0], Y[:, 1], grid)
    if scaled:
        return phi, dphi, logs
    ex = np.exp(np.minimum(logs, 709.0))
    return phi * ex, dphi * ex


def solve_fplus(p: VortexProfile, c: float, k: float, grid, opts: SolverOptions = SolverOptions(),
                *, scaled: bool = False):
    """
    Outgoing solution on ``grid`` integrated inward from r_max.

    Returns (fplus, dfplus) or, with ``scaled=True``, (f_m, df_m, log, r_max, branch).
    """
    xi = xi_of(c, k)
    grid = np.asarray(grid, dtype=float)
    rc = turning_point(p, c)
    r_max = opts.r_max if opts.r_max is not None else default_r_max(p, c, xi, rc)
    r_max = max(r_max, float(grid[-1]))
    ind = wkb_indicator(p, c, xi, r_max)
    if ind > WKB_INDICATOR_MAX:
        suggestion = default_r_max(p, c, xi, rc)
        raise ConnectionError(f"r_max = {r_max:.6g} too small for WKB data "
                              f"(indicator {ind:.2e}); try r_max >= {suggestion:.6g}")
    branch = fplus_branch(p, c, xi)
    y0 = _fplus_initial(p, c, xi, r_max, branch)
    nodes = grid[::-1]
    Y, logs = _run(p, xi, c, r_max, y0, nodes, opts.rtol)
    Y, logs = Y[::-1], logs[::-1]
    fr, dfr = _from_w(Y[:, 0], Y[:, 1], grid)
    fi, dfi = _from_w(Y[:, 2], Y[:, 3], grid)
    f, df = fr + 1j * fi, dfr + 1j * dfi
    if scaled:
        return f, df, logs, r_max, branch
    ex = np.exp(np.minimum(logs, 709.0))
    return f * ex, df * ex


def wronskian(grid, phi_m, dphi_m, phi_log, f_m, df_m, f_log, idx):
    """
    Median Wronskian r (phi' f+ - phi f+') over the nodes ``idx``.

    Returns (W_m, W_log, w_residual) with W = W_m exp(W_log).
    """
    idx = np.asarray(idx)
    r = grid[idx]
    wm = r * (dphi_m[idx] * f_m[idx] - phi_m[idx] * df_m[idx])
    lg = phi_log[idx] + f_log[idx]
    with np.errstate(divide="ignore"):
        mag = np.log(np.abs(wm)) + lg
    ref = float(np.median(mag))
    rel = np.abs(wm) * np.exp(mag - ref - np.log(np.abs(wm))) * np.exp(1j * np.angle(wm))
    med = complex(np.median(rel.real), np.median(rel.imag))
    if med == 0:
        raise ConnectionError("vanishing Wronskian")
    resid = float(np.max(np.abs(rel - med)) / abs(med))
    return med, ref, resid


def _wronskian_nodes(grid, rc, n):
    lo = 0
    if rc is not None and rc < grid[-1]:
        lo = int(np.searchsorted(grid, rc))
    idx = np.unique(np.linspace(lo, grid.size - 1, min(n, grid.size - lo)).round().astype(int))
    if idx.size < min(10, grid.size):
        idx = np.unique(np.linspace(0, grid.size - 1, min(n, grid.size)).round().astype(int))
    return idx


def compute_basis(p: VortexProfile, c: float, k: float, grid=None,
                  opts: SolverOptions = SolverOptions()) -> BasisSlice:
    """
    Solve the connection problem at (c, k) and certify it through the
    constancy of the Wronskian; r_max and rtol are escalated when the spread
    exceeds ``opts.target_residual``.
    """
    if not 0.0 < c < 1.0:
        raise ValueError("c must lie in (0, 1)")
    if k == 0:
        raise ValueError("k must be nonzero")
    k = abs(k)
    xi = xi_of(c, k)
    rc = turning_point(p, c)
    if grid is None:
        r_hi = max(20.0, 20.0 / xi, 2.0 * (rc or 0.0))
        grid = np.geomspace(default_r_min(p, c, xi), r_hi, 400)
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size < 2 or np.any(np.diff(grid) <= 0) or grid[0] <= 0:
        raise ValueError("grid must be strictly increasing and positive")
    try:
        regime = classify_regime(p, c, xi, opts.M, opts.delta)
    except ValueError:
        regime = None
    idx = _wronskian_nodes(grid, rc, max(opts.n_wronskian, 10))
    cur = opts
    best = None
    for attempt in range(opts.max_escalations + 1):
        ph, dph, plog = solve_phi(p, c, k, grid, cur, scaled=True)
        f, df, flog, r_max, branch = solve_fplus(p, c, k, grid, cur, scaled=True)
        Wm, Wl, resid = wronskian(grid, ph, dph, plog, f, df, flog, idx)
        r_min = min(cur.r_min if cur.r_min is not None else default_r_min(p, c, xi), grid[0])
        sl = BasisSlice(c=c, k=k, xi=xi, grid=grid, phi_m=ph, dphi_m=dph, phi_log=plog,
                        fplus_m=f, dfplus_m=df, fplus_log=flog, W_m=Wm, W_log=Wl,
                        w_residual=resid, regime=regime, r_min=r_min, r_max=r_max,
                        branch=branch, w_radii=grid[idx])
        if best is None or resid < best.w_residual:
            best = sl
        if resid <= opts.target_residual:
            break
        logger.debug("escalating connection solve at c=%g k=%g (residual %.2e)", c, k, resid)
        cur = _escalate(cur, r_min, r_max)
    if best.w_residual > opts.max_residual:
        raise ConnectionError(f"Wronskian not constant (spread {best.w_residual:.2e}) "
                              f"at c={c}, k={k}; check r_min/r_max")
    return best


def _escalate(opts: SolverOptions, r_min: float, r_max: float) -> SolverOptions:
    return replace(opts, rtol=max(opts.rtol / 10.0, 1e-14), r_min=r_min / 10.0, r_max=2.0 * r_max)


@dataclass(frozen=True)
class PhiColumn:
    """
    Normalized regular solution phi/|W| on a grid, without storing f+.

    Attributes
    ----------
    c, k, xi : float
    phi_tilde, dphi_tilde : ndarray
    log_absW : float
    w_residual : float
    """

    c: float
    k: float
    xi: float
    phi_tilde: np.ndarray
    dphi_tilde: np.ndarray
    log_absW: float
    w_residual: float


def solve_column(p: VortexProfile, c: float, k: float, grid,
                 opts: SolverOptions = SolverOptions()) -> PhiColumn:
    """
    phi/|W| on ``grid`` with f+ integrated only down to the Wronskian radii.

    Cheaper than :func:`compute_basis` when many spectral values share one
    radial grid; certification and escalation are identical.
    """
    if not 0.0 < c < 1.0:
        raise ValueError("c must lie in (0, 1)")
    k = abs(k)
    xi = xi_of(c, k)
    grid = np.asarray(grid, dtype=float)
    rc = turning_point(p, c)
    idx = _wronskian_nodes(grid, rc, max(opts.n_wronskian, 10))
    sub = grid[idx]
    cur = opts
    best = None
    for attempt in range(opts.max_escalations + 1):
        ph, dph, plog = solve_phi(p, c, k, grid, cur, scaled=True)
        f, df, flog, r_max, _ = solve_fplus(p, c, k, sub, cur, scaled=True)
        Wm, Wl, resid = wronskian(sub, ph[idx], dph[idx], plog[idx], f, df, flog,
                                  np.arange(sub.size))
        if best is None or resid < best[-1]:
            best = (ph, dph, plog, Wl + math.log(abs(Wm)), resid)
        if resid <= opts.target_residual:
            break
        r_min = min(cur.r_min if cur.r_min is not None else default_r_min(p, c, xi), grid[0])
        cur = _escalate(cur, r_min, r_max)
    ph, dph, plog, lw, resid = best
    if resid > opts.max_residual:
        raise ConnectionError(f"Wronskian not constant (spread {resid:.2e}) at c={c}, k={k}")
    with np.errstate(under="ignore", over="ignore"):
        scale = np.exp(plog - lw)
    return PhiColumn(c=c, k=k, xi=xi, phi_tilde=ph * scale, dphi_tilde=dph * scale,
                     log_absW=lw, w_residual=resid)


def normalized_phi(sl: BasisSlice) -> np.ndarray:
    """phi / |W| on the slice grid (underflows to 0 deep inside barriers)."""
    with np.errstate(under="ignore", over="ignore"):
        return sl.phi_m * np.exp(sl.phi_log - sl.log_absW)


def normalized_dphi(sl: BasisSlice) -> np.ndarray:
    with np.errstate(under="ignore", over="ignore"):
        return sl.dphi_m * np.exp(sl.phi_log - sl.log_absW)


# ---------------------------------------------------------------------------
# Volterra validators
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class VolterraResult:
    """
    Truncated Volterra series g (1 + sum_{n<=N} h_n) on a grid.

    Attributes
    ----------
    r : ndarray
    solution : ndarray
        g (1 + remainder).
    remainder : ndarray
        sum_{n=1}^N h_n.
    dremainder : ndarray
        r-derivative of the remainder (small-r construction only; zeros else).
    majorant : ndarray
        Bound on the neglected tail, sum_{n>N} kappa^n / n!.
    kappa : ndarray
    positive : bool or None
        Whether remainder and its derivative are positive (checked where the
        kernel is positive), None when not applicable.
    """

    r: np.ndarray
    solution: np.ndarray
    remainder: np.ndarray
    dremainder: np.ndarray
    majorant: np.ndarray
    kappa: np.ndarray
    positive: Optional[bool]


def _tail_bound(kappa, n_iter):
    # e^kappa - sum_{n<=N} kappa^n/n!, computed termwise to avoid cancellation
    out = np.zeros_like(kappa)
    term = np.ones_like(kappa)
    for n in range(1, n_iter + 60):
        term = term * kappa / n
        if n > n_iter:
            out += term
    return out


def volterra_phi(p: VortexProfile, c: float, xi: float, r_stop: float, n_iter: int,
                 n_nodes: int = 48) -> VolterraResult:
    """
    Successive approximations of phi = xi r (1 + phi_rem) from the origin.

    The normalized kernel is K1(r, s) = (s/2)(1 - s^2/r^2) xi^2 (c - V(s))/(1 - c)
    and h_n(r) = int_0^r K1(r, s) h_{n-1}(s) ds with h_0 = 1.  The window
    requires xi^2 sup|Q| r_stop^2 <= 8.
    """
    if not 0.0 < c < 1.0:
        raise ValueError("c must lie in (0, 1)")
    if n_iter < 0:
        raise ValueError("n_iter must be nonnegative")
    qmax = max(abs(p.V0 - c), abs(p.V(r_stop) - c)) / (1.0 - c)
    if xi * xi * qmax * r_stop * r_stop > 8.0:
        raise ValueError(f"outside the small-r window: xi^2 sup|Q| r_stop^2 = "
                         f"{xi * xi * qmax * r_stop ** 2:.3g} > 8")
    # Chebyshev (Lobatto) nodes on (0, r_stop]
    j = np.arange(n_nodes)
    r = 0.5 * r_stop * (1.0 - np.cos(np.pi * (j + 1) / n_nodes))
    gx, gw = np.polynomial.legendre.leggauss(40)

    def amp(s):
        return xi * xi * (c - p.V(s)) / (1.0 - c)

    # quadrature nodes per target radius
    S = 0.5 * r[:, None] * (gx[None, :] + 1.0)
    Wt = 0.5 * r[:, None] * gw[None, :]
    As = amp(S)
    K1 = 0.5 * (1.0 - S ** 2 / r[:, None] ** 2) * S * As
    dK1 = S ** 3 / r[:, None] ** 3 * As
    # interpolation from the nodes r to the quadrature points
    interp = _cheb_interp_matrix(r, S.ravel(), r_stop).reshape(n_nodes, -1, n_nodes)
    h = np.ones(n_nodes)
    rem = np.zeros(n_nodes)
    drem = np.zeros(n_nodes)
    for _ in range(n_iter):
        hs = np.einsum("ijk,k->ij", interp, h)
        new = np.sum(K1 * hs * Wt, axis=1)
        drem += np.sum(dK1 * hs * Wt, axis=1)
        rem += new
        h = new
    # kappa(r) = int_0^r sup_{t in [s, r]} |K1(t, s)| ds; K1 grows with t
    kappa = np.sum(np.abs(K1) * Wt, axis=1)
    majorant = _tail_bound(kappa, n_iter)
    positive = None
    rc = turning_point(p, c)
    if rc is not None and r_stop <= rc and n_iter > 0:
        positive = bool(np.all(rem > 0) and np.all(drem > 0))
    return VolterraResult(r=r, solution=xi * r * (1.0 + rem), remainder=rem,
                          dremainder=drem, majorant=majorant, kappa=kappa,
                          positive=positive)


def _cheb_interp_matrix(nodes, x, r_stop):
    """Barycentric interpolation matrix from the Chebyshev-type nodes to x."""
    n = nodes.size
    # weights for the nodes r_j = (1 - cos(pi (j+1)/n)) r_stop / 2, j = 0..n-1;
    # these are the Lobatto points minus the origin, so use generic weights
    wts = np.ones(n)
    for j in range(n):
        d = nodes[j] - np.delete(nodes, j)
        wts[j] = 1.0 / np.prod(d / r_stop)
    diff = x[:, None] - nodes[None, :]
    exact = diff == 0.0
    diff[exact] = 1.0
    tmp = wts[None, :] / diff
    mat = tmp / tmp.sum(axis=1, keepdims=True)
    rows = np.any(exact, axis=1)
    mat[rows] = exact[rows].astype(float)
    return mat


def _decay_radius(p: VortexProfile, level: float = 1e-14) -> float:
    """Radius beyond which 1 - V < level."""
    if p.is_uniform:
        return 0.0
    lo, hi = 1.0, 2.0
    while 1.0 - p.V(hi) >= level:
        lo, hi = hi, 2.0 * hi
        if hi > 1e9:
            return hi
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if 1.0 - p.V(mid) >= level:
            lo = mid
        else:
            hi = mid
    return hi


def volterra_fplus(p: VortexProfile, c: float, xi: float, r_start: float, n_iter: int,
                   r_end: Optional[float] = None, points_per_unit: float = 40.0) -> VolterraResult:
    """
    Successive approximations of f+ = H+(xi r)(1 + f_rem) from infinity.

    Kernel (pi/2) xi^2 s (1 - V(s))/(1 - c) (J1(xi r) Y1(xi s) - J1(xi s) Y1(xi r)),
    split into two cumulative integrals so each iterate costs O(N).
    The window is xi <= (1 - c)^(1/3) and xi r_start >= 1; the s-integrals
    are truncated where 1 - V < 1e-14.
    """
    if not 0.0 < c < 1.0:
        raise ValueError("c must lie in (0, 1)")
    if xi > (1.0 - c) ** (1.0 / 3.0):
        raise ValueError(f"outside the low-frequency window: xi = {xi:.3g} > (1-c)^(1/3)")
    if xi * r_start < 1.0:
        raise ValueError(f"outside the far-field window: xi r_start = {xi * r_start:.3g} < 1")
    s_max = max(_decay_radius(p), (r_end or r_start) * 1.01)
    if p.is_uniform:
        r = np.linspace(r_start, r_end or 2 * r_start, 64)
        z = np.zeros(r.size)
        return VolterraResult(r=r, solution=specfun.hankel_plus(xi * r), remainder=z.astype(complex),
                              dremainder=z, majorant=z, kappa=z, positive=None)
    n = int(max(200, (s_max - r_start) * max(xi, 1.0 / r_start) * points_per_unit))
    n += n % 2 == 0
    # geometric stretch: dense near r_start, spacing ~ 1/(points_per_unit xi) at most
    s = np.linspace(r_start, s_max, n)
    z = xi * s
    J = specfun.j1(z)
    Y = specfun.y1(z)
    H = J + 1j * Y
    A = 0.5 * np.pi * xi * xi * s * (1.0 - p.V(s)) / (1.0 - c)
    h = np.ones(n, dtype=complex)
    rem = np.zeros(n, dtype=complex)
    for _ in range(n_iter):
        gh = A * H * h
        # int_s^smax of (Y1 gh) and (J1 gh)
        iy = _cumulative_from_right(Y * gh, s)
        ij = _cumulative_from_right(J * gh, s)
        new = (J * iy - Y * ij) / H
        rem += new
        h = new
    # majorant with kappa = int_r^oo sup |K1|; |K1| <= A |J Y - J Y| |H(s)/H(r)|
    bound = A * (np.abs(H) ** 2)   # |J1(r)Y1(s)-J1(s)Y1(r)| |H(s)|/|H(r)| <= |H(s)|^2 |H(r)|/|H(r)|
    kappa = _cumulative_from_right(bound, s)
    majorant = _tail_bound(kappa, n_iter)
    keep = s <= (r_end if r_end is not None else s_max)
    return VolterraResult(r=s[keep], solution=(H * (1.0 + rem))[keep], remainder=rem[keep],
                          dremainder=np.zeros(int(keep.sum())), majorant=majorant[keep],
                          kappa=kappa[keep], positive=None)


def _cumulative_from_right(f, s):
    """int_s^{s_end} f by cumulative Simpson on a uniform grid."""
    x = -s[::-1]
    if np.iscomplexobj(f):
        rev = (cumulative_simpson(f.real[::-1], x=x, initial=0.0)
               + 1j * cumulative_simpson(f.imag[::-1], x=x, initial=0.0))
    else:
        rev = cumulative_simpson(f[::-1], x=x, initial=0.0)
    return rev[::-1]

"""
Spectral evolution of one axial mode
====================================

With h = V Delta^-1 omega and g = 2 u u_theta the mode system
dh/dt = -i k A g, dg/dt = -i k h is solved by the functional calculus of A:

    h(t) = cos(k sqrt(A) t) h0 - i sqrt(A) sin(k sqrt(A) t) g0,
    g(t) = -i sin(k sqrt(A) t)/sqrt(A) h0 + cos(k sqrt(A) t) g0.

On the spectral value c (eigenvalue c/k^2) the multipliers are cos(sqrt(c) t),
-i (sqrt(c)/k) sin(sqrt(c) t), -i k sin(sqrt(c) t)/sqrt(c).  Velocities are
recovered from

    u_r = i k V^-1 h,   u_z = -(d/dr + 1/r)(V^-1 h),   u_theta = g/(2u),

with the same difference operator in both, so the discrete divergence
(d/dr + 1/r) u_r + i k u_z vanishes identically.

Reconstruction carries the weight (k^2/c)^2, which grows like xi^4 at small
c and would amplify the O(h^4 xi) endpoint error of the radial transform.
Two rearrangements keep every weight bounded by (k^2/c):

- h0 = -A omega0, so its coefficients are -(c/k^2) times those of omega0;
- cos = 1 - 2 sin^2(./2), so the identity part returns h0, g0 exactly and
  only the change is synthesized from the basis.

Evolved states carry their spectral coefficients, so evolving them further
continues in coefficient space and the group law holds to rounding.  The
round trip through the radial grid is checked separately by
:func:`retransform_check`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from .oracle import l2_rdr
from .profiles import VortexProfile
from .spectral import (BasisTable, RadialFunction, _tilde_transform, build_basis_table,
                       delta1k_inverse, multiplier_apply)


@dataclass(frozen=True)
class ModeState:
    """
    One axial Fourier mode at time t.

    Attributes
    ----------
    k, t : float
    grid : ndarray
    h_hat, g_hat : ndarray (complex)
    ur, utheta, uz : ndarray (complex) or None
        Recovered velocities.
    clip_sensitivity : float
        Largest c-clip sensitivity of the spectral evaluation (0 at t = 0).
    omega_hat : ndarray or None
        Initial vorticity when h_hat = V Delta^-1 omega_hat (used to keep the
        reconstruction weights bounded).
    coefficients : tuple or None
        (c_nodes, a_h, a_g) normalized spectral coefficients of an evolved state.
    """

    k: float
    t: float
    grid: np.ndarray
    h_hat: np.ndarray
    g_hat: np.ndarray
    ur: Optional[np.ndarray] = None
    utheta: Optional[np.ndarray] = None
    uz: Optional[np.ndarray] = None
    clip_sensitivity: float = 0.0
    omega_hat: Optional[np.ndarray] = None
    coefficients: Optional[tuple] = None

    def velocities(self) -> dict:
        return {"ur": self.ur, "utheta": self.utheta, "uz": self.uz}


def initial_mode(omega0: RadialFunction, utheta0: RadialFunction, p: VortexProfile,
                 k: float) -> ModeState:
    """h0 = V Delta^-1 omega0, g0 = 2 u utheta0."""
    if not np.array_equal(omega0.grid, utheta0.grid):
        raise ValueError("grid mismatch")
    grid = omega0.grid
    om = RadialFunction(grid, np.asarray(omega0.values, dtype=complex))
    h0 = p.V(grid) * delta1k_inverse(om, k).values
    g0 = 2.0 * p.u(grid) * np.asarray(utheta0.values, dtype=complex)
    return recover_velocity(ModeState(k=k, t=0.0, grid=grid, h_hat=h0, g_hat=g0,
                                      omega_hat=om.values), p)


def _radial_derivative(f, grid):
    return np.gradient(f, grid, edge_order=2)


def recover_velocity(s: ModeState, p: VortexProfile) -> ModeState:
    """Fill ur, utheta, uz from h_hat, g_hat."""
    grid = s.grid
    psi = s.h_hat / p.V(grid)
    ur = 1j * s.k * psi
    uz = -(_radial_derivative(psi, grid) + psi / grid)
    ut = s.g_hat / (2.0 * p.u(grid))
    return replace(s, ur=ur, uz=uz, utheta=ut)


def divergence(s: ModeState) -> np.ndarray:
    """(d/dr + 1/r) u_r + i k u_z with the recovery difference operator."""
    return _radial_derivative(s.ur, s.grid) + s.ur / s.grid + 1j * s.k * s.uz


class SpectralEvolver:
    """
    Evolves one initial mode on a basis table; the transforms of h0 and g0
    are computed once and reused for every time.
    """

    def __init__(self, s0: ModeState, table: BasisTable):
        if abs(abs(s0.k) - table.k) > 1e-12 * table.k:
            raise ValueError("basis table does not match the mode wavenumber")
        if not np.allclose(s0.grid, table.grid, rtol=1e-12):
            raise ValueError("mode grid does not match the basis grid")
        self.s0 = s0
        self.table = table
        c = table.quad.c
        k2 = table.k ** 2
        self.sq = np.sqrt(c)
        cached = s0.coefficients
        if cached is not None and np.array_equal(cached[0], c):
            self.ah, self.ag = cached[1], cached[2]
        elif s0.omega_hat is not None:
            self.ah = -(c / k2) * _tilde_transform(table, s0.omega_hat)
        else:
            self.ah = _tilde_transform(table, s0.h_hat)
        if cached is None or not np.array_equal(cached[0], c):
            self.ag = _tilde_transform(table, s0.g_hat)
        # (k^2/c)^2 a_h with the factor c/k^2 already cancelled when omega is known
        self._wh = (k2 / c) ** 2 * self.ah

    def coefficients(self, t: float):
        """Evolved normalized coefficients (a_h(t), a_g(t)) on the c-nodes."""
        k = self.table.k
        cs, sn = np.cos(self.sq * t), np.sin(self.sq * t)
        ah = cs * self.ah - 1j * (self.sq / k) * sn * self.ag
        ag = -1j * k * sn / self.sq * self.ah + cs * self.ag
        return ah, ag

    def spectral_energy(self, t: float = 0.0) -> float:
        """Mode energy from the c-side: 1/(pi k^2) int (k^2/c)^3|a_h|^2 + (k^2/c)^2|a_g|^2."""
        ah, ag = self.coefficients(t)
        q = self.table.quad
        w = (self.table.k ** 2 / q.c)
        e = np.sum(q.weights * (w ** 3 * np.abs(ah) ** 2 + w ** 2 * np.abs(ag) ** 2))
        return float(e / (math.pi * self.table.k ** 2))

    def state(self, t: float) -> ModeState:
        if t < 0:
            raise ValueError("t must be nonnegative")
        s = self.s0
        if t == 0.0:
            return replace(s, h_hat=s.h_hat.copy(), g_hat=s.g_hat.copy(),
                           ur=None if s.ur is None else s.ur.copy(),
                           uz=None if s.uz is None else s.uz.copy(),
                           utheta=None if s.utheta is None else s.utheta.copy())
        k = self.table.k
        sq = self.sq
        sn = np.sin(sq * t)
        s2 = -2.0 * np.sin(0.5 * sq * t) ** 2          # cos - 1
        k2c = k * k / self.table.quad.c
        # weights already multiplied by (k^2/c)^2; pass them with unit multiplier
        wh = s2 * self._wh - 1j * (sq / k) * sn * k2c ** 2 * self.ag
        wg = -1j * k * sn / sq * self._wh + s2 * k2c ** 2 * self.ag
        dh, sh = multiplier_apply(self.table, wh, None)
        dg, sg = multiplier_apply(self.table, wg, None)
        out = ModeState(k=s.k, t=float(t), grid=s.grid, h_hat=s.h_hat + dh,
                        g_hat=s.g_hat + dg, clip_sensitivity=max(sh, sg),
                        coefficients=(self.table.quad.c,) + self.coefficients(t))
        return recover_velocity(out, self.table.profile)


def evolve_mode(s0: ModeState, t: float, table: BasisTable) -> ModeState:
    """State at time t by the spectral functional calculus (t = 0 is the identity)."""
    return SpectralEvolver(s0, table).state(t)


def retransform_check(s0: ModeState, t1: float, t2: float, table: BasisTable,
                      tol: float = 1e-2, refine: bool = True) -> dict:
    """
    Compare evolution to t1 + t2 with evolution to t1, a fresh transform of
    the radial state, and evolution by t2.  This tests the c-quadrature and
    the radial transform together; when the relative L^2 difference exceeds
    ``tol`` and ``refine`` is set, the check is repeated once on a table whose
    c-panels are halved.

    Returns a dict with the error per component, the table used and whether
    refinement happened.
    """
    def run(tab):
        direct = evolve_mode(s0, t1 + t2, tab)
        mid = evolve_mode(s0, t1, tab)
        mid = replace(mid, coefficients=None)
        two = evolve_mode(mid, t2, tab)
        errs = {}
        for n in ("ur", "utheta", "uz"):
            a, b = getattr(direct, n), getattr(two, n)
            den = l2_rdr(a, tab.grid)
            errs[n] = l2_rdr(b - a, tab.grid) / den if den > 0 else l2_rdr(b - a, tab.grid)
        return errs

    errs = run(table)
    refined = False
    if refine and max(errs.values()) > tol:
        table = build_basis_table(table.profile, table.k, table.grid, quad=table.quad.refine())
        errs = run(table)
        refined = True
    return {"errors": errs, "max_error": max(errs.values()), "refined": refined,
            "table": table, "passed": max(errs.values()) <= tol}


def mirror(s: ModeState) -> ModeState:
    """The -k partner of a real field: every amplitude conjugated."""
    conj = lambda x: None if x is None else np.conj(x)
    return replace(s, k=-s.k, h_hat=np.conj(s.h_hat), g_hat=np.conj(s.g_hat),
                   ur=conj(s.ur), utheta=conj(s.utheta), uz=conj(s.uz))


def synthesize_z(modes: Sequence[ModeState], z_grid) -> dict:
    """
    Real fields sum_k u_k(r) exp(i k z) on (r, z) for a mode set closed under
    k -> -k; each pair is conjugate-symmetrized.

    Returns {'ur', 'utheta', 'uz'} arrays of shape (n_r, n_z).
    """
    z = np.asarray(z_grid, dtype=float)
    if not modes:
        raise ValueError("empty mode set")
    ks = [m.k for m in modes]
    for kk in ks:
        if not any(abs(kk + o) <= 1e-12 * max(1.0, abs(kk)) for o in ks):
            raise ValueError(f"mode set not symmetric under k -> -k (missing {-kk})")
    if len(set(np.round(ks, 12))) != len(ks):
        raise ValueError("duplicate wavenumbers")
    grid = modes[0].grid
    out = {}
    for name in ("ur", "utheta", "uz"):
        acc = np.zeros((grid.size, z.size))
        for m in modes:
            if m.k <= 0:
                continue
            partner = next(o for o in modes if abs(o.k + m.k) <= 1e-12 * max(1.0, abs(m.k)))
            a = getattr(m, name)
            b = getattr(partner, name)
            sym = 0.5 * (a + np.conj(b))
            acc += 2.0 * np.real(sym[:, None] * np.exp(1j * m.k * z)[None, :])
        out[name] = acc
    return out


@dataclass(frozen=True)
class DecayFit:
    """
    Power-law fit s(t) ~ C t^-p.

    Attributes
    ----------
    times, sup_norms : ndarray
    p, C : float
    residual : float
        RMS of the log residuals.
    """

    times: np.ndarray
    sup_norms: np.ndarray
    p: float
    C: float
    residual: float


def decay_fit(times, sup_norms) -> DecayFit:
    """Least-squares fit of log s = log C - p log t."""
    t = np.asarray(times, dtype=float)
    s = np.asarray(sup_norms, dtype=float)
    if t.size < 8 or t.shape != s.shape:
        raise ValueError("need at least 8 samples of equal length")
    if np.any(np.diff(t) <= 0) or t[0] <= 0:
        raise ValueError("times must be positive and increasing")
    if np.any(s <= 0) or not np.all(np.isfinite(s)):
        raise ValueError("sup norms must be positive")
    X = np.column_stack([np.ones_like(t), np.log(t)])
    coef, *_ = np.linalg.lstsq(X, np.log(s), rcond=None)
    res = np.log(s) - X @ coef
    return DecayFit(times=t, sup_norms=s, p=float(-coef[1]), C=float(math.exp(coef[0])),
                    residual=float(math.sqrt(np.mean(res ** 2))))

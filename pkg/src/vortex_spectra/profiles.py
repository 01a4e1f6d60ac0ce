"""
Columnar vortex profiles
========================

A profile is an angular velocity u(r) with derived quantities

    Omega(r) = 2 u + r u'        (vorticity-like combination)
    V(r)     = 2 u Omega         (the potential of the eigenvalue problem)

Three kinds are supported:

- ``uniform``           u = 1/2, so V = Omega = 1 (exactly solvable reference)
- ``coriolis_example``  u = (1 - beta <r>^-3)/2 with <r> = r + 1, beta = 1/3
- ``tabulated``         clamped cubic spline through (r, u) samples

All evaluators go through one numba kernel (``_u_derivs``) so the connection
solver can evaluate V, V', V'' inside jitted code with the same arithmetic
as the Python-side methods.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from enum import IntEnum
from typing import Optional, Sequence

import numba
import numpy as np
from scipy.interpolate import CubicSpline

logger = logging.getLogger(__name__)

KIND_UNIFORM = 0
KIND_CORIOLIS = 1
KIND_TABULATED = 2

#: Default beta of the Coriolis example.
CORIOLIS_BETA = 1.0 / 3.0


class ProfileKind(IntEnum):
    uniform = KIND_UNIFORM
    coriolis_example = KIND_CORIOLIS
    tabulated = KIND_TABULATED


@numba.njit(cache=True)
def _u_derivs(kind, beta, knots, coefs, tail, r):
    """Return (u, u', u'', u''') at one radius."""
    if kind == KIND_UNIFORM:
        return 0.5, 0.0, 0.0, 0.0
    if kind == KIND_CORIOLIS:
        s = 1.0 / (r + 1.0)
        s3 = s * s * s
        return (0.5 * (1.0 - beta * s3), 1.5 * beta * s3 * s,
                -6.0 * beta * s3 * s * s, 30.0 * beta * s3 * s3)
    # tabulated: piecewise cubic inside, algebraic tail beyond the last knot
    n = knots.shape[0]
    if r > knots[n - 1]:
        u_inf, b = tail[0], tail[1]
        s = 1.0 / (r + 1.0)
        s3 = s * s * s
        return (u_inf - b * s3, 3.0 * b * s3 * s, -12.0 * b * s3 * s * s,
                60.0 * b * s3 * s3)
    i = np.searchsorted(knots, r) - 1
    if i < 0:
        i = 0
    if i > n - 2:
        i = n - 2
    d = r - knots[i]
    c3, c2, c1, c0 = coefs[0, i], coefs[1, i], coefs[2, i], coefs[3, i]
    u = ((c3 * d + c2) * d + c1) * d + c0
    du = (3.0 * c3 * d + 2.0 * c2) * d + c1
    ddu = 6.0 * c3 * d + 2.0 * c2
    return u, du, ddu, 6.0 * c3


@numba.njit(cache=True)
def _v_derivs(kind, beta, knots, coefs, tail, r):
    """Return (V, V', V'') at one radius from the u-derivatives."""
    u, du, ddu, dddu = _u_derivs(kind, beta, knots, coefs, tail, r)
    om = 2.0 * u + r * du
    dom = 3.0 * du + r * ddu
    ddom = 4.0 * ddu + r * dddu
    v = 2.0 * u * om
    dv = 2.0 * du * om + 2.0 * u * dom
    ddv = 2.0 * ddu * om + 4.0 * du * dom + 2.0 * u * ddom
    return v, dv, ddv


@numba.njit(cache=True)
def _eval_many(kind, beta, knots, coefs, tail, r, out):
    for j in range(r.shape[0]):
        u, du, ddu, dddu = _u_derivs(kind, beta, knots, coefs, tail, r[j])
        v, dv, ddv = _v_derivs(kind, beta, knots, coefs, tail, r[j])
        out[0, j] = u
        out[1, j] = du
        out[2, j] = 2.0 * u + r[j] * du
        out[3, j] = v
        out[4, j] = dv
        out[5, j] = ddv


@dataclass(frozen=True)
class VortexProfile:
    """
    Immutable vortex profile.

    Attributes
    ----------
    kind : ProfileKind
        Which family the profile belongs to.
    params : tuple of float
        Family parameters (``(beta,)`` for the Coriolis example, empty otherwise).
    V0 : float
        V(0).
    a0 : float
        Fitted far-field coefficient in 1 - V ~ a0 (r+1)^-3 (0 for uniform).
    knots, coefs, tail : ndarray
        Spline data for tabulated profiles; dummies otherwise.
    """

    kind: ProfileKind
    params: tuple = ()
    V0: float = 1.0
    a0: float = 0.0
    knots: np.ndarray = field(default_factory=lambda: np.zeros(2), repr=False)
    coefs: np.ndarray = field(default_factory=lambda: np.zeros((4, 1)), repr=False)
    tail: np.ndarray = field(default_factory=lambda: np.zeros(2), repr=False)

    @property
    def beta(self) -> float:
        return float(self.params[0]) if self.kind == ProfileKind.coriolis_example else 0.0

    @property
    def is_uniform(self) -> bool:
        return self.kind == ProfileKind.uniform

    @property
    def numba_args(self):
        """Positional arguments expected by the jitted profile kernels."""
        return (int(self.kind), self.beta, self.knots, self.coefs, self.tail)

    def evaluate(self, r) -> np.ndarray:
        """Rows (u, u', Omega, V, V', V'') at the radii ``r``."""
        r = np.atleast_1d(np.asarray(r, dtype=float))
        out = np.empty((6, r.size))
        _eval_many(*self.numba_args, r.ravel(), out)
        return out

    def _row(self, r, i):
        scalar = np.ndim(r) == 0
        vals = self.evaluate(r)[i]
        return float(vals[0]) if scalar else vals.reshape(np.shape(r))

    def u(self, r):
        return self._row(r, 0)

    def du(self, r):
        return self._row(r, 1)

    def Omega(self, r):
        return self._row(r, 2)

    def V(self, r):
        return self._row(r, 3)

    def dV(self, r):
        return self._row(r, 4)

    def d2V(self, r):
        return self._row(r, 5)


@dataclass(frozen=True)
class AssumptionReport:
    """
    Outcome of the admissibility checks.

    Attributes
    ----------
    A1, A2, A3 : bool
        Monotonicity V' > 0, range V in [V(0), 1), algebraic far field.
    a0 : float
        Least-squares fit of (1 - V)(r + 1)^3 over the last decade of the grid.
    max_violation : float
        Largest violation magnitude over the three checks.
    degenerate : bool
        True for the homogeneous reference profile.
    message : str
    """

    A1: bool
    A2: bool
    A3: bool
    a0: float
    max_violation: float
    degenerate: bool
    message: str


def _fit_a0(prof: VortexProfile, rmax: float, n: int = 256) -> float:
    r = np.linspace(rmax / 10.0, rmax, n)
    y = (1.0 - prof.V(r)) * (r + 1.0) ** 3
    # least squares of y = a0 + a1/(r+1): the correction absorbs the O(r^-4) term
    X = np.column_stack([np.ones_like(r), 1.0 / (r + 1.0)])
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    return float(coef[0])


def _tail_from_end(r_end: float, u_end: float, du_end: float) -> np.ndarray:
    b = du_end * (r_end + 1.0) ** 4 / 3.0
    return np.array([u_end + b * (r_end + 1.0) ** -3, b])


def make_profile(kind, params: Sequence[float] = (), *, r=None, u=None) -> VortexProfile:
    """
    Build a profile.

    Parameters
    ----------
    kind : str or ProfileKind
        ``uniform``, ``coriolis_example`` or ``tabulated``.
    params : sequence of float
        Optional ``(beta,)`` for the Coriolis example.
    r, u : array_like, optional
        Samples for a tabulated profile (strictly increasing r, at least 4 points).

    Returns
    -------
    VortexProfile
    """
    try:
        kind = ProfileKind[kind] if isinstance(kind, str) else ProfileKind(kind)
    except (KeyError, ValueError):
        raise ValueError(f"unknown profile kind {kind!r}") from None

    if kind == ProfileKind.uniform:
        return VortexProfile(kind, (), V0=1.0, a0=0.0)

    if kind == ProfileKind.coriolis_example:
        beta = float(params[0]) if len(params) else CORIOLIS_BETA
        if not 0.0 < beta < 1.0:
            raise ValueError("beta must lie in (0, 1)")
        u0 = 0.5 * (1.0 - beta)
        # Omega(0) = 2 u(0); far field 1 - V = (beta/2) <r>^-3 + O(<r>^-6)
        return VortexProfile(kind, (beta,), V0=4.0 * u0 * u0, a0=0.5 * beta)

    if r is None or u is None:
        raise ValueError("tabulated profile requires r and u samples")
    r = np.asarray(r, dtype=float)
    u = np.asarray(u, dtype=float)
    if r.ndim != 1 or r.shape != u.shape:
        raise ValueError("r and u must be 1-D arrays of equal length")
    if r.size < 4:
        raise ValueError("tabulated profile needs at least 4 points")
    if np.any(np.diff(r) <= 0.0):
        raise ValueError("tabulated r-grid must be strictly increasing")
    if not (np.all(np.isfinite(r)) and np.all(np.isfinite(u))):
        raise ValueError("tabulated samples must be finite")
    # one-sided second-order differences for the clamped end slopes
    d0 = _one_sided_slope(r[:3], u[:3])
    dn = -_one_sided_slope(-r[::-1][:3], u[::-1][:3])
    spl = CubicSpline(r, u, bc_type=((1, d0), (1, dn)))
    coefs = np.ascontiguousarray(spl.c)
    tail = _tail_from_end(r[-1], u[-1], dn)
    prof = VortexProfile(kind, (), V0=0.0, a0=0.0,
                         knots=np.ascontiguousarray(r), coefs=coefs, tail=tail)
    v0 = float(prof.V(0.0))
    a0 = _fit_a0(prof, max(10.0 * r[-1], 100.0))
    return VortexProfile(kind, (), V0=v0, a0=a0, knots=prof.knots,
                         coefs=coefs, tail=tail)


def _one_sided_slope(x, y):
    # derivative at x[0] of the quadratic through three points
    h1, h2 = x[1] - x[0], x[2] - x[0]
    return (-(h1 + h2) / (h1 * h2) * y[0] + h2 / (h1 * (h2 - h1)) * y[1]
            - h1 / (h2 * (h2 - h1)) * y[2])


def load_tabulated(path) -> VortexProfile:
    """Read a two-column ``r,u`` CSV (with header) into a tabulated profile."""
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header[:2]] != ["r", "u"]:
            raise ValueError(f"{path}: expected header 'r,u'")
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not x.strip() for x in row):
                continue
            if len(row) < 2:
                raise ValueError(f"{path}:{lineno}: expected two columns")
            try:
                rows.append((float(row[0]), float(row[1])))
            except ValueError:
                raise ValueError(f"{path}:{lineno}: non-numeric entry") from None
    if not rows:
        raise ValueError(f"{path}: no data rows")
    arr = np.array(rows)
    return make_profile("tabulated", r=arr[:, 0], u=arr[:, 1])


def check_assumptions(p: VortexProfile, rmax: float = 100.0, n: int = 512,
                      tol: float = 1e-12) -> AssumptionReport:
    """
    Test monotonicity, range and far-field decay of V on a sample grid.

    Violations are reported, never raised.
    """
    if rmax <= 0 or n < 16:
        raise ValueError("need rmax > 0 and n >= 16")
    r = np.linspace(rmax / n, rmax, n)
    ev = p.evaluate(r)
    V, dV = ev[3], ev[4]
    if p.is_uniform:
        return AssumptionReport(False, False, False, 0.0, 0.0, True,
                                "degenerate homogeneous profile (V' = 0, V = 1)")
    a1_viol = float(max(0.0, -dV.min()))
    A1 = bool(np.all(dV > 0.0))
    a2_viol = float(max(0.0, p.V0 - V.min() - tol, V.max() - 1.0 + tol))
    A2 = bool(np.all(V >= p.V0 - tol) and np.all(V < 1.0))
    a0 = _fit_a0(p, rmax)
    # the far field is algebraic if the fitted coefficient is positive and the
    # normalized tail is flat over the last decade
    tail = (1.0 - p.V(np.linspace(rmax / 10, rmax, 64))) * (np.linspace(rmax / 10, rmax, 64) + 1) ** 3
    spread = float(np.ptp(tail) / max(abs(a0), 1e-300))
    A3 = bool(a0 > 0.0 and spread < 0.5)
    a3_viol = 0.0 if A3 else spread
    msgs = []
    if not A1:
        msgs.append(f"V' <= 0 somewhere (min V' = {dV.min():.3e})")
    if not A2:
        msgs.append("V leaves [V(0), 1)")
    if not A3:
        msgs.append("far field not of the form 1 - a0 r^-3")
    return AssumptionReport(A1, A2, A3, a0, max(a1_viol, a2_viol, a3_viol), False,
                            "; ".join(msgs) if msgs else "ok")


def turning_point(p: VortexProfile, c: float, tol: float = 1e-12) -> Optional[float]:
    """
    Radius r_c with V(r_c) = c, or None when c lies below V(0).

    Uses bisection, relying on V being increasing.
    """
    if not 0.0 < c < 1.0:
        raise ValueError("c must lie in (0, 1)")
    if p.is_uniform or c < p.V0:
        return None
    if c == p.V0:
        return 0.0
    lo, hi = 0.0, 1.0
    while p.V(hi) < c:
        lo, hi = hi, 2.0 * hi
        if hi > 1e12:
            raise ValueError("no turning point found; is V increasing to 1?")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if p.V(mid) < c:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def Q(p: VortexProfile, r, c: float):
    """Normalized potential (V(r) - c)/(1 - c)."""
    if c >= 1.0:
        raise ValueError("Q is undefined at c = 1")
    if c <= 0.0:
        raise ValueError("c must be positive")
    return (p.V(r) - c) / (1.0 - c)

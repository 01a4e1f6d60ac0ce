"""
Langer geometry and parameter regimes
=====================================

For a spectral value c and frequency xi = k sqrt(1/c - 1) the eigenvalue
equation reads

    phi'' + phi'/r - phi/r^2 + xi^2 Q(r, c) phi = 0,   Q = (V - c)/(1 - c).

The Langer variable tau straightens the turning point r_c = V^-1(c):

    tau(r) = sgn(r - r_c) * ((3/2) |int_{r_c}^r sqrt|Q| ds|)^(2/3),

(lower limit 0 when c < V(0)), with q = Q/tau, phase x = xi sgn(r - r_c)|tau|^(3/2)
and error potential

    err = q''/(4 q^2) - 5 q'^2/(16 q^3) + 3/(4 r^2 q).

The (c, xi) plane is split into seven regimes D1..D7 (low frequency, small
spectrum medium/high frequency, barrier medium/high frequency, large spectrum
high/medium frequency), each with a reference magnitude W0 for the Wronskian
and a weight rho0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np
from scipy.integrate import quad

from .profiles import VortexProfile, turning_point

DEFAULT_M = 10.0
DEFAULT_DELTA = 0.1

# half-width (relative) of the window around r_c where err_pot is obtained by
# polynomial interpolation instead of the cancelling closed form
_RC_WINDOW = 2e-3

_QUAD = dict(epsabs=1e-13, epsrel=1e-13, limit=400)


def xi_of(c: float, k: float) -> float:
    """Rescaled frequency xi = k sqrt(1/c - 1)."""
    return abs(k) * math.sqrt(1.0 / c - 1.0)


def c_of(xi: float, k: float) -> float:
    """Inverse of :func:`xi_of`."""
    return k * k / (xi * xi + k * k)


def _check_c(c):
    if not 0.0 < c < 1.0:
        raise ValueError("c must lie in (0, 1)")


# ---------------------------------------------------------------------------
# integrals of sqrt|Q|
# ---------------------------------------------------------------------------

def _absq(p: VortexProfile, c: float):
    return lambda s: abs(p.V(s) - c) / (1.0 - c)


def sqrtq_integral(p: VortexProfile, c: float, a: float, b: float,
                   rc: Optional[float] = None) -> float:
    """
    int_a^b sqrt|Q(s, c)| ds for a <= b, with the square-root endpoint at the
    turning point removed by s = r_c +- w^2.
    """
    _check_c(c)
    if b <= a:
        return 0.0
    if p.is_uniform:
        return b - a
    if rc is None:
        rc = turning_point(p, c)
    absq = _absq(p, c)
    total = 0.0
    pieces = [(a, b)]
    if rc is not None and a < rc < b:
        pieces = [(a, rc), (rc, b)]
    for lo, hi in pieces:
        if rc is not None and (lo == rc or hi == rc):
            # endpoint substitution s = rc +- w^2 over a short stretch
            d = min(hi - lo, max(0.5, 0.5 * rc))
            if lo == rc:
                f = lambda w: 2.0 * w * math.sqrt(absq(rc + w * w))
                total += quad(f, 0.0, math.sqrt(d), **_QUAD)[0]
                lo = rc + d
            else:
                f = lambda w: 2.0 * w * math.sqrt(absq(rc - w * w))
                total += quad(f, 0.0, math.sqrt(d), **_QUAD)[0]
                hi = rc - d
            if hi <= lo:
                continue
        total += _smooth_sqrtq(p, c, lo, hi)
    return total


def _smooth_sqrtq(p, c, lo, hi):
    absq = _absq(p, c)
    if hi - lo <= 50.0:
        return quad(lambda s: math.sqrt(absq(s)), lo, hi, **_QUAD)[0]
    # long stretch: integrate sqrt(Q) - 1, which decays like s^-3
    def dev(s):
        qv = (p.V(s) - c) / (1.0 - c)
        return (qv - 1.0) / (math.sqrt(abs(qv)) + 1.0) if qv > 0 else math.sqrt(-qv) - 1.0
    edges = np.geomspace(max(lo, 1e-12), hi, 12)
    edges[0], edges[-1] = lo, hi
    acc = 0.0
    for x0, x1 in zip(edges[:-1], edges[1:]):
        acc += quad(dev, x0, x1, **_QUAD)[0]
    return (hi - lo) + acc


def phase_integral(p: VortexProfile, c: float, r: float) -> float:
    """
    Branch phase used to normalize the outgoing solution: int_0^r sqrt(Q) for
    c <= V(0), int_{r_c}^r sqrt(Q) for c > V(0) (r >= r_c).
    """
    rc = turning_point(p, c)
    lower = 0.0 if rc is None else rc
    if r < lower:
        raise ValueError("phase integral requested inside the barrier")
    return sqrtq_integral(p, c, lower, r, rc)


def barrier_action(p: VortexProfile, c: float, xi: float) -> float:
    """
    Log of the growth of the regular solution across the evanescent zone,

        log(r_c) + int_0^{r_c} (sqrt(xi^2 |Q| + s^-2) - 1/s) ds,

    a Langer-corrected WKB action (the 1/s^2 term reproduces the phi ~ xi r
    behaviour at the origin).  Zero when there is no turning point.
    """
    rc = turning_point(p, c)
    if rc is None or rc <= 0.0:
        return 0.0
    absq = _absq(p, c)

    def f(u):
        s = rc * (1.0 - u * u)
        a2 = xi * xi * absq(s)
        # sqrt(a2 + 1/s^2) - 1/s without cancellation
        val = a2 * s / (math.sqrt(a2 * s * s + 1.0) + 1.0)
        return val * 2.0 * rc * u
    return math.log(rc) + quad(f, 0.0, 1.0, **_QUAD)[0]


# ---------------------------------------------------------------------------
# pointwise Langer quantities
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LangerPoint:
    """
    Langer quantities at one radius.

    Attributes
    ----------
    r, c, xi : float
    tau : float
        Langer variable (negative inside the barrier).
    q : float
        Q / tau (positive).
    x : float
        Phase xi sgn(r - r_c)|tau|^(3/2).
    err_pot : float
        Error potential of the Langer comparison equation.
    """

    r: float
    c: float
    xi: float
    tau: float
    q: float
    x: float
    err_pot: float


def langer_tau(p: VortexProfile, r: float, c: float) -> float:
    _check_c(c)
    if r <= 0.0:
        raise ValueError("r must be positive")
    rc = turning_point(p, c)
    if rc is None:
        return (1.5 * sqrtq_integral(p, c, 0.0, r, rc)) ** (2.0 / 3.0)
    if r >= rc:
        return (1.5 * sqrtq_integral(p, c, rc, r, rc)) ** (2.0 / 3.0)
    return -((1.5 * sqrtq_integral(p, c, r, rc, rc)) ** (2.0 / 3.0))


def _qderivs(p, r, c, tau):
    """q, q', q'' from Q and tau, using tau' = q^(1/2)."""
    ev = p.evaluate(r)
    Qv = (ev[3, 0] - c) / (1.0 - c)
    dQ = ev[4, 0] / (1.0 - c)
    d2Q = ev[5, 0] / (1.0 - c)
    q = Qv / tau
    sq = math.sqrt(q)
    dq = (dQ - q * sq) / tau
    d2q = (d2Q - 2.5 * sq * dq) / tau
    return q, dq, d2q


def _err_closed(p, r, c, tau):
    q, dq, d2q = _qderivs(p, r, c, tau)
    return d2q / (4.0 * q * q) - 5.0 * dq * dq / (16.0 * q ** 3) + 3.0 / (4.0 * r * r * q)


def langer_point(p: VortexProfile, r: float, c: float, xi: float) -> LangerPoint:
    """Evaluate tau, q, x and the error potential at (r, c, xi)."""
    _check_c(c)
    if r <= 0.0:
        raise ValueError("r must be positive")
    if xi <= 0.0:
        raise ValueError("xi must be positive")
    rc = turning_point(p, c)
    tau = langer_tau(p, r, c)
    if rc is not None and abs(r - rc) <= _RC_WINDOW * max(rc, 0.1):
        # closed form cancels at r_c: interpolate err from both sides
        h = _RC_WINDOW * max(rc, 0.1)
        nodes = np.array([-4, -3, -2, 2, 3, 4], dtype=float) * h + rc
        nodes = nodes[nodes > 0]
        vals = np.array([_err_closed(p, s, c, langer_tau(p, s, c)) for s in nodes])
        coef = np.polyfit(nodes - rc, vals, len(nodes) - 1)
        err = float(np.polyval(coef, r - rc))
        ev = p.evaluate(rc)
        q = (ev[4, 0] / (1.0 - c)) ** (2.0 / 3.0) if tau == 0.0 else \
            (p.V(r) - c) / (1.0 - c) / tau
    else:
        q = (p.V(r) - c) / (1.0 - c) / tau
        err = _err_closed(p, r, c, tau)
    x = xi * math.copysign(abs(tau) ** 1.5, tau) if tau != 0.0 else 0.0
    return LangerPoint(r=r, c=c, xi=xi, tau=tau, q=q, x=x, err_pot=err)


# ---------------------------------------------------------------------------
# regimes
# ---------------------------------------------------------------------------

class Region(str, Enum):
    D1 = "D1"
    D2 = "D2"
    D3 = "D3"
    D4 = "D4"
    D5 = "D5"
    D6 = "D6"
    D7 = "D7"


@dataclass(frozen=True)
class RegimeTag:
    """
    Regime of a parameter point.

    Attributes
    ----------
    region : Region
    M, delta : float
        Regime constants used.
    V0 : float
    rc : float or None
        Turning point (None below V(0)).
    upper : float
        Upper xi-edge of the region at this c (inf for unbounded regions).
    """

    region: Region
    M: float
    delta: float
    V0: float
    rc: Optional[float]
    upper: float


def _check_regime_args(p, c, xi, M, delta):
    _check_c(c)
    if c == p.V0:
        raise ValueError("c = V(0) is excluded from the regime decomposition")
    if xi <= 0.0:
        raise ValueError("xi must be positive")
    if M < 2.0:
        raise ValueError("M must be at least 2")
    if not 0.0 < delta < 0.5:
        raise ValueError("delta must lie in (0, 0.5)")


def classify_regime(p: VortexProfile, c: float, xi: float, M: float = DEFAULT_M,
                    delta: float = DEFAULT_DELTA) -> RegimeTag:
    """
    Assign (c, xi) to one of D1..D7.

    Edges use constant 1 at the stated powers of M, delta and are closed on
    the upper side, so a point on an edge belongs to the lower-indexed
    region.  Large spectrum (c >= 1 - delta):

        D1: xi <= min(1, M^2 a^(1/2), M a^(1/3)),  D7: up to M a^(1/3),  D6: beyond,

    with a = 1 - c.  Otherwise D1 is xi <= min(1, M^2 a^(1/2)); below V(0) the
    small-spectrum band splits into D2 (xi <= (V0 - c)^(-3/2)) and D3, above
    V(0) into D4 (xi <= (c - V0)^(-3/2)) and D5.
    """
    _check_regime_args(p, c, xi, M, delta)
    V0 = p.V0
    a = 1.0 - c
    rc = turning_point(p, c)

    def tag(region, upper):
        return RegimeTag(Region(region), M, delta, V0, rc, upper)

    if c >= 1.0 - delta:
        b7 = M * a ** (1.0 / 3.0)
        b1 = min(1.0, M * M * math.sqrt(a), b7)
        if xi <= b1:
            return tag("D1", b1)
        if xi <= b7:
            return tag("D7", b7)
        return tag("D6", math.inf)
    b1 = min(1.0, M * M * math.sqrt(a))
    if xi <= b1:
        return tag("D1", b1)
    edge = abs(c - V0) ** -1.5
    if c < V0:
        return tag("D2", edge) if xi <= edge else tag("D3", math.inf)
    return tag("D4", edge) if xi <= edge else tag("D5", math.inf)


def w0_reference(p: VortexProfile, c: float, xi: float, M: float = DEFAULT_M,
                 delta: float = DEFAULT_DELTA):
    """
    Reference magnitude W0 of the Wronskian and the weight rho0.

    D1: (1, 1 - c); D2, D4: (xi^(1/3), xi^(-2/3)); D3: (|c - V0|^(-1/2), |c - V0|).
    In the barrier regimes D5, D6, D7 the intermediate connection constants
    are replaced by the tunnelling envelope 2 xi exp(barrier_action), with
    rho0 = (1 - c)|c - V0| in D5/D6 and 1 - c in D7.

    Returns
    -------
    (W0, rho0) : tuple of float
    """
    tag = classify_regime(p, c, xi, M, delta)
    return _w0_from_tag(p, c, xi, tag)


def log_w0_reference(p, c, xi, M=DEFAULT_M, delta=DEFAULT_DELTA) -> float:
    """Natural log of W0 (finite even where W0 overflows)."""
    tag = classify_regime(p, c, xi, M, delta)
    return _log_w0(p, c, xi, tag)


def _log_w0(p, c, xi, tag):
    reg = tag.region
    if reg == Region.D1:
        return 0.0
    if reg in (Region.D2, Region.D4):
        return math.log(xi) / 3.0
    if reg == Region.D3:
        return -0.5 * math.log(abs(c - p.V0))
    return math.log(2.0 * xi) + barrier_action(p, c, xi)


def _w0_from_tag(p, c, xi, tag):
    reg = tag.region
    a = 1.0 - c
    lw = _log_w0(p, c, xi, tag)
    w0 = math.exp(lw) if lw < 709.0 else math.inf
    if reg == Region.D1:
        rho = a
    elif reg in (Region.D2, Region.D4):
        rho = xi ** (-2.0 / 3.0)
    elif reg == Region.D3:
        rho = abs(c - p.V0)
    elif reg == Region.D7:
        rho = a
    else:
        rho = a * abs(c - p.V0)
    return w0, rho


def regime_map(p: VortexProfile, c_values, xi_values, M=DEFAULT_M, delta=DEFAULT_DELTA):
    """Rows (c, xi, region, W0, rho0) over a tensor grid, c-major order."""
    rows = []
    for c in c_values:
        for xi in xi_values:
            if c == p.V0:
                continue
            tag = classify_regime(p, c, xi, M, delta)
            w0, rho = _w0_from_tag(p, c, xi, tag)
            rows.append((float(c), float(xi), tag.region.value, w0, rho))
    return rows

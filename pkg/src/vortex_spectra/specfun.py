r"""
Special functions
=================

Bessel J0, J1, Y0, Y1, I0, I1, K0, K1 (plus exponentially scaled I/K), Airy
Ai, Bi and their derivatives, the outgoing Hankel function H+ = J1 + i Y1, the
oscillatory Airy combination Oi(-z) = Ai(-z) - i Bi(-z), and the closed-form
half-line Fourier pair of J1.

Everything is computed in-repo from series, recurrences, asymptotic expansions
and exponentially convergent trapezoid sums, so results are bit-reproducible
across platforms with the same numpy/numba.

Switchover radii
----------------
- J, Y:   Miller backward recurrence + Neumann series for x < 20, Hankel
          asymptotic expansion beyond.
- I:      power series for x < 30, asymptotic expansion beyond.
- K:      small-argument series for x < 1, trapezoid sum of
          K_nu(x) = \int_0^\infty exp(-x cosh t) cosh(nu t) dt beyond.
- Airy:   Maclaurin series for -2 <= x < 1; fractional-order Miller
          recurrences for J_{+-1/3}, J_{+-2/3} on -7 <= x < -2; K_{1/3}, K_{2/3}
          integrals for Ai, Ai' at x >= 1 (Bi, Bi' keep the positive
          Maclaurin series); oscillatory asymptotic expansions for x < -7.
"""

from __future__ import annotations

import math

import numba
import numpy as np

EULER_GAMMA = 0.57721566490153286061
AIRY_C1 = 0.355028053887817239260   # Ai(0)
AIRY_C2 = 0.258819403792806798405   # -Ai'(0)
SQRT3 = 1.7320508075688772935

BESSEL_SWITCH = 20.0
I_SWITCH = 30.0
K_SWITCH = 1.0
AIRY_NEG_SWITCH = 7.0
AIRY_MID_SWITCH = 2.0
AIRY_POS_SWITCH = 1.0
AIRY_MAX = 30.0

_TRAP_H = 0.1
_GAMMA_THIRD = 2.6789385347077476337            # Gamma(1/3)
_GAMMA_MINUS_THIRD = -4.0623538182792012523     # Gamma(-1/3)


# ---------------------------------------------------------------------------
# J and Y
# ---------------------------------------------------------------------------

@numba.njit(cache=True)
def _miller(x):
    """Return J0, J1 and the Neumann sums needed by Y0, Y1 for 0 < x < 20."""
    nstart = 2 * (int(x + 25.0 + 3.0 * x ** (1.0 / 3.0)) // 2) + 2
    jp1 = 0.0
    j = 1e-300
    norm = 0.0
    s_y0 = 0.0       # sum_{k>=1} (-1)^k J_{2k} / k
    s_y1 = 0.0       # sum_{k>=1} (-1)^k (J_{2k-1} - J_{2k+1}) / k
    vals = np.zeros(nstart + 2)
    vals[nstart] = j
    for n in range(nstart, 0, -1):
        jm1 = 2.0 * n / x * j - jp1
        jp1 = j
        j = jm1
        vals[n - 1] = j
        if abs(j) > 1e250:
            for m in range(n - 1, nstart + 1):
                vals[m] *= 1e-250
            j *= 1e-250
            jp1 *= 1e-250
    norm = vals[0]
    for k in range(2, nstart + 1, 2):
        norm += 2.0 * vals[k]
    inv = 1.0 / norm
    for k in range(1, nstart // 2):
        sgn = -1.0 if k % 2 == 1 else 1.0
        s_y0 += sgn * vals[2 * k] / k
        s_y1 += sgn * (vals[2 * k - 1] - vals[2 * k + 1]) / k
    return vals[0] * inv, vals[1] * inv, s_y0 * inv, s_y1 * inv


@numba.njit(cache=True)
def _hankel_pq(nu, x):
    """Asymptotic P, Q of the Hankel expansion (x >= 20)."""
    mu = 4.0 * nu * nu
    z = 8.0 * x
    p = 1.0
    q = 0.0
    term = 1.0
    k = 1
    last = 1e300
    while k < 200:
        term *= (mu - (2 * k - 1) ** 2) / (k * z)
        if abs(term) > last:
            break
        last = abs(term)
        if k % 2 == 1:
            q += term if (k // 2) % 2 == 0 else -term
        else:
            p += -term if (k // 2) % 2 == 1 else term
        if abs(term) < 1e-17:
            break
        k += 1
    return p, q


@numba.njit(cache=True)
def _jy_asym(nu, x):
    p, q = _hankel_pq(nu, x)
    chi = x - (0.5 * nu + 0.25) * math.pi
    # cos/sin of chi computed from x to keep the reduction exact-ish
    c = math.cos(chi)
    s = math.sin(chi)
    amp = math.sqrt(2.0 / (math.pi * x))
    return amp * (p * c - q * s), amp * (p * s + q * c)


@numba.njit(cache=True)
def _j0j1y0y1(x):
    if x < BESSEL_SWITCH:
        j0, j1, s0, s1 = _miller(x)
        lg = math.log(0.5 * x) + EULER_GAMMA
        y0 = 2.0 / math.pi * (lg * j0) - 4.0 / math.pi * s0
        y1 = -2.0 / math.pi * j0 / x + 2.0 / math.pi * lg * j1 + 2.0 / math.pi * s1
        return j0, j1, y0, y1
    j0, y0 = _jy_asym(0.0, x)
    j1, y1 = _jy_asym(1.0, x)
    return j0, j1, y0, y1


@numba.vectorize(["float64(float64)"], cache=True)
def j0(x):
    """Bessel J0."""
    ax = abs(x)
    if ax == 0.0:
        return 1.0
    return _j0j1y0y1(ax)[0]


@numba.vectorize(["float64(float64)"], cache=True)
def j1(x):
    """Bessel J1 (odd)."""
    ax = abs(x)
    if ax == 0.0:
        return 0.0
    if ax < 1e-8:
        return 0.5 * x
    v = _j0j1y0y1(ax)[1]
    return v if x > 0 else -v


@numba.vectorize(["float64(float64)"], cache=True)
def y0(x):
    """Bessel Y0 (x > 0; NaN otherwise)."""
    if x <= 0.0:
        return math.nan
    return _j0j1y0y1(x)[2]


@numba.vectorize(["float64(float64)"], cache=True)
def y1(x):
    """Bessel Y1 (x > 0; NaN otherwise)."""
    if x <= 0.0:
        return math.nan
    return _j0j1y0y1(x)[3]


# ---------------------------------------------------------------------------
# I and K
# ---------------------------------------------------------------------------

@numba.njit(cache=True)
def _i_series(nu, x):
    # sum (x/2)^(2m+nu) / (m! (m+nu)!) for integer nu in {0, 1}
    t = 1.0 if nu == 0 else 0.5 * x
    s = t
    q = 0.25 * x * x
    m = 0
    while True:
        m += 1
        t *= q / (m * (m + nu))
        s += t
        if t < 1e-17 * s:
            break
    return s


@numba.njit(cache=True)
def _i_asym_scaled(nu, x):
    mu = 4.0 * nu * nu
    z = 8.0 * x
    s = 1.0
    term = 1.0
    last = 1e300
    for k in range(1, 200):
        term *= -(mu - (2 * k - 1) ** 2) / (k * z)
        if abs(term) > last:
            break
        last = abs(term)
        s += term
        if abs(term) < 1e-17:
            break
    return s / math.sqrt(2.0 * math.pi * x)


@numba.njit(cache=True)
def _i_scaled(nu, x):
    if x < I_SWITCH:
        return _i_series(nu, x) * math.exp(-x)
    return _i_asym_scaled(nu, x)


@numba.njit(cache=True)
def _k_trap_scaled(nu, x):
    """exp(x) * int_0^inf exp(-x cosh t) cosh(nu t) dt by the trapezoid rule."""
    # the integrand has width ~ x^-1/2 around t = 0
    h = _TRAP_H / math.sqrt(max(1.0, x))
    s = 0.5
    n = 1
    while True:
        t = n * h
        arg = x * (math.cosh(t) - 1.0)
        if arg > 745.0:
            break
        term = math.exp(-arg) * math.cosh(nu * t)
        s += term
        if term < 1e-18 * s:
            break
        n += 1
    return h * s


@numba.njit(cache=True)
def _k0_series(x):
    lg = math.log(0.5 * x) + EULER_GAMMA
    q = 0.25 * x * x
    t = 1.0
    hk = 0.0
    s = 0.0
    m = 0
    while True:
        m += 1
        t *= q / (m * m)
        hk += 1.0 / m
        s += t * hk
        if t * hk < 1e-17 * abs(s):
            break
    return -lg * _i_series(0, x) + s


@numba.njit(cache=True)
def _k1_series(x):
    lg = math.log(0.5 * x)
    q = 0.25 * x * x
    # psi(k+1) + psi(k+2) = -2 gamma + H_k + H_{k+1}
    t = 1.0
    hk = 0.0
    s = -2.0 * EULER_GAMMA + 1.0
    k = 0
    while True:
        k += 1
        t *= q / (k * (k + 1))
        hk += 1.0 / k
        term = t * (-2.0 * EULER_GAMMA + 2.0 * hk + 1.0 / (k + 1))
        s += term
        if abs(term) < 1e-17 * abs(s):
            break
    return 1.0 / x + lg * _i_series(1, x) - 0.25 * x * s


@numba.vectorize(["float64(float64)"], cache=True)
def i0e(x):
    """exp(-|x|) I0(x)."""
    return _i_scaled(0, abs(x))


@numba.vectorize(["float64(float64)"], cache=True)
def i1e(x):
    """exp(-|x|) I1(x) (odd)."""
    v = _i_scaled(1, abs(x))
    return v if x >= 0 else -v


@numba.vectorize(["float64(float64)"], cache=True)
def i0(x):
    ax = abs(x)
    if ax < I_SWITCH:
        return _i_series(0, ax)
    return _i_asym_scaled(0, ax) * math.exp(ax)


@numba.vectorize(["float64(float64)"], cache=True)
def i1(x):
    """Modified Bessel I1 (odd)."""
    ax = abs(x)
    if ax < I_SWITCH:
        v = _i_series(1, ax)
    else:
        v = _i_asym_scaled(1, ax) * math.exp(ax)
    return v if x >= 0 else -v


@numba.vectorize(["float64(float64)"], cache=True)
def k0e(x):
    if x <= 0.0:
        return math.nan
    if x < K_SWITCH:
        return _k0_series(x) * math.exp(x)
    return _k_trap_scaled(0.0, x)


@numba.vectorize(["float64(float64)"], cache=True)
def k1e(x):
    """exp(x) K1(x) for x > 0."""
    if x <= 0.0:
        return math.nan
    if x < K_SWITCH:
        return _k1_series(x) * math.exp(x)
    return _k_trap_scaled(1.0, x)


@numba.vectorize(["float64(float64)"], cache=True)
def k0(x):
    if x <= 0.0:
        return math.nan
    if x < K_SWITCH:
        return _k0_series(x)
    return _k_trap_scaled(0.0, x) * math.exp(-x)


@numba.vectorize(["float64(float64)"], cache=True)
def k1(x):
    """Modified Bessel K1 for x > 0."""
    if x <= 0.0:
        return math.nan
    if x < K_SWITCH:
        return _k1_series(x)
    return _k_trap_scaled(1.0, x) * math.exp(-x)


# ---------------------------------------------------------------------------
# Airy
# ---------------------------------------------------------------------------

@numba.njit(cache=True)
def _airy_fg(x):
    """Maclaurin auxiliary series f, g and derivatives f', g'."""
    x3 = x * x * x
    f = 1.0
    g = x
    df = 0.0
    dg = 1.0
    tf = 1.0
    tg = x
    k = 0
    while True:
        k += 1
        tf *= x3 / ((3 * k - 1) * (3 * k))
        tg *= x3 / ((3 * k) * (3 * k + 1))
        f += tf
        g += tg
        if x != 0.0:
            df += 3 * k * tf / x
            dg += (3 * k + 1) * tg / x
        if abs(tf) + abs(tg) < 1e-18 * (abs(f) + abs(g)) and k > 3:
            break
        if k > 400:
            break
    return f, g, df, dg


@numba.njit(cache=True)
def _airy_neg_asym(z):
    """Ai(-z), Ai'(-z), Bi(-z), Bi'(-z) for large z > 0."""
    zeta = 2.0 / 3.0 * z * math.sqrt(z)
    # c_k = Gamma(3k+1/2) / (54^k k! Gamma(k+1/2)), d_k = -(6k+1)/(6k-1) c_k
    ce = 0.0
    co = 0.0
    de = 0.0
    do = 0.0
    ck = 1.0
    zp = 1.0
    last = 1e300
    for k in range(0, 60):
        if k > 0:
            ck *= (6 * k - 5) * (6 * k - 3) * (6 * k - 1) / (216.0 * k * (2 * k - 1))
            zp /= zeta
        dk = -(6 * k + 1) / (6 * k - 1) * ck
        term = ck * zp
        if abs(term) > last and k > 2:
            break
        last = abs(term)
        sgn = 1.0 if (k // 2) % 2 == 0 else -1.0
        if k % 2 == 0:
            ce += sgn * term
            de += sgn * dk * zp
        else:
            co += sgn * term
            do += sgn * dk * zp
        if abs(term) < 1e-17:
            break
    th = zeta + 0.25 * math.pi
    s = math.sin(th)
    c = math.cos(th)
    a = 1.0 / math.sqrt(math.pi) * z ** -0.25
    b = 1.0 / math.sqrt(math.pi) * z ** 0.25
    ai = a * (s * ce - c * co)
    bi = a * (c * ce + s * co)
    dai = b * (-c * de - s * do)
    dbi = b * (s * de - c * do)
    return ai, dai, bi, dbi


@numba.njit(cache=True)
def _jfrac(nu, x):
    """
    Miller recurrence for fractional order: returns J_{nu-1}, J_nu, J_{nu+1}.

    Normalized with (x/2)^nu = sum_k (nu + 2k) Gamma(nu + k) / k! J_{nu+2k}(x).
    """
    n0 = 2 * (int(x + 25.0 + 3.0 * x ** (1.0 / 3.0)) // 2) + 2
    vals = np.zeros(n0 + 2)
    vals[n0] = 1e-300
    for n in range(n0, 0, -1):
        vals[n - 1] = 2.0 * (nu + n) / x * vals[n] - vals[n + 1]
        if abs(vals[n - 1]) > 1e250:
            for m in range(n - 1, n0 + 2):
                vals[m] *= 1e-250
    g = _GAMMA_THIRD if nu > 0 else _GAMMA_MINUS_THIRD
    s = 0.0
    ratio = g   # Gamma(nu + k) / k!
    for k in range(0, n0 // 2 + 1):
        if k > 0:
            ratio *= (nu + k - 1) / k
        s += (nu + 2 * k) * ratio * vals[2 * k]
    scale = (0.5 * x) ** nu / s
    j0 = vals[0] * scale
    j1 = vals[1] * scale
    return 2.0 * nu / x * j0 - j1, j0, j1


@numba.njit(cache=True)
def _airy_neg_bessel(z):
    """Ai, Ai', Bi, Bi' at -z through J_{+-1/3}, J_{+-2/3} of zeta."""
    zeta = 2.0 / 3.0 * z * math.sqrt(z)
    jm23, j13, _ = _jfrac(1.0 / 3.0, zeta)
    _, jm13, j23 = _jfrac(-1.0 / 3.0, zeta)
    rz = math.sqrt(z)
    ai = rz / 3.0 * (j13 + jm13)
    bi = rz / SQRT3 * (jm13 - j13)
    dai = z / 3.0 * (j23 - jm23)
    dbi = z / SQRT3 * (jm23 + j23)
    return ai, dai, bi, dbi


@numba.njit(cache=True)
def _airy_all(x):
    """Return Ai, Ai', Bi, Bi' at real x with |x| <= 30."""
    if x < -AIRY_NEG_SWITCH:
        return _airy_neg_asym(-x)
    if x < -AIRY_MID_SWITCH:
        return _airy_neg_bessel(-x)
    f, g, df, dg = _airy_fg(x)
    bi = SQRT3 * (AIRY_C1 * f + AIRY_C2 * g)
    dbi = SQRT3 * (AIRY_C1 * df + AIRY_C2 * dg)
    if x < AIRY_POS_SWITCH:
        ai = AIRY_C1 * f - AIRY_C2 * g
        dai = AIRY_C1 * df - AIRY_C2 * dg
        return ai, dai, bi, dbi
    zeta = 2.0 / 3.0 * x * math.sqrt(x)
    e = math.exp(-zeta)
    ai = math.sqrt(x / 3.0) / math.pi * _k_trap_scaled(1.0 / 3.0, zeta) * e
    dai = -x / (math.pi * SQRT3) * _k_trap_scaled(2.0 / 3.0, zeta) * e
    return ai, dai, bi, dbi


@numba.vectorize(["float64(float64)"], cache=True)
def _ai(x):
    return _airy_all(x)[0]


@numba.vectorize(["float64(float64)"], cache=True)
def _aip(x):
    return _airy_all(x)[1]


@numba.vectorize(["float64(float64)"], cache=True)
def _bi(x):
    return _airy_all(x)[2]


@numba.vectorize(["float64(float64)"], cache=True)
def _bip(x):
    return _airy_all(x)[3]


# ---------------------------------------------------------------------------
# public API
# ---------------------------------------------------------------------------

_BESSEL = {"J0": j0, "J1": j1, "Y0": y0, "Y1": y1, "I0": i0, "I1": i1,
           "K0": k0, "K1": k1}


def bessel(kind: str, x):
    """
    Evaluate a Bessel function of order 0 or 1.

    Parameters
    ----------
    kind : {"J0", "J1", "Y0", "Y1", "I0", "I1", "K0", "K1"}
    x : float or array_like
        Nonnegative for J/I, strictly positive for Y/K.
    """
    if kind not in _BESSEL:
        raise ValueError(f"unknown Bessel kind {kind!r}")
    arr = np.asarray(x, dtype=float)
    if kind[0] in "YK" and np.any(arr <= 0.0):
        raise ValueError(f"{kind} requires x > 0")
    if kind[0] in "JI" and np.any(arr < 0.0):
        raise ValueError(f"{kind} is evaluated for x >= 0")
    out = _BESSEL[kind](arr)
    return float(out) if np.ndim(out) == 0 else out


def bessel_deriv(kind: str, x):
    """Derivative of J1, Y1, I1 or K1 from the order-0 companions."""
    x = np.asarray(x, dtype=float)
    if kind == "J1":
        return j0(x) - j1(x) / x
    if kind == "Y1":
        return y0(x) - y1(x) / x
    if kind == "I1":
        return i0(x) - i1(x) / x
    if kind == "K1":
        return -k0(x) - k1(x) / x
    raise ValueError(f"no derivative available for {kind!r}")


def _check_airy_domain(x):
    arr = np.asarray(x, dtype=float)
    if np.any(np.abs(arr) > AIRY_MAX):
        raise ValueError(f"Airy functions are evaluated for |x| <= {AIRY_MAX}")
    return arr


def airy(kind: str, x):
    """
    Airy function Ai, Bi or a derivative ("Aip", "Bip") for |x| <= 30.
    """
    fn = {"Ai": _ai, "Bi": _bi, "Aip": _aip, "Bip": _bip}.get(kind)
    if fn is None:
        raise ValueError(f"unknown Airy kind {kind!r}")
    out = fn(_check_airy_domain(x))
    return float(out) if np.ndim(out) == 0 else out


def hankel_plus(z):
    """Outgoing Hankel function H+(z) = J1(z) + i Y1(z) for z > 0."""
    arr = np.asarray(z, dtype=float)
    if np.any(arr <= 0.0):
        raise ValueError("hankel_plus requires z > 0 (Y1 is singular at 0)")
    out = j1(arr) + 1j * y1(arr)
    return complex(out) if np.ndim(out) == 0 else out


def hankel_plus_deriv(z):
    arr = np.asarray(z, dtype=float)
    return bessel_deriv("J1", arr) + 1j * bessel_deriv("Y1", arr)


def oscillatory_airy(z):
    """Oi(-z) = Ai(-z) - i Bi(-z) for z >= 0."""
    arr = np.asarray(z, dtype=float)
    if np.any(arr < 0.0):
        raise ValueError("oscillatory_airy requires z >= 0")
    arr = _check_airy_domain(-arr)
    out = _ai(arr) - 1j * _bi(arr)
    return complex(out) if np.ndim(out) == 0 else out


def j1_fourier_pair(y):
    """
    Closed-form half-line transforms of J1.

    Returns ``(S, C)`` with

        S(y) = int_0^inf J1(eta) sin(eta y) d eta      = y / sqrt(1 - y^2)
        C(y) = int_0^inf J1(eta) cos(eta y) / eta d eta = sqrt(1 - y^2)

    for |y| < 1 and zero for |y| > 1.  The full-line transforms of the odd
    function J1 and the even function J1/eta are 2i S and 2 C.
    """
    y = np.asarray(y, dtype=float)
    if np.any(np.abs(y) == 1.0):
        raise ValueError("the Fourier pair is singular at |y| = 1")
    inside = np.abs(y) < 1.0
    root = np.sqrt(np.where(inside, 1.0 - y * y, 1.0))
    s = np.where(inside, y / root, 0.0)
    c = np.where(inside, root, 0.0)
    if s.ndim == 0:
        return float(s), float(c)
    return s, c

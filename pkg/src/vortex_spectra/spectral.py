"""
Spectral calculus of A = -V Delta_{1,k}^-1
==========================================

Radial functions live on a uniform grid r_i = i h, i = 1..n.  The inverse of

    Delta_{1,k} = d^2/dr^2 + (1/r) d/dr - 1/r^2 - k^2

is applied with the Green's function G(r, s) = -I1(k r_<) K1(k r_>):

    (Delta^-1 w)(r) = int_0^R G(r, s) w(s) s ds + (h^2/12) w(r).

The trapezoid sum is evaluated in O(n) with exponentially scaled I1/K1 and
two running recursions.  The last term cancels the O(h^2) error of the kink
of G at s = r, which makes the discrete operator fourth order and keeps
k^2 A <= 1 exact on the grid.

Generalized eigenfunctions of A are V phi(., c, k) with eigenvalue c/k^2.
With a(c) = int phi v r dr the calculus reads

    R[a](r)  = 1/(pi k^2) int_0^1 a(c) phi(r, c) dc / |W(c)|^2,
    A^2 v    = V R[a],
    f(A) v   = V R[(k^2/c)^2 f(c/k^2) a],
    ||A v||_H^2 = 1/(pi k^2) int_0^1 |a|^2 dc / |W|^2,

with H = L^2(V^-1 r dr).  The c-integral is computed in the variable
xi = k sqrt(1/c - 1) on Gauss-Legendre panels.  Panels are geometric near
xi = 0 (c -> 1) and at large xi (c -> 0), and uniform in between with a width
tied to the oscillation rate of the integrand.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional, Sequence

import numba
import numpy as np

from . import specfun
from .connection import SolverOptions, solve_column
from .io import fmt
from .langer import c_of, xi_of
from .profiles import VortexProfile

logger = logging.getLogger(__name__)

DEFAULT_CMIN = 1e-4

# largest panel phase (rad) for 16-point Gauss-Legendre panels
_PANEL_PHASE = 16.0


class WeightMode(str, Enum):
    plain_rdr = "plain_rdr"
    weighted_Vinv_rdr = "weighted_Vinv_rdr"


@dataclass(frozen=True)
class RadialFunction:
    """
    Samples of a function of r on a uniform grid r_i = i h.

    Attributes
    ----------
    grid : ndarray
    values : ndarray
    weight_mode : WeightMode
        Measure used by :func:`norm`.
    """

    grid: np.ndarray
    values: np.ndarray
    weight_mode: WeightMode = WeightMode.plain_rdr

    def __post_init__(self):
        g = np.asarray(self.grid, dtype=float)
        v = np.asarray(self.values)
        if g.ndim != 1 or v.shape != g.shape:
            raise ValueError("grid and values must be 1-d of equal length")
        if g.size > 1 and np.any(np.diff(g) <= 0):
            raise ValueError("grid must be strictly increasing")
        if not np.all(np.isfinite(v)):
            raise ValueError("values must be finite")
        object.__setattr__(self, "grid", g)
        object.__setattr__(self, "values", v)

    def with_values(self, values) -> "RadialFunction":
        return RadialFunction(self.grid, values, self.weight_mode)


def uniform_grid(r_max: float, n: int) -> np.ndarray:
    """r_i = i h, i = 1..n, with h = r_max / n."""
    if n < 4 or r_max <= 0:
        raise ValueError("need n >= 4 and r_max > 0")
    return (r_max / n) * np.arange(1, n + 1)


def grid_step(grid) -> float:
    """Step of a uniform grid starting at h; raises otherwise."""
    grid = np.asarray(grid, dtype=float)
    h = grid[0]
    if grid.size < 2 or not np.allclose(np.diff(grid), h, rtol=1e-9, atol=0.0):
        raise ValueError("grid must be uniform with r_i = i h")
    return float(h)


def trapezoid_weights(grid) -> np.ndarray:
    """Weights of int_0^R f dr for f(0) = 0 on r_i = i h."""
    h = grid_step(grid)
    w = np.full(np.asarray(grid).size, h)
    w[-1] = 0.5 * h
    return w


# ---------------------------------------------------------------------------
# Green's function
# ---------------------------------------------------------------------------

@numba.njit(cache=True)
def _green_apply(i1e, k1e, decay, h, w, out):
    n = w.shape[0]
    # inner: sum_{j<=i} e^{-k(r_i - r_j)} i1e_j w_j
    acc = 0.0 + 0.0j
    for i in range(n):
        acc = acc * decay + i1e[i] * w[i]
        out[i] = -k1e[i] * h * (acc - 0.5 * i1e[i] * w[i])
    acc = 0.0 + 0.0j
    last = k1e[n - 1] * w[n - 1]
    tail = 0.5 * last
    for i in range(n - 1, -1, -1):
        acc = acc * decay + k1e[i] * w[i]
        if i < n - 1:
            tail *= decay
        out[i] -= i1e[i] * h * (acc - 0.5 * k1e[i] * w[i] - tail)


def _green_factors(grid, k):
    kr = abs(k) * np.asarray(grid)
    return specfun.i1e(kr), specfun.k1e(kr)


def delta1k_inverse(w: RadialFunction, k: float, *, kink_correction: bool = True) -> RadialFunction:
    """
    Delta_{1,k}^-1 w with the I1/K1 Green's function and O(n) recursions.

    The domain is [0, R] with the decaying solution continued past R, so w
    should be negligible near the grid end.
    """
    if k == 0:
        raise ValueError("k must be nonzero")
    grid = w.grid
    h = grid_step(grid)
    i1e, k1e = _green_factors(grid, k)
    src = np.asarray(w.values, dtype=complex) * grid
    out = np.empty(grid.size, dtype=complex)
    _green_apply(i1e, k1e, math.exp(-abs(k) * h), h, src, out)
    if kink_correction:
        out += (h * h / 12.0) * w.values
    if not np.iscomplexobj(w.values):
        out = out.real.copy()
    return w.with_values(out)


def green_matrix(grid, k: float, *, kink_correction: bool = True) -> np.ndarray:
    """
    Dense symmetric form S of the discrete inverse: Delta^-1 w = S D w with
    D = diag(r_i w_i) (trapezoid weights).

    S = G + (h^2/12) D^-1 with G_ij = -I1(k r_<) K1(k r_>); -S is positive
    definite.  Used for energies and small-grid checks.
    """
    grid = np.asarray(grid, dtype=float)
    h = grid_step(grid)
    kr = abs(k) * grid
    i1e, k1e = specfun.i1e(kr), specfun.k1e(kr)
    lower = np.tril(np.ones((grid.size, grid.size), dtype=bool))
    # row i, column j: r_< = r_min(i,j)
    small = np.where(lower, i1e[None, :], i1e[:, None])
    large = np.where(lower, k1e[:, None], k1e[None, :])
    G = -small * large * np.exp(-np.abs(kr[:, None] - kr[None, :]))
    if kink_correction:
        G[np.diag_indices_from(G)] += (h * h / 12.0) / (grid * trapezoid_weights(grid))
    return G


def apply_A(w: RadialFunction, p: VortexProfile, k: float) -> RadialFunction:
    """A w = -V Delta_{1,k}^-1 w."""
    psi = delta1k_inverse(w, k)
    return w.with_values(-p.V(w.grid) * psi.values)


def inner_H(f: RadialFunction, g: RadialFunction, p: VortexProfile) -> complex:
    """<f, g>_H = int f conj(g) V^-1 r dr (trapezoid)."""
    if f.grid.shape != g.grid.shape or not np.array_equal(f.grid, g.grid):
        raise ValueError("grid mismatch")
    wt = trapezoid_weights(f.grid) * f.grid / p.V(f.grid)
    return complex(np.sum(f.values * np.conj(g.values) * wt))


def norm(f: RadialFunction, p: Optional[VortexProfile] = None) -> float:
    """L^2 norm in the function's weight mode (V^-1 r dr needs ``p``)."""
    wt = trapezoid_weights(f.grid) * f.grid
    if f.weight_mode == WeightMode.weighted_Vinv_rdr:
        if p is None:
            raise ValueError("profile required for the weighted norm")
        wt = wt / p.V(f.grid)
    return float(math.sqrt(np.sum(np.abs(f.values) ** 2 * wt)))


# ---------------------------------------------------------------------------
# c-quadrature
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CQuadrature:
    """
    Composite Gauss-Legendre rule in xi for integrals over c in (0, 1).

    Attributes
    ----------
    k : float
    edges : ndarray
        Panel edges in xi (increasing).
    n_gauss : int
    xi, c, weights : ndarray
        Nodes and the weights of dc (|dc/dxi| included).
    c_min : float
        Clip of the c-integral to [c_floor, 1 - c_min].
    c_floor : float
        Lower end of the c-integral (c_min unless a xi cap raised it).
    clip_index : ndarray
        Boolean mask of nodes inside [2 c_floor, 1 - 2 c_min].
    """

    k: float
    edges: np.ndarray
    n_gauss: int
    xi: np.ndarray
    c: np.ndarray
    weights: np.ndarray
    c_min: float
    c_floor: float
    clip_index: np.ndarray = field(repr=False)

    @property
    def size(self) -> int:
        return int(self.xi.size)

    def refine(self) -> "CQuadrature":
        """Split every panel in two (nested refinement)."""
        mid = 0.5 * (self.edges[:-1] + self.edges[1:])
        edges = np.sort(np.concatenate([self.edges, mid]))
        return _rule_from_edges(self.k, edges, self.n_gauss, self.c_min, self.c_floor)


def _rule_from_edges(k, edges, n_gauss, c_min, c_floor) -> CQuadrature:
    gx, gw = np.polynomial.legendre.leggauss(n_gauss)
    a, b = edges[:-1, None], edges[1:, None]
    xi = (0.5 * (b - a) * (gx + 1.0) + a).ravel()
    wxi = (0.5 * (b - a) * gw).ravel()
    k2 = k * k
    c = k2 / (xi * xi + k2)
    dc = 2.0 * k2 * xi / (xi * xi + k2) ** 2
    lo, hi = xi_of(1.0 - 2.0 * c_min, k), xi_of(2.0 * c_floor, k)
    clip = (xi >= lo) & (xi <= hi)
    return CQuadrature(k=k, edges=np.asarray(edges, dtype=float), n_gauss=n_gauss, xi=xi, c=c,
                       weights=wxi * dc, c_min=c_min, c_floor=c_floor, clip_index=clip)


def make_c_quadrature(k: float, *, c_min: float = DEFAULT_CMIN, omega: float = 20.0,
                      xi_dense: float = 16.0, n_gauss: int = 16,
                      breaks: Sequence[float] = (),
                      xi_cap: Optional[float] = None) -> CQuadrature:
    """
    Panels in xi over [xi(1 - c_min), xi(c_min)].

    Parameters
    ----------
    k : float
    c_min : float
        Clip of the c-integral.
    omega : float
        Largest oscillation rate in xi of the integrands (radius reached plus
        travel distance); uniform panels have width _PANEL_PHASE / omega.
    xi_dense : float
        End of the uniform band; beyond it panels grow geometrically.
    breaks : sequence of float
        Extra c-values that must be panel edges (e.g. c = V(0)).
    xi_cap : float, optional
        Largest xi of the rule (e.g. the Nyquist limit of the radial grid);
        raises the lower end of the c-integral only.
    """
    k = abs(k)
    if k == 0:
        raise ValueError("k must be nonzero")
    if not 0.0 < c_min < 0.25:
        raise ValueError("c_min must lie in (0, 1/4)")
    c_floor = c_min if xi_cap is None else max(c_min, c_of(xi_cap, k))
    if c_floor >= 0.25:
        raise ValueError("xi_cap leaves no spectral range")
    xi_lo, xi_lo2 = xi_of(1.0 - c_min, k), xi_of(1.0 - 2.0 * c_min, k)
    xi_hi2, xi_hi = xi_of(2.0 * c_floor, k), xi_of(c_floor, k)
    width = _PANEL_PHASE / max(omega, 1e-3)
    xi_dense = min(max(xi_dense, 2.0 * width), xi_hi2)
    start = min(width, 0.5 * xi_dense)
    geo_lo = [xi_lo, xi_lo2]
    x = xi_lo2
    while x * 2.0 < start:
        x *= 2.0
        geo_lo.append(x)
    n_uni = max(1, int(math.ceil((xi_dense - start) / width)))
    uni = list(np.linspace(start, xi_dense, n_uni + 1))
    geo_hi = []
    x = xi_dense
    while x * 1.5 < xi_hi2:
        x *= 1.5
        geo_hi.append(x)
    edges = np.array(geo_lo + uni + geo_hi + [xi_hi2, xi_hi])
    for cb in breaks:
        if 2.0 * c_floor < cb < 1.0 - 2.0 * c_min:
            edges = np.append(edges, xi_of(cb, k))
    edges = np.unique(np.round(edges, 15))
    # drop slivers created by breaks
    keep = np.concatenate([[True], np.diff(edges) > 1e-9 * edges[1:]])
    return _rule_from_edges(k, edges[keep], n_gauss, c_min, c_floor)


# ---------------------------------------------------------------------------
# basis table
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BasisTable:
    """
    Normalized regular solutions phi/|W| at every c-node on one radial grid.

    Attributes
    ----------
    k : float
    grid : ndarray
        Uniform radial grid.
    quad : CQuadrature
    phi_tilde : ndarray, shape (n_c, n_r)
    log_absW : ndarray
    w_residual : ndarray
    profile : VortexProfile
    """

    k: float
    grid: np.ndarray
    quad: CQuadrature
    phi_tilde: np.ndarray
    log_absW: np.ndarray
    w_residual: np.ndarray
    profile: VortexProfile

    @property
    def c_nodes(self):
        return self.quad.c

    @property
    def density(self):
        """1/|W|^2 at the nodes."""
        return np.exp(-2.0 * self.log_absW)


def build_basis_table(p: VortexProfile, k: float, grid, quad: Optional[CQuadrature] = None,
                      opts: SolverOptions = SolverOptions(), threads: int = 1,
                      **quad_kw) -> BasisTable:
    """
    Solve the connection problem at every node of ``quad`` on ``grid``.

    Columns are independent; with ``threads > 1`` they are computed in a
    thread pool (the integrator releases the GIL) and assembled in node order.
    """
    grid = np.asarray(grid, dtype=float)
    grid_step(grid)
    k = abs(k)
    if quad is None:
        breaks = () if p.is_uniform else (p.V0,)
        quad_kw.setdefault("omega", grid[-1])
        quad = make_c_quadrature(k, breaks=breaks, **quad_kw)

    def one(c):
        return solve_column(p, float(c), k, grid, opts)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            cols = list(ex.map(one, quad.c))
    else:
        cols = [one(c) for c in quad.c]
    phi = np.array([col.phi_tilde for col in cols])
    return BasisTable(k=k, grid=grid, quad=quad, phi_tilde=phi,
                      log_absW=np.array([col.log_absW for col in cols]),
                      w_residual=np.array([col.w_residual for col in cols]), profile=p)


# ---------------------------------------------------------------------------
# transforms
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SpectralCoefficients:
    """
    Distorted transform a(c) = int phi(r, c, k) v(r) r dr at the c-nodes.

    Attributes
    ----------
    k : float
    c_nodes, weights : ndarray
    values : ndarray (complex)
    density : ndarray
        1/|W(c, k)|^2.
    """

    k: float
    c_nodes: np.ndarray
    weights: np.ndarray
    values: np.ndarray
    density: np.ndarray

    def with_values(self, values) -> "SpectralCoefficients":
        return SpectralCoefficients(self.k, self.c_nodes, self.weights, values, self.density)


def _check_support(table: BasisTable, v: RadialFunction, tol: float = 1e-8):
    if v.grid.shape != table.grid.shape or not np.allclose(v.grid, table.grid, rtol=1e-12):
        raise ValueError("function grid does not match the basis grid")
    vals = np.abs(v.values)
    peak = vals.max() if vals.size else 0.0
    n_edge = max(1, vals.size // 20)
    if peak > 0 and vals[-n_edge:].max() > tol * peak:
        raise ValueError("function is not supported within the basis grid "
                         f"(|v| near the end = {vals[-n_edge:].max():.3e})")


def _tilde_transform(table: BasisTable, values) -> np.ndarray:
    values = np.asarray(values)
    r = table.grid
    out = table.phi_tilde @ (values * trapezoid_weights(r) * r)
    # Euler-Maclaurin term at r = 0: the integrand phi~ v r grows like r^3
    # with third derivative 6 (xi/|W|) v'(0); its h^4 error would be
    # amplified by the spectral weights at large xi
    h = r[0]
    dv0 = (4.0 * values[0] / r[0] - values[1] / r[1]) / 3.0
    return out - (h ** 4 / 120.0) * table.quad.xi * np.exp(-table.log_absW) * dv0


def forward_transform(table: BasisTable, v: RadialFunction,
                      check_support: bool = True) -> SpectralCoefficients:
    """a(c) = int phi(r, c, k) v(r) r dr on the c-nodes (trapezoid in r)."""
    if check_support:
        _check_support(table, v)
    at = _tilde_transform(table, v.values)
    a = at * np.exp(table.log_absW)
    return SpectralCoefficients(k=table.k, c_nodes=table.quad.c, weights=table.quad.weights,
                                values=a.astype(complex), density=table.density)


def _reconstruct_tilde(table: BasisTable, wa_tilde) -> np.ndarray:
    """1/(pi k^2) sum_j wa_tilde_j phi_tilde_j(r), wa_tilde = w a / |W|."""
    return (np.asarray(wa_tilde) @ table.phi_tilde) / (math.pi * table.k ** 2)


def reconstruct(table: BasisTable, a: SpectralCoefficients) -> RadialFunction:
    """R[a](r) = 1/(pi k^2) int a(c) phi(r, c) dc / |W|^2."""
    if a.values.shape != table.quad.c.shape:
        raise ValueError("coefficients do not match the basis c-nodes")
    wa = table.quad.weights * a.values * np.exp(-table.log_absW)
    return RadialFunction(table.grid, _reconstruct_tilde(table, wa))


@dataclass(frozen=True)
class FunctionResult:
    """
    Result of f(A) v with the sensitivity to the c-clip.

    Attributes
    ----------
    value : RadialFunction
    clip_sensitivity : float
        Relative change when the clip c_min is doubled.
    flagged : bool
        clip_sensitivity above 1e-2.
    """

    value: RadialFunction
    clip_sensitivity: float
    flagged: bool


def multiplier_apply(table: BasisTable, a_tilde, mult) -> tuple:
    """
    V R[(k^2/c)^2 mult(c) a] from normalized coefficients a_tilde = a/|W|.

    With ``mult=None`` the coefficients are taken to carry the weight
    (k^2/c)^2 already.  Returns (values, clip_sensitivity), the latter being
    the relative change when the c-clip is doubled.
    """
    q = table.quad
    if mult is None:
        w = q.weights * a_tilde
    else:
        w = q.weights * (table.k ** 2 / q.c) ** 2 * mult * a_tilde
    V = table.profile.V(table.grid)
    full = V * _reconstruct_tilde(table, w)
    clipped = V * _reconstruct_tilde(table, np.where(q.clip_index, w, 0.0))
    nf = np.linalg.norm(full)
    sens = float(np.linalg.norm(full - clipped) / nf) if nf > 0 else 0.0
    return full, sens


def apply_function_of_A(f: Callable, v: RadialFunction, table: BasisTable,
                        check_support: bool = True) -> FunctionResult:
    """
    f(A) v = V R[(k^2/c)^2 f(c/k^2) a] with the c-integral clipped to
    [c_min, 1 - c_min].
    """
    if check_support:
        _check_support(table, v)
    at = _tilde_transform(table, v.values)
    c = table.quad.c
    mult = np.asarray(f(c / table.k ** 2), dtype=complex) * np.ones_like(c)
    vals, sens = multiplier_apply(table, at, mult)
    if not np.iscomplexobj(v.values) and np.all(np.isreal(mult)):
        vals = vals.real
    return FunctionResult(RadialFunction(table.grid, vals), sens, sens > 1e-2)


def plancherel_residual(v: RadialFunction, table: BasisTable) -> float:
    """|LHS - RHS| / LHS for ||A v||_H^2 = 1/(pi k^2) int |a|^2 dc/|W|^2."""
    p = table.profile
    Av = apply_A(v, p, table.k)
    lhs = inner_H(Av, Av, p).real
    at = _tilde_transform(table, v.values)
    rhs = float(np.sum(table.quad.weights * np.abs(at) ** 2)) / (math.pi * table.k ** 2)
    if lhs == 0.0:
        return 0.0 if rhs == 0.0 else math.inf
    return abs(lhs - rhs) / lhs


def resolution_residual(v: RadialFunction, table: BasisTable) -> float:
    """||A^2 v - V R[a]||_2 / ||A^2 v||_2 with A^2 v from the Green's function."""
    p = table.profile
    A2v = apply_A(apply_A(v, p, table.k), p, table.k)
    rec = table.profile.V(table.grid) * reconstruct(table, forward_transform(table, v)).values
    den = np.linalg.norm(A2v.values)
    return float(np.linalg.norm(A2v.values - rec) / den) if den > 0 else 0.0


def write_spectral_csv(path, a: SpectralCoefficients, log_absW=None):
    """CSV with header c,a_re,a_im,absW,density."""
    absW = 1.0 / np.sqrt(a.density) if log_absW is None else np.exp(log_absW)
    with open(path, "w", newline="") as fh:
        fh.write("c,a_re,a_im,absW,density\n")
        for c, v, w, d in zip(a.c_nodes, a.values, absW, a.density):
            fh.write(",".join(fmt(x) for x in (c, v.real, v.imag, w, d)) + "\n")

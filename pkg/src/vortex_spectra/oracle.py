"""
Time-domain reference integrator
================================

The axial mode k evolves by

    d/dt h = -i k A g,      d/dt g = -i k h,      A = -V Delta_{1,k}^-1,

integrated here with the classical four-stage Runge-Kutta scheme, applying A
through the same Green's-function primitive as the spectral path.  The
conserved energy

    E = int (|Psi'|^2 + |Psi/r|^2 + k^2 |Psi|^2) r dr + int |g|^2 V^-1 r dr,
    Psi = V^-1 h,

is evaluated in its discrete form -Psi^* S^-1 Psi + g^* D V^-1 g, where S is
the symmetric Green's matrix and D = diag(r w_trap).  The semi-discrete
system conserves this quantity exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import List, Sequence

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .profiles import VortexProfile
from .spectral import (RadialFunction, delta1k_inverse, green_matrix, grid_step,
                       trapezoid_weights)

DT_MAX = 0.5


@dataclass(frozen=True)
class FDState:
    """
    Mode state (h, g) on a uniform grid at time t.
    """

    t: float
    grid: np.ndarray
    h: np.ndarray
    g: np.ndarray


def _rhs(h, g, grid, V, k):
    # dh/dt = -i k A g = i k V Delta^-1 g
    psi = delta1k_inverse(RadialFunction(grid, g), k).values
    return 1j * k * V * psi, -1j * k * h


def step_fd(state: FDState, dt: float, p: VortexProfile, k: float, V=None) -> FDState:
    """One classical Runge-Kutta step of size dt (negative dt runs backward)."""
    if abs(dt) > DT_MAX:
        raise ValueError(f"|dt| = {abs(dt)} exceeds {DT_MAX} (frequencies reach 1)")
    grid = state.grid
    if V is None:
        V = p.V(grid)
    h, g = state.h, state.g
    k1h, k1g = _rhs(h, g, grid, V, k)
    k2h, k2g = _rhs(h + 0.5 * dt * k1h, g + 0.5 * dt * k1g, grid, V, k)
    k3h, k3g = _rhs(h + 0.5 * dt * k2h, g + 0.5 * dt * k2g, grid, V, k)
    k4h, k4g = _rhs(h + dt * k3h, g + dt * k3g, grid, V, k)
    hn = h + (dt / 6.0) * (k1h + 2.0 * k2h + 2.0 * k3h + k4h)
    gn = g + (dt / 6.0) * (k1g + 2.0 * k2g + 2.0 * k3g + k4g)
    return FDState(state.t + dt, grid, hn, gn)


class EnergyForm:
    """Cholesky-factored discrete energy on one (grid, k, profile)."""

    def __init__(self, grid, p: VortexProfile, k: float):
        self.grid = np.asarray(grid, dtype=float)
        self.V = p.V(self.grid)
        self.D = self.grid * trapezoid_weights(self.grid)
        S = green_matrix(self.grid, k)
        self._chol = cho_factor(-S, lower=True)

    def __call__(self, h, g) -> float:
        psi = np.asarray(h) / self.V
        e1 = np.real(np.vdot(psi, cho_solve(self._chol, psi)))
        e2 = float(np.sum(np.abs(g) ** 2 * self.D / self.V))
        return float(e1 + e2)


def energy(state: FDState, p: VortexProfile, k: float) -> float:
    """Discrete mode energy (nonnegative, quadratic)."""
    return EnergyForm(state.grid, p, k)(state.h, state.g)


@dataclass(frozen=True)
class FDRun:
    """
    Sampled trajectory of the reference integrator.

    Attributes
    ----------
    k, dt : float
    grid : ndarray
    times : ndarray
    states : list of FDState
    energies : ndarray
    """

    k: float
    dt: float
    grid: np.ndarray
    times: np.ndarray
    states: List[FDState]
    energies: np.ndarray

    @property
    def energy_drift(self) -> float:
        e0 = self.energies[0]
        return float(np.max(np.abs(self.energies - e0)) / e0) if e0 > 0 else 0.0


def run_fd(h0, g0, grid, p: VortexProfile, k: float, times: Sequence[float],
           dt: float = 0.01) -> FDRun:
    """
    Integrate from t = 0 and record the state at ``times`` (nondecreasing).

    Steps are shortened to land exactly on the sample times.
    """
    grid = np.asarray(grid, dtype=float)
    grid_step(grid)
    times = np.asarray(times, dtype=float)
    if np.any(np.diff(times) < 0) or (times.size and times[0] < 0):
        raise ValueError("times must be nonnegative and nondecreasing")
    V = p.V(grid)
    form = EnergyForm(grid, p, k)
    st = FDState(0.0, grid, np.asarray(h0, dtype=complex), np.asarray(g0, dtype=complex))
    states, energies = [], []
    for T in times:
        n = int(math.ceil((T - st.t) / dt - 1e-9))
        if n > 0:
            step = (T - st.t) / n
            for _ in range(n):
                st = step_fd(st, step, p, k, V)
        st = FDState(float(T), grid, st.h, st.g)
        states.append(st)
        energies.append(form(st.h, st.g))
    return FDRun(k=k, dt=dt, grid=grid, times=times, states=states,
                 energies=np.array(energies))


@dataclass(frozen=True)
class CompareReport:
    """
    Relative L^2(r dr) errors between two trajectories.

    Attributes
    ----------
    times : ndarray
    errors : dict
        Component name -> array of relative errors per time.
    max_error : float
    """

    times: np.ndarray
    errors: dict
    max_error: float


def l2_rdr(values, grid) -> float:
    return float(math.sqrt(np.sum(np.abs(values) ** 2 * grid * trapezoid_weights(grid))))


def compare(reference: Sequence[dict], other: Sequence[dict], grid, times) -> CompareReport:
    """
    Compare per-time component dictionaries (e.g. ur, utheta, uz).

    Each error is ||x_other - x_ref|| / ||x_ref|| in L^2(r dr); components
    whose reference norm vanishes use the absolute error.
    """
    if len(reference) != len(other) or len(reference) != len(times):
        raise ValueError("trajectories must have matching sample times")
    grid = np.asarray(grid, dtype=float)
    names = sorted(reference[0].keys())
    errs = {n: np.zeros(len(times)) for n in names}
    for i, (a, b) in enumerate(zip(reference, other)):
        if set(a) != set(b):
            raise ValueError("component mismatch")
        for n in names:
            if np.shape(a[n]) != grid.shape or np.shape(b[n]) != grid.shape:
                raise ValueError("grid mismatch")
            den = l2_rdr(a[n], grid)
            num = l2_rdr(np.asarray(b[n]) - np.asarray(a[n]), grid)
            errs[n][i] = num / den if den > 0 else num
    mx = max(float(e.max()) for e in errs.values()) if errs else 0.0
    return CompareReport(times=np.asarray(times, dtype=float), errors=errs, max_error=mx)

"""
Command-line interface and experiment harnesses
===============================================

    vortex-spectra <command> [--profile P] [--config FILE] [--out-dir DIR]
                   [--M M] [--delta D] [--cmin C] [--strict] [--threads N] ...

Commands: profile-check, basis, wronskian-scan, transform, evolve,
oracle-compare, kernel-scan, decay.

A config file holds flat ``key = value`` lines (``#`` starts a comment); keys
are option names without the leading dashes.  Its entries are applied before
the command-line flags, so flags win.  Every JSON report carries the schema
tag and the resolved configuration, and all outputs are written in grid
order, so equal configurations give byte-identical files.

Exit status: 0 success, 1 assumption violation or (with --strict) a
numerical flag, 2 bad input.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np

from . import connection, kernels, langer, oracle, propagator, spectral
from .io import SCHEMA, write_csv, write_json
from .profiles import VortexProfile, check_assumptions, load_tabulated, make_profile

logger = logging.getLogger(__name__)

EXIT_OK, EXIT_FLAG, EXIT_INPUT = 0, 1, 2

# largest group velocity of the uniform mode system is 0.385/k
_GROUP_SPEED = 0.385

DEFAULT_TRIPLES = "1,0.25,0.5;1,0.5,0.5;1,1,0.5;1,2,0.5;1,4,0.5;" \
                  "2,0.25,0.5;2,0.5,0.5;2,1,0.5;2,2,0.5;2,4,0.5;" \
                  "1,0.25,0.25;1,0.5,0.25;1,1,0.25;1,2,0.25;1,4,0.25"


class InputError(ValueError):
    """Malformed user input (exit status 2)."""


# ---------------------------------------------------------------------------
# parsing helpers
# ---------------------------------------------------------------------------

def parse_range(spec: str) -> np.ndarray:
    """
    Value list from ``a:b:n`` (n linear points), ``a:b:logn`` (geometric),
    a comma list or a single number.
    """
    spec = str(spec).strip()
    try:
        if ":" in spec:
            a, b, n = spec.split(":")
            a, b = float(a), float(b)
            if n.startswith("log"):
                n = int(n[3:])
                if a <= 0 or b <= 0:
                    raise InputError(f"geometric range needs positive ends: {spec}")
                out = np.geomspace(a, b, n)
            else:
                out = np.linspace(a, b, int(n))
            if out.size < 1:
                raise InputError(f"empty range: {spec}")
            return out
        return np.array([float(x) for x in spec.split(",") if x.strip()])
    except ValueError as exc:
        if isinstance(exc, InputError):
            raise
        raise InputError(f"cannot parse range {spec!r}") from None


def parse_triples(spec: str):
    out = []
    for part in spec.split(";"):
        if not part.strip():
            continue
        vals = [float(x) for x in part.split(",")]
        if len(vals) != 3:
            raise InputError(f"triple {part!r} must be r,s,z")
        out.append(tuple(vals))
    if not out:
        raise InputError("no (r, s, z) triples given")
    return out


def resolve_profile(spec: str) -> VortexProfile:
    """``uniform``, ``coriolis_example[:beta]`` or a path to an ``r,u`` CSV."""
    spec = str(spec)
    name, _, param = spec.partition(":")
    if name in ("uniform", "coriolis_example"):
        try:
            return make_profile(name, (float(param),) if param else ())
        except ValueError as exc:
            raise InputError(str(exc)) from None
    path = Path(spec)
    if not path.is_file():
        raise InputError(f"unknown profile {spec!r} (not a kind and no such file)")
    try:
        return load_tabulated(path)
    except (ValueError, OSError) as exc:
        raise InputError(str(exc)) from None


def read_config(path) -> list:
    """``key = value`` lines to a flat argv list (``key = true`` for flags)."""
    tokens = []
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise InputError(f"cannot read config {path}: {exc}") from None
    for lineno, line in enumerate(lines, start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InputError(f"{path}:{lineno}: expected key = value")
        key, val = (x.strip() for x in line.split("=", 1))
        key = key.replace("_", "-")
        if key in ("config", "out-dir"):
            raise InputError(f"{path}:{lineno}: {key} cannot be set from a config file")
        tokens.append((key, val))
    return tokens


@dataclass(frozen=True)
class RunConfig:
    """
    Resolved configuration of one command.

    Attributes
    ----------
    command : str
    values : tuple of (key, value)
        Every option that affects results, sorted by key.  The output
        directory and thread count are excluded: they change neither numbers
        nor bytes.
    """

    command: str
    values: tuple

    def as_dict(self) -> dict:
        return {"command": self.command, **dict(self.values)}

    def __getitem__(self, key):
        return dict(self.values)[key]


_NOT_CONFIG = {"out_dir", "threads", "config", "func", "command", "verbose"}


def make_config(ns: argparse.Namespace) -> RunConfig:
    vals = tuple(sorted((k, v) for k, v in vars(ns).items() if k not in _NOT_CONFIG))
    return RunConfig(ns.command, vals)


def _opts(cfg: RunConfig) -> connection.SolverOptions:
    return connection.SolverOptions(M=cfg["M"], delta=cfg["delta"])


# ---------------------------------------------------------------------------
# test data
# ---------------------------------------------------------------------------

TEST_FUNCTIONS: dict = {
    "gauss": lambda r: r * np.exp(-r ** 2),
    "shell": lambda r: r ** 2 * np.exp(-(r - 2.0) ** 2),
    "slow": lambda r: r * np.exp(-r - r ** 2 / 30.0),
}


def initial_data(grid, swirl: float = 0.0):
    """Vorticity r exp(-r^2) and swirl ``swirl`` r^2 exp(-r^2)."""
    om = spectral.RadialFunction(grid, grid * np.exp(-grid ** 2))
    ut = spectral.RadialFunction(grid, swirl * grid ** 2 * np.exp(-grid ** 2))
    return om, ut


def decay_radius(k: float, t_max: float) -> float:
    """Radius reached by the fastest packet by t_max, with a margin."""
    return max(30.0, 1.15 * _GROUP_SPEED * t_max / abs(k) + 10.0)


def _table(p, k, r_max, h, cmin, threads, opts, t_max=0.0):
    n = int(math.ceil(r_max / h - 1e-9))
    grid = spectral.uniform_grid(n * h, n)
    omega = r_max + _GROUP_SPEED * t_max / abs(k) + 5.0
    # frequencies above the grid's Nyquist limit pi/h alias onto resolved ones
    return spectral.build_basis_table(p, k, grid, opts=opts, threads=threads,
                                      c_min=cmin, omega=omega, xi_cap=math.pi / h)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def run_profile_check(cfg: RunConfig, out: Path, threads: int = 1):
    p = resolve_profile(cfg["profile"])
    rep = check_assumptions(p, rmax=cfg["rmax"])
    payload = {"kind": p.kind.name, "V0": p.V0, "A1": rep.A1, "A2": rep.A2, "A3": rep.A3,
               "a0": rep.a0, "max_violation": rep.max_violation,
               "degenerate": rep.degenerate, "message": rep.message}
    write_json(out / "profile_check.json", payload, cfg.as_dict())
    status = EXIT_OK if (rep.degenerate or rep.A1) else EXIT_FLAG
    return payload, status


def run_basis(cfg: RunConfig, out: Path, threads: int = 1):
    p = resolve_profile(cfg["profile"])
    c, k = cfg["c"], cfg["k"]
    if not 0.0 < c < 1.0 or k == 0:
        raise InputError("need 0 < c < 1 and k != 0")
    grid = np.linspace(cfg["r_max"] / cfg["n"], cfg["r_max"], cfg["n"])
    sl = connection.compute_basis(p, c, k, grid, _opts(cfg))
    rows = zip(grid, sl.phi, sl.dphi, sl.fplus.real, sl.fplus.imag,
               sl.dfplus.real, sl.dfplus.imag)
    write_csv(out / "basis.csv",
              ["r", "phi", "dphi", "fplus_re", "fplus_im", "dfplus_re", "dfplus_im"], rows)
    meta = sl.metadata()
    flux = sl.flux()
    meta.update({"flux_max_error": float(np.max(np.abs(flux[np.isfinite(flux)] - 1.0)))
                 if np.any(np.isfinite(flux)) else None,
                 "branch": sl.branch, "r_max": sl.r_max})
    write_json(out / "basis.json", meta, cfg.as_dict())
    flagged = sl.w_residual > connection.SolverOptions().target_residual
    return meta, EXIT_FLAG if (cfg["strict"] and flagged) else EXIT_OK


def _scan_point(p, c, xi, opts):
    if c == p.V0:
        return None
    k = xi / math.sqrt(1.0 / c - 1.0)
    try:
        sl = connection.compute_basis(p, c, k, opts=opts)
    except connection.ConnectionError as exc:
        logger.warning("skipping (c, xi) = (%g, %g): %s", c, xi, exc)
        return None
    tag = langer.classify_regime(p, c, xi, opts.M, opts.delta)
    lw0 = langer.log_w0_reference(p, c, xi, opts.M, opts.delta)
    return (c, xi, k, tag.region.value, sl.absW, math.exp(min(lw0, 709.0)),
            math.exp(sl.log_absW - lw0), sl.w_residual)


def run_wronskian_scan(cfg: RunConfig, out: Path, threads: int = 1):
    p = resolve_profile(cfg["profile"])
    cs, xis = parse_range(cfg["c_range"]), parse_range(cfg["xi_range"])
    opts = _opts(cfg)
    pts = [(float(c), float(x)) for c in cs for x in xis]
    fn = lambda cx: _scan_point(p, cx[0], cx[1], opts)
    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            res = list(ex.map(fn, pts))
    else:
        res = [fn(cx) for cx in pts]
    rows = [r for r in res if r is not None]
    write_csv(out / "wronskian_scan.csv",
              ["c", "xi", "k", "region", "absW", "W0", "ratio", "w_residual"], rows)
    write_csv(out / "regime_map.csv", ["c", "xi", "region", "W0", "rho0"],
              langer.regime_map(p, cs, xis, opts.M, opts.delta))
    ratios = np.array([r[6] for r in rows])
    C = float(max(ratios.max(), 1.0 / ratios.min())) if rows else float("nan")
    payload = {"n_points": len(pts), "n_admissible": len(rows),
               "skipped": [list(cx) for cx, r in zip(pts, res) if r is None],
               "ratio_min": float(ratios.min()) if rows else None,
               "ratio_max": float(ratios.max()) if rows else None, "C": C,
               "passed": bool(C <= 10.0),
               "max_w_residual": float(max(r[7] for r in rows)) if rows else None}
    write_json(out / "wronskian_scan.json", payload, cfg.as_dict())
    flagged = not payload["passed"] or (rows and payload["max_w_residual"] > 1e-6)
    return payload, EXIT_FLAG if (cfg["strict"] and flagged) else EXIT_OK


def run_transform(cfg: RunConfig, out: Path, threads: int = 1):
    p = resolve_profile(cfg["profile"])
    name = cfg["function"]
    if name not in TEST_FUNCTIONS:
        raise InputError(f"unknown test function {name!r}; choose from {sorted(TEST_FUNCTIONS)}")
    k = cfg["k"]
    grid = spectral.uniform_grid(cfg["r_max"], cfg["n"])
    tab = spectral.build_basis_table(p, k, grid, opts=_opts(cfg), threads=threads,
                                     c_min=cfg["cmin"])
    v = spectral.RadialFunction(grid, TEST_FUNCTIONS[name](grid))
    a = spectral.forward_transform(tab, v)
    spectral.write_spectral_csv(out / "spectral.csv", a, tab.log_absW)
    payload = {"n_c": int(tab.quad.size), "plancherel_residual": spectral.plancherel_residual(v, tab),
               "resolution_residual": spectral.resolution_residual(v, tab),
               "max_w_residual": float(tab.w_residual.max())}
    write_json(out / "transform.json", payload, cfg.as_dict())
    flagged = payload["max_w_residual"] > 1e-6
    return payload, EXIT_FLAG if (cfg["strict"] and flagged) else EXIT_OK


def _state_rows(s: propagator.ModeState):
    return zip(s.grid, s.ur.real, s.ur.imag, s.utheta.real, s.utheta.imag, s.uz.real, s.uz.imag)


_STATE_HEADER = ["r", "ur_re", "ur_im", "utheta_re", "utheta_im", "uz_re", "uz_im"]
_TRAJ_HEADER = ["t", "sup_ur", "sup_utheta", "sup_uz", "energy"]


def _sups(s):
    return (float(np.max(np.abs(s.ur))), float(np.max(np.abs(s.utheta))),
            float(np.max(np.abs(s.uz))))


def run_evolve(cfg: RunConfig, out: Path, threads: int = 1):
    p = resolve_profile(cfg["profile"])
    k = cfg["k"]
    times = parse_range(cfg["t"])
    if np.any(times < 0):
        raise InputError("times must be nonnegative")
    t_max = float(times.max())
    r_max = cfg["r_max"] if cfg["r_max"] > 0 else decay_radius(k, t_max)
    tab = _table(p, k, r_max, cfg["h"], cfg["cmin"], threads, _opts(cfg), t_max)
    om, ut = initial_data(tab.grid, cfg["swirl"])
    s0 = propagator.initial_mode(om, ut, p, k)
    ev = propagator.SpectralEvolver(s0, tab)
    write_csv(out / "initial_state.csv", _STATE_HEADER, _state_rows(s0))
    traj, clip = [], 0.0
    for i, t in enumerate(times):
        st = ev.state(float(t))
        clip = max(clip, st.clip_sensitivity)
        traj.append((float(t),) + _sups(st) + (ev.spectral_energy(float(t)),))
        write_csv(out / f"state_{i:03d}.csv", _STATE_HEADER, _state_rows(st))
    write_csv(out / "trajectory.csv", _TRAJ_HEADER, traj)
    e = np.array([row[4] for row in traj])
    payload = {"times": times, "r_max": r_max, "n_c": int(tab.quad.size),
               "clip_sensitivity": clip,
               "energy_rel_drift": float(np.max(np.abs(e / e[0] - 1.0))) if e[0] > 0 else 0.0}
    write_json(out / "evolve.json", payload, cfg.as_dict())
    return payload, EXIT_FLAG if (cfg["strict"] and clip > 1e-2) else EXIT_OK


def run_oracle_compare(cfg: RunConfig, out: Path, threads: int = 1):
    p = resolve_profile(cfg["profile"])
    k = cfg["k"]
    times = parse_range(cfg["t"])
    if np.any(np.diff(times) < 0) or times[0] < 0:
        raise InputError("times must be nonnegative and increasing")
    tab = _table(p, k, cfg["r_max"], cfg["h"], cfg["cmin"], threads, _opts(cfg), float(times.max()))
    om, ut = initial_data(tab.grid, cfg["swirl"])
    s0 = propagator.initial_mode(om, ut, p, k)
    ev = propagator.SpectralEvolver(s0, tab)
    spec_states = [ev.state(float(t)) for t in times]
    fd = oracle.run_fd(s0.h_hat, s0.g_hat, tab.grid, p, k, times, dt=cfg["dt"])
    fd_states = [propagator.recover_velocity(
        propagator.ModeState(k, st.t, tab.grid, st.h, st.g), p) for st in fd.states]
    rep = oracle.compare([s.velocities() for s in fd_states],
                         [s.velocities() for s in spec_states], tab.grid, times)
    write_csv(out / "trajectory_spectral.csv", _TRAJ_HEADER,
              [(float(t),) + _sups(s) + (ev.spectral_energy(float(t)),)
               for t, s in zip(times, spec_states)])
    write_csv(out / "trajectory_oracle.csv", _TRAJ_HEADER,
              [(float(t),) + _sups(s) + (float(e),)
               for t, s, e in zip(times, fd_states, fd.energies)])
    payload = {"errors": rep.errors, "max_error": rep.max_error, "times": times,
               "energy_drift": fd.energy_drift,
               "clip_sensitivity": max(s.clip_sensitivity for s in spec_states)}
    if cfg["drift_t"] > 0:
        long = oracle.run_fd(s0.h_hat, s0.g_hat, tab.grid, p, k,
                             np.linspace(0.0, cfg["drift_t"], 11), dt=cfg["dt"])
        payload["long_energy_drift"] = long.energy_drift
        payload["drift_t"] = cfg["drift_t"]
    write_json(out / "oracle_compare.json", payload, cfg.as_dict())
    flagged = payload["clip_sensitivity"] > 1e-2
    return payload, EXIT_FLAG if (cfg["strict"] and flagged) else EXIT_OK


def run_kernel_scan(cfg: RunConfig, out: Path, threads: int = 1):
    p = resolve_profile(cfg["profile"])
    triples = parse_triples(cfg["triples"])
    rep = kernels.dc_scan(p, triples, cfg["nc"], delta=cfg["delta_k"], xi_max=cfg["xi_max"],
                          threads=threads)
    kernels.write_scan_csv(out / "kernel_scan.csv", rep)
    payload = rep.summary()
    payload["max_grid_change"] = float(np.nanmax(rep.grid_change))
    payload["passed"] = bool(rep.C_fit <= 100.0 and payload["max_grid_change"] <= 0.1
                             and not rep.skipped)
    write_json(out / "kernel_scan.json", payload, cfg.as_dict())
    flagged = not payload["passed"]
    return payload, EXIT_FLAG if (cfg["strict"] and flagged) else EXIT_OK


def _fit_dict(times, sups):
    f = propagator.decay_fit(times, sups)
    return {"p": f.p, "C": f.C, "residual": f.residual,
            "t_window": [float(times[0]), float(times[-1])]}


def run_decay(cfg: RunConfig, out: Path, threads: int = 1):
    p = resolve_profile(cfg["profile"])
    times = parse_range(cfg["t"])
    if times.size < 8 or times[0] <= 0:
        raise InputError("decay needs at least 8 positive times")
    ks = [float(k) for k in parse_range(cfg["k"])]
    synth = [float(k) for k in parse_range(cfg["synth_k"])] if cfg["synth_k"] else []
    if len(synth) > 4:
        raise InputError("at most 4 positive wavenumbers (8 modes) in the synthesis")
    t_max = float(times.max())
    opts = _opts(cfg)
    modes, payload_modes = {}, {}
    clip = 0.0
    for k in sorted(set(ks) | set(synth)):
        r_max = decay_radius(k, t_max)
        tab = _table(p, k, r_max, cfg["h"], cfg["cmin"], threads, opts, t_max)
        om, ut = initial_data(tab.grid, cfg["swirl"])
        ev = propagator.SpectralEvolver(propagator.initial_mode(om, ut, p, k), tab)
        states = [ev.state(float(t)) for t in times]
        clip = max(clip, max(s.clip_sensitivity for s in states))
        modes[k] = states
        if k in ks:
            sups = np.array([_sups(s) for s in states])
            speed = np.array([float(np.max(np.sqrt(np.abs(s.ur) ** 2 + np.abs(s.utheta) ** 2
                                                   + np.abs(s.uz) ** 2))) for s in states])
            write_csv(out / f"decay_k{k:g}.csv", _TRAJ_HEADER,
                      [(float(t),) + tuple(sp) + (ev.spectral_energy(float(t)),)
                       for t, sp in zip(times, sups)])
            entry = _fit_dict(times, speed)
            entry["components"] = {n: _fit_dict(times, sups[:, i])
                                   for i, n in enumerate(("ur", "utheta", "uz"))}
            entry["r_max"] = r_max
            payload_modes[f"{k:g}"] = entry
    payload = {"modes": payload_modes, "clip_sensitivity": clip}
    if synth:
        z = np.linspace(0.0, 2.0 * math.pi / _gcd_step(synth), cfg["nz"], endpoint=False)
        # the slowest mode has the longest grid; faster modes are zero beyond
        # their own (group-speed sized) domain
        grid = max((modes[k][0].grid for k in synth), key=len)
        sup = []
        for i in range(times.size):
            ms = [_padded(modes[k][i], grid) for k in synth]
            fields = propagator.synthesize_z(ms + [propagator.mirror(m) for m in ms], z)
            mag = np.sqrt(fields["ur"] ** 2 + fields["utheta"] ** 2 + fields["uz"] ** 2)
            sup.append(float(mag.max()))
        payload["synthesis"] = _fit_dict(times, np.array(sup))
        payload["synthesis"]["k"] = synth
        payload["synthesis"]["sup"] = sup
        write_csv(out / "decay_synthesis.csv", ["t", "sup_u"], zip(times, sup))
    write_json(out / "decay.json", payload, cfg.as_dict())
    return payload, EXIT_FLAG if (cfg["strict"] and clip > 1e-2) else EXIT_OK


def _gcd_step(ks):
    # smallest common period 2 pi / g for wavenumbers on a rational lattice
    den = 1
    while any(abs(k * den - round(k * den)) > 1e-9 for k in ks):
        den += 1
        if den > 1000:
            return min(ks)
    g = 0
    for k in ks:
        g = math.gcd(g, int(round(k * den)))
    return g / den


def _padded(s: propagator.ModeState, grid) -> propagator.ModeState:
    n = s.grid.size
    if not np.allclose(s.grid, grid[:n], rtol=1e-12, atol=0.0):
        raise ValueError("mode grids are not nested")
    pad = lambda f: np.concatenate([f, np.zeros(grid.size - n, dtype=complex)])
    return replace(s, grid=grid, h_hat=pad(s.h_hat), g_hat=pad(s.g_hat), ur=pad(s.ur),
                   utheta=pad(s.utheta), uz=pad(s.uz), coefficients=None)


# ---------------------------------------------------------------------------
# argument parser
# ---------------------------------------------------------------------------

def _common() -> argparse.ArgumentParser:
    c = argparse.ArgumentParser(add_help=False)
    c.add_argument("--profile", default="coriolis_example",
                   help="uniform, coriolis_example[:beta] or an r,u CSV file")
    c.add_argument("--config", help="key = value file applied before the flags")
    c.add_argument("--out-dir", default="out")
    c.add_argument("--M", type=float, default=langer.DEFAULT_M)
    c.add_argument("--delta", type=float, default=langer.DEFAULT_DELTA)
    c.add_argument("--cmin", type=float, default=spectral.DEFAULT_CMIN)
    c.add_argument("--strict", action="store_true",
                   help="exit 1 when a numerical flag is raised")
    c.add_argument("--threads", type=int, default=1)
    c.add_argument("-v", "--verbose", action="store_true")
    return c


COMMANDS: dict = {}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vortex-spectra", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    common = _common()

    def add(name, fn, help_):
        sp = sub.add_parser(name, parents=[common], help=help_)
        COMMANDS[name] = fn
        return sp

    sp = add("profile-check", run_profile_check, "check the profile assumptions")
    sp.add_argument("--rmax", type=float, default=100.0)

    sp = add("basis", run_basis, "regular and outgoing solutions at one (c, k)")
    sp.add_argument("--c", type=float, default=0.5)
    sp.add_argument("--k", type=float, default=1.0)
    sp.add_argument("--r-max", type=float, default=20.0)
    sp.add_argument("--n", type=int, default=400)

    sp = add("wronskian-scan", run_wronskian_scan, "|W| against W0 over a (c, xi) grid")
    sp.add_argument("--c", dest="c_range", default="0.05:0.95:19")
    sp.add_argument("--xi", dest="xi_range", default="0.05:50:log20")

    sp = add("transform", run_transform, "distorted transform of a test function")
    sp.add_argument("--k", type=float, default=1.0)
    sp.add_argument("--function", default="gauss", choices=sorted(TEST_FUNCTIONS))
    sp.add_argument("--r-max", type=float, default=20.0)
    sp.add_argument("--n", type=int, default=1000)

    for name, fn, help_ in (("evolve", run_evolve, "spectral evolution of one mode"),
                            ("oracle-compare", run_oracle_compare,
                             "spectral evolution against the time-stepping oracle")):
        sp = add(name, fn, help_)
        sp.add_argument("--k", type=float, default=1.0)
        sp.add_argument("--t", default="0,5,10,20" if name == "evolve" else "0:20:5")
        sp.add_argument("--r-max", type=float, default=30.0,
                        help="radial domain (0: sized from the largest time)")
        sp.add_argument("--h", type=float, default=0.03, help="radial step")
        sp.add_argument("--swirl", type=float, default=0.5,
                        help="amplitude of the initial swirl r^2 exp(-r^2)")
        if name == "oracle-compare":
            sp.add_argument("--dt", type=float, default=0.02)
            sp.add_argument("--drift-t", type=float, default=100.0,
                            help="length of the oracle energy-drift run (0 skips)")

    sp = add("kernel-scan", run_kernel_scan, "c-integrability of the oscillatory kernel")
    sp.add_argument("--triples", default=DEFAULT_TRIPLES, help="r,s,z;r,s,z;...")
    sp.add_argument("--nc", type=int, default=96)
    sp.add_argument("--xi-max", type=float, default=24.0,
                    help="quadrature cutoff; the fitted tail covers larger xi")
    sp.add_argument("--delta-k", type=float, default=kernels.DEFAULT_DELTA,
                    help="exponent delta of the bound C(s^-delta + s^delta)")

    sp = add("decay", run_decay, "decay exponents of single modes and a z-synthesis")
    sp.add_argument("--k", default="1,2")
    sp.add_argument("--t", default="20:200:16")
    sp.add_argument("--synth-k", default="1,2,3,4",
                    help="positive wavenumbers of the synthesis (empty to skip)")
    sp.add_argument("--nz", type=int, default=256)
    sp.add_argument("--h", type=float, default=0.05)
    sp.add_argument("--swirl", type=float, default=0.0)
    return parser


def _expand_config(parser, argv):
    """Insert config-file entries after the command name, before the flags."""
    argv = list(argv)
    if "--config" not in argv and not any(a.startswith("--config=") for a in argv):
        return argv
    path = None
    for i, a in enumerate(argv):
        if a == "--config" and i + 1 < len(argv):
            path = argv[i + 1]
        elif a.startswith("--config="):
            path = a.split("=", 1)[1]
    if path is None:
        raise InputError("--config needs a file")
    cmd = argv[0]
    sub = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    if cmd not in sub.choices:
        return argv
    flags = {}
    for act in sub.choices[cmd]._actions:
        for o in act.option_strings:
            flags[o] = act
    tokens = []
    for key, val in read_config(path):
        opt = "--" + key
        act = flags.get(opt)
        if act is None:
            raise InputError(f"unknown config key {key!r} for {cmd}")
        if isinstance(act, argparse._StoreTrueAction):
            if val.lower() in ("1", "true", "yes", "on"):
                tokens.append(opt)
            elif val.lower() not in ("0", "false", "no", "off"):
                raise InputError(f"config key {key!r} expects true/false")
        else:
            tokens += [opt, val]
    return [cmd] + tokens + argv[1:]


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        argv = _expand_config(parser, argv)
        ns = parser.parse_args(argv)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if ns.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    cfg = make_config(ns)
    out = Path(ns.out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        payload, status = COMMANDS[ns.command](cfg, out, max(1, ns.threads))
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except connection.ConnectionError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_FLAG
    summary = {k: v for k, v in payload.items() if isinstance(v, (int, float, bool, str))}
    print(f"{ns.command}: " + ", ".join(f"{k}={v}" for k, v in sorted(summary.items())))
    return status


if __name__ == "__main__":
    sys.exit(main())

"""Closed energy orbits of the principal symbol: period, samples, focal points."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from . import flow
from .symbols import SymbolModel


class OrbitError(RuntimeError):
    """Level-set or flow-topology failure (no closed orbit, wrong focal count)."""


@dataclass(frozen=True)
class Orbit:
    """One closed orbit of the p0 flow, sampled equispaced in time.

    Samples cover [0, T) flow-oriented starting at (x_right, 0); the loop is
    closed, so sample j sits at t_j = j*T/n.
    """

    energy: float
    t: np.ndarray
    x: np.ndarray
    xi: np.ndarray
    period: float
    focal_points: tuple          # (t, x, xi) with d_xi p0 = 0
    fourier_singular_points: tuple  # (t, x, xi) with d_x p0 = 0
    energy_drift: float
    closure_error: float
    pack: tuple = field(repr=False)

    @property
    def n_samples(self) -> int:
        return self.t.size

    def state_at(self, t: float, rtol: float = 1e-12) -> tuple[float, float]:
        """Integrate from the nearest earlier sample to time t (mod T)."""
        T = self.period
        t = t % T
        j = min(int(t / T * self.n_samples), self.n_samples - 1)
        x, xi, status = flow.advance(self.pack, self.x[j], self.xi[j],
                                     self.t[j], t, rtol=rtol)
        if status != flow.STATUS_OK:
            raise OrbitError(f"flow advance failed with status {status}")
        return x, xi


def integrate_flow(model: SymbolModel, start, duration: float, tol: float = 1e-9,
                   n_samples: int = 256):
    """Samples (t, x, xi) of the Hamilton flow of p0 from `start` over `duration`."""
    pack = flow.pack_flow(model)
    step_tol = min(max(tol / 100.0, 1e-13), 1e-8)
    x, xi = float(start[0]), float(start[1])
    ts = np.linspace(0.0, duration, n_samples + 1)
    xs = np.empty_like(ts)
    xis = np.empty_like(ts)
    xs[0], xis[0] = x, xi
    for j in range(1, ts.size):
        x, xi, status = flow.advance(pack, x, xi, ts[j - 1], ts[j],
                                     rtol=step_tol, atol=step_tol)
        if status != flow.STATUS_OK:
            raise OrbitError(f"singular flow (integrator status {status})")
        xs[j], xis[j] = x, xi
    E0 = model.eval(0, float(start[0]), float(start[1]))
    drift = max(abs(model.eval(0, a, b) - E0) for a, b in zip(xs, xis))
    if drift > tol * max(1.0, abs(E0)):
        raise OrbitError(f"energy drift {drift:.3e} exceeds tolerance {tol:.1e}")
    return ts, xs, xis


def _rightmost_root(model: SymbolModel, E: float) -> float:
    """Largest x >= 0 with p0(x, 0) = E, by expanding scan + Brent."""
    f = lambda x: model.eval(0, x, 0.0) - E
    if f(0.0) >= 0.0:
        raise OrbitError("p0(0,0) >= E: energy not above the well interior")
    x_hi = 1.0
    for _ in range(80):
        if f(x_hi) > 0.0:
            break
        x_hi *= 1.6
    else:
        raise OrbitError("no right turning point found (level set unbounded?)")
    # walk down to the last sign change so we bracket the largest root
    grid = np.linspace(x_hi, 0.0, 257)
    vals = np.array([f(g) for g in grid])
    idx = np.nonzero(vals[:-1] * vals[1:] <= 0.0)[0]
    if idx.size == 0:
        raise OrbitError("failed to bracket p0(x,0) = E")
    a, b = grid[idx[0] + 1], grid[idx[0]]
    return brentq(f, a, b, xtol=1e-15, rtol=8.9e-16)


def _refine_root_in_t(pack, g, t_lo, s_lo, t_hi, g_lo, g_hi, rtol=1e-12):
    """Bisect g(state(t)) = 0 inside [t_lo, t_hi]; states by re-integration."""
    x_lo, xi_lo = s_lo
    for _ in range(200):
        if t_hi - t_lo <= 8.0 * np.finfo(float).eps * max(1.0, t_hi):
            break
        t_m = 0.5 * (t_lo + t_hi)
        x_m, xi_m, status = flow.advance(pack, x_lo, xi_lo, t_lo, t_m, rtol=rtol)
        if status != flow.STATUS_OK:
            raise OrbitError(f"flow advance failed with status {status}")
        g_m = g(x_m, xi_m)
        if g_m == 0.0:
            return t_m, x_m, xi_m
        if (g_m > 0.0) == (g_lo > 0.0):
            t_lo, x_lo, xi_lo, g_lo = t_m, x_m, xi_m, g_m
        else:
            t_hi, g_hi = t_m, g_m
    return t_lo, x_lo, xi_lo


def _roots_along_orbit(orbit_t, orbit_x, orbit_xi, period, pack, g, tol):
    """All roots of g along the loop from sample sign changes, polished in t."""
    n = orbit_t.size
    vals = np.array([g(orbit_x[j], orbit_xi[j]) for j in range(n)])
    roots = []
    for j in range(n):
        k = (j + 1) % n
        t_j = orbit_t[j]
        t_k = orbit_t[k] if k else period
        if vals[j] == 0.0:
            roots.append((t_j, orbit_x[j], orbit_xi[j]))
        elif vals[j] * vals[k] < 0.0:
            t_r, x_r, xi_r = _refine_root_in_t(
                pack, g, t_j, (orbit_x[j], orbit_xi[j]), t_k, vals[j], vals[k])
            roots.append((t_r % period, x_r, xi_r))
    # deduplicate near-coincident roots (loop wrap)
    out = []
    for r in sorted(roots):
        if not out or abs(r[0] - out[-1][0]) > 1e-9 * period:
            out.append(r)
    if out and len(out) > 1 and abs(out[0][0] + period - out[-1][0]) < 1e-9 * period:
        out.pop()
    for t_r, x_r, xi_r in out:
        if abs(g(x_r, xi_r)) > tol:
            raise OrbitError(f"root polish stalled: |g| = {abs(g(x_r, xi_r)):.2e}")
    return tuple(out)


def find_orbit(model: SymbolModel, E: float, n_samples: int = 2048,
               t_max: float = 500.0, rtol: float = 5e-14) -> Orbit:
    """Locate the closed orbit p0 = E through (x_right, 0) and sample one period."""
    if n_samples < 512:
        raise ValueError("n_samples must be >= 512")
    pack = flow.pack_flow(model)
    x0 = _rightmost_root(model, E)
    T, x_T, xi_T, status = flow.find_period(pack, x0, t_max, rtol=rtol, atol=rtol)
    if status == flow.STATUS_NO_RETURN:
        raise OrbitError(f"no Poincare return within t_max = {t_max}")
    if status != flow.STATUS_OK:
        raise OrbitError(f"flow integration failed with status {status}")
    xs, xis, status = flow.sample_loop(pack, x0, 0.0, T, n_samples, rtol=rtol, atol=rtol)
    if status != flow.STATUS_OK:
        raise OrbitError(f"orbit sampling failed with status {status}")
    ts = np.arange(n_samples) * (T / n_samples)

    closure = float(np.hypot(x_T - x0, xi_T - 0.0))
    diameter = float(np.hypot(xs.max() - xs.min(), xis.max() - xis.min()))
    if closure > 1e-8 * diameter:
        raise OrbitError(f"orbit does not close: gap {closure:.3e}")

    energies = np.array([model.eval(0, a, b) for a, b in zip(xs, xis)])
    drift = float(np.abs(energies - E).max())
    if drift > 1e-9 * max(1.0, abs(E)):
        raise OrbitError(f"energy drift {drift:.3e} along orbit")

    g_focal = lambda x, xi: model.eval_partial(0, 0, 1, x, xi)
    g_four = lambda x, xi: model.eval_partial(0, 1, 0, x, xi)
    focal = _roots_along_orbit(ts, xs, xis, T, pack, g_focal, 1e-10)
    singular = _roots_along_orbit(ts, xs, xis, T, pack, g_four, 1e-10)
    if len(focal) != 2:
        raise OrbitError(f"unsupported topology: {len(focal)} focal points")

    return Orbit(energy=E, t=ts, x=xs, xi=xis, period=T,
                 focal_points=focal, fourier_singular_points=singular,
                 energy_drift=drift, closure_error=closure, pack=pack)


def focal_points(orbit: Orbit, model: SymbolModel):
    """Re-polished focal and Fourier-singular points of an existing orbit."""
    g_focal = lambda x, xi: model.eval_partial(0, 0, 1, x, xi)
    g_four = lambda x, xi: model.eval_partial(0, 1, 0, x, xi)
    focal = _roots_along_orbit(orbit.t, orbit.x, orbit.xi, orbit.period,
                               orbit.pack, g_focal, 1e-10)
    singular = _roots_along_orbit(orbit.t, orbit.x, orbit.xi, orbit.period,
                                  orbit.pack, g_four, 1e-10)
    if len(focal) != 2:
        raise OrbitError(f"unsupported topology: {len(focal)} focal points")
    return focal, singular

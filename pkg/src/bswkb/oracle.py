"""Reference spectra by direct diagonalization of the Weyl-quantized operator.

Grid discretization with 4th-order stencils and Dirichlet truncation; the
eigensolve runs on the banded form (LAPACK *sbevx / *hbevx), repeated at N
and 2N with a Richardson error estimate per eigenvalue.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import eig_banded
from scipy.optimize import brentq

from .symbols import SymbolModel


class OracleError(RuntimeError):
    """Discretization or refinement failure."""


@dataclass(frozen=True)
class OracleSpectrum:
    h: float
    domain: tuple
    grid_size: int
    eigenvalues: np.ndarray      # Richardson-extrapolated, lowest m
    error_estimates: np.ndarray  # |E_2N - E_N| / 15 per eigenvalue
    raw_coarse: np.ndarray
    raw_fine: np.ndarray


def _level_coefficients(model: SymbolModel, level: int):
    """Collect x-polynomial coefficient arrays per xi-power for one level."""
    coeff, xp, kp = model.term_arrays(level)
    out = {0: [], 1: [], 2: []}
    for c, a, b in zip(coeff, xp, kp):
        if b > 2:
            raise OracleError("xi_degree > 2 not quantizable on a grid")
        out[int(b)].append((float(c), int(a)))
    return out


def _poly_on_grid(pairs, x, deriv=0):
    out = np.zeros_like(x)
    for c, a in pairs:
        if a < deriv:
            continue
        f = 1.0
        for j in range(deriv):
            f *= a - j
        out += c * f * x ** (a - deriv)
    return out


def discretize(model: SymbolModel, h: float, domain, N: int) -> np.ndarray:
    """Dense Hermitian matrix of P on the interior grid (Dirichlet boundary).

    The xi^2 coefficient must be x-independent (true for all supported
    families); degree-1 Weyl terms use the exactly symmetrized form
    (c hD + hD c)/2 and make the matrix complex Hermitian.
    """
    if model.xi_degree > 2:
        raise OracleError("xi_degree > 2 not quantizable on a grid")
    if N < 64:
        raise OracleError("N must be >= 64")
    lo, hi = float(domain[0]), float(domain[1])
    dx = (hi - lo) / (N + 1)
    x = lo + dx * np.arange(1, N + 1)

    # 4th-order stencil matrices (ghost nodes beyond the boundary are zero)
    def banded_from_stencil(offsets, weights):
        A = np.zeros((N, N))
        for off, w in zip(offsets, weights):
            A += w * np.eye(N, k=off)
        return A

    D2 = banded_from_stencil((-2, -1, 0, 1, 2),
                             np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / (12.0 * dx * dx))
    D1 = banded_from_stencil((-2, -1, 1, 2),
                             np.array([1.0, -8.0, 8.0, -1.0]) / (12.0 * dx))

    any_degree1 = False
    mats = []
    for level in range(3):
        cs = _level_coefficients(model, level)
        M = np.zeros((N, N), dtype=complex)
        diag = _poly_on_grid(cs[0], x)
        if level == 0 and model.potential is not None:
            diag = diag + model.potential.deriv_array(0, x)
        M += np.diag(diag)
        if cs[1]:
            any_degree1 = True
            c1 = _poly_on_grid(cs[1], x)
            # (c hD + hD c)/2, exactly Hermitian on the grid
            M += (-1j * h / 2.0) * (np.diag(c1) @ D1 + D1 @ np.diag(c1))
        if cs[2]:
            c2 = _poly_on_grid(cs[2], x)
            if np.ptp(c2) > 1e-14 * max(1.0, np.abs(c2).max()):
                raise OracleError("x-dependent xi^2 coefficient unsupported")
            M += -h * h * float(c2[0]) * D2
        mats.append(M)
    A = mats[0] + h * mats[1] + h * h * mats[2]
    if not any_degree1:
        A = A.real.copy()
    return A


def _lowest_eigs(A: np.ndarray, m: int, vectors: bool = False):
    """Lowest m eigenvalues via the banded LAPACK driver."""
    N = A.shape[0]
    bw = 0
    for k in range(N - 1, 0, -1):
        if np.any(np.abs(np.diagonal(A, k)) > 0.0):
            bw = k
            break
    band = np.zeros((bw + 1, N), dtype=A.dtype)
    for k in range(bw + 1):
        band[bw - k, k:] = np.diagonal(A, k)
    out = eig_banded(band, lower=False, eigvals_only=not vectors,
                     select="i", select_range=(0, m - 1))
    return out


def _auto_domain(model: SymbolModel, E_top: float, h: float):
    """Symmetric-ish box: turning points at E_top plus a forbidden margin
    thick enough that the tunneling integral kills boundary mass."""
    f = lambda x, s: model.eval(0, x, 0.0) - E_top

    def outer_root(side):
        x = 1.0 * side
        for _ in range(90):
            if model.eval(0, x, 0.0) > E_top:
                break
            x *= 1.5
        else:
            raise OracleError("potential does not confine at requested energy")
        return brentq(lambda y: model.eval(0, y, 0.0) - E_top,
                      min(0.0, x), max(0.0, x), xtol=1e-12)

    x_r = outer_root(+1)
    x_l = outer_root(-1)
    width = x_r - x_l

    def widen(x_edge, side):
        # extend until int sqrt(V - E_top)/h dx >= 24 (boundary mass ~ e^-48)
        step = 0.05 * width
        x = x_edge
        acc = 0.0
        while acc < 24.0 * h and abs(x - x_edge) < 50.0 * width:
            v = model.eval(0, x + side * 0.5 * step, 0.0) - E_top
            acc += np.sqrt(max(v, 0.0)) * step
            x += side * step
        if acc < 24.0 * h:
            raise OracleError("cannot build a forbidden margin (well too shallow)")
        return x

    lo = widen(x_l, -1)
    hi = widen(x_r, +1)
    pad = 0.08 * (hi - lo)
    return lo - pad, hi + pad


def _auto_N(model: SymbolModel, E_top: float, h: float, domain) -> int:
    # resolve the fastest oscillation: k_max dx <= 0.1
    vmin = min(model.eval(0, x, 0.0) for x in np.linspace(domain[0], domain[1], 512))
    # xi^2 coefficient (constant by construction)
    cs = _level_coefficients(model, 0)
    c2 = cs[2][0][0] if cs[2] else 1.0
    k_max = np.sqrt(max(E_top - vmin, 1e-12) / c2) / h
    L = domain[1] - domain[0]
    N = int(np.ceil(k_max * L / 0.1))
    return int(np.clip(512 * int(np.ceil(N / 512)), 512, 2048))


def classical_energy_top(model: SymbolModel, h: float, m: int) -> float:
    """Rough upper energy for m levels from the leading action (box sizing only)."""
    from .actions import action_S0
    from .orbits import find_orbit

    target = 2.0 * np.pi * h * (m + 1.5)
    E_min = well_minimum(model)
    E = E_min + max(0.5 * h, 1e-4 * max(1.0, abs(E_min)))
    S_prev = 0.0
    for _ in range(200):
        orb = find_orbit(model, E, n_samples=512)
        S = action_S0(orb)
        if S >= target:
            return E
        step = (E - E_min) * 0.6
        E = E + max(step, 0.05 * h)
        S_prev = S
    raise OracleError("requested level count outside the well")


def well_minimum(model: SymbolModel) -> float:
    """Minimum of p0 over phase space (well bottom)."""
    from scipy.optimize import minimize

    best = None
    for x0 in np.linspace(-3.0, 3.0, 13):
        res = minimize(lambda z: model.eval(0, z[0], z[1]), np.array([x0, 0.0]),
                       method="Nelder-Mead",
                       options={"xatol": 1e-12, "fatol": 1e-14, "maxiter": 2000})
        if best is None or res.fun < best:
            best = float(res.fun)
    return best


def oracle_spectrum(model: SymbolModel, h: float, m: int, domain=None,
                    N: int | None = None, check_boundary: bool = True) -> OracleSpectrum:
    """Lowest m eigenvalues with N -> 2N Richardson refinement (4th order)."""
    if domain is None or N is None:
        E_top = classical_energy_top(model, h, m)
        if domain is None:
            domain = _auto_domain(model, E_top, h)
        if N is None:
            N = _auto_N(model, E_top, h, domain)
    lo, hi = float(domain[0]), float(domain[1])
    e_coarse = np.sort(np.real(_lowest_eigs(discretize(model, h, (lo, hi), N), m)))
    A2 = discretize(model, h, (lo, hi), 2 * N)
    if check_boundary:
        vals2, vecs = _lowest_eigs(A2, m, vectors=True)
        edge = max(8, int(0.05 * 2 * N))
        mass = (np.abs(vecs[:edge, :]) ** 2).sum(axis=0) + (np.abs(vecs[-edge:, :]) ** 2).sum(axis=0)
        total = (np.abs(vecs) ** 2).sum(axis=0)
        if np.any(mass / total > 1e-8):
            raise OracleError("boundary-truncation check failed: enlarge domain")
        e_fine = np.sort(np.real(vals2))
    else:
        e_fine = np.sort(np.real(_lowest_eigs(A2, m)))
    extrap = (16.0 * e_fine - e_coarse) / 15.0
    est = np.abs(e_fine - e_coarse) / 15.0
    bad = est > 1e-7 * np.maximum(1.0, np.abs(extrap))
    if np.any(bad):
        raise OracleError(
            f"refinement estimate too large for levels {np.nonzero(bad)[0].tolist()}")
    return OracleSpectrum(h=h, domain=(lo, hi), grid_size=N,
                          eigenvalues=extrap, error_estimates=est,
                          raw_coarse=e_coarse, raw_fine=e_fine)

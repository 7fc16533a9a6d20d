"""Chart-level WKB transport data along arcs of a closed energy curve.

One generic frame serves both representations: the Fourier chart uses the
symbol as-is (chart variable xi, conjugate root x solving p0(x, xi) = E);
the spatial chart runs the same machinery on the swapped view
(x, xi) -> (xi, -x), so the frame's "psi" becomes the spatial phase
phi = int xi dx and its alpha becomes -beta0.

Per arc the frame carries the phase derivatives through fourth order, the
transverse derivative alpha on the arc, the transport ratio b0'/b0, the
phase-correction density T1, the reduced order-h amplitude/phase increments
(Re/Im D1), the stationary-phase transition term D2, and a direct quadrature
of D1's defining integral as an independent cross-check oracle.

All reduced increments use signed alpha and hold on arcs of either alpha
sign (negative-alpha arcs occur for spatial charts on the upper branch);
the direct quadrature carries the sgn(alpha) prefactor of its definition.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .symbols import SymbolModel

SQRT2 = math.sqrt(2.0)
C0_DEFAULT = 1.0 / SQRT2

# 4-point Gauss-Legendre on [0, 1]
_GN = np.array([0.069431844202773712, 0.33000947820757187,
                0.66999052179242813, 0.93056815579722628])
_GW = np.array([0.17392742256872693, 0.32607257743127307,
                0.32607257743127307, 0.17392742256872693])


def _lagrange_cum_basis():
    # antiderivatives (from 0) of the Lagrange basis over the Gauss nodes
    out = []
    for k in range(4):
        others = [g for i, g in enumerate(_GN) if i != k]
        num = np.poly(others)
        den = np.prod([_GN[k] - g for g in others])
        out.append(np.polyint(num / den))
    return out


_LAGR_INT = _lagrange_cum_basis()

_CUM_NAMES = ("T1", "f_theta", "f_im26a", "f_im26b")


class ChartError(RuntimeError):
    """Chart boundary hit or root continuation failure."""


def _newton_root(view, E, v, x_seed, tol=1e-13, max_iter=80):
    x = x_seed
    scale = max(1.0, abs(E))
    for _ in range(max_iter):
        f = view.eval_partial(0, 0, 0, x, v) - E
        fx = view.eval_partial(0, 1, 0, x, v)
        if fx == 0.0:
            raise ChartError("chart boundary hit: simple root lost")
        step = f / fx
        x -= step
        if abs(step) <= tol * max(1.0, abs(x)):
            f = view.eval_partial(0, 0, 0, x, v) - E
            if abs(f) > 1e-9 * scale:
                raise ChartError(f"eikonal root polish stalled: |p0-E| = {abs(f):.2e}")
            return x
    raise ChartError("eikonal Newton did not converge")


class ChartFrame:
    """Transport data on one arc; `var` is the chart variable."""

    def __init__(self, view, E, v_lo, v_hi, n, x_seed, anchor=None,
                 c0=C0_DEFAULT, min_alpha_frac=1e-3):
        if not v_lo < v_hi:
            raise ChartError("empty chart interval")
        self.view = view
        self.E = E
        self.c0 = c0
        anchor = 0.5 * (v_lo + v_hi) if anchor is None else float(anchor)
        if not v_lo <= anchor <= v_hi:
            raise ChartError("anchor outside chart interval")
        grid = np.linspace(v_lo, v_hi, n)
        j = int(np.argmin(np.abs(grid - anchor)))
        if abs(grid[j] - anchor) > 1e-14 * max(1.0, abs(anchor)):
            grid = np.sort(np.append(grid, anchor))
        self.var = grid
        self.i_anchor = int(np.argmin(np.abs(grid - anchor)))
        self.anchor = float(grid[self.i_anchor])

        # continuation outward from the anchor in both directions
        pts: list = [None] * grid.size
        x_anchor = _newton_root(view, E, self.anchor, x_seed)
        pts[self.i_anchor] = self._point_data(self.anchor, x_anchor)
        for k in range(self.i_anchor + 1, grid.size):
            pts[k] = self._point_data(grid[k], pts[k - 1]["X"])
        for k in range(self.i_anchor - 1, -1, -1):
            pts[k] = self._point_data(grid[k], pts[k + 1]["X"])
        self._pts = pts

        alphas = np.array([p["alpha"] for p in pts])
        scale = float(np.abs(alphas).max())
        if np.abs(alphas).min() < min_alpha_frac * scale:
            raise ChartError("chart boundary hit: |alpha| below cutoff")
        if np.any(np.sign(alphas) != np.sign(alphas[0])):
            raise ChartError("alpha changes sign inside chart")
        self.sgn = 1.0 if alphas[self.i_anchor] > 0 else -1.0

        self._build_cumulatives()

    # -- pointwise data --------------------------------------------------------

    def _point_data(self, v, x_seed):
        view, E = self.view, self.E
        X = _newton_root(view, E, v, x_seed)
        pp = lambda lvl, a, b: view.eval_partial(lvl, a, b, X, v)
        alpha = pp(0, 1, 0)
        d01 = pp(0, 0, 1)
        d20, d11, d02 = pp(0, 2, 0), pp(0, 1, 1), pp(0, 0, 2)
        d30, d21, d12, d03 = pp(0, 3, 0), pp(0, 2, 1), pp(0, 1, 2), pp(0, 0, 3)
        d40, d31, d22 = pp(0, 4, 0), pp(0, 3, 1), pp(0, 2, 2)
        x1 = -d01 / alpha
        x2 = -(d20 * x1 ** 2 + 2.0 * d11 * x1 + d02) / alpha
        x3 = -(d30 * x1 ** 3 + 3.0 * d21 * x1 ** 2 + 3.0 * d12 * x1 + d03
               + 3.0 * x2 * (d20 * x1 + d11)) / alpha
        alpha1 = d20 * x1 + d11
        alpha2 = d30 * x1 ** 2 + 2.0 * d21 * x1 + d12 + d20 * x2

        p1, p1x, p1xi = pp(1, 0, 0), pp(1, 1, 0), pp(1, 0, 1)
        p1xx, p1xxi = pp(1, 2, 0), pp(1, 1, 1)
        p2 = pp(2, 0, 0)

        psi2 = -x1
        T1 = ((p2 - 0.125 * d22 + psi2 / 12.0 * d31 + psi2 ** 2 / 24.0 * d40) / alpha
              + 0.125 * alpha1 ** 2 / alpha ** 3 * d20
              + psi2 * alpha1 / (6.0 * alpha ** 2) * d30
              - p1 / alpha ** 2 * (p1x - p1 / (2.0 * alpha) * d20))
        bracket = psi2 / (6.0 * alpha) * d30 + alpha1 / (4.0 * alpha ** 2) * d20
        G = p1x / alpha - p1 * d20 / alpha ** 2

        rho = -alpha1 / (2.0 * alpha) + 1j * p1 / alpha
        dp1 = p1x * x1 + p1xi
        rho_p = (-(alpha2 * alpha - alpha1 ** 2) / (2.0 * alpha ** 2)
                 + 1j * (dp1 * alpha - p1 * alpha1) / alpha ** 2)

        return {
            "v": v, "X": X, "x1": x1, "x2": x2, "x3": x3,
            "alpha": alpha, "alpha1": alpha1, "alpha2": alpha2,
            "psi1": -X, "psi2": psi2, "psi3": -x2, "psi4": -x3,
            "p1": p1, "p1x": p1x, "p1xi": p1xi, "p1xx": p1xx, "p1xxi": p1xxi,
            "p2": p2, "d20": d20, "d11": d11, "d30": d30, "d21": d21,
            "d40": d40, "d31": d31, "d22": d22,
            "T1": T1, "bracket": bracket, "G": G,
            "rho": rho, "rho_p": rho_p,
            "f_theta": p1 / alpha,
            # printed spatial Im D1 integrands in frame terms:
            # (beta1/beta0^2) p1 dx -> -p1x*p1/alpha^2, -(p2/beta0) dx -> p2/alpha
            "f_im26a": -p1x * p1 / alpha ** 2,
            "f_im26b": p2 / alpha,
        }

    def _d1_integrand(self, pd, theta) -> complex:
        """Integrand of the defining D1 integral (without the sgn prefactor)."""
        alpha, x1 = pd["alpha"], pd["x1"]
        b0 = self.c0 * abs(alpha) ** -0.5 * np.exp(1j * theta)
        b0p = pd["rho"] * b0
        b0pp = (pd["rho"] ** 2 + pd["rho_p"]) * b0
        # lambda(x, v) = (p0 - E)/(x - X): partials at x = X from s-moments
        lam_x = pd["d20"] / 2.0
        lam_xx = pd["d30"] / 3.0
        lam_xv = pd["d30"] * x1 / 6.0 + pd["d21"] / 2.0
        lam_xvv = (pd["d40"] * x1 ** 2 / 12.0 + pd["d30"] * pd["x2"] / 6.0
                   + pd["d31"] * x1 / 3.0 + pd["d22"] / 2.0)
        lam_xxv = pd["d40"] * x1 / 12.0 + pd["d31"] / 3.0
        # p~1 = p1 - (i/2) d11 p0;  p~2 = p2 - (i/2) d11 p1 - (1/8) d22 p0
        tp1_x = pd["p1x"] - 0.5j * pd["d21"]
        tp1_xx = pd["p1xx"] - 0.5j * pd["d31"]
        tp1_xv = pd["p1xxi"] - 0.5j * pd["d22"]
        tp2 = pd["p2"] - 0.5j * pd["p1xxi"] - 0.125 * pd["d22"]
        dxN = b0 * tp1_x + 1j * (lam_xv * b0 + lam_x * b0p)
        dxxN = b0 * tp1_xx + 1j * (lam_xxv * b0 + lam_xx * b0p)
        dxvN = (b0p * tp1_x + b0 * tp1_xv
                + 1j * (lam_xvv * b0 + 2.0 * lam_xv * b0p + lam_x * b0pp))
        dxi_lam0 = dxvN + 0.5 * x1 * dxxN
        return (1j * tp2 * b0 - dxi_lam0) * np.exp(-1j * theta) * abs(alpha) ** -0.5

    # -- cumulative integrals ----------------------------------------------------

    def _gauss_row(self, a, b, seed):
        nodes = a + _GN * (b - a)
        row = []
        for v in nodes:
            pd = self._point_data(v, seed)
            seed = pd["X"]
            row.append(pd)
        return row

    def _build_cumulatives(self):
        grid = self.var
        n = grid.size
        cums = {name: np.zeros(n) for name in _CUM_NAMES}
        cum_d1 = np.zeros(n, dtype=complex)
        for j in range(n - 1):
            a, b = grid[j], grid[j + 1]
            w = b - a
            row = self._gauss_row(a, b, self._pts[j]["X"])
            for name in _CUM_NAMES:
                vals = np.array([p[name] for p in row])
                cums[name][j + 1] = cums[name][j] + w * float(_GW @ vals)
            # theta inside the interval from the Lagrange antiderivatives
            fth = np.array([p["f_theta"] for p in row])
            th_a = cums["f_theta"][j]
            d1_vals = []
            for k, pd in enumerate(row):
                th = th_a + w * float(sum(fth[m] * np.polyval(_LAGR_INT[m], _GN[k])
                                          for m in range(4)))
                d1_vals.append(self._d1_integrand(pd, th))
            cum_d1[j + 1] = cum_d1[j] + w * complex(_GW @ np.asarray(d1_vals))
        for name in _CUM_NAMES:
            cums[name] -= cums[name][self.i_anchor]
        cum_d1 -= cum_d1[self.i_anchor]
        self._cums = cums
        self._cum_d1 = cum_d1

    def _locate(self, v):
        """(index, is_exact_node); exact nodes reuse stored values."""
        grid = self.var
        if v < grid[0] - 1e-12 or v > grid[-1] + 1e-12:
            raise ChartError(f"point {v} outside chart arc")
        k = int(np.searchsorted(grid, v))
        if k < grid.size and grid[k] == v:
            return k, True
        if k > 0 and grid[k - 1] == v:
            return k - 1, True
        return int(np.clip(k - 1, 0, grid.size - 2)), False

    def point(self, v):
        j, exact = self._locate(v)
        if exact:
            return self._pts[j]
        return self._point_data(v, self._pts[j]["X"])

    def _cum_at(self, name, v):
        j, exact = self._locate(v)
        total = self._cums[name][j]
        if not exact:
            a = self.var[j]
            row = self._gauss_row(a, v, self._pts[j]["X"])
            vals = np.array([p[name] for p in row])
            total += (v - a) * float(_GW @ vals)
        return total

    # -- public accessors ----------------------------------------------------------

    def theta(self, v) -> float:
        """Cumulative int p1/alpha from the anchor."""
        return self._cum_at("f_theta", v)

    def psi_grid(self) -> np.ndarray:
        """Phase samples (cumulative of psi' = -X), zero at the anchor."""
        psi1 = np.array([p["psi1"] for p in self._pts])
        psi2 = np.array([p["psi2"] for p in self._pts])
        dv = np.diff(self.var)
        inc = 0.5 * dv * (psi1[:-1] + psi1[1:]) + dv ** 2 / 12.0 * (psi2[:-1] - psi2[1:])
        out = np.zeros(self.var.size)
        out[1:] = np.cumsum(inc)
        return out - out[self.i_anchor]

    def psi(self, v) -> float:
        j, exact = self._locate(v)
        grid_vals = self.psi_grid()
        if exact:
            return float(grid_vals[j])
        pd = self.point(v)
        pj = self._pts[j]
        h = v - self.var[j]
        return (grid_vals[j] + 0.5 * h * (pj["psi1"] + pd["psi1"])
                + h ** 2 / 12.0 * (pj["psi2"] - pd["psi2"]))

    def sqrt2_im_d1(self, v) -> float:
        """sqrt(2) Im D1: int T1 plus the bracket increment (signed alpha)."""
        pd = self.point(v)
        pa = self._pts[self.i_anchor]
        return self._cum_at("T1", v) + (pd["bracket"] - pa["bracket"])

    def sqrt2_re_d1(self, v) -> float:
        """sqrt(2) Re D1: -(1/2) increment of d_x(p1/d_x p0) on the arc."""
        pd = self.point(v)
        pa = self._pts[self.i_anchor]
        return -0.5 * (pd["G"] - pa["G"])

    def d1_reduced(self, v) -> complex:
        return (self.sqrt2_re_d1(v) + 1j * self.sqrt2_im_d1(v)) / SQRT2

    def d1_direct(self, v) -> complex:
        """Defining integral of D1, quadrature oracle for the reduced path."""
        j, exact = self._locate(v)
        total = self._cum_d1[j]
        if not exact:
            a = self.var[j]
            w = v - a
            row = self._gauss_row(a, v, self._pts[j]["X"])
            fth = np.array([p["f_theta"] for p in row])
            th_a = self._cums["f_theta"][j]
            vals = []
            for k, pd in enumerate(row):
                th = th_a + w * float(sum(fth[m] * np.polyval(_LAGR_INT[m], _GN[k])
                                          for m in range(4)))
                vals.append(self._d1_integrand(pd, th))
            total = total + w * complex(_GW @ np.asarray(vals))
        return self.sgn * total

    def im26(self, v) -> float:
        """Printed spatial-representation Im D1 (p1/p2 terms only), anchored."""
        return self.c0 * (self._cum_at("f_im26a", v) + self._cum_at("f_im26b", v))

    def d2(self, v) -> complex:
        """Stationary-phase transition term; needs psi'' != 0 at v."""
        pd = self.point(v)
        psi2, psi3, psi4 = pd["psi2"], pd["psi3"], pd["psi4"]
        if psi2 == 0.0:
            raise ChartError("D2 undefined at a degenerate (focal) point")
        b0pp_over_b0 = pd["rho"] ** 2 + pd["rho_p"]
        return ((-1.0 / 2j) * b0pp_over_b0 / psi2
                + (1.0 / 8j) * (psi4 + 4.0 * psi3 * pd["rho"]) / psi2 ** 2
                - (5.0 / 24j) * psi3 ** 2 / psi2 ** 3)

    def b0(self, v, c0=None) -> complex:
        pd = self.point(v)
        c = self.c0 if c0 is None else c0
        return c * abs(pd["alpha"]) ** -0.5 * np.exp(1j * self.theta(v))


# -- concrete charts -------------------------------------------------------------


def _bracket_conjugate_root(view, E, v, side: int):
    """Outermost root of p0(., v) = E on the requested side of 0."""
    f = lambda x: view.eval_partial(0, 0, 0, x, v) - E
    if f(0.0) >= 0.0:
        raise ChartError("cannot seed chart root: p0(0, anchor) >= E")
    x = 1.0 * side
    for _ in range(80):
        if f(x) > 0.0:
            break
        x *= 1.6
    else:
        raise ChartError("no conjugate-root bracket found")
    from scipy.optimize import brentq

    return brentq(f, min(0.0, x), max(0.0, x), xtol=1e-15, rtol=8.9e-16)


@dataclass(frozen=True)
class FourierChart:
    """WKB data in the Fourier representation on one xi-arc (ChartData)."""

    E: float
    branch: str
    frame: ChartFrame

    @property
    def xi_grid(self):
        return self.frame.var

    @property
    def psi(self):
        return self.frame.psi_grid()

    @property
    def psi_derivs(self):
        pts = self.frame._pts
        return np.array([[p["psi1"], p["psi2"], p["psi3"], p["psi4"]] for p in pts]).T

    @property
    def alpha(self):
        return np.array([p["alpha"] for p in self.frame._pts])

    @property
    def T1(self):
        return np.array([p["T1"] for p in self.frame._pts])

    @property
    def b0(self):
        return np.array([self.frame.b0(v) for v in self.frame.var])

    @property
    def D1(self):
        return np.array([self.frame.d1_reduced(v) for v in self.frame.var])

    def x_of_xi(self, xi: float) -> float:
        return self.frame.point(xi)["X"]


@dataclass(frozen=True)
class SpatialChart:
    """WKB data in the spatial representation on one x-arc (SpatialChartData)."""

    E: float
    branch: int  # sign of xi on the arc
    frame: ChartFrame
    model: SymbolModel

    @property
    def x_grid(self):
        return self.frame.var

    @property
    def phi(self):
        return self.frame.psi_grid()

    def xi_of_x(self, x: float) -> float:
        # physical xi = -X of the swapped frame = phi'(x)
        return -self.frame.point(x)["X"]

    @property
    def beta0(self):
        return np.array([-p["alpha"] for p in self.frame._pts])

    @property
    def beta1(self):
        return np.array([-p["p1x"] for p in self.frame._pts])

    def d1_tilde(self, x) -> complex:
        """Printed spatial D1: Re = -(1/2) c0 beta1/beta0 (anchored), Im per
        the cumulative p1/p2 quadratures; vanishes identically for p1 = p2 = 0."""
        pd = self.frame.point(x)
        pa = self.frame._pts[self.frame.i_anchor]
        c0 = self.frame.c0
        re = -0.5 * c0 * ((-pd["p1x"]) / (-pd["alpha"]) - (-pa["p1x"]) / (-pa["alpha"]))
        return complex(re, self.frame.im26(x))

    def sqrt2_im_full(self, x) -> float:
        """Full transport Im increment (the production h^2 phase density)."""
        return self.frame.sqrt2_im_d1(x)

    def sqrt2_re_full(self, x) -> float:
        return self.frame.sqrt2_re_d1(x)


def eikonal_fourier(model: SymbolModel, E: float, xi_interval, branch: str = "right",
                    n: int = 601, anchor: float = 0.0, c0: float = C0_DEFAULT) -> FourierChart:
    """Fourier chart on an xi-arc; branch picks the x-root side of p0(., xi) = E."""
    side = +1 if branch == "right" else -1
    seed = _bracket_conjugate_root(model, E, anchor, side)
    frame = ChartFrame(model, E, xi_interval[0], xi_interval[1], n, seed, anchor=anchor, c0=c0)
    return FourierChart(E=E, branch=branch, frame=frame)


def eikonal_spatial(model: SymbolModel, E: float, x_interval, branch: int = +1,
                    n: int = 601, anchor: float | None = None,
                    c0: float = C0_DEFAULT) -> SpatialChart:
    """Spatial chart on an x-arc; branch is the sign of xi along the arc."""
    view = model.swapped()
    anchor = 0.5 * (x_interval[0] + x_interval[1]) if anchor is None else anchor
    seed = _bracket_conjugate_root(view, E, anchor, -int(branch))
    frame = ChartFrame(view, E, x_interval[0], x_interval[1], n, seed,
                       anchor=anchor, c0=c0)
    return SpatialChart(E=E, branch=int(branch), frame=frame, model=model)


# -- spec-facing operation wrappers ------------------------------------------------


def transport_b0(chart: FourierChart, model: SymbolModel, C0: float) -> np.ndarray:
    """b0 samples with an explicit constant C0 (linear in C0)."""
    if C0 == 0.0:
        return np.zeros(chart.xi_grid.size, dtype=complex)
    return np.array([chart.frame.b0(v, c0=C0) for v in chart.xi_grid])


def T1_density(chart: FourierChart, model: SymbolModel, xi: float) -> float:
    return chart.frame.point(xi)["T1"]


def D1_fourier(chart: FourierChart, model: SymbolModel, xi: float) -> complex:
    return chart.frame.d1_reduced(xi)


def D1_spatial(schart: SpatialChart, model: SymbolModel, x: float) -> complex:
    return schart.d1_tilde(x)


@dataclass(frozen=True)
class OverlapReport:
    im_deviation: float
    re_deviation: float
    kappa_im: float
    kappa_re: float
    n_points: int


def chart_overlap_check(chart: FourierChart, schart: SpatialChart,
                        n_check: int = 25, edge_frac: float = 0.12) -> OverlapReport:
    """Pointwise chart consistency of the order-h corrections on the overlap.

    Compares the full spatial transport against the Fourier-side value plus
    the stationary-phase transition term D2 (which maps between the two
    representations pointwise), modulo a constant anchor offset kappa:
        sqrt2 ImD1_spatial(x) = sqrt2 ImD1(xi(x)) + Im D2(xi(x)) + kappa.
    Returns max deviations after removing the mean offset for Im and Re parts.
    """
    f, s = chart.frame, schart.frame
    xi_lo, xi_hi = f.var[0], f.var[-1]
    pad = edge_frac * (xi_hi - xi_lo)
    xs, xis = [], []
    for x in np.linspace(s.var[0], s.var[-1], 4 * n_check):
        xi = schart.xi_of_x(x)
        if xi_lo + pad <= xi <= xi_hi - pad:
            xs.append(x)
            xis.append(xi)
        if len(xs) == n_check:
            break
    if len(xs) < 3:
        raise ChartError("charts do not overlap")
    im_dev, re_dev = [], []
    for x, xi in zip(xs, xis):
        d2 = f.d2(xi)
        im_dev.append(s.sqrt2_im_d1(x) - (f.sqrt2_im_d1(xi) + d2.imag))
        re_dev.append(s.sqrt2_re_d1(x) - (f.sqrt2_re_d1(xi) + d2.real))
    im_dev = np.array(im_dev)
    re_dev = np.array(re_dev)
    k_im, k_re = float(im_dev.mean()), float(re_dev.mean())
    return OverlapReport(
        im_deviation=float(np.abs(im_dev - k_im).max()),
        re_deviation=float(np.abs(re_dev - k_re).max()),
        kappa_im=k_im, kappa_re=k_re, n_points=len(xs))


def re_bracket_telescoping(model: SymbolModel, orbit) -> float:
    """Loop sum of the Re-part chart increments -(1/2) d_x(p1/d_x p0).

    The increments are endpoint differences of a single-valued function on the
    orbit, so a closed chart cycle must telescope to zero (the realization of
    Re loop(Omega_1) = 0 at the bracket level).  Chart cut points sit between
    consecutive focal / Fourier-singular points, where both chart types are
    healthy.
    """
    pa = model.eval_partial_array

    def g_vals(x, xi):
        px = pa(0, 1, 0, x, xi)
        p1x = pa(1, 1, 0, x, xi)
        p1 = pa(1, 0, 0, x, xi)
        pxx = pa(0, 2, 0, x, xi)
        return p1x / px - p1 * pxx / px ** 2

    special = sorted([t for t, _, _ in orbit.focal_points]
                     + [t for t, _, _ in orbit.fourier_singular_points])
    cuts = []
    for i, t in enumerate(special):
        t_next = special[(i + 1) % len(special)]
        if t_next < t:
            t_next += orbit.period
        cuts.append(0.5 * (t + t_next) % orbit.period)
    states = [orbit.state_at(t) for t in cuts]
    vals = [float(g_vals(np.array([x]), np.array([xi]))[0]) for x, xi in states]
    total = 0.0
    for i in range(len(vals)):
        total += -0.5 * (vals[(i + 1) % len(vals)] - vals[i])
    return abs(total)

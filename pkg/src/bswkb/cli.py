"""Command-line front end: spectra, verification suites, convergence sweeps."""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .actions import DEFAULT_CALIBRATION, SignCalibration, stokes_check
from .charts import chart_overlap_check, eikonal_fourier, eikonal_spatial, re_bracket_telescoping
from .oracle import OracleError, oracle_spectrum
from .orbits import OrbitError, find_orbit
from .quantize import BSSolver, CalibrationError, QuantizeError, calibrate_signs
from .quasimodes import QuasimodeError, residual_norm
from .symbols import SymbolError, parse_symbol_config

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_CONFIG = 2
EXIT_SOLVER = 3

_SUITES = ("stokes", "charts", "residual", "calibration", "oracle-compare")


class ConfigError(ValueError):
    pass


@dataclass
class RunManifest:
    command: str
    config_path: str | None = None
    h: float | None = None
    h_list: tuple = ()
    orders: tuple = (2,)
    n_range: tuple = (0, 4)
    oracle_n: int | None = None
    domain: tuple | None = None
    suite: str | None = None
    out: str | None = None
    fmt: str = "csv"
    calibration: str = "default"

    def echo(self) -> str:
        d = dataclasses.asdict(self)
        d.pop("out", None)  # destination is not semantic: keep runs byte-identical
        return json.dumps(d, sort_keys=True)


def _parse_manifest(args) -> RunManifest:
    man = RunManifest(command=args.command)
    man.config_path = getattr(args, "config", None)
    if getattr(args, "h", None) is not None and getattr(args, "h_list", None):
        raise ConfigError("--h and --h-list are mutually exclusive")
    if getattr(args, "h", None) is not None:
        if args.h <= 0:
            raise ConfigError("h must be positive")
        man.h = args.h
    if getattr(args, "h_list", None):
        hs = tuple(float(tok) for tok in args.h_list.split(","))
        if any(h <= 0 for h in hs):
            raise ConfigError("h values must be positive")
        man.h_list = hs
    if getattr(args, "order", None) is not None:
        orders = tuple(int(tok) for tok in str(args.order).split(","))
        if any(o not in (0, 1, 2) for o in orders):
            raise ConfigError("orders must be in {0, 1, 2}")
        man.orders = orders
    if getattr(args, "n_range", None):
        try:
            a, b = args.n_range.split("..")
            man.n_range = (int(a), int(b))
        except ValueError as exc:
            raise ConfigError(f"bad --n-range {args.n_range!r} (want A..B)") from exc
        if man.n_range[1] < man.n_range[0] or man.n_range[0] < 0:
            raise ConfigError("empty or negative --n-range")
    if getattr(args, "domain", None):
        try:
            lo, hi = args.domain.split("..")
            man.domain = (float(lo), float(hi))
        except ValueError as exc:
            raise ConfigError(f"bad --domain {args.domain!r} (want LO..HI)") from exc
    man.oracle_n = getattr(args, "oracle_n", None)
    man.suite = getattr(args, "suite", None)
    man.out = getattr(args, "out", None)
    man.fmt = getattr(args, "format", "csv")
    man.calibration = getattr(args, "calibration", "default")
    return man


def _load_model(man: RunManifest):
    if not man.config_path:
        raise ConfigError("--config is required for this command")
    path = Path(man.config_path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    return parse_symbol_config(path.read_text())


def _load_calibration(man: RunManifest) -> SignCalibration:
    if man.calibration == "default":
        return DEFAULT_CALIBRATION
    if man.calibration == "auto":
        return calibrate_signs()
    path = Path(man.calibration)
    if not path.exists():
        raise ConfigError(f"calibration file not found: {path}")
    doc = json.loads(path.read_text())
    return SignCalibration(
        sigma_Gamma=int(doc["sigma_Gamma"]),
        sigma_p1sq=int(doc["sigma_p1sq"]),
        sigma_p2=int(doc["sigma_p2"]),
        provenance=doc.get("provenance", {}))


def _emit(man: RunManifest, header_meta: dict, columns: list[str], rows: list[list]):
    cal = header_meta.get("calibration", "")
    meta_lines = [f"# bswkb {__version__}",
                  f"# manifest {man.echo()}"]
    if cal:
        meta_lines.append(f"# calibration {cal}")
    if man.fmt == "csv":
        lines = meta_lines + [",".join(columns)]
        for row in rows:
            lines.append(",".join(_fmt_cell(c) for c in row))
        text = "\n".join(lines) + "\n"
    else:
        payload = {"meta": {"tool": f"bswkb {__version__}",
                            "manifest": json.loads(man.echo()),
                            "calibration": cal},
                   "columns": columns,
                   "rows": [[_json_cell(c) for c in row] for row in rows]}
        text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if man.out:
        Path(man.out).write_text(text)
    else:
        sys.stdout.write(text)


def _fmt_cell(c):
    if isinstance(c, float):
        return f"{c:.16e}"
    return str(c)


def _json_cell(c):
    if isinstance(c, (np.floating, np.integer)):
        return c.item()
    return c


def _cal_string(cal: SignCalibration) -> str:
    return (f"sigma_Gamma={cal.sigma_Gamma} sigma_p1sq={cal.sigma_p1sq} "
            f"sigma_p2={cal.sigma_p2}")


# -- commands --------------------------------------------------------------------


def cmd_spectrum(man: RunManifest) -> int:
    model = _load_model(man)
    cal = _load_calibration(man)
    if man.h is None:
        raise ConfigError("--h is required for spectrum")
    n_lo, n_hi = man.n_range
    columns = ["n"]
    for order in man.orders:
        columns += [f"E_order{order}", f"bs_residual_order{order}"]
    results = {}
    for order in man.orders:
        solver = BSSolver(model, man.h, order, cal)
        results[order] = [solver.quantize(n) for n in range(n_lo, n_hi + 1)]
    rows = []
    for i, n in enumerate(range(n_lo, n_hi + 1)):
        row = [n]
        for order in man.orders:
            e = results[order][i]
            row += [e.E, e.bs_residual]
        rows.append(row)
    _emit(man, {"calibration": _cal_string(cal)}, columns, rows)
    return EXIT_OK


def cmd_sweep(man: RunManifest) -> int:
    model = _load_model(man)
    cal = _load_calibration(man)
    if len(man.h_list) < 3:
        raise ConfigError("--h-list needs >= 3 values to fit a convergence order")
    order = man.orders[-1]
    n_lo, n_hi = man.n_range
    ns = list(range(n_lo, n_hi + 1))
    columns = ["h"] + [f"E_bs_n{n}" for n in ns] + [f"E_oracle_n{n}" for n in ns] \
        + [f"abs_err_n{n}" for n in ns]
    rows = []
    errs = {n: [] for n in ns}
    for h in man.h_list:
        solver = BSSolver(model, h, order, cal)
        es = [solver.quantize(n).E for n in ns]
        orc = oracle_spectrum(model, h, n_hi + 1, domain=man.domain,
                              N=man.oracle_n)
        eo = [orc.eigenvalues[n] for n in ns]
        row = [h] + es + eo + [abs(a - b) for a, b in zip(es, eo)]
        for n, a, b in zip(ns, es, eo):
            errs[n].append(abs(a - b))
        rows.append(row)
    fit_row = ["order_fit"]
    loghs = np.log(np.asarray(man.h_list))
    for n in ns:
        e = np.asarray(errs[n])
        if np.all(e < 1e-8):
            fit_row.append("exact")
        else:
            fit_row.append(f"{np.polyfit(loghs, np.log(np.maximum(e, 1e-16)), 1)[0]:.3f}")
    fit_row += [""] * (len(columns) - len(fit_row))
    rows.append(fit_row)
    _emit(man, {"calibration": _cal_string(cal)}, columns, rows)
    return EXIT_OK


def _verify_stokes(man, model, cal, report):
    rng = np.random.default_rng(20250809)
    families = {"harmonic": None, "quartic-well": None}
    from .symbols import make_model

    ok = True
    for fam in families:
        m = make_model(fam)
        r = stokes_check(m, 1.0, [(1.0, 0, 1)], [])
        ok &= report(f"stokes {fam} f=xi,g=0", r, 1e-6)
        worst = 0.0
        for _ in range(20):
            def rand_terms():
                k = rng.integers(1, 4)
                return [(float(rng.uniform(-1, 1)), int(rng.integers(0, 4)),
                         int(rng.integers(0, 4))) for _ in range(k)]
            worst = max(worst, stokes_check(m, 1.0, rand_terms(), rand_terms()))
        ok &= report(f"stokes {fam} 20 random forms (max)", worst, 1e-6)
    return ok


def _verify_charts(man, model, cal, report):
    from .symbols import make_model

    ok = True
    cases = [("harmonic", 1.0, (0.15, 0.9), (0.25, 0.9)),
             ("quartic-well", 1.0, (0.15, 0.9), (0.25, 0.9))]
    for fam, E, xi_arc, x_arc in cases:
        m = make_model(fam, p1=[[1.0, 1, 0]], p2=[[1.0, 0, 0]])
        ch = eikonal_fourier(m, E, xi_arc, branch="right", n=301, anchor=xi_arc[0] + 0.05)
        sch = eikonal_spatial(m, E, x_arc, branch=+1, n=301)
        rep = chart_overlap_check(ch, sch)
        ok &= report(f"overlap Im {fam} (p1=x, p2=1)", rep.im_deviation, 1e-6)
        ok &= report(f"overlap Re {fam} (p1=x, p2=1)", rep.re_deviation, 1e-6)
        orb = find_orbit(m, E)
        ok &= report(f"Re-bracket telescoping {fam}", re_bracket_telescoping(m, orb), 1e-8)
        d = max(abs(ch.frame.d1_direct(v) - ch.frame.d1_reduced(v))
                for v in np.linspace(xi_arc[0] + 0.1, xi_arc[1] - 0.1, 7))
        ok &= report(f"D1 direct-vs-reduced {fam}", d, 1e-7)
    m0 = make_model("morse", p1=[[0.3, 1, 0]], p2=[[1.0, 0, 0]], params={"A": 4.0, "a": 1.0})
    ch = eikonal_fourier(m0, -2.0, (-0.6, 0.6), branch="right", n=301)
    d = max(abs(ch.frame.d1_direct(v) - ch.frame.d1_reduced(v))
            for v in np.linspace(-0.5, 0.5, 7))
    ok &= report("D1 direct-vs-reduced morse", d, 1e-7)
    return ok


def _verify_residual(man, model, cal, report):
    hs = man.h_list or (0.1, 0.05, 0.025)
    E = 1.0
    slopes = {}
    for variant in ("printed", "swapped"):
        rs = [residual_norm(model, E, h, (-0.55, 0.55), amp_correction=variant)
              for h in hs]
        slopes[variant] = float(np.polyfit(np.log(hs), np.log(rs), 1)[0])
        report(f"residual slope ({variant})", slopes[variant], None, info=True)
    best = max(slopes, key=slopes.get)
    return report(f"residual order (adjudicated: {best})", slopes[best],
                  None, at_least=1.8)


def _verify_calibration(man, model, cal, report):
    got = calibrate_signs()
    report("sigma_Gamma", got.sigma_Gamma, None, exact=True)
    report("sigma_p1sq", got.sigma_p1sq, None, exact=True)
    report("sigma_p2", got.sigma_p2, None, exact=True)
    for k, v in got.provenance.items():
        print(f"#   {k}: {v}")
    if man.out:
        Path(man.out).write_text(json.dumps(
            {"sigma_Gamma": got.sigma_Gamma, "sigma_p1sq": got.sigma_p1sq,
             "sigma_p2": got.sigma_p2, "provenance": got.provenance},
            indent=2, sort_keys=True) + "\n")
    return True


def _verify_oracle_compare(man, model, cal, report):
    h = man.h or 0.1
    n_lo, n_hi = man.n_range
    orc = oracle_spectrum(model, h, n_hi + 1, domain=man.domain, N=man.oracle_n)
    # ties within the oracle's own error bars count as dominance
    bar = float(orc.error_estimates.max()) + 1e-11
    ok = True
    prev_err = None
    for order in (0, 1, 2):
        solver = BSSolver(model, h, order, cal)
        errs = [abs(solver.quantize(n).E - orc.eigenvalues[n])
                for n in range(n_lo, n_hi + 1)]
        worst = max(errs)
        report(f"order-{order} max |BS - oracle|", worst, None, info=True)
        if prev_err is not None:
            ok &= report(f"order dominance {order - 1} -> {order}",
                         worst, prev_err + bar)
        prev_err = worst
    return ok


def cmd_verify(man: RunManifest) -> int:
    if man.suite not in _SUITES:
        raise ConfigError(f"unknown suite {man.suite!r}; choose from {_SUITES}")
    cal = _load_calibration(man)
    model = _load_model(man) if man.config_path else None
    failures: list[str] = []

    def report(name, value, bound, at_least=None, exact=False, info=False):
        if info:
            print(f"# {name}: {value:.3e}")
            return True
        if exact:
            print(f"# {name}: {value}")
            return True
        if at_least is not None:
            passed = value >= at_least
            print(f"# {name}: {value:.3f} (>= {at_least}) {'PASS' if passed else 'FAIL'}")
        else:
            passed = value <= bound
            print(f"# {name}: {value:.3e} (<= {bound:.1e}) {'PASS' if passed else 'FAIL'}")
        if not passed:
            failures.append(name)
        return passed

    if man.suite == "residual" and model is None:
        from .symbols import make_model
        model = make_model("harmonic")
    runner = {"stokes": _verify_stokes, "charts": _verify_charts,
              "residual": _verify_residual, "calibration": _verify_calibration,
              "oracle-compare": _verify_oracle_compare}[man.suite]
    if man.suite == "oracle-compare" and model is None:
        raise ConfigError("--config is required for oracle-compare")
    runner(man, model, cal, report)
    return EXIT_OK if not failures else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="bswkb",
        description="Second-order Bohr-Sommerfeld eigenvalues for 1D "
                    "semiclassical operators, with verification suites.")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="symbol config file (YAML/JSON)")
        p.add_argument("--h", type=float, help="semiclassical parameter")
        p.add_argument("--h-list", help="comma-separated h values")
        p.add_argument("--order", default="2", help="BS order(s), e.g. 2 or 0,2")
        p.add_argument("--n-range", default="0..4", help="level range A..B")
        p.add_argument("--oracle-n", type=int, help="oracle grid size override")
        p.add_argument("--domain", help="oracle domain LO..HI override")
        p.add_argument("--out", help="output path (default stdout)")
        p.add_argument("--format", choices=("csv", "json"), default="csv")
        p.add_argument("--calibration", default="default",
                       help="default | auto | path to calibration JSON")

    common(sub.add_parser("spectrum", help="BS eigenvalues at the requested orders"))
    common(sub.add_parser("sweep", help="BS vs oracle convergence sweep over --h-list"))
    pv = sub.add_parser("verify", help="run a named verification suite")
    common(pv)
    pv.add_argument("--suite", required=True, help="|".join(_SUITES))
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        man = _parse_manifest(args)
        if args.command == "spectrum":
            return cmd_spectrum(man)
        if args.command == "sweep":
            return cmd_sweep(man)
        return cmd_verify(man)
    except (ConfigError, SymbolError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (OrbitError, QuantizeError, OracleError, QuasimodeError,
            CalibrationError) as exc:
        print(f"solver error [{type(exc).__module__.split('.')[-1]}]: {exc}",
              file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())

"""Command line front end.

    heiscalc levi|check|verify|parametrix-eval MANIFEST [options]

Exit codes: 0 all pass, 1 criterion failure, 2 input error, 3 capability error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time
import warnings as _warnings
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .errors import CapabilityError, ConditionFailure, ConvergenceError, InputError
from .geometry import levi_matrix
from .hypocheck import (
    SublaplacianData, check_sublaplacian, contact_report, horizontal_mu_spectrum, rockland_sublaplacian,
    singular_set, x_k, y_pq, y_q,
)
from .manifest import _matrix, canonical_digest, parse_manifest, tomllib
from .parametrix import ParametrixEngine, build_parametrix_symbol
from .quantize import (
    GridSpec, make_s0, quantize_apply, save_grid_function, sublaplacian_symbol, verify_inverse,
)
from .quantize.symbols import model_full_symbols

__all__ = ["main", "build_parser", "run"]

EXIT_OK, EXIT_FAIL, EXIT_INPUT, EXIT_CAPABILITY = 0, 1, 2, 3
CRITERIA = ("sublaplacian", "rockland", "yq", "xk", "ypq", "contact")
VERIFY_TOLERANCE = 0.05
VERIFY_MIN_RATIO = 2.0
NEGATIVE_MIN_ERROR = 0.5


# ---------------------------------------------------------------------------
# JSON helpers


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, Fraction):
        return str(v) if v.denominator != 1 else int(v.numerator)
    if isinstance(v, (complex, np.complexfloating)):
        c = complex(v)
        return [c.real, c.imag]
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, float) and not math.isfinite(v):
        return str(v)
    if isinstance(v, np.ndarray):
        return _jsonable(v.tolist())
    return v


def _point_text(p) -> list:
    return [str(x) for x in p]


# ---------------------------------------------------------------------------
# argument parsing


def _parse_points(text: str | None):
    if not text:
        return None
    pts = []
    for chunk in text.split(";"):
        chunk = chunk.strip()
        if chunk:
            pts.append([v.strip() for v in chunk.split(",")])
    return pts


def _parse_int_list(text: str | None):
    """"0,2,5" or "0..3" (inclusive)."""
    if text is None:
        return None
    out = []
    for part in text.split(","):
        part = part.strip()
        if ".." in part:
            a, b = part.split("..")
            out.extend(range(int(a), int(b) + 1))
        elif part:
            out.append(int(part))
    return out


def _parse_pairs(text: str | None):
    if text is None:
        return None
    out = []
    for chunk in text.split(";"):
        chunk = chunk.strip()
        if chunk:
            p, q = chunk.split(",")
            out.append((int(p), int(q)))
    return out


def _parse_mu(text: str | None):
    """Scalar expression, complex literal, or matrix rows "a,b;c,d"."""
    if text is None:
        return None
    rows = [r for r in text.split(";") if r.strip()]
    if len(rows) == 1 and "," not in rows[0]:
        return _matrix(rows[0].strip(), "mu")
    return _matrix([[v.strip() for v in r.split(",")] for r in rows], "mu")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="heiscalc", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"heiscalc {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("manifest", help="TOML manifest")
        p.add_argument("--points", help='base points "x0,x1,...;..." (fractions allowed)')
        p.add_argument("--mode", choices=("rational", "float"), help="override the manifest mode")
        p.add_argument("--mu", help='mu override: expression, complex literal, or rows "a,b;c,d"')
        p.add_argument("--out", help="write the JSON report here (CSV data alongside)")
        p.add_argument("--timings", action="store_true", help="include wall-clock timings")

    p = sub.add_parser("levi", help="Levi form, eigenvalues and singular set at base points")
    common(p)
    p = sub.add_parser("check", help="evaluate a hypoellipticity condition over a sweep")
    common(p)
    p.add_argument("criterion", choices=CRITERIA)
    p.add_argument("--k", help='degrees for xk/contact, e.g. "0..2"')
    p.add_argument("--q", help='degrees for yq, e.g. "0,1,2"')
    p.add_argument("--pq", help='bidegrees for ypq, e.g. "0,1;1,2"')
    p.add_argument("--jobs", type=int, default=1, help="worker threads for the sweep")
    p = sub.add_parser("verify", help="grid verification of the inverse symbol")
    common(p)
    p.add_argument("--grid", type=int, help="fine grid size N (coarse is N/2)")
    p.add_argument("--seed", type=int, default=0, help="first seed")
    p.add_argument("--trials", type=int, help="number of seeds (default from manifest)")
    p.add_argument("--extent", type=float, help="grid half-width")
    p.add_argument("--threads", type=int, default=1, help="threads for the compiled kernel")
    p.add_argument("--dump", help="path prefix for binary grid dumps of f and Qf (seed 0)")
    p = sub.add_parser("parametrix-eval", help="evaluate q_mu at covectors and along a ray")
    common(p)
    p.add_argument("--xi", help='covectors "a,b,c;..." (default from manifest)')
    p.add_argument("--theta", type=float, help="ray rotation angle for scalar mu")
    return ap


# ---------------------------------------------------------------------------
# commands


def _load(args):
    try:
        text = Path(args.manifest).read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read manifest {args.manifest}: {exc.strerror}") from None
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise InputError(f"manifest is not valid TOML: {exc}") from None
    digest = canonical_digest(data)
    if args.mode:
        data["mode"] = args.mode
    pts = _parse_points(args.points)
    if pts is not None:
        data["points"] = pts
    man = parse_manifest(data, args.manifest)
    man.digest = digest
    return man


def _levi_at(man, point, warnings):
    if not man.frame.in_domain(point):
        warnings.append(f"point {_point_text(point)} lies outside the declared domain")
    return levi_matrix(man.frame, point)


def cmd_levi(man, args):
    warnings, rows, points = [], [], []
    for pt in man.points:
        lv = _levi_at(man, pt, warnings)
        S = singular_set(lv)
        entry = lv.summary()
        entry["d"] = lv.d
        entry["n"] = lv.n
        entry["in_domain"] = man.frame.in_domain(pt)
        entry["normal_form_residual"] = lv.normal_form_residual()
        entry["singular_set"] = S.as_dict()
        entry["full_symbols"] = [s.as_text() for s in model_full_symbols(lv)]
        points.append(entry)
        rows.append([entry["point"], entry["rank"], entry["lambdas"], entry["trace_abs"]])
    csv_rows = [["point", "rank", "lambdas", "trace_abs"]] + [
        [" ".join(r[0]), r[1], " ".join(r[2]), r[3]] for r in rows
    ]
    return {"points": points}, [], warnings, csv_rows


def _sweep(fn, cells, jobs):
    if jobs and jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(fn, cells))
    return [fn(c) for c in cells]


def cmd_check(man, args):
    crit = args.criterion
    warnings = []
    reports = []
    csv_rows = [["criterion", "point", "parameter", "verdict", "margin"]]
    if crit in ("yq", "ypq"):
        if man.cr is None:
            raise InputError(f"criterion {crit} needs a [cr_signature] section")
        n = man.cr.n
        if crit == "yq":
            qs = _parse_int_list(args.q) or list(range(n + 1))
            cells = [("q", q) for q in qs]
            out = _sweep(lambda c: y_q(man.cr, c[1]), cells, args.jobs)
        else:
            pqs = _parse_pairs(args.pq) or [(p, q) for p in range(n + 1) for q in range(n + 1)]
            cells = [("pq", pq) for pq in pqs]
            out = _sweep(lambda c: y_pq(man.cr, *c[1]), cells, args.jobs)
        for (name, val), rep in zip(cells, out):
            reports.append({"point": None, "parameter": {name: val}, **rep.as_dict()})
            csv_rows.append([crit, "", f"{name}={val}", rep.verdict, rep.margin])
        return {"criterion": crit, "cells": len(reports)}, reports, warnings, csv_rows
    for pt in man.points:
        lv = _levi_at(man, pt, warnings)
        if crit in ("sublaplacian", "rockland"):
            mu = _parse_mu(args.mu)
            data = SublaplacianData(lv, man.mu_at(pt, mu), lv.d)
            rep = check_sublaplacian(data) if crit == "sublaplacian" else rockland_sublaplacian(data)
            cells, out = [("mu", None)], [rep]
        elif crit == "xk":
            ks = _parse_int_list(args.k) or list(range(lv.d + 1))
            cells = [("k", k) for k in ks]
            out = _sweep(lambda c: _xk_cell(lv, c[1]), cells, args.jobs)
        else:  # contact
            n = man.cr.n if man.cr is not None else lv.n
            ks = _parse_int_list(args.k) or list(range(2 * n + 1))
            cells = [("k", k) for k in ks]
            out = _sweep(lambda c: contact_report(n, c[1]), cells, args.jobs)
        for (name, val), rep in zip(cells, out):
            param = {} if val is None else {name: val}
            reports.append({"point": _point_text(pt), "parameter": param, **rep.as_dict()})
            csv_rows.append([crit, " ".join(_point_text(pt)), f"{name}={val}" if val is not None else "",
                             rep.verdict, rep.margin])
    return {"criterion": crit, "cells": len(reports)}, reports, warnings, csv_rows


def _xk_cell(lv, k):
    """X(k) verdict; the horizontal spectrum route is computed and must agree."""
    horizontal_mu_spectrum(lv, lv.d, k)
    return x_k(lv, lv.d, k)


def _scalar_mu(mu_m):
    if len(mu_m) != 1:
        return None
    return mu_m[0][0]


def cmd_verify(man, args):
    warnings = []
    pt = man.points[0]
    lv = _levi_at(man, pt, warnings)
    mu_m = man.mu_at(pt, _parse_mu(args.mu)) if (man.mu_src is not None or args.mu) else ((0,),)
    rep = check_sublaplacian(SublaplacianData(lv, mu_m, lv.d))
    if not rep.passed:
        res = {"point": _point_text(pt), "refused": True, "reason": "sublaplacian condition fails"}
        return res, [{"point": _point_text(pt), "parameter": {}, **rep.as_dict()}], warnings, None
    mu = _scalar_mu(mu_m)
    if mu is None:
        raise CapabilityError("grid verification supports scalar mu only")
    engine = ParametrixEngine(lv)
    qsym = build_parametrix_symbol(engine, mu)
    if qsym.radial_profile() is None:
        raise CapabilityError(
            "grid verification needs a radially tabulated symbol (equal Levi eigenvalues, d = 2n)"
        )
    g = man.grid
    N = args.grid or g.N
    coarse = max(8, N // 2)
    extent = args.extent or g.extent
    trials = args.trials or g.seeds
    seeds = tuple(range(args.seed, args.seed + trials))
    dim = lv.d + 1
    timings = {}
    out = {}
    for label, n in (("coarse", coarse), ("fine", N)):
        grid = GridSpec.cube(dim, n, extent)
        t0 = time.perf_counter()
        r = verify_inverse(qsym, mu, lv, grid, seeds, window=g.window, nthreads=args.threads)
        timings[label] = time.perf_counter() - t0
        out[label] = r
    t0 = time.perf_counter()
    neg = verify_inverse(sublaplacian_symbol(lv.d, mu), mu, lv, GridSpec.cube(dim, N, extent), seeds,
                         window=g.window, label="negative_control")
    timings["negative_control"] = time.perf_counter() - t0
    ratio = out["coarse"].max_error / out["fine"].max_error
    checks = [
        ("fine_error", out["fine"].max_error, "<=", VERIFY_TOLERANCE),
        ("refinement_ratio", ratio, ">=", VERIFY_MIN_RATIO),
        ("negative_control", neg.max_error, ">=", NEGATIVE_MIN_ERROR),
    ]
    conds = []
    for name, val, op, lim in checks:
        ok = val <= lim if op == "<=" else val >= lim
        conds.append({
            "criterion": f"verify.{name}", "verdict": "pass" if ok else "fail", "point": _point_text(pt),
            "parameter": {}, "witnesses": [] if ok else [{"value": val, "limit": lim}],
            "margin": abs(val - lim), "details": {"value": val, "limit": lim, "relation": op},
        })
    if args.dump:
        grid = GridSpec.cube(dim, N, extent)
        f = make_s0(grid, seeds[0]).samples
        qf = quantize_apply(qsym, lv, grid, f, nthreads=args.threads)
        meta = {"seed": seeds[0], "mu": _jsonable(mu), "manifest_digest": man.digest}
        save_grid_function(f"{args.dump}_f.bin", f, grid, {**meta, "field": "f"})
        save_grid_function(f"{args.dump}_Qf.bin", qf, grid, {**meta, "field": "Qf"})
    res = {
        "point": _point_text(pt),
        "mu": mu,
        "levi": lv.summary(),
        "coarse": out["coarse"].as_dict(),
        "fine": out["fine"].as_dict(),
        "refinement_ratio": ratio,
        "negative_control": neg.as_dict(),
        "sublaplacian": rep.as_dict(),
    }
    if args.timings:
        res["timings"] = timings
    csv_rows = [["N", "h", "max_error", "e1_max", "e2_max"]]
    for r in (out["coarse"], out["fine"]):
        csv_rows.append([r.grid.points[0], r.grid.spacing[0], r.max_error, max(r.e1), max(r.e2)])
    return res, conds, warnings, csv_rows


def cmd_parametrix_eval(man, args):
    warnings = []
    pt = man.points[0]
    lv = _levi_at(man, pt, warnings)
    mu_m = man.mu_at(pt, _parse_mu(args.mu)) if (man.mu_src is not None or args.mu) else ((0,),)
    data = SublaplacianData(lv, mu_m, lv.d)
    rep = check_sublaplacian(data)
    conds = [{"point": _point_text(pt), "parameter": {}, **rep.as_dict()}]
    if not rep.passed:
        return {"point": _point_text(pt), "refused": True}, conds, warnings, None
    engine = ParametrixEngine(lv)
    mu = _scalar_mu(mu_m)
    if mu is None:
        mu_arr = data.mu_array()
        qfun = lambda xi: engine.q_matrix(mu_arr, xi)  # noqa: E731
    else:
        qfun = lambda xi: engine.q_continued(complex(mu), xi, theta=args.theta)  # noqa: E731
    covs = [tuple(float(v) for v in c) for c in (_parse_points(args.xi) or man.covectors)]
    if not covs:
        covs = [tuple([1.0] + [0.0] * lv.d)]
    values = []
    for xi in covs:
        if len(xi) != lv.d + 1:
            raise InputError(f"covector {xi} must have {lv.d + 1} components")
        if not any(xi):
            raise InputError("q is evaluated only at nonzero covectors")
        values.append({"xi": list(xi), "q": _jsonable(np.asarray(qfun(np.array(xi)))),})
    csv_rows = None
    if man.ray is not None:
        ray = np.array(man.ray)
        csv_rows = [["t", "xi0", "re_q", "im_q", "re_t2q", "im_t2q"]]
        for t in np.geomspace(0.25, 4.0, 17):
            xi = np.concatenate([[t * t * ray[0]], t * ray[1:]])
            v = np.asarray(qfun(xi))
            v = complex(v) if v.ndim == 0 else complex(v[0, 0])
            csv_rows.append([float(t), float(xi[0]), v.real, v.imag, (t * t * v).real, (t * t * v).imag])
    res = {"point": _point_text(pt), "mu": mu if mu is not None else mu_m, "values": values,
           "singular_set": singular_set(lv).as_dict()}
    return res, conds, warnings, csv_rows


COMMANDS = {"levi": cmd_levi, "check": cmd_check, "verify": cmd_verify, "parametrix-eval": cmd_parametrix_eval}


# ---------------------------------------------------------------------------


def run(argv=None):
    """Parse ``argv``, execute, and return (exit_code, report_dict, csv_rows)."""
    args = build_parser().parse_args(argv)
    report = {
        "tool": "heiscalc",
        "version": __version__,
        "command": args.command,
        "manifest": {"path": args.manifest, "digest": None},
        "mode": None,
    }
    csv_rows = None
    t0 = time.perf_counter()
    try:
        man = _load(args)
        report["manifest"]["digest"] = man.digest
        report["mode"] = man.mode
        with _warnings.catch_warnings(record=True) as caught:
            _warnings.simplefilter("always")
            results, conds, warnings, csv_rows = COMMANDS[args.command](man, args)
        for w in caught:
            msg = str(w.message)
            if msg not in warnings:
                warnings.append(msg)
        failed = [c for c in conds if c["verdict"] != "pass"]
        code = EXIT_FAIL if failed or results.get("refused") else EXIT_OK
        report.update({"status": "pass" if code == EXIT_OK else "fail", "results": results,
                       "conditions": conds, "warnings": warnings})
    except ConditionFailure as exc:
        code = EXIT_FAIL
        conds = [exc.report.as_dict()] if exc.report is not None else []
        report.update({"status": "fail", "error": {"type": "ConditionFailure", "message": str(exc)},
                       "conditions": conds})
    except (InputError, ValueError) as exc:
        code = EXIT_INPUT
        report.update({"status": "error", "error": {"type": type(exc).__name__, "message": str(exc)}})
    except (CapabilityError, ConvergenceError) as exc:
        code = EXIT_CAPABILITY
        report.update({"status": "error", "error": {"type": type(exc).__name__, "message": str(exc)}})
    report["exit_code"] = code
    if getattr(args, "timings", False):
        report["elapsed_seconds"] = time.perf_counter() - t0
    return code, _jsonable(report), csv_rows


def _csv_text(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    for r in rows:
        w.writerow([_fmt_cell(v) for v in r])
    return buf.getvalue()


def _fmt_cell(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def main(argv=None) -> int:
    code, report, csv_rows = run(argv)
    args = build_parser().parse_args(argv)
    text = json.dumps(report, indent=2, sort_keys=True) + "\n"
    if args.out:
        out = Path(args.out)
        out.write_text(text)
        if csv_rows:
            out.with_suffix(".csv").write_text(_csv_text(csv_rows))
    else:
        sys.stdout.write(text)
    if report.get("status") == "error":
        print(f"heiscalc: {report['error']['type']}: {report['error']['message']}", file=sys.stderr)
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())

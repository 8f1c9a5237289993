"""Command-line entry point: ``svebound COMMAND --problem FILE [flags]``.

Exit codes: 0 success, 2 audit or check refuted, 3 no certificate found,
4 input error. Reports are JSON (or CSV) with every number printed to 12
significant digits; the run timestamp lives in the ``metadata`` field only.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import json
import math
import sys

import numpy as np

from . import __version__
from .certify import (
    BoundCertificate,
    CertificationFailed,
    certify,
    certify_via_sigma,
    region_probes,
    validate_bound,
)
from .config import RunConfig
from .increase import sigma_profile, sigma_search
from .merit import nu_ka
from .model import ProblemInstance, named_problem
from .serialize import InputError, dumps, load_problem, parse_point, parse_points, to_jsonable
from .slope import restricted_slope, ssinf_upper, strong_slope
from .solver import solve

EXIT_OK, EXIT_REFUTED, EXIT_NONE, EXIT_INPUT = 0, 2, 3, 4

__all__ = ["main", "build_parser", "run"]


def _fmt(v: float) -> str:
    return f"{v:.12g}"


# -- parser --------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    """Usage errors are input errors (exit 4), not the argparse default 2."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: input error: {message}\n")


def _common(require_problem: bool = True) -> argparse.ArgumentParser:
    c = _Parser(add_help=False)
    if require_problem:
        c.add_argument("--problem", required=True, metavar="FILE", help="problem JSON file")
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--budget-z", type=int, default=None, metavar="N",
                   help="inner z-sample size")
    c.add_argument("--budget-dirs", type=int, default=None, metavar="N",
                   help="directions per slope shell")
    c.add_argument("--tol", type=float, default=None, metavar="X",
                   help="zero tolerance (merit commands) or solve tolerance (solve)")
    c.add_argument("--out", default=None, metavar="FILE", help="write the report here")
    c.add_argument("--format", choices=("json", "csv"), default="json")
    c.add_argument("--theta", type=float, default=None, metavar="V",
                   help="sector angle for the named sector problem, in (0, pi/4)")
    c.add_argument("--allow-degenerate", action="store_true",
                   help="accept theta = 0 (the sector becomes the orthant)")
    return c


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="svebound", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"svebound {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    com = _common()

    s = sub.add_parser("merit", parents=[com], help="nu and nu_K at a point")
    s.add_argument("--point", required=True)
    s = sub.add_parser("slope", parents=[com], help="restricted slope of nu at a point of K")
    s.add_argument("--point", required=True)
    s.add_argument("--unrestricted", action="store_true",
                   help="strong slope of nu_K over all directions instead")
    sub.add_parser("ssinf", parents=[com], help="sampled upper bound of ss-inf")
    s = sub.add_parser("increase", parents=[com], help="sigma search for metric increase")
    s.add_argument("--points", default=None, help='region points "x1,x2;y1,y2"')
    s = sub.add_parser("certify", parents=[com], help="error-bound certificate")
    s.add_argument("--route", choices=("sigma", "gamma", "auto"), default="auto")
    s = sub.add_parser("validate", parents=[com], help="check a certificate against Solv")
    s.add_argument("--certificate", required=True, metavar="FILE")
    s.add_argument("--points", default=None)
    s = sub.add_parser("solve", parents=[com], help="minimize nu_K")
    s.add_argument("--point", default=None, help="first starting point")
    s.add_argument("--certificate", default=None, metavar="FILE")
    s = sub.add_parser("reproduce", parents=[_common(False)],
                       help="rerun the catalog example checks")
    s.add_argument("example", choices=("example1", "example2"))
    return ap


def _config(args) -> RunConfig:
    kw = {"seed": args.seed}
    if args.budget_z is not None:
        kw["budget_z"] = args.budget_z
    if args.budget_dirs is not None:
        kw["budget_dirs"] = args.budget_dirs
    if args.tol is not None:
        kw["solve_zero_tol" if args.command == "solve" else "zero_tol"] = args.tol
    try:
        return RunConfig(**kw)
    except ValueError as e:
        raise InputError("flags", str(e)) from None


def _check_theta(args) -> None:
    if args.theta is None:
        return
    if args.theta == 0.0 and args.allow_degenerate:
        return
    if not 0.0 < args.theta < math.pi / 4:
        raise InputError("--theta", "must lie in (0, pi/4); theta = 0 needs --allow-degenerate")


def _load(args) -> ProblemInstance:
    return load_problem(args.problem, args.theta, args.allow_degenerate)


def _load_certificate(path: str) -> BoundCertificate:
    try:
        with open(path) as fh:
            d = json.load(fh)
    except OSError as e:
        raise InputError("--certificate", f"cannot read {path}: {e.strerror}") from None
    except json.JSONDecodeError as e:
        raise InputError(f"--certificate line {e.lineno} column {e.colno}", e.msg) from None
    if isinstance(d, dict) and "report" in d:
        d = d["report"]
    if isinstance(d, dict) and "certificate" in d:
        d = d["certificate"]
    if not isinstance(d, dict):
        raise InputError("--certificate", "no certificate in file")
    try:
        return BoundCertificate.from_dict(d)
    except (KeyError, TypeError, ValueError) as e:
        raise InputError("--certificate", f"malformed certificate ({e})") from None


# -- commands ------------------------------------------------------------------

def _cmd_merit(args, cfg):
    p = _load(args)
    r = nu_ka(p, parse_point(args.point, p.dim_x), cfg)
    return EXIT_OK, r.to_dict(), [r.to_dict()]


def _cmd_slope(args, cfg):
    p = _load(args)
    x = parse_point(args.point, p.dim_x)
    if args.unrestricted:
        from .merit import MeritFunction

        m = MeritFunction(p, cfg)
        m.add_witnesses(x)
        s = strong_slope(m.nu_ka, x, cfg)
    else:
        if not p.constraints.contains(x, cfg.member_tol * 10):
            raise InputError("--point", "restricted slope needs a point of K")
        s = restricted_slope(p, x, cfg)
    return EXIT_OK, s.to_dict(), s.table()


def _cmd_ssinf(args, cfg):
    r = ssinf_upper(_load(args), cfg)
    return EXIT_OK, r.to_dict(), [r.to_dict()]


def _cmd_increase(args, cfg):
    p = _load(args)
    R = parse_points(args.points, p.dim_x) if args.points else region_probes(p, cfg)
    if len(R) == 0:
        raise InputError("--points", "no region point with nu > 0")
    try:
        cert = sigma_search(p, R, cfg, region_note="probe points of K with nu > 0")
    except ValueError as e:
        raise InputError("--points", str(e)) from None
    if cert is None:
        prof = sigma_profile(p, R, cfg)
        worst = min(prof, key=lambda w: w.value)
        rep = {"certificate": None, "sigma_tol": cfg.sigma_tol,
               "worst_point": worst.to_dict()}
        return EXIT_NONE, rep, [{"certificate": "none"}]
    rows = [w.to_dict() | {"sigma": cert.sigma} for w in cert.witnesses]
    return EXIT_OK, {"certificate": cert.to_dict()}, rows


def _cmd_certify(args, cfg):
    p = _load(args)
    try:
        c = certify(p, args.route, cfg)
    except CertificationFailed as e:
        code = EXIT_REFUTED if e.refuted else EXIT_NONE
        return code, e.to_dict(), [{"certificate": "none", "failed_stage": e.stage}]
    return EXIT_OK, {"certificate": c.to_dict()}, [{"route": c.route, "constant": c.constant,
                                                    "bound_form": c.bound_form}]


def _cmd_validate(args, cfg):
    p = _load(args)
    cert = _load_certificate(args.certificate)
    xs = parse_points(args.points, p.dim_x) if args.points else None
    try:
        t = validate_bound(p, cert, xs, cfg)
    except ValueError as e:
        raise InputError("--points" if xs is not None else "--problem", str(e)) from None
    return (EXIT_OK if t.passed else EXIT_REFUTED), t.to_dict(), t


def _cmd_solve(args, cfg):
    p = _load(args)
    x0 = parse_point(args.point, p.dim_x) if args.point else None
    cert = _load_certificate(args.certificate) if args.certificate else None
    r = solve(p, cfg, cert, x0)
    return EXIT_OK, r.to_dict(), r


# -- reproduce ------------------------------------------------------------------

def _reproduce_example1(cfg: RunConfig) -> dict:
    p = named_problem("example-1")
    sampled = cfg.with_(use_closed_form=False)
    grid = [np.array([a, b]) for a in np.linspace(-2, 0, 5) for b in np.linspace(-2, 0, 5)]
    rows = []
    for x in grid:
        v = nu_ka(p, x, sampled).nu
        exact = math.sqrt(x[0] ** 4 + x[1] ** 4)
        rows.append({"x": x, "nu_sampled": v, "nu_closed_form": exact,
                     "abs_error": abs(v - exact)})
    err = max(r["abs_error"] for r in rows)
    slopes = []
    for n in (2, 5, 10, 20):
        x = np.array([-1.0 / n, -1.0 / n])
        s = restricted_slope(p, x, cfg).value
        slopes.append({"n": n, "slope": s, "expected": 2.0 / n,
                       "rel_error": abs(s - 2.0 / n) / (2.0 / n)})
    ss = ssinf_upper(p, cfg, extra_probes=[[-1.0 / n, -1.0 / n] for n in range(1, 21)])
    try:
        certify_via_sigma(p, cfg)
        sigma_stage = "certificate issued"
    except CertificationFailed as e:
        sigma_stage = e.stage
    forced = validate_bound(p, BoundCertificate.forced(1.0), [[-0.1, -0.1]], cfg)
    checks = {
        "merit_grid_max_error_le_2e-3": err <= 2e-3,
        "slope_within_10pct_n_2_5_10": all(r["rel_error"] <= 0.1 for r in slopes[:3]),
        "ssinf_upper_le_0.2": ss.upper_bound <= 0.2,
        "sigma_route_none": sigma_stage != "certificate issued",
        "no_valid_error_bound_confirmed": not forced.passed,
    }
    return {"example": "example1", "merit_grid": rows, "merit_max_abs_error": err,
            "truncation_gap": p.truncation_gap, "slopes": slopes, "ssinf": ss.to_dict(),
            "sigma_route": sigma_stage, "forced_bound_tau_1": forced.to_dict(),
            "summary_line": ("no valid error bound: confirmed" if not forced.passed
                             else "no valid error bound: NOT confirmed"),
            "checks": checks}


def _reproduce_example2(cfg: RunConfig, theta: float, allow_degenerate: bool) -> dict:
    p = named_problem("example-2", theta, allow_degenerate=allow_degenerate)
    R = region_probes(p, cfg)
    cert = sigma_search(p, R, cfg)
    sampled = cfg.with_(use_closed_form=False)
    X = p.with_truncation(cfg.probe_radius).constraints.sample(100, cfg.seed + 5)
    errs = [abs(nu_ka(p, x, sampled).nu - float(np.linalg.norm(x))) for x in X]
    out = {"example": "example2", "theta": theta, "expected_sigma": math.sin(theta),
           "nu_norm_max_abs_error": max(errs), "nu_points": len(X)}
    checks = {"nu_equals_norm_within_2e-2": max(errs) <= 2e-2}
    if theta == 0.0:
        out["sigma"] = None
        checks["no_sigma_confirmed"] = cert is None
    else:
        out["sigma"] = None if cert is None else cert.sigma
        checks["sigma_ge_sin_theta_minus_1e-3"] = (cert is not None
                                                   and cert.sigma >= math.sin(theta) - 1e-3)
        if cert is not None:
            bc = BoundCertificate("sigma", cert.sigma, "nu/const on K", [],
                                  details={"increase": cert.to_dict()})
            table = validate_bound(p, bc, X, cfg)
            out["validation_rows"] = len(table.rows)
            out["validation_failures"] = len(table.failing())
            checks["bound_validation_passes"] = table.passed
    out["checks"] = checks
    return out


def _cmd_reproduce(args, cfg):
    if args.example == "example1":
        rep = _reproduce_example1(cfg)
    else:
        theta = math.pi / 6 if args.theta is None else args.theta
        rep = _reproduce_example2(cfg, theta, args.allow_degenerate)
    ok = all(rep["checks"].values())
    rows = [{"check": k, "passed": v} for k, v in rep["checks"].items()]
    return (EXIT_OK if ok else EXIT_REFUTED), rep, rows


COMMANDS = {"merit": _cmd_merit, "slope": _cmd_slope, "ssinf": _cmd_ssinf,
            "increase": _cmd_increase, "certify": _cmd_certify, "validate": _cmd_validate,
            "solve": _cmd_solve, "reproduce": _cmd_reproduce}


# -- emission -------------------------------------------------------------------

def _flat_csv(rows) -> str:
    import csv
    import io

    rows = [to_jsonable(r) for r in rows]
    keys = []
    for r in rows:
        for k in r:
            if k not in keys:
                keys.append(k)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(keys)
    for r in rows:
        w.writerow([json.dumps(r.get(k)) if isinstance(r.get(k), (list, dict))
                    else ("" if r.get(k) is None else r.get(k)) for k in keys])
    return buf.getvalue()


def _csv(tabular) -> str:
    if hasattr(tabular, "to_csv"):
        return tabular.to_csv(_fmt)
    if hasattr(tabular, "trace_csv"):
        return tabular.trace_csv(_fmt)
    return _flat_csv(tabular)


def _glue_negative(argv: list[str]) -> list[str]:
    # argparse reads "--point -1,2" as two options; glue the value on
    out, i = [], 0
    while i < len(argv):
        a = argv[i]
        if a in VALUE_FLAGS and i + 1 < len(argv) and argv[i + 1].startswith("-") \
                and argv[i + 1][1:2] in "0123456789.":
            out.append(f"{a}={argv[i + 1]}")
            i += 2
        else:
            out.append(a)
            i += 1
    return out


VALUE_FLAGS = ("--point", "--points", "--theta", "--tol")


def run(argv=None) -> tuple[int, str]:
    """Execute a command; returns ``(exit code, emitted text)`` without printing."""
    code, text, _ = _execute(argv)
    return code, text


def _execute(argv):
    ap = build_parser()
    args = ap.parse_args(_glue_negative(list(sys.argv[1:] if argv is None else argv)))
    try:
        _check_theta(args)
        cfg = _config(args)
        code, report, tabular = COMMANDS[args.command](args, cfg)
    except InputError as e:
        return EXIT_INPUT, f"input error: {e}\n", None
    if args.format == "csv":
        text = _csv(tabular)
    else:
        env = {"command": args.command, "report": report, "config": cfg.to_dict(),
               "exit_code": code,
               "metadata": {"tool": "svebound", "version": __version__,
                            "generated_at": _dt.datetime.now(_dt.timezone.utc).isoformat()}}
        text = dumps(env)
    return code, text, args.out


def main(argv=None) -> int:
    code, text, out = _execute(argv)
    if code == EXIT_INPUT:
        sys.stderr.write(text)
    elif out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())

"""Command-line front end: ``ring-analyzer <subcommand> [flags]``.

Every output starts with a metadata block: a ``manifest`` line holding the
subcommand and all resolved parameters as JSON, then a ``timestamp`` line.
``ring-analyzer --replay FILE`` re-runs the manifest embedded in FILE; the
result matches FILE byte-for-byte apart from the timestamp line.

Exit codes: 0 ok, 2 domain error, 3 singularity, 4 fit/bracket failure,
5 failed validation check.
"""
from __future__ import annotations

import argparse
import csv
import datetime as _dt
import io
import json
import math
import sys

import numpy as np

from . import checks
from .asymptotics import (
    DEFAULT_NU,
    _c2_samples,
    c1_tail_bound,
    correction_c1,
    correction_c2_fit,
    factorial_tail,
    limit_mean,
    limit_second_moment,
)
from .distribution import exact_distribution, limit_distribution, tail_law
from .errors import BracketError, DomainError, FitError, LivelockError, SingularityError
from .exact import round_table, second_moment_rounds
from .optimizer import SegmentSpec, find_t_star, limit_mean_t, scan_segment
from .simulator import SimConfig, simulate

EXIT_OK, EXIT_DOMAIN, EXIT_SINGULAR, EXIT_FIT, EXIT_VALIDATION = 0, 2, 3, 4, 5
_DIGITS = 12
_TAIL_K = 15  # residue truncation used for rho and the tail coefficient
_M2_CEILING = 10.0  # M2(k) < 10 for every k (max of the exact table is about 8.8)


def fmt(x) -> str:
    """Locale-free number formatting with 12 significant digits."""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if x is None:
        return ""
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.{_DIGITS}g}"


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, str) or obj is None:
        return obj
    return fmt(obj)


class Table:
    """Column names, rows and extra ``# key: value`` comment lines.

    ``document``, when set, replaces the column/row layout in JSON output.
    """

    def __init__(self, columns, rows=(), notes=None, document=None):
        self.columns = list(columns)
        self.rows = [list(r) for r in rows]
        self.notes = dict(notes or {})
        self.document = document

    def render(self, form: str, head: dict) -> str:
        if form == "json" and self.document is not None:
            doc = dict(head)
            doc.update(_jsonable(self.document))
            return json.dumps(doc, indent=2) + "\n"
        if form == "json":
            doc = dict(head)
            doc.update(_jsonable(self.notes))
            doc["columns"] = self.columns
            doc["rows"] = [[fmt(v) if not isinstance(v, str) else v for v in r] for r in self.rows]
            return json.dumps(doc, indent=2) + "\n"
        buf = io.StringIO()
        for k, v in head.items():
            buf.write(f"# {k}: {v if isinstance(v, str) else json.dumps(v, sort_keys=True)}\n")
        for k, v in self.notes.items():
            buf.write(f"# {k}: {v if isinstance(v, str) else fmt(v)}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for r in self.rows:
            w.writerow([v if isinstance(v, str) else fmt(v) for v in r])
        return buf.getvalue()


# ---------------------------------------------------------------------------
# subcommands; each returns (Table, exit code)


def cmd_moments(a):
    fixed = SegmentSpec.parse(a.segment).fixed if a.segment else None
    if a.segment:
        SegmentSpec.parse(a.segment).check(a.t)
    r = second_moment_rounds(a.n, a.t, fixed)
    return Table(["quantity", "value"], [
        ["n", r.n], ["t", r.t], ["mean", r.mean], ["second_moment", r.second_moment], ["variance", r.variance],
    ]), EXIT_OK


def _limit_rows(nu):
    sm = limit_second_moment(nu)
    m2_bound = _M2_CEILING * factorial_tail(nu) / (1.0 - math.exp(-1.0))
    var_bound = m2_bound + 2.0 * sm.m_inf * sm.tail_bound + sm.tail_bound**2
    n, y = _c2_samples(250, 300, nu)
    law = tail_law(_TAIL_K)
    k = np.arange(_TAIL_K + 1, _TAIL_K + 60, dtype=float)
    # R(k) <= k holds comfortably (R grows like log k)
    rho_bound = float(np.exp(-1.0) * sum(kk * math.exp(-math.lgamma(kk + 1.0)) for kk in k))
    coef_bound = 2.0 * rho_bound / (1.0 - 2.0 * math.exp(-1.0))
    return [
        ["M_inf", sm.m_inf, sm.tail_bound],
        ["M2_inf", sm.m2_inf, m2_bound],
        ["var_inf", sm.var_inf, var_bound],
        ["C1", correction_c1(nu), c1_tail_bound(nu)],
        ["C2", correction_c2_fit(250, 300, nu), float(y.max() - y.min())],
        ["rho", law.rho, rho_bound],
        ["coef", law.coefficient, coef_bound],
    ]


def cmd_limits(a):
    return Table(["quantity", "value", "error_bound"], _limit_rows(a.nu)), EXIT_OK


def _parse_n(text: str):
    if text.strip().lower() in ("inf", "oo", "infinity"):
        return math.inf
    try:
        return int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"--n must be an integer or 'inf', got {text!r}")


def cmd_distribution(a):
    if a.n == math.inf:
        if a.t != 1.0:
            raise DomainError("the limiting law is only available at t = 1")
        d = limit_distribution(a.j_max, a.nu)
    else:
        if a.overlay:
            raise DomainError("--overlay applies only to --n inf")
        d = exact_distribution(a.n, a.j_max, a.t)
    j = np.arange(1, a.j_max + 1)
    cols = ["j", "P"]
    rows = [[int(jj), p] for jj, p in zip(j, d.probs)]
    if a.overlay:
        law = tail_law(_TAIL_K)
        cols.append("coef_2^-j")
        for r, v in zip(rows, law(j)):
            r.append(float(v))
    return Table(cols, rows, {"tail_mass": d.tail_mass}), EXIT_OK


def cmd_convergence(a):
    if a.n_lo > a.n_hi:
        return Table(["n", "M_minus_Minf_minus_C1_over_n", "C2_over_n2"]), EXIT_OK
    if a.n_lo < 3:
        raise DomainError("--n-lo must be >= 3")
    m_inf = limit_mean(a.nu).m_inf
    c1 = correction_c1(a.nu)
    c2 = correction_c2_fit(a.fit_lo, a.fit_hi, a.nu)
    M = round_table(a.n_hi, 1.0).mean
    n = np.arange(a.n_lo, a.n_hi + 1)
    lhs = M[a.n_lo :] - m_inf - c1 / n
    rows = [[int(k), float(x), c2 / float(k) ** 2] for k, x in zip(n, lhs)]
    return Table(["n", "M_minus_Minf_minus_C1_over_n", "C2_over_n2"], rows, {"C1": c1, "C2": c2}), EXIT_OK


def cmd_optimize(a):
    t_star, m_star = find_t_star(a.tolerance, a.nu)
    m1 = limit_mean_t(1.0, a.nu)
    gain = 100.0 * (m1 - m_star) / m1
    return Table(["quantity", "value"], [
        ["t_star", t_star], ["m_star", m_star], ["m_at_t1", m1], ["gain_percent", gain],
    ]), EXIT_OK


def cmd_scan(a):
    scan = scan_segment(SegmentSpec.parse(a.segment), a.step, a.nu)
    notes = {"segment": scan.segment.label}
    if scan.extremum is not None:
        notes["extremum_t"], notes["extremum_m"] = scan.extremum
    if scan.convexity_ok is not None:
        notes["convex"] = "true" if scan.convexity_ok else "false"
    if scan.monotone_ok is not None:
        notes["monotone"] = "true" if scan.monotone_ok else "false"
    if scan.gaps:
        notes["gaps"] = " ".join(fmt(g) for g in scan.gaps)
    return Table(["t", "M_inf_t", "dM_inf_t"], scan.samples, notes), EXIT_OK


def cmd_simulate(a):
    cfg = SimConfig(a.n, a.t, a.trials, a.seed, a.j_max, a.segment, a.per_processor)
    rep = simulate(cfg)
    d = rep.to_dict()
    cfg_d = d.pop("config")
    rows = [[f"config.{k}", v if v is not None else ""] for k, v in cfg_d.items()]
    for k, v in d.items():
        if k == "round_histogram":
            rows += [[f"round_histogram.{j}", p] for j, p in enumerate(v, start=1)]
        elif k == "notes":
            rows += [["note", s] for s in v]
        else:
            rows.append([k, v if v is not None else ""])
    return Table(["field", "value"], rows, document={"report": rep.to_dict()}), EXIT_OK


def cmd_validate(a):
    keys = a.only.split(",") if a.only else None
    results = checks.run_checks(keys)
    rows = [[r.key, "PASS" if r.passed else "FAIL", r.title, r.detail, round(r.seconds, 2)] for r in results]
    failed = [r.key for r in results if not r.passed]
    notes = {"failed": " ".join(failed) if failed else "none"}
    return Table(["criterion", "status", "title", "detail", "seconds"], rows, notes), (
        EXIT_VALIDATION if failed else EXIT_OK
    )


# ---------------------------------------------------------------------------
# argument parsing


_DEFAULT_FORMAT = {"simulate": "json"}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="ring-analyzer",
        description="Itai-Rodeh ring election: exact, asymptotic and simulated round counts.",
        epilog="ring-analyzer --replay FILE [--out PATH] re-runs the manifest embedded in FILE.",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("csv", "json"), default=None)
    common.add_argument("--out", default=None, help="output path (default stdout)")
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--nu", type=int, default=None, help="Poisson truncation index")
    sub = p.add_subparsers(dest="command")

    s = sub.add_parser("moments", parents=[common], help="M(n,t), second moment, variance")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--t", type=float, default=1.0)
    s.add_argument("--segment", default=None, help="open02 | int2to3 | xi:N (needed for t >= 2)")
    s.set_defaults(func=cmd_moments)

    s = sub.add_parser("limits", parents=[common], help="n -> oo constants with error bounds")
    s.set_defaults(func=cmd_limits)

    s = sub.add_parser("distribution", parents=[common], help="P(n, j) for j = 1..j_max")
    s.add_argument("--n", type=_parse_n, required=True, help="ring size or 'inf'")
    s.add_argument("--j-max", type=int, default=40)
    s.add_argument("--t", type=float, default=1.0)
    s.add_argument("--overlay", action="store_true", help="add the coef 2^-j tail column (n = inf)")
    s.set_defaults(func=cmd_distribution)

    s = sub.add_parser("convergence", parents=[common], help="M(n) - M_inf - C1/n against C2/n^2")
    s.add_argument("--n-lo", type=int, default=10)
    s.add_argument("--n-hi", type=int, default=300)
    s.add_argument("--fit-lo", type=int, default=250, help="C2 fit window start")
    s.add_argument("--fit-hi", type=int, default=300, help="C2 fit window end")
    s.set_defaults(func=cmd_convergence)

    s = sub.add_parser("optimize", parents=[common], help="t minimising M(oo, t)")
    s.add_argument("--tolerance", type=float, default=1e-10)
    s.set_defaults(func=cmd_optimize)

    s = sub.add_parser("scan", parents=[common], help="M(oo, t) and its slope over a segment")
    s.add_argument("--segment", default="open02")
    s.add_argument("--step", type=float, default=0.05)
    s.set_defaults(func=cmd_scan)

    s = sub.add_parser("simulate", parents=[common], help="Monte Carlo elections")
    s.add_argument("--n", type=int, required=True, help="ring size")
    s.add_argument("--t", type=float, default=1.0)
    s.add_argument("--trials", type=int, default=10_000)
    s.add_argument("--j-max", type=int, default=40)
    s.add_argument("--segment", default=None)
    s.add_argument("--per-processor", action="store_true")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("validate", parents=[common], help="run every acceptance check")
    s.add_argument("--only", default=None, help="comma-separated criterion keys, e.g. 1,2,7a")
    s.set_defaults(func=cmd_validate)
    return p


_OWN = {"func", "command", "format", "out"}


def _manifest(a) -> dict:
    params = {k: (v if not (isinstance(v, float) and math.isinf(v)) else "inf") for k, v in vars(a).items() if k not in _OWN}
    return {
        "subcommand": a.command,
        "parameters": params,
        "format": a.format,
        "output_path": a.out,
        "seed": a.seed,
    }


def _args_from_manifest(man: dict, parser) -> argparse.Namespace:
    argv = [man["subcommand"]]
    for k, v in man["parameters"].items():
        flag = "--" + k.replace("_", "-")
        if v is None or v is False:
            continue
        argv += [flag] if v is True else [flag, str(v)]
    argv += ["--format", man["format"]]
    return parser.parse_args(argv)


def _read_manifest(path: str) -> dict:
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    if text.lstrip().startswith("{"):
        return json.loads(text)["manifest"]
    for line in text.splitlines():
        if line.startswith("# manifest: "):
            return json.loads(line[len("# manifest: ") :])
    raise DomainError(f"{path} has no manifest line")


def _resolve(a) -> None:
    if getattr(a, "nu", None) is None and a.command in ("limits", "distribution", "convergence"):
        a.nu = DEFAULT_NU
    if a.command == "simulate" and a.seed is None:
        a.seed = 0
    if a.format is None:
        a.format = _DEFAULT_FORMAT.get(a.command, "csv")


def _timestamp() -> str:
    return _dt.datetime.now(_dt.timezone.utc).replace(microsecond=0).isoformat()


def _replay_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ring-analyzer --replay")
    p.add_argument("--replay", metavar="FILE", required=True)
    p.add_argument("--out", default=None)
    return p


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    replay = _replay_parser().parse_args(argv) if "--replay" in argv else None
    if replay is None:
        a = parser.parse_args(argv)
        if a.command is None:
            parser.print_help()
            return EXIT_DOMAIN
    try:
        if replay is not None:
            manifest = _read_manifest(replay.replay)
            a = _args_from_manifest(manifest, parser)
            a.out = replay.out
            _resolve(a)
        else:
            _resolve(a)
            manifest = _manifest(a)
        table, code = a.func(a)
    except DomainError as exc:
        print(f"domain error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except (SingularityError, LivelockError) as exc:
        print(f"singularity: {exc}", file=sys.stderr)
        return EXIT_SINGULAR
    except (FitError, BracketError) as exc:
        print(f"fit failure: {exc}", file=sys.stderr)
        return EXIT_FIT
    text = table.render(a.format, {"manifest": manifest, "timestamp": _timestamp()})
    if a.out:
        with open(a.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())

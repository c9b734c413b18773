"""Command-line front end.

Every command prints one report, JSON by default or CSV with ``--format csv``,
to stdout or ``--output``.  Floats are printed with 12 significant digits and
reports contain no timing or host data, so identical flags give identical
bytes.  Exit codes: 0 success, 1 numerical failure (diagnostic JSON on
stderr), 2 invalid configuration.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from typing import Any

import numpy as np

from . import laurent, qms, schur
from .checks import run_checks
from .laurent import LaurentPoly
from .qcalc import QOverflowError, epsilon_M, psi_symbol, q_integer

SIG_DIGITS = 12
COMMANDS = ("qint", "deriv", "integrate", "norm", "fejer", "mk", "diameter",
            "leibniz", "gh", "continuity", "verify")
NUMERICAL_ERRORS = (QOverflowError, qms.LPError, schur.PowerIterationError,
                    qms.DiameterBoundViolation, FloatingPointError)


class ConfigError(ValueError):
    def __init__(self, flag: str, message: str):
        self.flag = flag
        super().__init__(f"argument --{flag.replace('_', '-')}: {message}")


def _round(x: float) -> float:
    if not math.isfinite(x):
        return x
    return float(f"{x:.{SIG_DIGITS}g}")


def _clean(obj: Any) -> Any:
    """Round floats and turn numpy scalars into plain Python values."""
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return _round(float(obj))
    return obj


def _fmt_cell(v: Any) -> str:
    if isinstance(v, float):
        return f"{v:.{SIG_DIGITS}g}"
    if isinstance(v, (dict, list)):
        return json.dumps(v, separators=(",", ":"))
    return str(v)


def render(report: Any, fmt: str) -> str:
    """Serialize a report: a dict, or ``{"rows": [...]}`` for tables."""
    report = _clean(report)
    if fmt == "json":
        return json.dumps(report) + "\n"
    rows = report["rows"] if isinstance(report, dict) and "rows" in report else report
    if isinstance(rows, dict):
        if "coeffs" in rows and len(rows) == 1:
            rows = [{"n": n, "re": re, "im": im} for n, re, im in rows["coeffs"]]
        else:
            rows = [rows]
    buf = io.StringIO()
    if rows:
        writer = csv.writer(buf, lineterminator="\n")
        header = list(rows[0].keys())
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt_cell(row[k]) for k in header])
    return buf.getvalue()


# parsing ---------------------------------------------------------------------


def _float_list(text: str) -> list[float]:
    try:
        return [float(t) for t in text.replace(",", " ").split()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma-separated list of numbers, got {text!r}")


def _int_list(text: str) -> list[int]:
    out = []
    for part in text.replace(",", " ").split():
        if ":" in part:
            a, b = part.split(":", 1)
            out.extend(range(int(a), int(b) + 1))
        else:
            out.append(int(part))
    return out


def _int_list_arg(text: str) -> list[int]:
    try:
        return _int_list(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected integers or ranges like 0:64, got {text!r}")


# dest -> (type, default); None defaults are filled per command
OPTIONS = {
    "q": (float, 1.0),
    "q0": (float, 1.0),
    "M": (int, None),
    "N": (int, None),
    "W": (int, 8),
    "n": (int, None),
    "theta_a": (float, 0.0),
    "theta_b": (float, None),
    "angles": (_float_list, None),
    "q_list": (_float_list, [0.9, 0.99, 0.999]),
    "M_list": (_int_list_arg, list(range(0, 257))),
    "poly": (str, None),
    "ensemble": (str, "gaussian"),
    "seed": (int, 0),
    "output": (str, None),
    "format": (str, None),
}

COMMAND_HELP = {
    "qint": "q-integer [n]_q",
    "deriv": "q-derivative of a Laurent polynomial",
    "integrate": "q-integral of a Laurent polynomial",
    "norm": "certified sup-norm of a polynomial, or operator norm of a random compression",
    "fejer": "Fejer truncation onto the band A_M with its error bound",
    "mk": "Monge-Kantorovich distance bracket between two evaluation states",
    "diameter": "largest MK upper bracket over pairs of angles",
    "leibniz": "Leibniz ratio [2n]_q / (2 [n]_q)",
    "gh": "Gromov-Hausdorff upper bound through the band A_M",
    "continuity": "best Gromov-Hausdorff bound over M for each q",
    "verify": "run the invariant suite and print a pass/fail table",
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--q", type=float, help="deformation parameter in (0, 1]")
    common.add_argument("--q0", type=float, help="reference deformation parameter in (0, 1]")
    common.add_argument("--M", type=int, help="band half-width (or polynomial band for random input)")
    common.add_argument("--N", type=int, help="grid size; must exceed 2M")
    common.add_argument("--W", type=int, help="operator window half-width")
    common.add_argument("--n", type=int, help="integer argument")
    common.add_argument("--theta-a", dest="theta_a", type=float, help="first state angle")
    common.add_argument("--theta-b", dest="theta_b", type=float, help="second state angle")
    common.add_argument("--angles", type=_float_list, help="comma-separated angles")
    common.add_argument("--q-list", dest="q_list", type=_float_list, help="comma-separated q values")
    common.add_argument("--M-list", dest="M_list", type=_int_list_arg,
                        help="comma-separated M values or ranges a:b")
    common.add_argument("--poly", help='polynomial as JSON {"coeffs": [[n, re, im], ...]} or @file')
    common.add_argument("--ensemble", choices=schur.ENSEMBLES, help="random operator ensemble")
    common.add_argument("--seed", type=int, help="seed for random inputs")
    common.add_argument("--output", help="write the report here instead of stdout")
    common.add_argument("--format", choices=("json", "csv"), help="report format (default json)")
    common.add_argument("--config", help="JSON file of option values; flags take precedence")

    parser = argparse.ArgumentParser(prog="qarc", description="q-deformed circle calculus and metric bounds")
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")
    for name in COMMANDS:
        p = sub.add_parser(name, parents=[common], help=COMMAND_HELP[name], description=COMMAND_HELP[name])
        if name == "verify":
            size = p.add_mutually_exclusive_group()
            size.add_argument("--quick", action="store_true", help="reduced sample sizes (default)")
            size.add_argument("--full", action="store_true", help="acceptance-size run")
    return parser


def resolve(args: argparse.Namespace) -> dict:
    """Merge ``--config`` JSON under the flags, fill defaults, validate."""
    cfg: dict[str, Any] = {}
    if args.config:
        try:
            with open(args.config) as fh:
                raw = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError("config", f"cannot read {args.config!r}: {exc}") from None
        if not isinstance(raw, dict):
            raise ConfigError("config", "must contain a JSON object")
        for key, value in raw.items():
            dest = key.replace("-", "_")
            if dest not in OPTIONS:
                raise ConfigError("config", f"unknown option {key!r}")
            conv = OPTIONS[dest][0]
            try:
                if conv in (_float_list, _int_list_arg) and isinstance(value, list):
                    value = [float(v) if conv is _float_list else int(v) for v in value]
                elif conv in (_float_list, _int_list_arg):
                    value = conv(str(value))
                elif conv is int:
                    if float(value) != int(value):
                        raise ValueError
                    value = int(value)
                elif value is not None:
                    value = conv(value)
            except (TypeError, ValueError, argparse.ArgumentTypeError):
                raise ConfigError(dest, f"invalid value {value!r} in config") from None
            cfg[dest] = value
    opts = {}
    for dest, (_, default) in OPTIONS.items():
        flag = getattr(args, dest, None)
        opts[dest] = flag if flag is not None else cfg.get(dest, default)
    opts["command"] = args.command
    opts["full"] = bool(getattr(args, "full", False))
    _validate(opts)
    return opts


def _validate(o: dict) -> None:
    for key in ("q", "q0"):
        if not (0.0 < o[key] <= 1.0):
            raise ConfigError(key, f"must lie in (0, 1], got {o[key]}")
    for q in o["q_list"]:
        if not (0.0 < q <= 1.0):
            raise ConfigError("q_list", f"values must lie in (0, 1], got {q}")
    if any(m < 0 for m in o["M_list"]) or not o["M_list"]:
        raise ConfigError("M_list", "needs one or more non-negative integers")
    if o["M"] is not None and o["M"] < 0:
        raise ConfigError("M", f"must be non-negative, got {o['M']}")
    if o["W"] < 0:
        raise ConfigError("W", f"must be non-negative, got {o['W']}")
    if o["ensemble"] not in schur.ENSEMBLES:
        raise ConfigError("ensemble", f"must be one of {', '.join(schur.ENSEMBLES)}")
    if o["format"] not in (None, "json", "csv"):
        raise ConfigError("format", f"must be json or csv, got {o['format']!r}")
    cmd = o["command"]
    if cmd in ("qint", "leibniz") and o["n"] is None:
        raise ConfigError("n", f"is required for {cmd}")
    if cmd == "leibniz" and o["n"] < 1:
        raise ConfigError("n", f"must be a positive integer, got {o['n']}")
    if cmd in ("mk", "diameter", "fejer", "gh") and o["M"] is None:
        raise ConfigError("M", f"is required for {cmd}")
    if cmd == "mk" and o["theta_b"] is None:
        raise ConfigError("theta_b", "is required for mk")
    if cmd in ("mk", "diameter"):
        if o["N"] is not None and o["N"] <= 2 * o["M"]:
            raise ConfigError("N", f"must exceed 2M = {2 * o['M']}, got {o['N']}")
        if cmd == "diameter" and o["angles"] is not None and len(o["angles"]) < 2:
            raise ConfigError("angles", "needs at least two angles")
    if o["N"] is not None and o["N"] < 1:
        raise ConfigError("N", f"must be positive, got {o['N']}")


def _load_poly(o: dict) -> LaurentPoly:
    text = o["poly"]
    if text is None:
        band = 4 if o["M"] is None else o["M"]
        return laurent.random_poly(band, np.random.default_rng(o["seed"]))
    try:
        if text.startswith("@"):
            with open(text[1:]) as fh:
                text = fh.read()
        return LaurentPoly.from_json(text)
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise ConfigError("poly", f"cannot parse polynomial: {exc}") from None


def _sup_norm(f: LaurentPoly, N: int | None) -> laurent.SupNormCert:
    if N is not None and N <= 2 * f.band():
        raise ConfigError("N", f"must exceed 2 * band = {2 * f.band()}, got {N}")
    return laurent.sup_norm(f, N)


# commands --------------------------------------------------------------------


def _cmd_qint(o):
    return {"n": o["n"], "q": o["q"], "value": q_integer(o["n"], o["q"])}


def _cmd_deriv(o):
    return laurent.d_q(_load_poly(o), o["q"]).to_json()


def _cmd_integrate(o):
    return laurent.q_integral(_load_poly(o), o["q"]).to_json()


def _cmd_norm(o):
    if o["poly"] is not None or o["M"] is not None:
        f = _load_poly(o)
        cert = _sup_norm(f, o["N"])
        lq = laurent.sup_norm(laurent.d_q(f, o["q"]), cert.grid_size)
        return {"grid_max": cert.grid_max, "corrected_upper": cert.corrected_upper,
                "grid_size": cert.grid_size, "degree": cert.degree,
                "Lq_grid_max": lq.grid_max, "Lq_corrected_upper": lq.corrected_upper}
    T = schur.random_operator(o["W"], o["seed"], o["ensemble"])
    norm = schur.op_norm(T)
    psi = schur.op_norm(schur.schur_apply(psi_symbol(o["q"]), T))
    return {"W": o["W"], "ensemble": o["ensemble"], "seed": o["seed"], "op_norm": norm,
            "psi_op_norm": psi, "ratio": psi / norm if norm else 0.0, "bound": qms.POINCARE}


def _cmd_fejer(o):
    f = _load_poly(o)
    g = laurent.fejer(f, o["M"])
    err = laurent.sup_norm(f - g).grid_max
    bound = epsilon_M(o["M"]).value * laurent.seminorm_bracket(f, o["q"]).corrected_upper
    return {"result": g.to_json(), "error_grid_max": err, "bound": bound, "eps_M": epsilon_M(o["M"]).value}


def _cmd_mk(o):
    r = qms.mk_between(o["M"], o["q"], o["theta_a"], o["theta_b"], o["N"])
    return r.to_json()


def _cmd_diameter(o):
    angles = o["angles"] or [2 * math.pi * k / 8 for k in range(8)]
    d = qms.diameter_scan(qms.SpectralBand(o["M"], o["q"]), angles, o["N"])
    return {"M": o["M"], "q": o["q"], "angles": angles, "diameter_upper": d, "bound": qms.DIAMETER_BOUND}


def _cmd_leibniz(o):
    return {"n": o["n"], "q": o["q"], "ratio": qms.leibniz_ratio(o["n"], o["q"])}


def _report_row(r: qms.GHBoundReport) -> dict:
    return dict(zip(qms.GHBoundReport.CSV_FIELDS, r.csv_row()))


def _cmd_gh(o):
    r = qms.gh_band_bound(o["M"], o["q"], o["q0"])
    return {"rows": [_report_row(r)]} if o["format"] == "csv" else r.to_json()


def _cmd_continuity(o):
    rows = qms.continuity_scan(o["q0"], o["q_list"], o["M_list"])
    return {"rows": [_report_row(r) for r in rows]}


def _cmd_verify(o):
    results = run_checks(full=o["full"], seed=o["seed"])
    # timings stay out of the report so it is reproducible byte for byte
    rows = [{k: v for k, v in r.to_json().items() if k != "seconds"} for r in results]
    return rows, all(r.passed for r in results)


HANDLERS = {name: globals()[f"_cmd_{name}"] for name in COMMANDS}


def _verify_table(rows: list[dict]) -> str:
    width = max(len(r["name"]) for r in rows)
    lines = [f"{'status':6}  {'criterion':9}  {'check':{width}}  detail"]
    for r in rows:
        crit = "" if r["criterion"] is None else str(r["criterion"])
        status = "PASS" if r["passed"] else "FAIL"
        lines.append(f"{status:6}  {crit:9}  {r['name']:{width}}  {r['detail']}")
    passed = sum(r["passed"] for r in rows)
    lines.append(f"{passed}/{len(rows)} checks passed")
    return "\n".join(lines) + "\n"


def _emit(text: str, output: str | None) -> None:
    if output:
        with open(output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        o = resolve(args)
    except ConfigError as exc:
        parser.error(str(exc))
    try:
        if o["command"] == "verify":
            rows, ok = _cmd_verify(o)
            text = _verify_table(rows) if o["format"] is None else render({"rows": rows}, o["format"])
            _emit(text, o["output"])
            return 0 if ok else 1
        report = HANDLERS[o["command"]](o)
        _emit(render(report, o["format"] or "json"), o["output"])
    except ConfigError as exc:
        parser.error(str(exc))
    except NUMERICAL_ERRORS as exc:
        diag = {"error": type(exc).__name__, "message": str(exc), "command": o["command"]}
        for attr in ("n", "q", "iterations"):
            if hasattr(exc, attr):
                diag[attr] = getattr(exc, attr)
        sys.stderr.write(json.dumps(_clean(diag)) + "\n")
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())

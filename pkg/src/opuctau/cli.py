"""Batch command-line front end.

Four subcommands: ``moments`` (trigonometric moments), ``compute``
(reflection-coefficient and tau sequences by the selected routes, with a
cross-route agreement column), ``verify`` (functional-identity residual
report) and ``app`` (physical-model drivers).  Output is CSV or JSON,
written atomically; identical configurations produce byte-identical files.

Exit codes: 0 all checks pass, 2 agreement failure, 3 domain error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile

from mpmath import mp, mpf, mpc

from . import applications as apps
from . import recurrences as rec
from .errors import DegenerateOmega, DomainError, OpuctauError
from .genhyp import SeriesControl
from .oracle import MomentSource, build_table_oracle, verify_identity_suite
from .precision import PrecisionContext
from .weights import ModelKind, WeightParams, equivalent_params, model_moments

ENV_BITS = "OPUCTAU_BITS"

ROUTE_RUNNERS = {
    "two_two": lambda p, n, ctx: rec.run_two_two(p, n, ctx),
    "two_one": lambda p, n, ctx: rec.run_two_one_pair(p, n, ctx),
    "one_one_bilinear": lambda p, n, ctx: rec.run_one_one(p, n, ctx, "Bilinear"),
    "one_one_next": lambda p, n, ctx: rec.run_one_one(p, n, ctx, "Next"),
    "two_zero": lambda p, n, ctx: rec.run_two_zero_pair(p, n, ctx),
    "dpv": lambda p, n, ctx: rec.run_dpv(p, n, ctx),
    "dpv_conj": lambda p, n, ctx: rec.run_dpv(p, n, ctx, conj=True),
    "tau_l01": lambda p, n, ctx: rec.run_tau_L01(p, n, ctx),
    "tau_l14": lambda p, n, ctx: rec.run_tau_L14(p, n, ctx),
}


def _digits(bits: int) -> int:
    return int(mp.ceil(bits * mp.log(2) / mp.log(10)))


def fmt_complex(z, digits: int) -> str:
    """Fixed-format 're<sign>imi' string at the working precision."""
    z = mpc(z)
    re = mp.nstr(z.real, digits)
    im = mp.nstr(abs(z.imag), digits)
    sign = "+" if z.imag >= 0 else "-"
    return f"{re}{sign}{im}i"


def _json_complex(z, digits: int):
    z = mpc(z)
    return {"re": mp.nstr(z.real, digits), "im": mp.nstr(z.imag, digits)}


def _write_atomic(path: str | None, text: str) -> None:
    if path is None:
        sys.stdout.write(text)
        return
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".opuctau-")
    try:
        with os.fdopen(fd, "w") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _table_text(fmt, header, rows, digits, meta=None):
    if fmt == "csv":
        lines = [",".join(header)]
        for row in rows:
            cells = []
            for cell in row:
                if isinstance(cell, (int, str)):
                    cells.append(str(cell))
                else:
                    cells.append(fmt_complex(cell, digits))
            lines.append(",".join(cells))
        return "\n".join(lines) + "\n"
    payload = {"meta": meta or {}, "columns": header, "rows": []}
    for row in rows:
        out_row = []
        for cell in row:
            if isinstance(cell, (int, str)):
                out_row.append(cell)
            else:
                out_row.append(_json_complex(cell, digits))
        payload["rows"].append(out_row)
    return json.dumps(payload, indent=1, sort_keys=True) + "\n"


def _weight_from_args(args) -> WeightParams:
    t = mpc(mpf(args.t_re), mpf(args.t_im))
    return WeightParams.from_exponents(
        mpf(args.mu), mpf(args.omega1), mpf(args.omega2), mpf(args.xi), t
    )


def _model_from_args(args) -> ModelKind | None:
    if args.model == "cue_gap":
        return ModelKind.cue_gap(mpf(args.phi), mpf(args.xi))
    if args.model == "cue_charpoly":
        return ModelKind.cue_charpoly(mpf(args.u), mpf(args.mu))
    if args.model == "ising_low":
        return ModelKind.ising_low(mpf(args.k))
    if args.model == "ising_high":
        return ModelKind.ising_high(mpf(args.k))
    return None


def cmd_moments(args) -> int:
    ctx = PrecisionContext(args.bits, args.tol)
    digits = _digits(args.bits)
    model = _model_from_args(args)
    rows = []
    status = 0
    with mp.workprec(args.bits + 32):
        if model is None:
            p = _weight_from_args(args)
            src = MomentSource.from_params(p, ctx)
        else:
            src = MomentSource.from_model(model, ctx)
        for n in range(-args.nmax, args.nmax + 1):
            try:
                rows.append([n, src(n)])
            except OpuctauError as exc:
                rows.append([n, f"error:{type(exc).__name__}"])
                status = 3
    text = _table_text(
        args.format, ["n", "w_n"], rows, digits, meta={"command": "moments"}
    )
    _write_atomic(args.out, text)
    return status


def cmd_compute(args) -> int:
    ctx = PrecisionContext(args.bits, args.tol)
    digits = _digits(args.bits)
    p = _weight_from_args(args)
    routes = [r.strip() for r in args.routes.split(",") if r.strip()]
    results = {}
    errors = {}
    with mp.workprec(args.bits + 32):
        for route in routes:
            if route == "oracle":
                src = MomentSource.from_params(p, ctx)
                results["oracle"] = build_table_oracle(src, args.nmax, ctx)
                continue
            if route not in ROUTE_RUNNERS:
                raise DomainError(f"unknown route {route!r}")
            try:
                results[route] = ROUTE_RUNNERS[route](p, args.nmax, ctx).table
            except (DegenerateOmega, OpuctauError) as exc:
                errors[route] = f"{type(exc).__name__}: {exc}"
        header = ["N"]
        for route in results:
            header += [f"r_N[{route}]", f"rbar_N[{route}]", f"T_N[{route}]"]
        header.append("max_rel_deviation")
        rows = []
        worst = mpf(0)
        for n in range(args.nmax + 1):
            row = [n]
            vals = {"r": [], "rbar": [], "T": []}
            for route, table in results.items():
                row += [
                    table.r[n] if table.r[n] is not None else mpc(0),
                    table.rbar[n] if table.rbar[n] is not None else mpc(0),
                    table.T[n] if table.T[n] is not None else mpc(0),
                ]
                if table.r[n] is not None:
                    vals["r"].append(table.r[n])
                    vals["rbar"].append(table.rbar[n])
                if table.T[n] is not None:
                    vals["T"].append(table.T[n])
            dev = mpf(0)
            for seq in vals.values():
                for i in range(len(seq)):
                    for j in range(i + 1, len(seq)):
                        dev = max(dev, abs(seq[i] - seq[j]) / max(mpf(1), abs(seq[i])))
            worst = max(worst, dev)
            row.append(mpc(dev))
            rows.append(row)
    meta = {
        "command": "compute",
        "routes": sorted(results),
        "route_errors": errors,
        "max_deviation": mp.nstr(worst, 8),
    }
    text = _table_text(args.format, header, rows, digits, meta=meta)
    _write_atomic(args.out, text)
    if errors:
        return 3
    return 0 if worst < mpf(args.tol) or len(results) < 2 else 2


def cmd_verify(args) -> int:
    ctx = PrecisionContext(args.bits, args.tol)
    digits = _digits(args.bits)
    p = _weight_from_args(args)
    report = verify_identity_suite(p, args.nmax, args.seed, ctx)
    rows = [[label, mpc(resid)] for label, resid in report.rows()]
    text = _table_text(
        args.format,
        ["identity", "max_residual"],
        rows,
        digits,
        meta={"command": "verify", "seed": args.seed},
    )
    _write_atomic(args.out, text)
    bound = 1000 * mpf(args.tol)
    return 0 if report.max_residual() < bound else 2


def cmd_app(args) -> int:
    ctx = PrecisionContext(args.bits, args.tol)
    digits = _digits(args.bits)
    ctrl = SeriesControl(tail_tol=args.tol)
    routes = tuple(r.strip() for r in args.routes.split(",") if r.strip())
    if args.model == "cue_gap":
        result = apps.cue_gap(mpf(args.phi), mpf(args.xi), args.nmax, ctx,
                              routes=routes or ("xrec3", "oracle"))
        label = "E_N"
    elif args.model == "cue_charpoly":
        result = apps.cue_charpoly(mpf(args.u), mpf(args.mu), args.nmax, ctx,
                                   routes=routes or ("recurrence", "oracle"),
                                   series_control=ctrl)
        label = "F_N"
    elif args.model in ("ising_low", "ising_high"):
        regime = "low" if args.model == "ising_low" else "high"
        result = apps.ising_diagonal(mpf(args.k), regime, args.nmax, ctx,
                                     routes=routes or ("recurrence", "oracle"),
                                     series_control=ctrl)
        label = "corr_N"
    else:
        raise DomainError("app requires --model cue_gap|cue_charpoly|ising_low|ising_high")
    header = ["N", label] + [f"{label}[{route}]" for route in result.by_route]
    rows = []
    for n in range(args.nmax + 1):
        row = [n, result.values[n]]
        for route_vals in result.by_route.values():
            row.append(route_vals[n] if n < len(route_vals) else mpc(0))
        rows.append(row)
    meta = {
        "command": "app",
        "model": args.model,
        "routes": sorted(result.by_route),
        "cross_residual": mp.nstr(result.residual, 8),
        "notes": result.notes,
    }
    text = _table_text(args.format, header, rows, digits, meta=meta)
    _write_atomic(args.out, text)
    return 0 if result.residual < 1000 * mpf(args.tol) or len(result.by_route) < 2 else 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="opuctau",
        description="High-precision Toeplitz/unit-circle recurrence toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    default_bits = int(os.environ.get(ENV_BITS, "256"))

    def common(sp):
        sp.add_argument("--model", default="weight",
                        choices=["weight", "cue_gap", "cue_charpoly", "ising_low", "ising_high"])
        sp.add_argument("--mu", default="0", help="exponent mu (or model mu)")
        sp.add_argument("--omega1", default="0")
        sp.add_argument("--omega2", default="0")
        sp.add_argument("--xi", default="0")
        sp.add_argument("--t-re", dest="t_re", default="0.5")
        sp.add_argument("--t-im", dest="t_im", default="0")
        sp.add_argument("--phi", default="1.5707963267948966")
        sp.add_argument("--k", default="1.25")
        sp.add_argument("--u", default="0.7")
        sp.add_argument("--nmax", type=int, default=8)
        sp.add_argument("--routes", default="")
        sp.add_argument("--bits", type=int, default=default_bits)
        sp.add_argument("--tol", type=float, default=1e-30)
        sp.add_argument("--format", choices=["csv", "json"], default="csv")
        sp.add_argument("--out", default=None)
        sp.add_argument("--seed", type=int, default=20130523)

    for name in ("moments", "compute", "verify", "app"):
        common(sub.add_parser(name))
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if not args.routes and args.command == "compute":
        args.routes = "two_two,oracle"
    try:
        if args.command == "moments":
            return cmd_moments(args)
        if args.command == "compute":
            return cmd_compute(args)
        if args.command == "verify":
            return cmd_verify(args)
        if args.command == "app":
            return cmd_app(args)
    except (DomainError, ValueError) as exc:
        print(f"domain error: {exc}", file=sys.stderr)
        return 3
    except OpuctauError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())

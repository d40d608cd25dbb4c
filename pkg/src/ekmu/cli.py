"""``ekmu`` command-line front end.

Exit codes: 0 ok, 2 usage or domain error, 3 input/output or data error,
4 numerical failure.  dB values are converted to linear exactly once, while
the flags are parsed.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from . import fit as fitmod
from . import metrics, model, simulate
from .errors import DataError, DomainError, EkmuError

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_NUMERIC = 0, 2, 3, 4


class UsageError(Exception):
    pass


def fmt(x) -> str:
    return f"{float(x):.12g}"


def db_to_linear(db):
    return 10.0 ** (np.asarray(db, dtype=float) / 10.0)


def parse_sweep(text: str) -> np.ndarray:
    """``min:max:step`` (inclusive) or a single value."""
    parts = text.split(":")
    try:
        vals = [float(v) for v in parts]
    except ValueError:
        raise UsageError(f"bad sweep {text!r}; expected min:max:step") from None
    if len(vals) == 1:
        return np.array(vals)
    if len(vals) != 3:
        raise UsageError(f"bad sweep {text!r}; expected min:max:step")
    lo, hi, step = vals
    if not step > 0 or hi < lo:
        raise UsageError(f"bad sweep {text!r}; need step > 0 and max >= min")
    count = int(math.floor((hi - lo) / step + 1e-9)) + 1
    return lo + step * np.arange(count)


def _write_csv(out, header, rows):
    out.write(",".join(header) + "\n")
    for row in rows:
        out.write(",".join(v if isinstance(v, str) else fmt(v) for v in row) + "\n")


def _params(args):
    return model.ExtKuParams(args.k, args.u, args.p)


def _snr_axis(args):
    """``(column name, printed x values, linear SNRs)``."""
    if (args.snr is None) == (args.snr_db is None):
        raise UsageError("give exactly one of --snr or --snr-db")
    if args.snr_db is not None:
        db = parse_sweep(args.snr_db)
        return "snr_db", db, db_to_linear(db)
    lin = parse_sweep(args.snr)
    return "snr", lin, lin


def _seed(args):
    if args.seed is not None:
        return args.seed
    env = os.environ.get("EKMU_SEED")
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError:
        raise UsageError(f"EKMU_SEED must be an integer, got {env!r}") from None


def cmd_curve(args, out):
    params = _params(args)
    if not args.x_min < args.x_max or args.points < 2:
        raise UsageError("need x-min < x-max and points >= 2")
    x = np.linspace(args.x_min, args.x_max, args.points)
    fn = model.pdf_envelope if args.quantity == "pdf" else model.cdf_envelope
    _write_csv(out, ["rho", args.quantity], zip(x, fn(params, x)))


def cmd_moments(args, out):
    params = _params(args)
    orders = [float(v) for v in args.orders.split(",")]
    _write_csv(out, ["order", "moment"], ((j, model.moment(params, j)) for j in orders))


def cmd_af(args, out):
    out.write(fmt(metrics.amount_of_fading(_params(args))) + "\n")


def cmd_outage(args, out):
    params = _params(args)
    name, _, gbar = _snr_axis(args)
    if gbar.size != 1:
        raise UsageError("outage takes a single mean SNR")
    ctx = model.SnrContext(float(gbar[0]))
    th_db = parse_sweep(args.threshold_db)
    values = metrics.outage(params, ctx, db_to_linear(th_db))
    _write_csv(out, ["threshold_db", "outage"], zip(th_db, np.atleast_1d(values)))


def cmd_aber(args, out):
    params = _params(args)
    scheme = metrics.SCHEMES[args.scheme] if args.g is None else metrics.ModulationScheme(args.g)
    name, xs, gbars = _snr_axis(args)
    rows = []
    for x, gbar in zip(xs, gbars):
        rep = metrics.aber(params, model.SnrContext(float(gbar)), scheme, args.method)
        rows.append((x, rep.value, rep.method))
    _write_csv(out, [name, "aber", "method"], rows)


def cmd_effrate(args, out):
    params = _params(args)
    qos = metrics.QosParams(args.a_qos)
    name, xs, gbars = _snr_axis(args)
    rows = []
    for x, gbar in zip(xs, gbars):
        rep = metrics.effective_rate_report(params, model.SnrContext(float(gbar)), qos, args.method)
        rows.append((x, rep.value, rep.method))
    _write_csv(out, [name, "effective_rate", "method"], rows)


def cmd_simulate(args, out):
    params = _params(args)
    seed = _seed(args)
    config = simulate.config_from_params(params)
    samples = simulate.sample_envelope(config, args.samples, seed, args.workers)
    if args.ks:
        ks = simulate.ks_distance(samples, lambda r: model.cdf_envelope(params, r))
        report = {"n": samples.count, "ks": ks,
                  "threshold": simulate.dkw_threshold(samples.count, args.alpha),
                  "alpha": args.alpha, "seed": seed}
        out.write(json.dumps(report) + "\n")
        return
    _write_csv(out, ["rho"], ((v,) for v in samples.values))


def _fit_json(res: fitmod.FitResult, grid, curve):
    return {"model_kind": res.model_kind, "k": res.params.k, "u": res.params.u,
            "p": res.params.p, "m": res.m, "sse": res.sse, "r2": res.r2,
            "n_points": res.n_points, "starts_used": res.starts_used,
            "best_start_index": res.best_start_index, "converged": res.converged,
            "curve": [{"rho": float(r), "cdf_model": float(c)} for r, c in zip(grid, curve)]}


def cmd_fit(args, out):
    data = fitmod.load_cdf_csv(args.input)
    seed = _seed(args)
    if args.model == "both":
        cmp = fitmod.compare(data, args.starts, seed)
        report = {
            "fits": [_fit_json(cmp.ext_ku, cmp.rho_grid, cmp.cdf_ext_ku),
                     _fit_json(cmp.ku, cmp.rho_grid, cmp.cdf_ku)],
            "sse_extku": cmp.ext_ku.sse, "sse_ku": cmp.ku.sse,
            "delta_sse": cmp.delta_sse, "delta_r2": cmp.delta_r2,
            "nested_dominance": cmp.nested_dominance,
        }
    else:
        kind = "ext_ku" if args.model == "extku" else "ku"
        res = fitmod.fit(data, kind, args.starts, seed)
        grid = fitmod.curve_grid(data)
        report = _fit_json(res, grid, model.cdf_envelope(res.params, grid))
    report["data"] = [{"rho": r, "cdf": f} for r, f in data.points]
    text = json.dumps(report, indent=2) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        out.write(text)


def _add_params(sp):
    sp.add_argument("--k", type=float, required=True, help="dominant-to-scattered power ratio")
    sp.add_argument("--u", type=float, required=True, help="number of clusters")
    sp.add_argument("--p", type=float, required=True, help="quadrature/in-phase imbalance")


def _add_snr(sp):
    sp.add_argument("--snr", help="mean SNR, linear (value or min:max:step)")
    sp.add_argument("--snr-db", help="mean SNR in dB (value or min:max:step)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ekmu", description="Extended k-u fading toolkit.")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("curve", help="tabulate the envelope pdf or cdf")
    _add_params(sp)
    sp.add_argument("--quantity", choices=("pdf", "cdf"), default="pdf")
    sp.add_argument("--x-min", type=float, default=0.0)
    sp.add_argument("--x-max", type=float, default=3.0)
    sp.add_argument("--points", type=int, default=301)
    sp.set_defaults(func=cmd_curve)

    sp = sub.add_parser("moments", help="envelope moments E[P^j]")
    _add_params(sp)
    sp.add_argument("--orders", default="1,2,3,4", help="comma-separated orders")
    sp.set_defaults(func=cmd_moments)

    sp = sub.add_parser("af", help="amount of fading")
    _add_params(sp)
    sp.set_defaults(func=cmd_af)

    sp = sub.add_parser("outage", help="outage probability over a threshold sweep")
    _add_params(sp)
    _add_snr(sp)
    sp.add_argument("--threshold-db", required=True, help="threshold in dB, min:max:step")
    sp.set_defaults(func=cmd_outage)

    sp = sub.add_parser("aber", help="average bit error rate over an SNR sweep")
    _add_params(sp)
    _add_snr(sp)
    sp.add_argument("--g", type=float, help="detection constant (overrides --scheme)")
    sp.add_argument("--scheme", choices=sorted(metrics.SCHEMES), default="bpsk")
    sp.add_argument("--method", choices=("auto", "series", "quadrature"), default="auto")
    sp.set_defaults(func=cmd_aber)

    sp = sub.add_parser("effrate", help="effective rate over an SNR sweep")
    _add_params(sp)
    _add_snr(sp)
    sp.add_argument("--a-qos", type=float, required=True, help="QoS aggregate theta T B / ln 2")
    sp.add_argument("--method", choices=("auto", "series", "quadrature"), default="auto")
    sp.set_defaults(func=cmd_effrate)

    sp = sub.add_parser("simulate", help="Monte Carlo envelope samples")
    _add_params(sp)
    sp.add_argument("--samples", type=int, default=10_000)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--workers", type=int, default=1)
    sp.add_argument("--ks", action="store_true", help="emit a KS report instead of samples")
    sp.add_argument("--alpha", type=float, default=1e-3, help="level of the DKW threshold")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("fit", help="fit empirical CDF points")
    sp.add_argument("--input", required=True, help="CSV with header rho,cdf")
    sp.add_argument("--model", choices=("extku", "ku", "both"), default="both")
    sp.add_argument("--starts", type=int, default=16)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--out", help="write the JSON report here instead of stdout")
    sp.set_defaults(func=cmd_fit)
    return ap


_VALUE_FLAGS = {"--snr", "--snr-db", "--threshold-db", "--x-min", "--x-max", "--k", "--u", "--p"}


def _join_negative_values(argv):
    # argparse reads "-20:-5:5" as an option; glue it to its flag
    out, i = [], 0
    while i < len(argv):
        tok = argv[i]
        nxt = argv[i + 1] if i + 1 < len(argv) else None
        if tok in _VALUE_FLAGS and nxt is not None and nxt[:1] == "-" and (nxt[1:2].isdigit() or nxt[1:2] == "."):
            out.append(f"{tok}={nxt}")
            i += 2
            continue
        out.append(tok)
        i += 1
    return out


def main(argv=None, out=None, err=None) -> int:
    out = sys.stdout if out is None else out
    err = sys.stderr if err is None else err
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    try:
        args = parser.parse_args(_join_negative_values(argv))
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        args.func(args, out)
    except UsageError as exc:
        err.write(f"ekmu: usage error: {exc}\n")
        return EXIT_USAGE
    except (DataError, OSError) as exc:
        err.write(f"ekmu: {exc}\n")
        return EXIT_IO
    except DomainError as exc:
        err.write(f"ekmu: {exc}\n")
        return EXIT_USAGE
    except (EkmuError, ArithmeticError) as exc:
        err.write(f"ekmu: numerical failure: {exc}\n")
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

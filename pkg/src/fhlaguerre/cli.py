"""Command-line interface: moments, recurrence, extract, verify, fredholm.

Exit codes: 0 ok, 2 domain error, 3 tolerance unmet, 4 precision exhausted,
5 degenerate orthogonality.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from importlib import resources
from pathlib import Path

import gmpy2
import numpy as np

from . import __version__
from .asymptotics import gamma_brackets, gamma_prefactor_log, predict_monic, predict_recurrence
from .cache import Cache, default_cache_dir
from .errors import DomainError, FHError
from .opoly import RecurrenceTable, eval_monic, recurrence
from .painleve import FredholmConfig, PainleveSample, extract_painleve, fredholm_det, fredholm_sigma, fredholm_u
from .precision import Precision, working
from .weight import WeightParams, moments

EXIT_OK = 0
EXIT_DOMAIN = 2


def load_schema(name):
    """Shipped JSON schema ``schemas/<name>.schema.json``."""
    text = resources.files("fhlaguerre").joinpath("schemas", f"{name}.schema.json").read_text(encoding="utf-8")
    return json.loads(text)


# -- argument parsing helpers --------------------------------------------------


def parse_ladder(spec):
    """``start:stop:factor`` (geometric, inclusive) or a comma-separated list of integers."""
    spec = spec.strip()
    if ":" in spec:
        parts = spec.split(":")
        if len(parts) != 3:
            raise DomainError(f"ladder spec {spec!r} must be start:stop:factor")
        start, stop, factor = int(parts[0]), int(parts[1]), float(parts[2])
        if start < 1 or factor <= 1 or stop < start:
            raise DomainError(f"invalid ladder spec {spec!r}")
        out, n = [], float(start)
        while round(n) <= stop:
            out.append(int(round(n)))
            n *= factor
        return out
    out = [int(x) for x in spec.split(",") if x.strip()]
    if not out or min(out) < 1:
        raise DomainError(f"invalid ladder list {spec!r}")
    return out


def parse_grid(spec):
    """``start:stop:step`` (uniform, inclusive) or a comma-separated list of reals."""
    spec = spec.strip()
    if ":" in spec:
        parts = spec.split(":")
        if len(parts) != 3:
            raise DomainError(f"grid spec {spec!r} must be start:stop:step")
        start, stop, step = (float(p) for p in parts)
        if step <= 0 or stop < start:
            raise DomainError(f"invalid grid spec {spec!r}")
        count = int(round((stop - start) / step))
        return [round(start + i * step, 12) for i in range(count + 1)]
    return [float(x) for x in spec.split(",") if x.strip()]


def parse_omega(re_part, im_part):
    if im_part:
        return complex(re_part, im_part)
    return float(re_part)


def _params_from_args(args, n=None, s=None):
    omega = parse_omega(args.omega, getattr(args, "omega_im", 0.0))
    if getattr(args, "mu", None) is not None:
        return WeightParams(args.alpha, args.beta, omega, mu=args.mu)
    n = n if n is not None else getattr(args, "n", None)
    s = s if s is not None else getattr(args, "s", None)
    if n is None or s is None:
        raise DomainError("give --mu or both --n and --s")
    return WeightParams(args.alpha, args.beta, omega, n=n, s=s)


def _cache_from_args(args):
    if getattr(args, "no_cache", False):
        return Cache(None)
    return Cache(args.cache_dir or default_cache_dir())


def _emit(text, out):
    if out is None or str(out) == "-":
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8")


def _json_text(payload):
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def _csv_text(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


# -- moments -------------------------------------------------------------------


def cmd_moments(args):
    params = _params_from_args(args)
    prec = Precision(args.bits) if args.bits else Precision.for_order(max(args.order // 2, 1))
    config = {"params": params.to_json(), "order": args.order, "bits": prec.mantissa_bits}
    payload, _ = _cache_from_args(args).get_or_compute(
        "moments", config, lambda: moments(params, args.order, prec).to_json()
    )
    if args.format == "csv":
        rows = [[v["k"], v["re"], v["im"], v["err"]] for v in payload["values"]]
        _emit(_csv_text(["k", "re", "im", "err"], rows), args.out)
    else:
        _emit(_json_text(payload), args.out)
    return EXIT_OK


# -- recurrence ----------------------------------------------------------------


def _recurrence_payload(params, N, route, bits):
    prec = Precision(bits) if bits else None
    return recurrence(params, N, prec, route=route).to_json()


def _max_discrepancy(t1, t2):
    worst = 0.0
    with working(max(t1.bits, t2.bits)):
        for x, y in zip(t1.a + t1.b2, t2.a + t2.b2):
            worst = max(worst, float(abs(x - y) / abs(x)))
    return worst


def cmd_recurrence(args):
    params = _params_from_args(args)
    cache = _cache_from_args(args)
    routes = ["hankel", "stieltjes"] if args.route == "both" else [args.route]
    tables = {}
    for route in routes:
        config = {"params": params.to_json(), "N": args.N, "route": route, "bits": args.bits}
        payload, _ = cache.get_or_compute(
            "recurrence", config, lambda r=route: _recurrence_payload(params, args.N, r, args.bits)
        )
        tables[route] = payload
    if args.format == "csv":
        table = RecurrenceTable.from_json(tables[routes[0]])
        rows = []
        for k in range(table.N + 1):
            a = tables[routes[0]]["a"][k]["re"] if k < table.N else ""
            b2 = tables[routes[0]]["b2"][k - 1]["re"] if k >= 1 else ""
            rows.append([k, a, b2, tables[routes[0]]["log_gamma"][k]["log_abs"]])
        _emit(_csv_text(["k", "a", "b2", "log_gamma"], rows), args.out)
    else:
        out = {"tables": tables}
        if len(routes) == 2:
            h = RecurrenceTable.from_json(tables["hankel"])
            s = RecurrenceTable.from_json(tables["stieltjes"])
            out["max_relative_discrepancy"] = _max_discrepancy(h, s)
        _emit(_json_text(out if len(routes) == 2 else tables[routes[0]]), args.out)
    return EXIT_OK


# -- extract -------------------------------------------------------------------


def _extract_payload(args, grid, ladder):
    sample = extract_painleve(args.alpha, args.beta, args.omega, grid, ladder, terms=args.terms)
    return sample.to_json()


def summarize_sample(sample, fredholm=None):
    """Human-readable summary lines for a PainleveSample."""
    lines = [
        f"alpha={sample.alpha} beta={sample.beta} omega={sample.omega} ladder={sample.n_ladder}",
        f"max fit residual {max(sample.fit_residual):.3e} (threshold {sample.fit_threshold:.1e})"
        + ("  [extrapolation unreliable]" if sample.unreliable else ""),
    ]
    interior = [i for i, v in enumerate(sample.res_sigma_pii) if v is not None]
    if interior:
        lines.append(f"max |sigma-PII residual| {max(abs(sample.res_sigma_pii[i]) for i in interior):.3e}")
        lines.append(f"max |P34 residual|       {max(abs(sample.res_p34[i]) for i in interior):.3e}")
        lines.append(f"max |u + dsigma/ds|      {sample.max_u_plus_dsigma():.3e}")
    if fredholm is not None:
        lines.append(f"max |sigma - fredholm|   {max(abs(a - b) for a, b in zip(sample.sigma_hat, fredholm)):.3e}")
    return lines


def cmd_extract(args):
    grid = parse_grid(args.s_grid)
    ladder = parse_ladder(args.ladder)
    if len(ladder) < 3:
        raise DomainError("extraction needs a ladder of at least 3 entries")
    WeightParams(args.alpha, args.beta, args.omega, n=min(ladder), s=min(grid))
    if args.fredholm_check and (args.beta != 0 or not 0 <= args.omega <= 1):
        raise DomainError("--fredholm-check needs beta = 0 and omega in [0, 1]")
    config = {"alpha": args.alpha, "beta": args.beta, "omega": args.omega, "grid": grid, "ladder": ladder,
              "terms": args.terms}
    payload, _ = _cache_from_args(args).get_or_compute("extract", config, lambda: _extract_payload(args, grid, ladder))
    sample = PainleveSample.from_json(payload)
    fred = [fredholm_sigma(s, args.omega) for s in grid] if args.fredholm_check else None
    if args.format == "csv":
        text = sample.to_csv()
        if fred is not None:
            lines = text.splitlines()
            lines[0] += ",fredholm_sigma"
            lines[1:] = [f"{line},{f!r}" for line, f in zip(lines[1:], fred)]
            text = "\n".join(lines) + "\n"
        _emit(text, args.out)
    else:
        out = dict(payload)
        if fred is not None:
            out["fredholm_sigma"] = fred
        _emit(_json_text(out), args.out)
    for line in summarize_sample(sample, fred):
        print(line, file=sys.stderr)
    return EXIT_OK


# -- verify --------------------------------------------------------------------


def _slope(ns, errs):
    pts = [(math.log(n), math.log(e)) for n, e in zip(ns, errs) if e > 0 and math.isfinite(e)]
    if len(pts) < 2:
        return None
    x, y = zip(*pts)
    return float(np.polyfit(x, y, 1)[0])


def verify_convergence(alpha, beta, omega, s, ladder, sigma, u, zs=(2.0, -1.0), prec_policy=None):
    """Compare computed and predicted edge quantities along an n ladder.

    Returns a report dict with per-n rows and log-log slopes of the errors.
    """
    zs = [complex(z) for z in zs]
    for z in zs:
        x = min(max(z.real, 0.0), 1.0)
        if abs(z - x) < 0.1:
            raise DomainError(f"z={z} is within 0.1 of [0, 1]")
    policy = prec_policy or Precision.for_order
    rows = []
    for n in ladder:
        params = WeightParams(alpha, beta, omega, n=n, s=s)
        rt = recurrence(params, n + 1, policy(n + 1))
        with working(rt.bits):
            pa, pb = predict_recurrence(n, s, u)
            a_n, b_n = rt.a[n], gmpy2.sqrt(rt.b2[n - 1])
            br1 = gmpy2.exp(rt.log_gamma[n - 1].log_abs - gamma_prefactor_log(n, alpha, beta, 1))
            br2 = gmpy2.exp(rt.log_gamma[n].log_abs - gamma_prefactor_log(n, alpha, beta, -1))
            p1, p2 = gamma_brackets(n, alpha, beta, sigma, u)
            monic = []
            for z in zs:
                got = eval_monic(rt, n, gmpy2.mpc(4 * n * z))
                pred = predict_monic(n, gmpy2.mpc(z), s, alpha, beta, sigma, u)
                monic.append({"z": [z.real, z.imag], "rel_err": float(got.relative_difference(pred))})
            rows.append(
                {
                    "n": n,
                    "a_n": float(a_n),
                    "a_pred": float(pa),
                    "err_a": float(abs(a_n / n - pa / n)),
                    "b_n": float(b_n),
                    "b_pred": float(pb),
                    "err_b": float(abs(b_n / n - pb / n)),
                    "bracket_nm1": float(br1),
                    "bracket_nm1_pred": float(p1),
                    "err_gamma_nm1": float(abs(br1 - p1)),
                    "bracket_n": float(br2),
                    "bracket_n_pred": float(p2),
                    "err_gamma_n": float(abs(br2 - p2)),
                    "monic": monic,
                }
            )
    ns = [r["n"] for r in rows]
    slopes = {key: _slope(ns, [r[key] for r in rows]) for key in ("err_a", "err_b", "err_gamma_nm1", "err_gamma_n")}
    slopes["monic"] = [
        {"z": [z.real, z.imag], "slope": _slope(ns, [r["monic"][j]["rel_err"] for r in rows])} for j, z in enumerate(zs)
    ]
    return {
        "version": __version__,
        "alpha": alpha,
        "beta": beta,
        "omega": omega,
        "s": s,
        "sigma": float(sigma),
        "u": float(u),
        "ladder": list(ns),
        "rows": rows,
        "slopes": slopes,
    }


def _sigma_u_source(args):
    if args.source == "fredholm":
        if args.beta != 0 or not 0 <= args.omega <= 1:
            raise DomainError("the Fredholm source needs beta = 0 and omega in [0, 1]")
        return fredholm_sigma(args.s, args.omega), fredholm_u(args.s, args.omega), "fredholm"
    sample = PainleveSample.from_json(json.loads(Path(args.source).read_text(encoding="utf-8")))
    matches = [i for i, s in enumerate(sample.s_grid) if abs(s - args.s) < 1e-12]
    if not matches:
        raise DomainError(f"s={args.s} is not on the grid of {args.source}")
    i = matches[0]
    return sample.sigma_hat[i], sample.u_hat[i], str(args.source)


def cmd_verify(args):
    ladder = parse_ladder(args.ladder)
    zs = [complex(z.replace(" ", "")) for z in args.z] if args.z else [2.0, -1.0]
    sigma, u, source = _sigma_u_source(args)
    report = verify_convergence(args.alpha, args.beta, args.omega, args.s, ladder, sigma, u, zs)
    report["source"] = source
    _emit(_json_text(report), args.out)
    return EXIT_OK


# -- fredholm ------------------------------------------------------------------


def cmd_fredholm(args):
    if args.beta not in (None, 0, 0.0):
        raise DomainError("the Fredholm oracle covers beta = 0 only")
    if not 0 <= args.omega <= 1:
        raise DomainError("the Fredholm oracle needs omega in [0, 1]")
    cfg = FredholmConfig(m=args.nodes, L=args.L, h_s=args.h)
    fine = FredholmConfig(m=2 * args.nodes, L=args.L, h_s=args.h)
    rows = []
    for s in parse_grid(args.s_grid):
        det = fredholm_det(s, args.omega, cfg)
        rows.append([repr(s), repr(det), repr(fredholm_sigma(s, args.omega, cfg)),
                     repr(abs(fredholm_det(s, args.omega, fine) - det))])
    _emit(_csv_text(["s", "det", "sigma", "det_change_2m"], rows), args.out)
    return EXIT_OK


# -- parser --------------------------------------------------------------------


def _add_weight_args(p, edge=True):
    p.add_argument("--alpha", type=float, required=True, help="exponent at 0 (> -1)")
    p.add_argument("--beta", type=float, required=True, help="root exponent at mu (> -1/2)")
    p.add_argument("--omega", type=float, default=1.0, help="jump factor, real part")
    p.add_argument("--omega-im", type=float, default=0.0, help="jump factor, imaginary part")
    if edge:
        p.add_argument("--mu", type=float, default=None, help="explicit singularity location")
        p.add_argument("--n", type=int, default=None, help="edge scaling degree n")
        p.add_argument("--s", type=float, default=None, help="edge offset s")


def _add_io_args(p, formats=("json", "csv")):
    p.add_argument("--out", default=None, help="output file (default stdout)")
    p.add_argument("--format", choices=formats, default=formats[0])
    p.add_argument("--cache-dir", default=None, help="cache directory (default from FHLAGUERRE_CACHE_DIR)")
    p.add_argument("--no-cache", action="store_true")


def build_parser():
    parser = argparse.ArgumentParser(prog="fhlaguerre", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("moments", help="moment table m_0..m_order")
    _add_weight_args(p)
    p.add_argument("--order", type=int, required=True)
    p.add_argument("--bits", type=int, default=None, help="mantissa bits (default: precision policy)")
    _add_io_args(p)
    p.set_defaults(func=cmd_moments)

    p = sub.add_parser("recurrence", help="recurrence coefficients and leading coefficients")
    _add_weight_args(p)
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--route", choices=["hankel", "stieltjes", "both"], default="hankel")
    p.add_argument("--bits", type=int, default=None)
    _add_io_args(p)
    p.set_defaults(func=cmd_recurrence)

    p = sub.add_parser("extract", help="extract sigma(s), u(s) along an n ladder")
    _add_weight_args(p, edge=False)
    p.add_argument("--s-grid", required=True, help="start:stop:step or list; write --s-grid=-2:1:0.25")
    p.add_argument("--ladder", default="40:320:2", help="start:stop:factor or comma list")
    p.add_argument("--terms", type=int, default=3, help="coefficients in the n^(-1/3) fit")
    p.add_argument("--fredholm-check", action="store_true")
    _add_io_args(p)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("verify", help="computed vs predicted edge asymptotics along a ladder")
    _add_weight_args(p, edge=False)
    p.add_argument("--s", type=float, required=True)
    p.add_argument("--ladder", default="40:320:2")
    p.add_argument("--z", action="append", help="scaled point z for pi_n(4nz); repeatable")
    p.add_argument("--source", default="fredholm", help="'fredholm' or an extracted sample JSON")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("fredholm", help="Airy-kernel determinant and sigma(s)")
    p.add_argument("--omega", type=float, required=True)
    p.add_argument("--beta", type=float, default=None)
    p.add_argument("--s-grid", required=True)
    p.add_argument("--nodes", type=int, default=60)
    p.add_argument("--L", type=float, default=10.0)
    p.add_argument("--h", type=float, default=1e-3)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_fredholm)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "omega_im", 0.0) and args.command in ("extract", "verify"):
        print("error: complex omega is only supported by moments and recurrence", file=sys.stderr)
        return EXIT_DOMAIN
    try:
        return args.func(args)
    except FHError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code if exc.exit_code else 1
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())

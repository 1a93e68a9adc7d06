"""Command-line front end.

Every JSON document carries a ``config`` block holding the fully resolved
argument vector; ``apmoments --config out.json`` re-runs it and reproduces
the same bytes for deterministic subcommands.

Exit codes: 0 success, 1 invalid input, 2 a numerical check failed, 3 I/O.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import warnings
from dataclasses import asdict
from pathlib import Path
from typing import Any, Callable, Sequence

import numpy as np

from . import __version__
from .coeffs import (
    CoefficientError,
    CoefficientSeries,
    WeightKind,
    ceiling_warning,
    deligne_violations,
    generate_delta,
    load_coefficients,
    rankin_estimate,
    write_coefficients,
)
from .expsum import Method, gauss_sum, kloosterman, sa, salie
from .harness import (
    DualParams,
    Mode,
    compute_dual_M,
    distribution_test,
    dual_direct_gap,
    front_factor,
    moment_report,
    restricted_variance,
)
from .modarith import PrimePowerModulus
from .qrprimes import character_prime_sums, parse_z, search_qr_primes
from .saliemoments import MomentTuple, salie_moment_bruteforce, salie_moment_formula
from .svg import emit_histogram
from .voronoi import WindowSpec, WindowTransform, plancherel_check, voronoi_residual

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL, EXIT_IO = 0, 1, 2, 3


class ValidationError(Exception):
    """Bad arguments or an invalid parameter combination."""


class NumericalFailure(Exception):
    """A requested check ran but did not meet its tolerance."""

    def __init__(self, message: str, payload: Any = None):
        super().__init__(message)
        self.payload = payload


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse would exit with status 2
        raise ValidationError(message)


# -- helpers -------------------------------------------------------------------


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc


def _class_sign(name: str) -> int:
    return {"plus": 1, "minus": -1}[name]


def _mode(name: str) -> Mode:
    return Mode.INTEGRAL if name == "integral" else Mode.HALF_INTEGRAL


def _complex(z: complex) -> list[float]:
    return [float(z.real), float(z.imag)]


def _jsonable(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, complex):
        return _complex(obj)
    if isinstance(obj, np.generic):
        return _jsonable(obj.item())
    if isinstance(obj, float) and not math.isfinite(obj):
        return repr(obj)
    return obj


def _delta_for(length: int) -> CoefficientSeries:
    return generate_delta(max(int(length), 2))


def _load_series(spec: str, length: int) -> CoefficientSeries:
    """``delta`` (generated to ``length``) or ``file:<path>``."""
    if spec == "delta":
        return _delta_for(length)
    if spec.startswith("file:"):
        return load_coefficients(spec[5:])
    raise ValidationError(f"unknown coefficient source {spec!r}; use delta or file:<path>")


def _transform_for(series: CoefficientSeries, mode: Mode) -> WindowTransform:
    if mode is Mode.INTEGRAL:
        if series.kind is not WeightKind.INTEGRAL:
            raise ValidationError("integral mode needs an integral-weight series")
        return WindowTransform.integral(series.weight)
    if series.kind is not WeightKind.HALF_INTEGRAL:
        raise ValidationError("half-integral mode needs a half-integral-weight series")
    return WindowTransform.half_integral(series.weight)


def _params(args, transform: WindowTransform | None) -> DualParams:
    mod = PrimePowerModulus(args.p, args.N)
    return DualParams.from_Y(mod, args.Y, _mode(args.mode), eta=args.eta, transform=transform)


def _needed_length(params: DualParams, spec: WindowSpec) -> int:
    return max(math.ceil(spec.hi * params.X) + 1, params.M_max)


# -- commands ------------------------------------------------------------------


def cmd_expsum_eval(args) -> dict:
    """Kloosterman, Salie, Sa (at x = m n) or the Gauss sum G(nu = m, a = n)."""
    mod = PrimePowerModulus.from_q(args.q)
    if args.kind == "kloosterman":
        value = kloosterman(args.m, args.n, mod, args.method)
    elif args.kind == "salie":
        value = salie(args.m, args.n, mod, args.method)
    elif args.kind == "sa":
        value = complex(sa(args.m * args.n, mod))
    else:
        value = gauss_sum(args.m, args.n, mod)
    return {"value": _complex(value), "abs": abs(value)}


def cmd_moments_salie(args) -> dict:
    if len(args.m) != args.nu:
        raise ValidationError(f"--nu {args.nu} does not match {len(args.m)} shifts in --m")
    t = MomentTuple.make(args.q, args.m, _class_sign(args.cls))
    formula = salie_moment_formula(t)
    brute = salie_moment_bruteforce(t, args.threads)
    return {"formula": formula, "bruteforce": brute, "diff": abs(formula - brute)}


def cmd_voronoi_check(args) -> dict:
    mode = _mode(args.mode)
    if mode is Mode.HALF_INTEGRAL:
        if not (args.coeffs.startswith("file:") and args.dual):
            raise ValidationError("half-integral mode needs --coeffs file:<path> and --dual file:<path>")
        series, dual = _load_series(args.coeffs, 0), _load_series(args.dual, 0)
    else:
        series, dual = _load_series(args.coeffs, args.length), None
    tr = _transform_for(series, mode)
    res = voronoi_residual(series, args.q, args.b, args.X, transform=tr, dual=dual)
    out = {"lhs": _complex(res.lhs), "rhs": _complex(res.rhs), "residual": res.residual, "terms": res.terms}
    if res.residual >= args.tol:
        raise NumericalFailure(f"residual {res.residual:.3e} >= {args.tol}", out)
    return out


def cmd_voronoi_plancherel(args) -> dict:
    tr = WindowTransform.integral(args.weight) if args.mode == "integral" else WindowTransform.half_integral(args.weight)
    rec = plancherel_check(tr, x_max=args.x_max)
    out = asdict(rec)
    if rec.gap >= args.tol:
        raise NumericalFailure(f"Plancherel gap {rec.gap:.3e} >= {args.tol}", out)
    return out


def cmd_coeffs_gen_delta(args) -> dict:
    if not args.out:
        raise ValidationError("coeffs gen-delta needs --out <csv path>")
    series = generate_delta(args.X)
    write_coefficients(series, args.out)
    return {"X": args.X, "path": str(args.out), "a": [float(v) for v in series.values[1:6]]}


def cmd_coeffs_check(args) -> dict:
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        series = load_coefficients(args.file)
        exceed = ceiling_warning(series)
    out: dict = {"length": series.length, "metadata": series.metadata(), "ceiling_exceedances": exceed}
    if series.kind is WeightKind.INTEGRAL and series.eigenform and series.normalized:
        viol = deligne_violations(series)
        out["deligne_violations"] = [int(v) for v in viol[:20]]
        out["deligne_violation_count"] = int(len(viol))
    grid = [g for g in (10, 100, 1000, 10_000, 100_000) if g <= series.length]
    if grid:
        est = rankin_estimate(series, grid)
        out["rankin"] = {"grid": list(est.grid), "ratios": list(est.ratios), "c_f": est.c_f}
    out["warnings"] = [str(w.message) for w in caught]
    if out.get("deligne_violation_count"):
        raise NumericalFailure("Deligne bound violated", out)
    return out


def cmd_harness_moments(args) -> dict:
    mode = _mode(args.mode)
    probe = WindowTransform.integral(12) if args.eta is None and args.coeffs == "delta" else None
    if args.coeffs == "delta":
        if mode is not Mode.INTEGRAL:
            raise ValidationError("the generated Delta series is integral weight; use --mode integral")
        params = _params(args, probe)
        series = _load_series("delta", _needed_length(params, probe.spec if probe else WindowSpec.default()))
        dual = None
        tr = probe or _transform_for(series, mode)
    else:
        series = _load_series(args.coeffs, 0)
        dual = _load_series(args.dual, 0) if args.dual else None
        tr = _transform_for(series, mode)
        params = _params(args, tr)
    rep = moment_report(series, params, tr, args.nu, _class_sign(args.cls), dual=dual,
                        delta=args.delta, threads=args.threads)
    return rep.as_dict()


def _dual_values(args):
    tr = WindowTransform.integral(12)
    params = _params(args, tr)
    series = _delta_for(params.M_max)
    M = (front_factor(params, series.weight) * compute_dual_M(series, params, tr, args.threads)).real
    units = np.arange(params.q) % args.p != 0
    V = restricted_variance(series, params, tr, 1)
    return params, M[units], V


def cmd_harness_distribution(args) -> dict:
    if args.mode != "integral":
        raise ValidationError("distribution runs use the generated Delta series (--mode integral)")
    params, values, V = _dual_values(args)
    rec = distribution_test(values, V)
    svg = emit_histogram(values, bins=args.bins, V=None if args.no_overlay else V,
                         title=f"dual values, q = {params.q}, Y = {params.Y:g}")
    if args.svg:
        try:
            Path(args.svg).write_text(svg, encoding="utf-8")
        except OSError as exc:
            raise OSError(f"cannot write {args.svg}: {exc}") from exc
    return {"q": params.q, "M_max": params.M_max, "V_plus": V, "svg": args.svg,
            "record": asdict(rec), "_svg_text": svg}


def cmd_harness_dual_vs_direct(args) -> list[dict]:
    tr = WindowTransform.integral(12)
    rows, plist = [], sorted(args.p_list)
    params_list = [DualParams.from_Y(PrimePowerModulus(p, args.N), args.Y, transform=tr, eta=args.eta)
                   for p in plist]
    need = max(_needed_length(pp, tr.spec) for pp in params_list)
    series = _delta_for(need)
    for p, params in zip(plist, params_list):
        gap = dual_direct_gap(series, params, tr, args.threads)
        rows.append({"p": p, "q": params.q, "X": params.X, "Y": params.Y, "M_max": params.M_max, "gap": gap})
    for a, b in zip(rows, rows[1:]):
        b["decreasing"] = b["gap"] < a["gap"]
    rows[0]["decreasing"] = ""
    return rows


def cmd_qr_search(args) -> list[dict]:
    Z = parse_z(args.Z)
    return [{"p": r.p, "least_nonresidue": r.least_nonresidue} for r in search_qr_primes(args.x, Z)]


def cmd_qr_charsum(args) -> dict:
    return asdict(character_prime_sums(args.q, args.x))


def cmd_verify_all(args) -> dict:
    from .acceptance import AcceptanceContext, run_all

    ctx = AcceptanceContext(seed=args.seed, threads=args.threads)
    results = run_all(ctx, args.only or None)
    for r in results:
        print(r.line(), file=sys.stderr)
    out = {"passed": all(r.passed for r in results), "criteria": [r.as_dict() for r in results]}
    if not out["passed"]:
        raise NumericalFailure("acceptance criteria failed", out)
    return out


# -- parser --------------------------------------------------------------------


def _common() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    g = common.add_argument_group("global options")
    g.add_argument("--threads", type=int, default=1)
    g.add_argument("--format", choices=("json", "csv", "svg"), default=None)
    g.add_argument("--out", default=None, help="write the output here instead of stdout")
    g.add_argument("--seed", type=int, default=20240601)
    return common


def _harness_params(sp: argparse.ArgumentParser, p_required: bool = True) -> None:
    if p_required:
        sp.add_argument("--p", type=int, required=True)
    sp.add_argument("--N", type=int, default=2)
    sp.add_argument("--Y", type=float, default=2.0)
    sp.add_argument("--eta", type=float, default=None, help="M_max = ceil(Y^(1+eta)); automatic if omitted")
    sp.add_argument("--mode", choices=("integral", "half"), default="integral")


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = _Parser(prog="apmoments", description="Moments of modular coefficients in residue classes.")
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("--config", default=None, help="replay the config block of an earlier JSON output")
    top = parser.add_subparsers(dest="group", parser_class=_Parser)

    def leaf(group, name: str, fn: Callable, help_: str) -> argparse.ArgumentParser:
        sp = group.add_parser(name, parents=[common], help=help_)
        sp.set_defaults(fn=fn)
        return sp

    g = top.add_parser("expsum").add_subparsers(dest="cmd", required=True, parser_class=_Parser)
    sp = leaf(g, "eval", cmd_expsum_eval, "evaluate one exponential sum")
    sp.add_argument("--q", type=int, required=True)
    sp.add_argument("--m", type=int, required=True)
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--kind", choices=("kloosterman", "salie", "sa", "gauss"), required=True)
    sp.add_argument("--method", choices=[m.value for m in Method], default=Method.CLOSED_FORM.value)

    g = top.add_parser("moments").add_subparsers(dest="cmd", required=True, parser_class=_Parser)
    sp = leaf(g, "salie", cmd_moments_salie, "class moment of a product of Sa values")
    sp.add_argument("--q", type=int, required=True)
    sp.add_argument("--nu", type=int, required=True)
    sp.add_argument("--m", type=_int_list, required=True)
    sp.add_argument("--class", dest="cls", choices=("plus", "minus"), default="plus")

    g = top.add_parser("voronoi").add_subparsers(dest="cmd", required=True, parser_class=_Parser)
    sp = leaf(g, "check", cmd_voronoi_check, "both sides of the twisted Voronoi formula")
    sp.add_argument("--q", type=int, required=True)
    sp.add_argument("--b", type=int, required=True)
    sp.add_argument("--X", type=float, required=True)
    sp.add_argument("--mode", choices=("integral", "half"), default="integral")
    sp.add_argument("--coeffs", default="delta")
    sp.add_argument("--dual", default=None, help="cusp-0 coefficients (half mode)")
    sp.add_argument("--length", type=int, default=400_000, help="generated Delta length")
    sp.add_argument("--tol", type=float, default=1e-3)
    sp = leaf(g, "plancherel", cmd_voronoi_plancherel, "compare ||w||_2 and ||B||_2")
    sp.add_argument("--weight", type=int, default=12)
    sp.add_argument("--mode", choices=("integral", "half"), default="integral")
    sp.add_argument("--x-max", type=float, default=3000.0)
    sp.add_argument("--tol", type=float, default=1e-4)

    g = top.add_parser("coeffs").add_subparsers(dest="cmd", required=True, parser_class=_Parser)
    sp = leaf(g, "gen-delta", cmd_coeffs_gen_delta, "write normalized Delta coefficients")
    sp.add_argument("--X", type=int, required=True)
    # Here --out names the CSV target; the JSON summary goes to stdout.
    sp.set_defaults(owns_out=True)
    sp = leaf(g, "check", cmd_coeffs_check, "validate a coefficient file")
    sp.add_argument("--file", required=True)

    g = top.add_parser("harness").add_subparsers(dest="cmd", required=True, parser_class=_Parser)
    sp = leaf(g, "moments", cmd_harness_moments, "class moment report")
    _harness_params(sp)
    sp.add_argument("--nu", type=int, required=True)
    sp.add_argument("--class", dest="cls", choices=("plus", "minus"), default="plus")
    sp.add_argument("--coeffs", default="delta")
    sp.add_argument("--dual", default=None)
    sp.add_argument("--delta", type=float, default=0.0)
    sp = leaf(g, "distribution", cmd_harness_distribution, "histogram of dual values")
    _harness_params(sp)
    sp.add_argument("--svg", default=None)
    sp.add_argument("--bins", type=int, default=40)
    sp.add_argument("--no-overlay", action="store_true")
    sp = leaf(g, "dual-vs-direct", cmd_harness_dual_vs_direct, "trend of max |E - i^k M|")
    _harness_params(sp, p_required=False)
    sp.add_argument("--p-list", type=_int_list, default=[11, 31, 47])

    g = top.add_parser("qr-primes").add_subparsers(dest="cmd", required=True, parser_class=_Parser)
    sp = leaf(g, "search", cmd_qr_search, "primes with a large least non-residue")
    sp.add_argument("--x", type=int, required=True)
    sp.add_argument("--Z", default="const:2")
    sp = leaf(g, "charsum", cmd_qr_charsum, "prime sums of a quadratic character")
    sp.add_argument("--q", type=int, required=True)
    sp.add_argument("--x", type=int, required=True)

    sp = top.add_parser("verify-all", parents=[common], help="run the acceptance battery")
    sp.set_defaults(fn=cmd_verify_all, cmd=None)
    sp.add_argument("--only", type=_int_list, default=[])
    return parser


# -- config echo -----------------------------------------------------------------

_SKIP = {"fn", "group", "cmd", "config", "out", "format", "owns_out"}


def _option_strings(parser: argparse.ArgumentParser, argv: Sequence[str]) -> dict[str, str]:
    """dest -> long option string for the leaf parser selected by argv."""
    sub = parser
    for tok in argv:
        actions = [a for a in sub._actions if isinstance(a, argparse._SubParsersAction)]
        if not actions or tok not in actions[0].choices:
            break
        sub = actions[0].choices[tok]
    return {a.dest: a.option_strings[-1] for a in sub._actions if a.option_strings}


def resolved_config(parser: argparse.ArgumentParser, args: argparse.Namespace) -> dict:
    command = [args.group] + ([args.cmd] if args.cmd else [])
    opts = _option_strings(parser, command)
    skip = _SKIP - {"out"} if getattr(args, "owns_out", False) else _SKIP
    options = {k: v for k, v in sorted(vars(args).items()) if k not in skip}
    argv = list(command)
    for dest, value in options.items():
        flag = opts[dest]
        if value is None or value is False:
            continue
        if value is True:
            argv.append(flag)
        elif isinstance(value, list):
            argv += [flag, ",".join(map(str, value))]
        else:
            argv += [flag, str(value)]
    return {"command": command, "options": options, "argv": argv}


def _argv_from_config(path: str) -> list[str]:
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    cfg = doc.get("config", doc)
    if "argv" not in cfg:
        raise ValidationError(f"{path} holds no config block")
    return list(cfg["argv"])


# -- output ----------------------------------------------------------------------


def _render(result: Any, fmt: str, config: dict) -> str:
    if fmt == "json":
        if isinstance(result, dict):
            result = {k: v for k, v in result.items() if not k.startswith("_")}
        doc = {"config": config, "result": _jsonable(result)}
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"
    if fmt == "csv":
        if not isinstance(result, list):
            raise ValidationError("csv output is only available for tabular commands")
        buf = io.StringIO()
        fields = list(result[0]) if result else ["empty"]
        w = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
        w.writeheader()
        w.writerows(result)
        return buf.getvalue()
    if fmt == "svg":
        if not (isinstance(result, dict) and "_svg_text" in result):
            raise ValidationError("svg output is only available for harness distribution")
        return result["_svg_text"]
    raise ValidationError(f"unknown format {fmt}")


def _natural_format(result: Any) -> str:
    return "csv" if isinstance(result, list) else "json"


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    out_path = None
    try:
        args = parser.parse_args(argv)
        if args.config:
            replay = _argv_from_config(args.config)
            extra = [a for a in argv if a not in ("--config", args.config)]
            args = parser.parse_args(replay + extra)
        if not getattr(args, "fn", None):
            parser.print_help(sys.stderr)
            return EXIT_VALIDATION
        if args.threads < 1:
            raise ValidationError("--threads must be >= 1")
        out_path = None if getattr(args, "owns_out", False) else args.out
        config = resolved_config(parser, args)
        status = EXIT_OK
        try:
            result = args.fn(args)
        except NumericalFailure as exc:
            print(f"numerical check failed: {exc}", file=sys.stderr)
            result, status = exc.payload, EXIT_NUMERICAL
            if result is None:
                return status
        fmt = args.format or _natural_format(result)
        _emit(_render(result, fmt, config), out_path)
        return status
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (CoefficientError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (ArithmeticError, MemoryError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


def run() -> None:
    sys.exit(main())

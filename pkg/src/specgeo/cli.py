"""Command-line front end.

Exit codes: 0 success, 1 usage or input error, 2 computed but outside the
requested tolerance (or a numerical contract could not be met).
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import warnings
from fractions import Fraction
from typing import Any, Sequence

import mpmath
import numpy as np

from . import __version__
from .report import ReportError, metadata, to_csv, to_json, write_text


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


# ---------------------------------------------------------------------------
# argument helpers


def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _float_list(text: str) -> list[float]:
    try:
        vals = [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")
    if not vals:
        raise argparse.ArgumentTypeError("empty list")
    return vals


def _complex(text: str) -> complex:
    try:
        return complex(text.replace(" ", ""))
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}")


def _positive_float(text: str) -> float:
    try:
        x = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}")
    if not x > 0:
        raise argparse.ArgumentTypeError(f"must be positive: {text!r}")
    return x


def _load_json(path: str) -> Any:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def _num(z: complex) -> float | complex:
    z = complex(z)
    return z.real if z.imag == 0 else z


# ---------------------------------------------------------------------------
# subcommands; each returns (report text, within tolerance)


def _emit(args, config: dict, tolerances: dict, result: Any, table: tuple | None = None) -> str:
    meta = metadata(args.command if not getattr(args, "mode", None) else f"{args.command} {args.mode}", config, tolerances)
    fmt = args.format or ("csv" if table is not None else "json")
    if fmt == "csv":
        if table is None:
            raise UsageError(f"--format csv is not available for '{args.command}'")
        columns, rows = table
        return to_csv(meta, columns, rows, summary=result if isinstance(result, dict) else None)
    out = dict(result) if isinstance(result, dict) else {"value": result}
    if table is not None and "table" not in out:
        columns, rows = table
        out["table"] = [dict(zip(columns, r)) for r in rows]
    return to_json(meta, out)


def cmd_shells(args) -> tuple[str, bool]:
    from .lattice import enumerate_shells

    spec = enumerate_shells(args.dim, args.max, dirac=args.dirac)
    rows = [(int(m), int(c)) for m, c in zip(spec.norm_sq, spec.multiplicity)]
    config = {"dim": args.dim, "max": args.max, "dirac": args.dirac}
    summary = {"spinor_rank": spec.spinor_rank, "shell_count": len(spec)}
    return _emit(args, config, {}, summary, (["norm_sq", "count"], rows)), True


def cmd_zeta(args) -> tuple[str, bool]:
    from .zeta import epstein_zeta, poly_zeta, twisted_zeta_1d

    if args.epstein is not None:
        n, s = int(args.epstein[0].real), args.epstein[1]
        if args.epstein[0] != n:
            raise UsageError("--epstein: dimension must be an integer")
        val = epstein_zeta(n, s)
        config = {"function": "epstein", "n": n, "s": _num(s)}
    elif args.poly is not None:
        n_text, p_text, s_text = args.poly
        try:
            n, p, s = int(n_text), _int_list(p_text), _complex(s_text)
        except (ValueError, argparse.ArgumentTypeError) as exc:
            raise UsageError(f"--poly: {exc}")
        val = poly_zeta(n, p, s)
        config = {"function": "poly", "n": n, "p": p, "s": _num(s)}
    else:
        a, s = args.twisted
        val = twisted_zeta_1d(a.real, s)
        config = {"function": "twisted", "a": a.real, "s": _num(s)}
    d = val.to_dict()
    result = {
        "finite_part": _num(d["finite_part"]),
        "pole_order": d["pole_order"],
        "residue": _num(d["residue"]),
    }
    return _emit(args, config, {"working_digits": 30}, result), True


_NAMED = {
    "phi": lambda: (1 + mpmath.sqrt(5)) / 2,
    "golden": lambda: (1 + mpmath.sqrt(5)) / 2,
    "e": lambda: mpmath.e,
    "pi": lambda: mpmath.pi,
}


def parse_real(text: str):
    """Exact rational 'p/q', named constant, 'sqrt(N)', 'liouvilleK', or a decimal (float precision)."""
    from .diophantine import liouville_partial_sum

    t = text.strip().lower()
    with mpmath.workdps(60):
        if t in _NAMED:
            return _NAMED[t]()
        if t.startswith("sqrt(") and t.endswith(")"):
            return mpmath.sqrt(int(t[5:-1]))
        if t.startswith("liouville"):
            return liouville_partial_sum(int(t[len("liouville"):]))
    if "/" in t:
        return Fraction(t)
    return float(t)


def cmd_dioph(args) -> tuple[str, bool]:
    from .diophantine import (
        PrecisionLossError,
        RationalInputError,
        approx_exponent,
        as_approximand,
        cf_expand,
        matrix_badly_approximable,
    )

    if args.matrix is not None:
        data = _load_json(args.matrix)
        theta = data["theta"] if isinstance(data, dict) else data
        arr = np.asarray(theta, dtype=float)
        if arr.ndim == 1:
            n = int(round(math.sqrt(arr.size)))
            if n * n != arr.size:
                raise UsageError("--matrix: row-major theta must have a square number of entries")
            arr = arr.reshape(n, n)
        v = matrix_badly_approximable(arr, depth=args.depth, tol=args.tol)
        config = {"matrix": arr.tolist(), "depth": args.depth}
        return _emit(args, config, {"exponent_excess": args.tol}, v.to_dict()), True

    try:
        x = parse_real(args.value)
    except (ValueError, ZeroDivisionError) as exc:
        raise UsageError(f"--value: cannot parse {args.value!r} ({exc})")
    with mpmath.workdps(60):
        ax = as_approximand(x)
    depth = min(args.depth, 60)
    cf = cf_expand(ax, depth)
    result: dict = {
        "partial_quotients": list(cf.partial_quotients),
        "convergents": [[p, q] for p, q in cf.convergents],
        "terminated": cf.terminated,
        "trusted_terms": cf.trusted_count,
    }
    ok = True
    try:
        result["exponent"] = approx_exponent(ax, depth)
        result["status"] = "irrational"
    except RationalInputError:
        result["exponent"] = None
        result["status"] = "rational"
    except PrecisionLossError as exc:
        result["exponent"] = None
        result["status"] = f"precision_loss: {exc}"
        ok = False
    config = {"value": args.value, "depth": depth}
    return _emit(args, config, {"relative_precision": float(ax.eps / abs(ax.value)) if ax.value else 0.0}, result), ok


def cmd_heat(args) -> tuple[str, bool]:
    from .heat import IllConditionedWindowWarning, LaplaceTypeData, fit_heat_coefficients, seeley_dewitt

    if args.fit is not None:
        if args.dim is None:
            raise UsageError("--fit requires --dim")
        samples = []
        with open(args.fit, encoding="utf-8", newline="") as fh:
            for row in csv.reader(fh):
                if not row or row[0].lstrip().startswith("#"):
                    continue
                try:
                    samples.append((float(row[0]), float(row[1])))
                except (ValueError, IndexError):
                    if samples:
                        raise UsageError(f"--fit: malformed row {row!r}")
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            hc = fit_heat_coefficients(samples, args.dim, args.k_max)
        ill = any(issubclass(w.category, IllConditionedWindowWarning) for w in caught)
        result = hc.to_dict()
        result["ill_conditioned"] = ill
        config = {"fit": args.fit, "dim": args.dim, "k_max": args.k_max, "samples": len(samples)}
        return _emit(args, config, {"condition_limit": 1e12}, result), not ill

    cfg = _load_json(args.sdw)
    d = int(cfg["dimension"])
    r = int(cfg.get("rank", 1))
    B = np.asarray(cfg.get("B", np.zeros((r, r))), dtype=complex)
    r = B.shape[0]
    data = LaplaceTypeData(
        d,
        np.asarray(cfg.get("metric_inverse", np.eye(d)), dtype=float),
        np.asarray(cfg.get("A", np.zeros((d, r, r))), dtype=complex),
        B,
        float(cfg.get("coord_volume", (2 * math.pi) ** d)),
    )
    hc = seeley_dewitt(data, float(cfg.get("smear", 1.0)))
    return _emit(args, {"sdw": args.sdw, "dimension": d, "rank": r}, {}, hc.to_dict()), True


def cmd_wres(args) -> tuple[str, bool]:
    from .wodzicki import laplacian_symbol, monomial_symbol, sphere_rule, tabulated_wres, wres

    if args.nodes is not None:
        if args.dim is None:
            raise UsageError("--nodes requires --dim")
        pts, w = sphere_rule(args.dim, args.nodes)
        cols = [f"xi{i}" for i in range(args.dim)] + ["weight"]
        rows = [tuple(p) + (wt,) for p, wt in zip(pts.tolist(), w.tolist())]
        return _emit(args, {"dim": args.dim, "nodes": args.nodes}, {}, {"count": len(rows)}, (cols, rows)), True
    if args.input is not None:
        data = _load_json(args.input)
        d = int(data["dimension"])
        vals = [complex(v["re"], v.get("im", 0.0)) if isinstance(v, dict) else complex(v) for v in data["values"]]
        val = tabulated_wres(d, int(data["order"]), vals, float(data.get("volume", 1.0)))
        return _emit(args, {"input": args.input, "dimension": d}, {}, {"wres": _num(val)}), True
    if args.dim is None:
        raise UsageError("--symbol requires --dim")
    if args.symbol == "laplacian":
        sym = laplacian_symbol(args.dim, args.rank)
    else:
        if args.p is None:
            raise UsageError("--symbol monomial requires --p")
        sym = monomial_symbol(args.dim, args.p)
    val = wres(sym)
    config = {"symbol": args.symbol, "dim": args.dim, "rank": args.rank, "p": args.p}
    result = {"wres": _num(val), "dixmier_trace": _num(val / args.dim)}
    return _emit(args, config, {"sphere_refinement": 1e-10, "homogeneity": 1e-10}, result), True


def cmd_dixmier(args) -> tuple[str, bool]:
    from .dixmier import InsufficientNWarning, dixmier_estimate

    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        est = dixmier_estimate(args.dim, args.N, args.ladder)
    for w in caught:
        if issubclass(w.category, InsufficientNWarning):
            print(f"warning: {w.message}", file=sys.stderr)
    target = est.zeta_residue
    rel = abs(est.cesaro_extrapolated - target) / target
    summary = {
        "cesaro_raw": est.cesaro_raw,
        "cesaro_extrapolated": est.cesaro_extrapolated,
        "uncertainty": est.uncertainty,
        "zeta_residue": target,
        "relative_deviation": rel,
        "within_tolerance": rel <= args.tol,
    }
    rows = [(n, s, v) for n, s, v in est.table]
    config = {"dim": args.dim, "N": args.N, "ladder": [r[0] for r in rows]}
    text = _emit(args, config, {"relative": args.tol}, summary, (["N", "sigma_N", "sigma_over_log_N"], rows))
    return text, rel <= args.tol


def cmd_action(args) -> tuple[str, bool]:
    from .action import CutoffFunction, expansion_vs_direct
    from .lattice import enumerate_shells, shells_for_tolerance

    f = CutoffFunction.sharp() if args.cutoff == "sharp" else CutoffFunction.exponential()
    dirac = not args.scalar
    lmax = max(args.lambda_ladder)
    if args.cutoff == "sharp":
        spec = enumerate_shells(args.dim, math.ceil(lmax * lmax) + 1, dirac=dirac)
    else:
        spec = shells_for_tolerance(args.dim, 1.0 / lmax**2, dirac=dirac)
    rows_obj = expansion_vs_direct(spec, f, args.lambda_ladder)
    cols = ["Lambda", "direct", "expansion", "gap", "rel_gap", "gap_over_leading", "averaged_gap_over_leading"]
    rows = [tuple(r.to_dict()[c] for c in cols) for r in rows_obj]
    config = {"dim": args.dim, "cutoff": args.cutoff, "lambda_ladder": args.lambda_ladder, "dirac": dirac}
    return _emit(args, config, {"heat_tail": 1e-13}, {"rows": len(rows)}, (cols, rows)), True


def cmd_nctorus(args) -> tuple[str, bool]:
    from .action import CutoffFunction
    from .nctorus import (
        load_one_form,
        nc_integral_powers,
        spectral_action_nc,
        two_path_check,
        yang_mills_density,
        zeta_DA_zero,
    )

    A = load_one_form(args.input)
    config = {"input": args.input, "n": A.n}
    if args.mode == "ym":
        ints = nc_integral_powers(A)
        result = {"yang_mills_density": yang_mills_density(A), "zeta_DA_zero": zeta_DA_zero(A), **ints.to_dict()}
        result["kernel_assumption"] = "Ker D_A = Ker D"
        return _emit(args, config, {}, result), True
    if args.mode == "check":
        res = two_path_check(A)
        ok = res.scaled_residual <= args.tol
        result = {**res.to_dict(), "within_tolerance": ok}
        return _emit(args, config, {"scaled_residual": args.tol}, result), ok
    f = CutoffFunction.sharp() if args.cutoff == "sharp" else CutoffFunction.exponential()
    terms = spectral_action_nc(A.n, A, f, args.Lambda, keep_zero=args.keep_zero)
    cols = ["power", "coefficient", "value", "label"]
    rows = [(t.power, t.coefficient, t.value, t.label) for t in terms]
    config.update({"cutoff": args.cutoff, "Lambda": args.Lambda})
    return _emit(args, config, {}, {"terms": len(rows)}, (cols, rows)), True


def _moyal_matrix(data, N: int, theta: float, K: int):
    from .moyal import MoyalMatrix

    size = (K + 1) ** N
    mat = np.zeros((size, size), dtype=complex)
    if isinstance(data, dict) and "entries" in data:
        for e in data["entries"]:
            mat[int(e["m"]), int(e["n"])] += complex(float(e.get("re", 0.0)), float(e.get("im", 0.0)))
    else:
        rows = data["coeffs"] if isinstance(data, dict) else data
        arr = np.array(
            [[complex(v["re"], v.get("im", 0.0)) if isinstance(v, dict) else complex(v) for v in row] for row in rows]
        )
        if arr.shape[0] > size or arr.shape[1] > size:
            raise UsageError(f"coefficients exceed the cutoff K={K}")
        mat[: arr.shape[0], : arr.shape[1]] = arr
    return MoyalMatrix(N, theta, K, mat)


def _mat_out(m) -> list:
    return [[_num(z) for z in row] for row in m.coeffs.tolist()]


def cmd_moyal(args) -> tuple[str, bool]:
    from .moyal import left_mult_norm_bound, moyal_dixmier, star

    data = _load_json(args.input)
    N = int(data.get("N", 1)) if isinstance(data, dict) else 1
    config = {"theta": args.theta, "cutoff": args.cutoff, "N": N, "input": args.input}
    if args.mode == "star":
        f = _moyal_matrix(data["f"], N, args.theta, args.cutoff)
        g = _moyal_matrix(data["g"], N, args.theta, args.cutoff)
        return _emit(args, config, {}, {"product": _mat_out(star(f, g))}), True
    f = _moyal_matrix(data["f"] if "f" in data else data, N, args.theta, args.cutoff)
    if args.mode == "dixmier":
        limit, expected = moyal_dixmier(f, args.epsilon)
        ok = abs(limit - expected) <= args.tol * abs(expected)
        result = {"limit": limit, "integral_formula": expected, "difference": limit - expected, "within_tolerance": ok}
        config["epsilon"] = args.epsilon
        return _emit(args, config, {"relative": args.tol}, result), ok
    op, bound = left_mult_norm_bound(f)
    ok = op <= bound * (1 + 1e-12)
    result = {"operator_norm": op, "hs_bound": bound, "l2_norm": f.l2_norm(), "bound_holds": ok}
    return _emit(args, config, {"relative_slack": 1e-12}, result), ok


# ---------------------------------------------------------------------------
# parser


_SUBCOMMANDS = {
    "shells": "lattice shells of Z^n: eigenvalue multiplicities of the flat-torus Laplacian or Dirac operator",
    "zeta": "Epstein, polynomial-weighted and twisted lattice zeta functions (finite part, pole order, residue)",
    "dioph": "continued fractions, approximation exponents and the badly-approximable test for theta/2pi",
    "heat": "Seeley-DeWitt heat coefficients of Laplace-type operators and least-squares fits of heat traces",
    "wres": "Wodzicki residue of an order -d symbol by sphere quadrature",
    "dixmier": "Dixmier trace of |D|^-d on the torus: Cesaro means, extrapolation and the zeta residue",
    "action": "spectral action Tr f(D^2/Lambda^2): direct sums against the heat-coefficient expansion",
    "nctorus": "noncommutative torus gauge terms: action list, Yang-Mills density, zeta(0) identity",
    "moyal": "Moyal plane in the oscillator basis: star products, operator-norm bound, Dixmier limit",
}


def build_parser() -> argparse.ArgumentParser:
    epilog = "subcommands:\n" + "\n".join(f"  {k:<9} {v}" for k, v in _SUBCOMMANDS.items())
    epilog += "\n\nexit codes: 0 ok, 1 usage error, 2 result outside tolerance\nenvironment: SPECGEO_THREADS caps worker threads"
    p = _Parser(
        prog="specgeo",
        description="Numerical toolkit for spectral geometry on tori and the Moyal plane.",
        epilog=epilog,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    p.add_argument("--version", action="version", version=f"specgeo {__version__}")
    sub = p.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    p.set_defaults(_subparsers=sub)
    sub.required = True

    def add(name: str) -> argparse.ArgumentParser:
        sp = sub.add_parser(name, help=_SUBCOMMANDS[name], description=_SUBCOMMANDS[name])
        sp.add_argument("--format", choices=("json", "csv"), help="output format (default depends on the command)")
        sp.add_argument("--output", help="write to this path instead of stdout")
        return sp

    sp = add("shells")
    sp.add_argument("--dim", type=int, required=True)
    sp.add_argument("--max", type=int, required=True, help="largest |k|^2")
    sp.add_argument("--dirac", action="store_true", help="include the spinor multiplicity 2^floor(n/2)")

    sp = add("zeta")
    g = sp.add_mutually_exclusive_group(required=True)
    g.add_argument("--epstein", nargs=2, type=_complex, metavar=("N", "S"))
    g.add_argument("--poly", nargs=3, metavar=("N", "P", "S"), help="P is comma-separated, e.g. 2,0")
    g.add_argument("--twisted", nargs=2, type=_complex, metavar=("A", "S"))

    sp = add("dioph")
    g = sp.add_mutually_exclusive_group(required=True)
    g.add_argument("--value", help="p/q, phi, e, pi, sqrt(N), liouvilleK or a decimal")
    g.add_argument("--matrix", help="JSON file with theta (row-major); tested on theta/2pi")
    sp.add_argument("--depth", type=int, default=40, help="continued-fraction depth, or search radius for --matrix")
    sp.add_argument("--tol", type=float, default=0.25, help="allowed exponent excess over 1 (default 0.25)")

    sp = add("heat")
    g = sp.add_mutually_exclusive_group(required=True)
    g.add_argument("--fit", help="CSV of t,trace samples")
    g.add_argument("--sdw", help="JSON with dimension, metric_inverse, A, B, coord_volume, smear")
    sp.add_argument("--dim", type=int)
    sp.add_argument("--k-max", type=int, default=12, dest="k_max")

    sp = add("wres")
    g = sp.add_mutually_exclusive_group(required=True)
    g.add_argument("--symbol", choices=("laplacian", "monomial"))
    g.add_argument("--input", help="JSON {dimension, order, values, volume} tabulated on the sphere nodes")
    g.add_argument("--nodes", type=int, metavar="ORDER", help="emit the sphere nodes of this order")
    sp.add_argument("--dim", type=int)
    sp.add_argument("--rank", type=int, default=1)
    sp.add_argument("--p", type=_int_list, help="monomial exponent, e.g. 2,0")

    sp = add("dixmier")
    sp.add_argument("--dim", type=int, required=True, choices=(2, 4))
    sp.add_argument("--N", type=int, required=True)
    sp.add_argument("--ladder", type=_int_list, help="extrapolation points (default N/1000..N)")
    sp.add_argument("--tol", type=float, default=0.01, help="relative tolerance of the extrapolation (default 0.01)")

    sp = add("action")
    sp.add_argument("--dim", type=int, required=True)
    sp.add_argument("--cutoff", choices=("sharp", "exp"), required=True)
    sp.add_argument("--lambda-ladder", type=_float_list, required=True, dest="lambda_ladder")
    sp.add_argument("--scalar", action="store_true", help="use the Laplacian instead of the Dirac operator")

    sp = add("nctorus")
    sp.add_argument("mode", choices=("action", "ym", "check"))
    sp.add_argument("--input", required=True, help="JSON one-form {n, theta, components}")
    sp.add_argument("--cutoff", choices=("sharp", "exp"), default="exp")
    sp.add_argument("--lambda", type=_positive_float, default=1.0, dest="Lambda")
    sp.add_argument("--keep-zero", action="store_true", dest="keep_zero")
    sp.add_argument("--tol", type=float, default=1e-10)

    sp = add("moyal")
    sp.add_argument("mode", choices=("star", "dixmier", "norms"))
    sp.add_argument("--theta", type=_positive_float, required=True)
    sp.add_argument("--cutoff", type=int, required=True, help="oscillator cutoff K")
    sp.add_argument("--input", required=True, help="JSON coefficients {N, f, g} or {N, coeffs}")
    sp.add_argument("--epsilon", type=_positive_float, default=1.0)
    sp.add_argument("--tol", type=float, default=1e-4)
    return p


_HANDLERS = {
    "shells": cmd_shells,
    "zeta": cmd_zeta,
    "dioph": cmd_dioph,
    "heat": cmd_heat,
    "wres": cmd_wres,
    "dixmier": cmd_dixmier,
    "action": cmd_action,
    "nctorus": cmd_nctorus,
    "moyal": cmd_moyal,
}


def _unknown_flags(parser: argparse.ArgumentParser, argv: Sequence[str]) -> list[str]:
    """Flags not accepted by the chosen subcommand, found before argparse reports other errors."""
    sub = parser.get_default("_subparsers")
    cmd = next((a for a in argv if not a.startswith("-")), None)
    if sub is None or cmd not in sub.choices:
        return []
    known = set(sub.choices[cmd]._option_string_actions)
    flags = [a.split("=", 1)[0] for a in argv if a.startswith("--")]
    return [f for f in flags if f not in known]


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    bad = _unknown_flags(parser, argv)
    if bad:
        print(f"specgeo: error: unrecognized arguments: {' '.join(bad)}", file=sys.stderr)
        return 1
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        text, ok = _HANDLERS[args.command](args)
    except UsageError as exc:
        print(f"specgeo {args.command}: error: {exc}", file=sys.stderr)
        return 1
    except (OSError, json.JSONDecodeError, KeyError) as exc:
        print(f"specgeo {args.command}: error: {exc!r}" if isinstance(exc, KeyError) else f"specgeo {args.command}: error: {exc}", file=sys.stderr)
        return 1
    except ReportError as exc:
        print(f"specgeo {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except ArithmeticError as exc:
        print(f"specgeo {args.command}: contract violation: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"specgeo {args.command}: error: {exc}", file=sys.stderr)
        return 1
    try:
        write_text(text, args.output)
    except OSError as exc:
        print(f"specgeo: error: {exc}", file=sys.stderr)
        return 1
    return 0 if ok else 2


if __name__ == "__main__":
    sys.exit(main())

"""setdiff: batch experiment runner emitting exact JSON reports.

Every subcommand writes a single JSON document (stdout, or --out) with the
envelope {tool, version, config, seed, report}.  Rationals appear as
"num/den" strings throughout so reports stay exact, and serialization sorts
keys, making repeated runs byte-identical for a fixed config.

Exit codes: 0 success, 2 usage, 3 malformed input file, 4 domain error,
5 internal contract violation.
"""

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict
from fractions import Fraction

from . import __version__
from .covering import (
    demo_average_density,
    demo_framework_report,
    guarantee_threshold,
    scan_for_dense_cell,
)
from .errors import ContractViolationError, FormatError, ShapeMismatchError
from .extremal import DEFAULT_VERTEX_CAP, max_avoiding_family
from .fpforms import distribution, forms_from_text
from .increment import DEFAULT_FORM_BUDGET, quasirandomize
from .patterns import CliqueDifference, PolynomialDifference, PowerDifference
from .reductions import (
    beta_bijection,
    beta_inverse,
    bundles_from_text,
    bundles_to_text,
    clique_square_correspondence,
    multiplex,
)
from .universe import (
    Family,
    UniverseShape,
    embed_lower_degree,
    family_from_text,
    family_to_text,
    mask_to_hex,
)


def _frac(q) -> str:
    q = Fraction(q)
    return f"{q.numerator}/{q.denominator}"


def _read(path: str) -> str:
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise FormatError(f"cannot read {path}: {exc}") from exc


def _jsonable(value):
    if isinstance(value, Fraction):
        return _frac(value)
    if isinstance(value, (tuple, list)):
        return [_jsonable(v) for v in value]
    return value


def _config(args) -> dict:
    skip = {"func", "parser", "out"}
    return {
        key: _jsonable(value)
        for key, value in vars(args).items()
        if key not in skip
    }


def _emit(args, report: dict) -> None:
    doc = {
        "tool": "setdiff",
        "version": __version__,
        "config": _config(args),
        "seed": getattr(args, "seed", None),
        "report": report,
    }
    text = json.dumps(doc, sort_keys=True, indent=2) + "\n"
    if getattr(args, "out", None):
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _parallel_map(fn, items, threads: int) -> list:
    """Order-preserving map; results do not depend on the thread count."""
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _family_json(fam: Family) -> dict:
    return {
        "shape": {"degrees": list(fam.shape.degrees), "n": fam.shape.n},
        "size": len(fam),
        "members": [mask_to_hex(b, fam.shape.cells) for b in sorted(fam.members)],
    }


# ---------------------------------------------------------------------------
# subcommands


def cmd_scan(args) -> None:
    fam = family_from_text(_read(args.family))
    pattern_family = family_from_text(_read(args.pattern_family))
    if (args.epsilon is None) != (args.delta is None):
        raise ValueError("the scan guarantee needs both --epsilon and --delta")
    threshold = None
    if args.epsilon is not None:
        if not 0 < args.epsilon < args.delta:
            raise ValueError(
                f"need 0 < epsilon < delta, got epsilon={args.epsilon} "
                f"delta={args.delta}")
        threshold = guarantee_threshold(args.m, fam.shape.degrees, args.epsilon)
    cell, best, average = scan_for_dense_cell(fam, args.m, pattern_family)
    report = {
        "shape": {"degrees": list(fam.shape.degrees), "n": fam.shape.n},
        "family_size": len(fam),
        "family_density": _frac(fam.density()),
        "cell": {
            "window": list(cell.window.elements),
            "background": cell.background.to_hex(),
        },
        "max_density": _frac(best),
        "average_density": _frac(average),
        "guarantee_met": None,
    }
    if threshold is not None:
        report["guarantee_threshold"] = _frac(threshold)
        report["guarantee_met"] = bool(
            fam.density() >= args.delta and fam.shape.n >= threshold)
    _emit(args, report)


def cmd_phidist(args) -> None:
    forms = forms_from_text(_read(args.forms))

    def table(form):
        subject = form.induced(args.degree) if args.degree > 1 else form
        return distribution(subject, mode=args.mode, samples=args.samples,
                            seed=args.seed)

    tables = _parallel_map(table, forms, args.threads)
    report = {
        "degree": args.degree,
        "tables": [
            {"form": {"p": f.p, "coeffs": list(f.coeffs)}, **t.to_json()}
            for f, t in zip(forms, tables)
        ],
    }
    _emit(args, report)


def cmd_quasirandomize(args) -> None:
    fam = family_from_text(_read(args.family))
    if args.eta <= 0:
        raise ValueError("eta must be positive")
    if args.pool == "exhaustive":
        total = args.p ** fam.shape.n
        if total > DEFAULT_FORM_BUDGET:
            raise ValueError(
                f"exhaustive pool of {args.p}^{fam.shape.n} forms exceeds "
                f"the budget {DEFAULT_FORM_BUDGET}")
        budget = total
    else:
        budget = 0  # force the weight-<=2 pool
    extra = ()
    if args.pool == "file":
        if not args.forms:
            args.parser.error("--pool file requires --forms")
        extra = tuple(forms_from_text(_read(args.forms)))
    schedule = tuple(args.m) if args.m else None
    final, trace, pair = quasirandomize(
        fam, args.p, args.eta, m_schedule=schedule, search_budget=budget,
        extra_forms=extra, max_steps=args.max_steps)
    report = trace.to_json()
    report["pattern_pair"] = None if pair is None else {
        "A": pair[0].to_hex(),
        "B": pair[1].to_hex(),
        "witness": pair[2].to_json(),
    }
    report["final_family"] = _family_json(final)
    _emit(args, report)


def cmd_extremal(args) -> None:
    degrees = tuple(args.d)
    shape = UniverseShape(degrees, args.n)
    if args.pattern == "clique":
        spec = CliqueDifference(degrees)
    elif len(degrees) == 1:
        spec = PowerDifference(degree=degrees[0])
    else:
        spec = PolynomialDifference(degrees)
    record = max_avoiding_family(
        shape, spec, method=args.method, vertex_cap=args.vertex_cap,
        time_limit=args.time_limit)
    _emit(args, record.to_json())


def cmd_verify_framework(args) -> None:
    _emit(args, asdict(demo_framework_report(args.n)))


def cmd_demo_interval(args) -> None:
    fam = family_from_text(_read(args.family))
    if fam.shape.degrees != (1,) or fam.shape.n != args.n:
        raise ShapeMismatchError(
            f"family lives on degrees={fam.shape.degrees} n={fam.shape.n}, "
            f"but the demo needs degrees=(1,) n={args.n}")
    average = demo_average_density(args.n, fam.members)
    report = {
        "n": args.n,
        "family_size": len(fam),
        "average_density": _frac(average),
    }
    _emit(args, report)


def cmd_reduce(args) -> None:
    mode = args.mode
    if mode in ("beta", "multiplex", "embed") and not args.family:
        args.parser.error(f"--mode {mode} requires --family")
    if mode in ("beta-inverse", "clique") and not args.bundles:
        args.parser.error(f"--mode {mode} requires --bundles")

    if mode == "beta":
        fam = family_from_text(_read(args.family))
        bundles = [beta_bijection(mask) for mask in fam.masks()]
        report = {
            "mode": mode,
            "count": len(bundles),
            "bundles_text": bundles_to_text(bundles),
        }
    elif mode == "beta-inverse":
        bundles = bundles_from_text(_read(args.bundles))
        fam = Family.from_masks(beta_inverse(b) for b in bundles)
        report = {
            "mode": mode,
            "count": len(fam),
            "family_text": family_to_text(fam),
        }
    elif mode == "multiplex":
        if args.s is None:
            args.parser.error("--mode multiplex requires --s")
        fam = multiplex(family_from_text(_read(args.family)), args.s)
        report = {
            "mode": mode,
            "count": len(fam),
            "family_text": family_to_text(fam),
        }
    elif mode == "embed":
        if not args.degrees:
            args.parser.error("--mode embed requires --degrees")
        fam = family_from_text(_read(args.family))
        target = tuple(args.degrees)
        images = [embed_lower_degree(mask, target) for mask in fam.masks()]
        if images:
            out = Family.from_masks(images)
        else:
            out = Family(UniverseShape(target, fam.shape.n), frozenset())
        report = {
            "mode": mode,
            "count": len(out),
            "family_text": family_to_text(out),
        }
    else:  # clique
        bundles = bundles_from_text(_read(args.bundles))
        bad = [b for b in bundles if b.degrees != (2,)]
        if bad:
            raise ValueError(
                f"--mode clique needs graphs (degrees=2), got {bad[0].degrees}")
        fam = clique_square_correspondence(
            [b.parts[0] for b in bundles], bundles[0].n, loopful=args.loopful)
        report = {
            "mode": mode,
            "count": len(fam),
            "family_text": family_to_text(fam),
        }
    _emit(args, report)


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="setdiff",
        description="Exact scans, form distributions, quasirandomization, "
                    "reductions and extremal searches over finite power sets.")
    parser.add_argument("--version", action="version",
                        version=f"setdiff {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", metavar="PATH",
                        help="write the JSON report here instead of stdout")
    common.add_argument("--threads", type=int, default=None,
                        help="worker threads (default: $SETDIFF_THREADS or 1)")
    sub = parser.add_subparsers(dest="subcommand", required=True,
                                metavar="subcommand")

    p = sub.add_parser("scan", parents=[common],
                       help="max-density covering cell of a family file")
    p.add_argument("--family", required=True, metavar="FILE")
    p.add_argument("--m", required=True, type=int)
    p.add_argument("--pattern-family", required=True, metavar="FILE",
                   help="family file over the window shape [m]")
    p.add_argument("--epsilon", type=Fraction)
    p.add_argument("--delta", type=Fraction)
    p.set_defaults(func=cmd_scan, parser=p)

    p = sub.add_parser("phidist", parents=[common],
                       help="value distribution of each form in a form file")
    p.add_argument("--forms", required=True, metavar="FILE")
    p.add_argument("--degree", type=int, default=1,
                   help="induce each form to this degree before evaluating")
    p.add_argument("--mode", choices=("exact", "enumerate", "sampled"),
                   default="exact")
    p.add_argument("--samples", type=int, default=4096)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_phidist, parser=p)

    p = sub.add_parser("quasirandomize", parents=[common],
                       help="density-increment loop on a family file")
    p.add_argument("--family", required=True, metavar="FILE")
    p.add_argument("--p", required=True, type=int)
    p.add_argument("--eta", required=True, type=Fraction)
    p.add_argument("--pool", choices=("small", "exhaustive", "file"),
                   default="small",
                   help="form search pool: weight-<=2 vectors, all p^n "
                        "vectors, or the pool plus --forms")
    p.add_argument("--forms", metavar="FILE",
                   help="extra forms for --pool file")
    p.add_argument("--m", type=int, nargs="+",
                   help="window sizes per step (default: adaptive)")
    p.add_argument("--max-steps", type=int)
    p.set_defaults(func=cmd_quasirandomize, parser=p)

    p = sub.add_parser("extremal", parents=[common],
                       help="largest pattern-free family, exactly")
    p.add_argument("--d", required=True, type=int, nargs="+",
                   help="degree of each part")
    p.add_argument("--n", required=True, type=int)
    p.add_argument("--pattern", choices=("power", "clique"), default="power")
    p.add_argument("--method", choices=("branch-and-bound", "exhaustive"),
                   default="branch-and-bound")
    p.add_argument("--vertex-cap", type=int, default=DEFAULT_VERTEX_CAP)
    p.add_argument("--time-limit", type=float)
    p.set_defaults(func=cmd_extremal, parser=p)

    p = sub.add_parser("verify-framework", parents=[common],
                       help="covering conditions on the cyclic-interval demo")
    p.add_argument("--n", required=True, type=int)
    p.set_defaults(func=cmd_verify_framework, parser=p)

    p = sub.add_parser("demo-interval", parents=[common],
                       help="average cell density in the cyclic-interval demo")
    p.add_argument("--n", required=True, type=int)
    p.add_argument("--family", required=True, metavar="FILE")
    p.set_defaults(func=cmd_demo_interval, parser=p)

    p = sub.add_parser("reduce", parents=[common],
                       help="apply one of the constructive reductions")
    p.add_argument("--mode", required=True,
                   choices=("beta", "beta-inverse", "multiplex", "embed",
                            "clique"))
    p.add_argument("--family", metavar="FILE")
    p.add_argument("--bundles", metavar="FILE")
    p.add_argument("--s", type=int, help="copies for --mode multiplex")
    p.add_argument("--degrees", type=int, nargs="+",
                   help="target degrees for --mode embed")
    p.add_argument("--loopful", action="store_true",
                   help="keep diagonal cells as graph loops in --mode clique")
    p.set_defaults(func=cmd_reduce, parser=p)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.threads is None:
            args.threads = int(os.environ.get("SETDIFF_THREADS", "1"))
        args.func(args)
    except FormatError as exc:
        print(f"setdiff: {exc}", file=sys.stderr)
        return 3
    except ContractViolationError as exc:
        print(f"setdiff: contract violation: {exc}", file=sys.stderr)
        return 5
    except ValueError as exc:
        print(f"setdiff: {exc}", file=sys.stderr)
        return 4
    return 0


if __name__ == "__main__":
    sys.exit(main())

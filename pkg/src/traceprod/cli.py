"""Command line front end.

Every subcommand prints exactly one JSON document to stdout; diagnostics go to
stderr. Exit codes: 0 success (and, for checks, the identity holds), 1 the
identity fails or the maps lack the expected canonical structure, 2 usage or
input errors. `generate` output pipes straight into `check`, `decompose`,
`extend`, and `weighted` via `--maps -`.
"""
from __future__ import annotations

import argparse
import json
import sys

from .decompose import decompose, verify_weighted
from .errors import (
    CanonicalStructureError,
    NotApplicableError,
    PreservationError,
    TraceProdError,
)
from .extend import check_preservation, dualize, embed_extend_pair, infeasibility_certificate
from .families import FAMILIES, GenSpec, generate
from .jsonio import (
    decode_maps_document,
    encode_certificate,
    encode_decomposition,
    encode_generated,
    encode_linmap,
    encode_report,
    encode_space,
)
from .spaces import Field, SpaceKind, SpaceTag, span_of


def _read_maps(path: str):
    if path == "-":
        text = sys.stdin.read()
    else:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    return decode_maps_document(json.loads(text))


def _emit(doc) -> None:
    json.dump(doc, sys.stdout, indent=2)
    sys.stdout.write("\n")


def _float_list(text: str) -> list:
    try:
        return [float(x) for x in text.split(",") if x.strip() != ""]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="traceprod",
        description="Verify, construct, and invert tuples of maps preserving traces of products.",
    )
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="generate a canonical tuple of maps")
    g.add_argument("--family", required=True, choices=sorted(FAMILIES))
    g.add_argument("--n", type=int, required=True, help="matrix size")
    g.add_argument("--m", type=int, required=True, help="tuple length")
    g.add_argument("--field", default="complex", choices=["real", "complex"])
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--condition-bound", type=float, default=1e3)

    c = sub.add_parser("check", help="check the trace-of-products identity")
    c.add_argument("--maps", required=True, help="JSON file of maps, or - for stdin")
    c.add_argument("--tol", type=float, default=1e-9)
    c.add_argument("--mode", default="auto", choices=["auto", "exhaustive", "randomized"])
    c.add_argument("--trials", type=int, default=10000)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument(
        "--space",
        default=None,
        choices=sorted(k.value for k in SpaceKind),
        help="sample from this space kind instead of each map's own domain",
    )

    d = sub.add_parser("dualize", help="construct the trace-dual partner of a map")
    d.add_argument("--maps", required=True)
    d.add_argument("--index", type=int, default=0, help="which map of the document to dualize")
    d.add_argument("--tol", type=float, default=1e-9)

    dc = sub.add_parser("decompose", help="recover canonical parameters of a tuple")
    dc.add_argument("--maps", required=True)
    dc.add_argument("--family", default="auto")
    dc.add_argument("--tol", type=float, default=1e-7)

    e = sub.add_parser("extend", help="extend a corner-supported pair to a bijective pair")
    e.add_argument("--maps", required=True)
    e.add_argument("--tol", type=float, default=1e-8)

    ce = sub.add_parser("certify", help="certify that no pair into smaller matrices exists")
    ce.add_argument("--n", type=int, required=True)
    ce.add_argument("--k", type=int, required=True)
    ce.add_argument("--field", default="complex", choices=["real", "complex"])
    ce.add_argument("--trials", type=int, default=20)
    ce.add_argument("--seed", type=int, default=0)

    w = sub.add_parser("weighted", help="check the weighted power identity")
    w.add_argument("--maps", required=True)
    w.add_argument("--alpha", type=_float_list, required=True, help="comma-separated exponents")
    w.add_argument("--beta", type=_float_list, required=True, help="comma-separated exponents")
    w.add_argument("--trials", type=int, default=1000)
    w.add_argument("--seed", type=int, default=0)
    w.add_argument("--tol", type=float, default=1e-8)

    return p


def _cmd_generate(args) -> int:
    spec = GenSpec(
        family=args.family,
        n=args.n,
        m=args.m,
        field=Field(args.field),
        seed=args.seed,
        condition_bound=args.condition_bound,
    )
    gen = generate(spec)
    _emit(encode_generated(gen, args.family))
    return 0


def _cmd_check(args) -> int:
    maps, _ = _read_maps(args.maps)
    sample_space = None
    if args.space is not None:
        dom = maps[0].domain
        sample_space = SpaceTag(SpaceKind(args.space), dom.field, dom.n)
    report = check_preservation(
        maps,
        tol=args.tol,
        mode=args.mode,
        trials=args.trials,
        seed=args.seed,
        sample_space=sample_space,
    )
    _emit(encode_report(report))
    if not report.passed:
        print(f"identity fails: max residual {report.max_residual:.3g}", file=sys.stderr)
        return 1
    return 0


def _cmd_dualize(args) -> int:
    maps, space = _read_maps(args.maps)
    if not 0 <= args.index < len(maps):
        raise NotApplicableError(f"document has {len(maps)} maps; index {args.index} is out of range")
    f = maps[args.index]
    psi = dualize(f, tol=args.tol)
    _emit(
        {
            "space": encode_space(space if space is not None else f.domain),
            "m": 2,
            "maps": [encode_linmap(f), encode_linmap(psi)],
        }
    )
    return 0


def _cmd_decompose(args) -> int:
    maps, space = _read_maps(args.maps)
    result = decompose(maps, family=args.family, tol=args.tol)
    _emit(encode_decomposition(result, space if space is not None else maps[0].domain))
    return 0


def _cmd_extend(args) -> int:
    maps, _ = _read_maps(args.maps)
    if len(maps) != 2:
        raise NotApplicableError(f"extension needs exactly 2 maps, got {len(maps)}")
    psi1, psi2 = embed_extend_pair(maps[0], maps[1], tol=args.tol)
    _emit(
        {
            "space": encode_space(span_of(psi1.domain)),
            "m": 2,
            "maps": [encode_linmap(psi1), encode_linmap(psi2)],
        }
    )
    return 0


def _cmd_certify(args) -> int:
    cert = infeasibility_certificate(
        args.n, args.k, field=Field(args.field), trials=args.trials, seed=args.seed
    )
    _emit(encode_certificate(cert))
    return 0


def _cmd_weighted(args) -> int:
    maps, _ = _read_maps(args.maps)
    report = verify_weighted(
        maps, args.alpha, args.beta, trials=args.trials, seed=args.seed, tol=args.tol
    )
    _emit(encode_report(report))
    if not report.passed:
        print(f"weighted identity fails: max residual {report.max_residual:.3g}", file=sys.stderr)
        return 1
    return 0


_HANDLERS = {
    "generate": _cmd_generate,
    "check": _cmd_check,
    "dualize": _cmd_dualize,
    "decompose": _cmd_decompose,
    "extend": _cmd_extend,
    "certify": _cmd_certify,
    "weighted": _cmd_weighted,
}


def _error_doc(exc: Exception, context: dict | None = None) -> dict:
    return {
        "error": {
            "code": type(exc).__name__,
            "message": str(exc),
            "context": context or {},
        }
    }


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _HANDLERS[args.command](args)
    except PreservationError as exc:
        ctx = {}
        if exc.report is not None:
            ctx["max_residual"] = exc.report.max_residual
        _emit(_error_doc(exc, ctx))
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except CanonicalStructureError as exc:
        _emit(_error_doc(exc))
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (json.JSONDecodeError, OSError) as exc:
        _emit(_error_doc(exc))
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except TraceProdError as exc:
        _emit(_error_doc(exc))
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()

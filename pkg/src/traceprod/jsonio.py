"""JSON encoding for spaces, maps, canonical forms, reports, and certificates.

Matrices travel as {"rows", "cols", "field", "data"} with row-major
[real, imag] entry pairs, so the format is field-agnostic and lossless at
double precision. Documents produced by the command line's `generate` carry
"space", "form", and "maps" keys and are accepted anywhere a tuple of maps is
expected.
"""
from __future__ import annotations

import numpy as np

from .decompose import DecompositionResult
from .errors import InvalidParameterError
from .extend import InfeasibilityCertificate, PreservationReport
from .families import Generated
from .linmaps import (
    FORM_TAGS,
    DiagChain,
    DiagPair,
    Hadamard,
    HermEven,
    HermOdd,
    LinMap,
    MnChain,
    NonextendableTriple,
    PnPair,
    RankOneFrame,
    SymEven,
    SymOdd,
)
from .spaces import SpaceTag


def encode_matrix(M) -> dict:
    M = np.asarray(M)
    if M.ndim == 1:
        M = np.diag(M)
    if M.ndim != 2:
        raise InvalidParameterError(f"can only encode 2-d matrices, got ndim={M.ndim}")
    real = not np.iscomplexobj(M) or float(np.max(np.abs(M.imag), initial=0.0)) == 0.0
    Mc = M.astype(np.complex128, copy=False)
    data = [[float(z.real), float(z.imag)] for z in Mc.reshape(-1)]
    return {
        "rows": int(M.shape[0]),
        "cols": int(M.shape[1]),
        "field": "real" if real else "complex",
        "data": data,
    }


def decode_matrix(obj) -> np.ndarray:
    try:
        rows, cols = int(obj["rows"]), int(obj["cols"])
        data = obj["data"]
    except (KeyError, TypeError) as exc:
        raise InvalidParameterError(f"malformed matrix object: {exc}") from exc
    if len(data) != rows * cols:
        raise InvalidParameterError(f"matrix data has {len(data)} entries, expected {rows * cols}")
    flat = np.empty(rows * cols, dtype=np.complex128)
    for i, pair in enumerate(data):
        if np.isscalar(pair):
            flat[i] = float(pair)
        else:
            re, im = pair
            flat[i] = complex(float(re), float(im))
    M = flat.reshape(rows, cols)
    if obj.get("field") == "real":
        return np.ascontiguousarray(M.real)
    return M


def encode_space(space: SpaceTag) -> dict:
    return {"kind": space.kind.value, "field": space.field.value, "n": space.n}


def decode_space(obj) -> SpaceTag:
    try:
        return SpaceTag(obj["kind"], obj["field"], int(obj["n"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidParameterError(f"malformed space object: {exc}") from exc


def encode_linmap(map_: LinMap) -> dict:
    return {
        "domain": encode_space(map_.domain),
        "codomain": encode_space(map_.codomain),
        "transfer": encode_matrix(map_.transfer),
    }


def decode_linmap(obj) -> LinMap:
    try:
        dom = decode_space(obj["domain"])
        cod = decode_space(obj["codomain"])
        T = decode_matrix(obj["transfer"])
    except (KeyError, TypeError) as exc:
        raise InvalidParameterError(f"malformed map object: {exc}") from exc
    return LinMap(dom, cod, T)


def _pairs(values) -> list:
    out = []
    for v in values:
        z = complex(v)
        out.append([float(z.real), float(z.imag)])
    return out


def _unpairs(values, real: bool):
    out = []
    for pair in values:
        if np.isscalar(pair):
            z = complex(float(pair), 0.0)
        else:
            z = complex(float(pair[0]), float(pair[1]))
        out.append(z.real if real else z)
    return tuple(out)


def encode_form(form) -> dict:
    tag = FORM_TAGS.get(type(form))
    if tag is None:
        raise InvalidParameterError(f"cannot encode form of type {type(form).__name__}")
    if isinstance(form, MnChain):
        params = {"N": [encode_matrix(N) for N in form.N]}
    elif isinstance(form, HermOdd):
        params = {"U": encode_matrix(form.U), "c": _pairs(form.c)}
    elif isinstance(form, HermEven):
        params = {"M": encode_matrix(form.M), "c": _pairs(form.c)}
    elif isinstance(form, PnPair):
        params = {"M": encode_matrix(form.M), "transpose": bool(form.transpose)}
    elif isinstance(form, SymOdd):
        params = {"O": encode_matrix(form.O), "c": _pairs(form.c)}
    elif isinstance(form, SymEven):
        params = {"M": encode_matrix(form.M), "c": _pairs(form.c)}
    elif isinstance(form, DiagPair):
        params = {"N": encode_matrix(form.N)}
    elif isinstance(form, DiagChain):
        params = {"P": encode_matrix(form.P), "C": [encode_matrix(C) for C in form.C]}
    elif isinstance(form, Hadamard):
        params = {"C": encode_matrix(form.C), "real_family": form.real_family}
    elif isinstance(form, RankOneFrame):
        params = {"A": [encode_matrix(A) for A in form.A]}
    elif isinstance(form, NonextendableTriple):
        params = {"X": encode_matrix(form.X)}
    else:  # pragma: no cover - FORM_TAGS and the branches list the same types
        raise InvalidParameterError(f"cannot encode form of type {type(form).__name__}")
    return {"form": tag, "params": params}


def decode_form(obj):
    try:
        tag = obj["form"]
        params = obj["params"]
    except (KeyError, TypeError) as exc:
        raise InvalidParameterError(f"malformed form object: {exc}") from exc
    try:
        if tag == "MnChain":
            return MnChain(tuple(decode_matrix(N) for N in params["N"]))
        if tag == "HermOdd":
            return HermOdd(decode_matrix(params["U"]), _unpairs(params["c"], real=True))
        if tag == "HermEven":
            return HermEven(decode_matrix(params["M"]), _unpairs(params["c"], real=True))
        if tag == "PnPair":
            return PnPair(decode_matrix(params["M"]), bool(params.get("transpose", False)))
        if tag == "SymOdd":
            return SymOdd(decode_matrix(params["O"]), _unpairs(params["c"], real=False))
        if tag == "SymEven":
            return SymEven(decode_matrix(params["M"]), _unpairs(params["c"], real=False))
        if tag == "DiagPair":
            return DiagPair(decode_matrix(params["N"]))
        if tag == "DiagChain":
            return DiagChain(decode_matrix(params["P"]), tuple(decode_matrix(C) for C in params["C"]))
        if tag == "Hadamard":
            return Hadamard(decode_matrix(params["C"]))
        if tag == "RankOneFrame":
            return RankOneFrame(tuple(decode_matrix(A) for A in params["A"]))
        if tag == "NonextendableTriple":
            return NonextendableTriple(decode_matrix(params["X"]))
    except (KeyError, TypeError) as exc:
        raise InvalidParameterError(f"malformed {tag} parameters: {exc}") from exc
    raise InvalidParameterError(f"unknown form tag {tag!r}")


def encode_report(report: PreservationReport) -> dict:
    return {
        "m": report.m,
        "spaces": [encode_space(s) for s in report.spaces],
        "mode": report.mode.value,
        "trials": report.trials,
        "max_residual": report.max_residual,
        "worst_tuple": [encode_matrix(A) for A in report.worst_tuple],
        "tol": report.tol,
        "pass": report.passed,
    }


def encode_certificate(cert: InfeasibilityCertificate) -> dict:
    return {
        "n": cert.n,
        "k": cert.k,
        "field": cert.field.value,
        "gram_rhs_rank": cert.gram_rhs_rank,
        "gram_lhs_rank": cert.gram_lhs_rank,
        "rank_bound": cert.rank_bound,
        "singular_values": [float(s) for s in cert.singular_values],
        "cutoff": cert.cutoff,
        "certifies_impossibility": cert.certifies_impossibility,
    }


def encode_decomposition(result: DecompositionResult, space: SpaceTag) -> dict:
    return {
        "space": encode_space(space),
        "form": encode_form(result.form),
        "reconstruction_residual": result.reconstruction_residual,
        "gauge_note": result.gauge_note,
    }


def encode_generated(gen: Generated, family: str) -> dict:
    return {
        "family": family,
        "space": encode_space(gen.space),
        "m": len(gen.maps),
        "form": encode_form(gen.form),
        "maps": [encode_linmap(f) for f in gen.maps],
    }


def decode_maps_document(obj) -> tuple[list, SpaceTag | None]:
    """Read a tuple of maps from a bare list of map objects or any document
    with a "maps" key (for example `generate` output). Returns the maps and
    the document's space tag when it carries one.
    """
    space = None
    if isinstance(obj, dict):
        if "maps" not in obj:
            raise InvalidParameterError('document has no "maps" key')
        if "space" in obj:
            space = decode_space(obj["space"])
        items = obj["maps"]
    elif isinstance(obj, list):
        items = obj
    else:
        raise InvalidParameterError("expected a list of maps or a document with a maps key")
    if not isinstance(items, list) or not items:
        raise InvalidParameterError("maps must be a nonempty list")
    maps = [decode_linmap(it) for it in items]
    return maps, space

"""Schema-versioned JSON and CSV persistence with exact "p/q" rationals.

Every JSON document is an envelope ``{"schema": "perronlab.<kind>", "version": 1,
"data": ...}`` written with sorted keys and two-space indentation, so a
save -> load -> save cycle reproduces the file byte for byte.
"""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path
from typing import Any, Iterable, Optional

from .bases import IndexedSequence, TauEstimate, build_triangle_family
from .experiments import ExperimentConfig
from .geometry import ConvexPolygon, Point, PolygonUnion, as_scalar, fmt, translate
from .maximal import CertifiedPart, LevelSetCertificate
from .perron import PerronScale, PerronTree, ShiftAssignment, verify_tree

SCHEMA_VERSION = 1
KINDS = ("config", "tree", "certificate", "phase", "verify", "tau", "family")


class PersistError(ValueError):
    def __init__(self, message: str, location: str = ""):
        super().__init__(f"{location}: {message}" if location else message)
        self.location = location


def dumps(kind: str, data: Any) -> str:
    if kind not in KINDS:
        raise ValueError(f"unknown document kind {kind!r}")
    envelope = {"schema": f"perronlab.{kind}", "version": SCHEMA_VERSION, "data": data}
    return json.dumps(envelope, sort_keys=True, indent=2, ensure_ascii=True) + "\n"


def loads(text: str, kind: Optional[str] = None, source: str = "<string>") -> tuple[str, Any]:
    """Parse an envelope; returns (kind, data)."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise PersistError(exc.msg, f"{source} line {exc.lineno} column {exc.colno}") from None
    if not isinstance(doc, dict):
        raise PersistError("document is not an object", f"{source} $")
    schema = doc.get("schema")
    if not isinstance(schema, str) or not schema.startswith("perronlab."):
        raise PersistError(f"unrecognized schema {schema!r}", f"{source} $.schema")
    found = schema.split(".", 1)[1]
    if found not in KINDS:
        raise PersistError(f"unknown document kind {found!r}", f"{source} $.schema")
    if doc.get("version") != SCHEMA_VERSION:
        raise PersistError(f"unsupported version {doc.get('version')!r}", f"{source} $.version")
    if kind is not None and found != kind:
        raise PersistError(f"expected a {kind} document, found {found}", f"{source} $.schema")
    if "data" not in doc:
        raise PersistError("missing data", f"{source} $")
    return found, doc["data"]


def save(path, kind: str, data: Any) -> str:
    text = dumps(kind, data)
    Path(path).write_text(text, encoding="utf-8")
    return text


def load(path, kind: Optional[str] = None) -> tuple[str, Any]:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise PersistError(str(exc), str(path)) from None
    return loads(text, kind, str(path))


# --- field access with locations ------------------------------------------------

def _get(d, key, path: str):
    if not isinstance(d, dict) or key not in d:
        raise PersistError(f"missing key {key!r}", path)
    return d[key]


def _q(value, path: str):
    if isinstance(value, bool) or not isinstance(value, (str, int)):
        raise PersistError(f"expected a \"p/q\" string, got {value!r}", path)
    try:
        return as_scalar(value)
    except (ValueError, ZeroDivisionError):
        raise PersistError(f"not an exact rational: {value!r}", path) from None


def _int(value, path: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise PersistError(f"expected an integer, got {value!r}", path)
    return value


# --- config ------------------------------------------------------------------------

def config_to_dict(cfg: ExperimentConfig) -> dict:
    return cfg.to_dict()


def config_from_dict(d, path: str = "$.data") -> ExperimentConfig:
    if not isinstance(d, dict):
        raise PersistError("config must be an object", path)
    try:
        return ExperimentConfig.from_dict(d)
    except (TypeError, ValueError) as exc:
        raise PersistError(str(exc), path) from None


# --- trees -------------------------------------------------------------------------

def tree_to_dict(tree: PerronTree) -> dict:
    sc = tree.scale
    lo, hi = sc.N + 1, sc.N + 2 ** sc.n + 1
    fam = tree.family
    d = {
        "scale": {"alpha": fmt(sc.alpha), "n": sc.n, "N": sc.N},
        "t": {"k_min": lo, "values": [fmt(fam.t[k]) for k in range(lo, hi + 1)]},
        "shifts": [[k, fmt(v)] for k, v in tree.shifts.items()],
        "area_X": fmt(tree.area_X),
        "area_sum": fmt(tree.area_sum),
        "epsilon_bound": fmt(tree.epsilon_bound),
        "tau": {"value": fmt(tree.tau.value), "K": tree.tau.K, "argmax": list(tree.tau.argmax)},
        "disjoint_next_anchor": tree.disjoint_next_anchor,
        "disjoint_same_anchor": tree.disjoint_same_anchor,
        "stage_choices": [list(s) for s in tree.stage_choices],
    }
    if fam.e is not None and all(k in fam.e.indices() for k in range(lo, hi + 1)):
        d["e"] = {"k_min": lo, "values": [fmt(fam.e[k]) for k in range(lo, hi + 1)]}
    return d


def _sequence(d, path) -> IndexedSequence:
    k_min = _int(_get(d, "k_min", path), path + ".k_min")
    vals = _get(d, "values", path)
    if not isinstance(vals, list):
        raise PersistError("values must be a list", path + ".values")
    return IndexedSequence(k_min, tuple(_q(v, f"{path}.values[{i}]") for i, v in enumerate(vals)))


def tree_from_dict(d, verify: bool = False, path: str = "$.data") -> PerronTree:
    """Rebuild a tree; with ``verify`` both tree bounds and all areas are recomputed exactly."""
    sd = _get(d, "scale", path)
    try:
        scale = PerronScale(_q(_get(sd, "alpha", path + ".scale"), path + ".scale.alpha"),
                            _int(_get(sd, "n", path + ".scale"), path + ".scale.n"),
                            _int(_get(sd, "N", path + ".scale"), path + ".scale.N"))
    except ValueError as exc:
        if isinstance(exc, PersistError):
            raise
        raise PersistError(str(exc), path + ".scale") from None
    t = _sequence(_get(d, "t", path), path + ".t")
    e = _sequence(d["e"], path + ".e") if "e" in d else None
    raw = _get(d, "shifts", path)
    if not isinstance(raw, list):
        raise PersistError("shifts must be a list", path + ".shifts")
    shifts = {}
    for i, item in enumerate(raw):
        loc = f"{path}.shifts[{i}]"
        if not isinstance(item, list) or len(item) != 2:
            raise PersistError("expected [k, \"p/q\"]", loc)
        shifts[_int(item[0], loc + "[0]")] = _q(item[1], loc + "[1]")
    if sorted(shifts) != list(scale.indices):
        raise PersistError("shift indices do not match the scale", path + ".shifts")
    try:
        fam = build_triangle_family(t, e, scale.N + 1, scale.N + 2 ** scale.n)
    except ValueError as exc:
        raise PersistError(str(exc), path + ".t") from None
    choices = tuple(tuple(s) for s in d.get("stage_choices", []))
    if verify:
        return verify_tree(fam, scale, shifts, choices)
    td = _get(d, "tau", path)
    tau = TauEstimate(_q(_get(td, "value", path + ".tau"), path + ".tau.value"),
                      _int(_get(td, "K", path + ".tau"), path + ".tau.K"),
                      tuple(_get(td, "argmax", path + ".tau")))
    X = PolygonUnion.of(translate(fam.delta(k), (0, shifts[k])) for k in scale.indices)
    return PerronTree(scale, fam, ShiftAssignment(shifts), X,
                      _q(_get(d, "area_X", path), path + ".area_X"),
                      _q(_get(d, "area_sum", path), path + ".area_sum"), tau,
                      _q(_get(d, "epsilon_bound", path), path + ".epsilon_bound"),
                      bool(_get(d, "disjoint_next_anchor", path)),
                      bool(_get(d, "disjoint_same_anchor", path)), choices)


# --- certificates -------------------------------------------------------------------

def certificate_to_dict(cert: LevelSetCertificate) -> dict:
    return {
        "threshold": fmt(cert.threshold),
        "convention": cert.convention,
        "certified_measure": fmt(cert.certified_measure),
        "parts": [{"index": p.index, "polygon": p.polygon.to_strings(), "element_index": p.element_index,
                   "element_shift": [fmt(p.element_shift.x), fmt(p.element_shift.y)],
                   "min_value": fmt(p.min_value), "strict": p.strict} for p in cert.parts],
    }


def certificate_from_dict(d, path: str = "$.data") -> LevelSetCertificate:
    parts = []
    for i, p in enumerate(_get(d, "parts", path)):
        loc = f"{path}.parts[{i}]"
        rows = _get(p, "polygon", loc)
        poly = ConvexPolygon.of([(_q(x, f"{loc}.polygon[{j}][0]"), _q(y, f"{loc}.polygon[{j}][1]"))
                                 for j, (x, y) in enumerate(rows)])
        sx, sy = _get(p, "element_shift", loc)
        parts.append(CertifiedPart(_int(_get(p, "index", loc), loc + ".index"), poly,
                                   _int(_get(p, "element_index", loc), loc + ".element_index"),
                                   Point(_q(sx, loc + ".element_shift[0]"), _q(sy, loc + ".element_shift[1]")),
                                   _q(_get(p, "min_value", loc), loc + ".min_value"),
                                   bool(_get(p, "strict", loc))))
    return LevelSetCertificate(_q(_get(d, "threshold", path), path + ".threshold"), tuple(parts),
                               _q(_get(d, "certified_measure", path), path + ".certified_measure"),
                               str(d.get("convention", ">=")))


# --- csv ----------------------------------------------------------------------------

def to_csv(rows: Iterable[dict], columns) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(columns), lineterminator="\n", extrasaction="raise")
    w.writeheader()
    for r in rows:
        w.writerow({c: r.get(c, "") for c in columns})
    return buf.getvalue()


"""JSON interchange for complexes, set models, transport maps and reports."""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .complex_core import SimplicialComplex, validate_complex
from .errors import InvalidInputError, ValidationError
from .pushout import ConeModel, PushRecord, SetModel, TransportMap


class ParseError(InvalidInputError):
    """Malformed input file; ``location`` names the file and field."""

    def __init__(self, message, location=""):
        super().__init__(f"{location}: {message}" if location else message)
        self.location = location


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        if math.isnan(x):
            return None
        return x
    if isinstance(obj, (frozenset, set)):
        return sorted(_clean(v) for v in obj)
    return obj


def dumps(obj) -> str:
    """Deterministic JSON text."""
    return json.dumps(_clean(obj), sort_keys=True, indent=2) + "\n"


def write_json(path, obj) -> None:
    Path(path).write_text(dumps(obj))


def read_json(path):
    try:
        return json.loads(Path(path).read_text())
    except FileNotFoundError as e:
        raise ParseError("file not found", str(path)) from e
    except json.JSONDecodeError as e:
        raise ParseError(f"invalid JSON at line {e.lineno} column {e.colno}", str(path)) from e


# complex --------------------------------------------------------------------

def complex_from_dict(d, where="complex", validate=True):
    if not isinstance(d, dict) or "vertices" not in d or "simplices" not in d:
        raise ParseError("expected an object with 'vertices' and 'simplices'", where)
    try:
        V = np.asarray(d["vertices"], dtype=float)
        simp = [tuple(int(i) for i in s) for s in d["simplices"]]
    except (TypeError, ValueError) as e:
        raise ParseError(f"bad vertices or simplices ({e})", where) from e
    if V.ndim != 2:
        raise ParseError("vertices must be a list of equal-length coordinate lists", where)
    q = d.get("Q", [])
    if not isinstance(q, list) or not all(isinstance(i, int) for i in q):
        raise ParseError("Q must be a list of simplex indices", where)
    try:
        cx = SimplicialComplex(V, simp)
    except InvalidInputError as e:
        raise ValidationError(str(e), {"error": str(e)}) from e
    bad = [i for i in q if i < 0 or i >= len(cx)]
    if bad:
        raise ValidationError(f"Q references unknown simplex ids {bad}", {"unknown_q": bad})
    cx = cx.with_q(q)
    if validate:
        rep = validate_complex(cx)
        if not rep.valid:
            raise ValidationError("complex failed validation", rep.to_dict())
    return cx


def complex_to_dict(cx: SimplicialComplex) -> dict:
    return {
        "vertices": cx.vertices.tolist(),
        "simplices": [list(s) for s in cx.simplices],
        "Q": [int(i) for i in np.flatnonzero(cx.q_marks)],
    }


def load_complex(path, validate=True) -> SimplicialComplex:
    return complex_from_dict(read_json(path), str(path), validate)


# set model ------------------------------------------------------------------

def set_from_dict(d, cx: SimplicialComplex, where="set") -> SetModel:
    if not isinstance(d, dict):
        raise ParseError("expected an object", where)
    try:
        a = float(d.get("a", 1.0))
        samples = d.get("samples", [])
        pts = np.array([s["point"] for s in samples], dtype=float).reshape(len(samples), -1) \
            if samples else np.zeros((0, cx.ambient_dim))
        car = np.array([int(s["carrier"]) for s in samples], dtype=int)
        w = np.array([float(s.get("weight", 1.0)) for s in samples])
        full = [int(i) for i in d.get("full", [])]
    except (KeyError, TypeError, ValueError) as e:
        raise ParseError(f"bad sample record ({e})", where) from e
    try:
        S = SetModel(a, pts, car, w, frozenset(full))
    except InvalidInputError as e:
        raise ValidationError(str(e)) from e
    S.validate(cx)
    return S


def set_to_dict(S: SetModel) -> dict:
    return {
        "a": S.a,
        "samples": [
            {"point": p.tolist(), "carrier": int(c), "weight": float(w)}
            for p, c, w in zip(S.points, S.carriers, S.weights)
        ],
        "full": sorted(int(f) for f in S.full),
    }


def load_set(path, cx) -> SetModel:
    return set_from_dict(read_json(path), cx, str(path))


# transport ------------------------------------------------------------------

def transport_to_dict(G: TransportMap) -> dict:
    return G.to_dict()


def transport_from_dict(d, cx: SimplicialComplex) -> TransportMap:
    recs = []
    for r in d.get("records", []):
        sid = int(r["sigma"])
        sx = cx.simplex(sid)
        faces = [tuple(sx.ids.index(v) for v in f) for f in r.get("cone_faces", [])]
        cone = ConeModel(sx, r["z0"], np.asarray(r["cone_images"], float).reshape(-1, cx.ambient_dim), faces, sid)
        recs.append(PushRecord(sid, cone.z.copy(), cone, tuple(r.get("rank_before", ())),
                               tuple(r.get("rank_after", ()))))
    return TransportMap(cx, recs)

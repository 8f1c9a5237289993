"""JSON encoding of problems and reports.

Parsing errors raise :class:`InputError` carrying the dotted path of the
offending field, so command-line diagnostics can point at it.
"""

from __future__ import annotations

import json
import math

import numpy as np

from . import cones
from .bifunctions import Affine, Factorable, Separable, TermMap
from .constraints import Box, NegOrthant, Polyhedron, Sector
from .model import ProblemInstance, named_problem

__all__ = [
    "InputError",
    "cone_from_dict",
    "constraints_from_dict",
    "bifunction_from_dict",
    "problem_from_dict",
    "problem_to_dict",
    "load_problem",
    "parse_point",
    "parse_points",
    "to_jsonable",
    "dumps",
]

SIG_DIGITS = 12


class InputError(ValueError):
    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path
        self.message = message


def _req(d: dict, key: str, path: str):
    if not isinstance(d, dict):
        raise InputError(path, "expected an object")
    if key not in d:
        raise InputError(f"{path}.{key}" if path else key, "missing field")
    return d[key]


def _matrix(v, path: str, ndim: int = 2) -> np.ndarray:
    try:
        a = np.asarray(v, dtype=float)
    except (TypeError, ValueError) as e:
        raise InputError(path, f"expected numbers ({e})") from None
    if a.ndim != ndim:
        raise InputError(path, f"expected a {ndim}-dimensional array")
    if not np.all(np.isfinite(a)):
        raise InputError(path, "entries must be finite")
    return a


def _build(path: str, fn, *args, **kw):
    try:
        return fn(*args, **kw)
    except (ValueError, TypeError, KeyError, IndexError) as e:
        if isinstance(e, InputError):
            raise
        raise InputError(path, str(e)) from None


def cone_from_dict(d: dict, path: str = "cone") -> cones.Cone:
    v = _req(d, "variant", path)
    if v == "orthant":
        return _build(path, cones.Orthant, int(_req(d, "dim", path)))
    if v == "halfspaces":
        return _build(path, cones.HalfspaceCone,
                      _matrix(_req(d, "normals", path), f"{path}.normals"))
    if v == "generated":
        return _build(path, cones.Generated, _matrix(_req(d, "rays", path), f"{path}.rays"))
    if v == "product":
        parts = _req(d, "parts", path)
        if not isinstance(parts, list) or not parts:
            raise InputError(f"{path}.parts", "expected a nonempty list")
        return cones.Product(tuple(cone_from_dict(p, f"{path}.parts[{i}]")
                                   for i, p in enumerate(parts)))
    raise InputError(f"{path}.variant", f"unknown cone variant {v!r}")


def _bound_vec(v, path: str, missing: float) -> np.ndarray:
    if not isinstance(v, list):
        raise InputError(path, "expected a list")
    out = []
    for i, t in enumerate(v):
        if t is None:
            out.append(missing)
        elif t in ("inf", "-inf"):
            out.append(math.inf if t == "inf" else -math.inf)
        elif isinstance(t, (int, float)):
            out.append(float(t))
        else:
            raise InputError(f"{path}[{i}]", "expected a number, null or 'inf'")
    return np.array(out)


def constraints_from_dict(d: dict, path: str = "constraints", truncation_radius=None):
    v = _req(d, "variant", path)
    R = truncation_radius if truncation_radius is not None else d.get("truncation_radius", 1e3)
    if not isinstance(R, (int, float)) or not R > 0:
        raise InputError(f"{path}.truncation_radius", "must be a positive number")
    if v == "box":
        return _build(path, Box, _bound_vec(_req(d, "lower", path), f"{path}.lower", -math.inf),
                      _bound_vec(_req(d, "upper", path), f"{path}.upper", math.inf), float(R))
    if v == "polyhedron":
        return _build(path, Polyhedron, _matrix(_req(d, "A", path), f"{path}.A"),
                      _matrix(_req(d, "b", path), f"{path}.b", 1), float(R))
    if v == "sector":
        return _build(path, Sector, float(_req(d, "theta", path)), float(R))
    if v == "neg_orthant":
        return _build(path, NegOrthant, int(_req(d, "dim", path)), float(R))
    raise InputError(f"{path}.variant", f"unknown constraint variant {v!r}")


def _termmap(d, path):
    return _build(path, TermMap.from_dict, d)


def bifunction_from_dict(d: dict, path: str = "bifunction"):
    v = _req(d, "variant", path)
    if v == "affine":
        return _build(path, Affine, _matrix(_req(d, "A", path), f"{path}.A"),
                      _matrix(_req(d, "B", path), f"{path}.B"),
                      _matrix(_req(d, "c", path), f"{path}.c", 1))
    if v == "separable":
        return _build(path, Separable, _termmap(_req(d, "g", path), f"{path}.g"),
                      _termmap(_req(d, "h", path), f"{path}.h"))
    if v == "factorable":
        return _build(path, Factorable, _termmap(_req(d, "lambda", path), f"{path}.lambda"),
                      _termmap(_req(d, "g", path), f"{path}.g"))
    if v == "named":
        raise InputError(path, "named bifunctions define a whole catalog problem")
    raise InputError(f"{path}.variant", f"unknown bifunction variant {v!r}")


def _same(a: dict, b: dict) -> bool:
    return json.dumps(to_jsonable(a), sort_keys=True) == json.dumps(to_jsonable(b), sort_keys=True)


def problem_from_dict(d: dict, theta=None, allow_degenerate: bool = False) -> ProblemInstance:
    """Build a problem; ``theta`` overrides a named sector problem's angle."""
    if not isinstance(d, dict):
        raise InputError("", "problem must be a JSON object")
    bf = _req(d, "bifunction", "")
    R = d.get("truncation_radius")
    if R is not None and (not isinstance(R, (int, float)) or not R > 0):
        raise InputError("truncation_radius", "must be a positive number")
    if isinstance(bf, dict) and bf.get("variant") == "named":
        name = _req(bf, "name", "bifunction")
        th = theta if theta is not None else bf.get("theta")
        p = _build("bifunction", named_problem, name, th, 1e3 if R is None else float(R),
                   allow_degenerate)
        for key, built in (("cone", p.cone), ("constraints", p.constraints)):
            if key in d:
                given = dict(d[key])
                if key == "constraints":
                    given.setdefault("truncation_radius", p.constraints.truncation_radius)
                    if theta is not None and "theta" in given:
                        given["theta"] = theta
                if not _same(given, built.to_dict()):
                    raise InputError(key, f"does not match catalog entry {name!r}")
    else:
        f = bifunction_from_dict(bf)
        C = cone_from_dict(_req(d, "cone", ""))
        K = constraints_from_dict(_req(d, "constraints", ""), truncation_radius=R)
        sols = d.get("known_solutions")
        if sols is not None:
            sols = _matrix(sols, "known_solutions")
        p = _build("", ProblemInstance, f, C, K, sols, name=str(d.get("name", "")))
    for key, val in (("dim_x", p.dim_x), ("dim_y", p.dim_y)):
        if key in d and d[key] != val:
            raise InputError(key, f"declared {d[key]} but the parts give {val}")
    if isinstance(bf, dict) and bf.get("variant") == "named" and "known_solutions" in d:
        sols = _matrix(d["known_solutions"], "known_solutions")
        p = _build("known_solutions", ProblemInstance, p.bifunction, p.cone, p.constraints,
                   sols, p.closed_form_merit, p.truncation_gap, p.name)
    return p


def problem_to_dict(p: ProblemInstance) -> dict:
    d = {"bifunction": p.bifunction.to_dict(), "cone": p.cone.to_dict(),
         "constraints": p.constraints.to_dict(), "dim_x": p.dim_x, "dim_y": p.dim_y,
         "truncation_radius": p.constraints.truncation_radius}
    if p.known_solutions is not None:
        d["known_solutions"] = p.known_solutions.tolist()
    if p.name:
        d["name"] = p.name
    return d


def load_problem(path: str, theta=None, allow_degenerate: bool = False) -> ProblemInstance:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as e:
        raise InputError("", f"cannot read {path}: {e.strerror}") from None
    try:
        d = json.loads(text)
    except json.JSONDecodeError as e:
        raise InputError(f"line {e.lineno} column {e.colno}", e.msg) from None
    return problem_from_dict(d, theta, allow_degenerate)


def parse_point(s: str, dim: int | None = None, path: str = "--point") -> np.ndarray:
    try:
        x = np.array([float(t) for t in s.split(",")])
    except ValueError:
        raise InputError(path, f"expected comma-separated numbers, got {s!r}") from None
    if not np.all(np.isfinite(x)):
        raise InputError(path, "coordinates must be finite")
    if dim is not None and len(x) != dim:
        raise InputError(path, f"expected {dim} coordinates, got {len(x)}")
    return x


def parse_points(s: str, dim: int | None = None, path: str = "--points") -> np.ndarray:
    return np.array([parse_point(t, dim, path) for t in s.split(";") if t.strip()])


def _num(v: float):
    if math.isfinite(v):
        return float(f"{v:.{SIG_DIGITS}g}")
    return "nan" if math.isnan(v) else ("inf" if v > 0 else "-inf")


def to_jsonable(obj):
    """Plain JSON types, floats rounded to 12 significant digits, non-finite as strings."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return _num(float(obj))
    if obj is None or isinstance(obj, str):
        return obj
    if hasattr(obj, "to_dict"):
        return to_jsonable(obj.to_dict())
    raise TypeError(f"cannot encode {type(obj).__name__}")


def dumps(obj) -> str:
    return json.dumps(to_jsonable(obj), indent=2, sort_keys=False) + "\n"

"""Published JSON schemas for command-line reports.

Numbers may also appear as the strings ``"inf"``, ``"-inf"`` or ``"nan"``.
Schemas follow JSON Schema draft 2020-12; ``validate`` needs the optional
``jsonschema`` package.
"""

from __future__ import annotations

__all__ = ["NUMBER", "ENVELOPE", "REPORTS", "schema_for", "validate"]

NUMBER = {"anyOf": [{"type": "number"}, {"enum": ["inf", "-inf", "nan"]}]}
VECTOR = {"type": "array", "items": NUMBER}
MATRIX = {"type": "array", "items": VECTOR}
NONNEG_INT = {"type": "integer", "minimum": 0}


def _obj(required: dict, optional: dict | None = None) -> dict:
    props = dict(required)
    props.update(optional or {})
    return {"type": "object", "required": sorted(required), "properties": props}


CHECK = _obj({"name": {"type": "string"},
              "status": {"enum": ["passed-sampled", "refuted", "not-applicable"]},
              "evidence": {"type": "object"}})
AUDIT = _obj({"checks": {"type": "array", "items": CHECK}})

MERIT = _obj({"x": VECTOR, "nu": NUMBER, "dist_x_K": NUMBER, "nu_ka": NUMBER,
              "witness_z": VECTOR, "samples_used": NONNEG_INT,
              "used_closed_form": {"type": "boolean"}},
             {"truncation_note": {"type": "string"}})

SLOPE = _obj({"x": VECTOR, "radii": VECTOR, "per_radius_max": VECTOR,
              "directions_used": VECTOR, "value": NUMBER,
              "restricted": {"type": "boolean"}, "local_min_detected": {"type": "boolean"}})

SSINF = _obj({"upper_bound": NUMBER,
              "argmin_witness": {"anyOf": [VECTOR, {"type": "null"}]},
              "points_probed": NONNEG_INT, "points_positive": NONNEG_INT})

POINT_SCORE = _obj({"x0": VECTOR, "u0": VECTOR, "value": NUMBER,
                    "directions_tried": NONNEG_INT})

INCREASE_CERT = _obj({"mode": {"type": "string"}, "sigma": NUMBER,
                      "incr_lower_bound": NUMBER, "z_budget": NONNEG_INT,
                      "region": _obj({"points": MATRIX, "note": {"type": "string"}}),
                      "witnesses": {"type": "array", "items": POINT_SCORE}},
                     {"largest_r_passed": NUMBER})

INCREASE = {"oneOf": [
    _obj({"certificate": INCREASE_CERT}),
    _obj({"certificate": {"type": "null"}, "sigma_tol": NUMBER, "worst_point": POINT_SCORE}),
]}

BOUND_CERT = _obj({"route": {"enum": ["sigma", "gamma", "ssinf-upper-only"]},
                   "constant": NUMBER,
                   "bound_form": {"enum": ["nu/const on K", "nu_ka/const on X"]},
                   "audit": {"type": "array", "items": CHECK},
                   "soundness": {"type": "string"}, "details": {"type": "object"}})

CERTIFY = {"oneOf": [
    _obj({"certificate": BOUND_CERT}),
    _obj({"certificate": {"type": "null"}, "failed_stage": {"type": "string"},
          "message": {"type": "string"},
          "audit": {"anyOf": [AUDIT, {"type": "null"}]}, "evidence": {"type": "object"}}),
]}

VALIDATE = _obj({"passed": {"type": "boolean"}, "constant": NUMBER,
                 "bound_form": {"type": "string"},
                 "rows": {"type": "array", "items": _obj({
                     "x": VECTOR, "merit": NUMBER, "bound": NUMBER, "true_dist": NUMBER,
                     "pass": {"type": "boolean"}})}})

SOLVE = _obj({"x_star": VECTOR, "nu_ka_final": NUMBER, "iterations": NONNEG_INT,
              "evaluations": NONNEG_INT,
              "status": {"enum": ["solved", "budget-exhausted"]},
              "start_index": NONNEG_INT,
              "trace": {"type": "array",
                        "items": {"type": "array", "prefixItems": [NONNEG_INT, NUMBER],
                                  "minItems": 2, "maxItems": 2}},
              "per_start": {"type": "array", "items": _obj({
                  "start": VECTOR, "x": VECTOR, "nu_ka": NUMBER,
                  "iterations": NONNEG_INT, "evaluations": NONNEG_INT})}},
             {"certified_distance": NUMBER})

REPRODUCE = _obj({"example": {"enum": ["example1", "example2"]},
                  "checks": {"type": "object",
                             "additionalProperties": {"type": "boolean"}}},
                 {"summary_line": {"type": "string"}, "theta": NUMBER, "sigma":
                  {"anyOf": [NUMBER, {"type": "null"}]}})

REPORTS = {"merit": MERIT, "slope": SLOPE, "ssinf": SSINF, "increase": INCREASE,
           "certify": CERTIFY, "validate": VALIDATE, "solve": SOLVE, "reproduce": REPRODUCE}

ENVELOPE = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["command", "report", "config", "exit_code", "metadata"],
    "properties": {
        "command": {"enum": sorted(REPORTS)},
        "report": {"type": "object"},
        "config": _obj({"seed": {"type": "integer"}}),
        "exit_code": {"enum": [0, 2, 3]},
        "metadata": _obj({"tool": {"const": "svebound"}, "version": {"type": "string"},
                          "generated_at": {"type": "string"}}),
    },
    "additionalProperties": False,
}


def schema_for(command: str) -> dict:
    """Envelope schema with the report slot narrowed to ``command``."""
    s = dict(ENVELOPE)
    s["properties"] = dict(ENVELOPE["properties"], report=REPORTS[command],
                           command={"const": command})
    return s


def validate(document: dict) -> None:
    """Raise ``jsonschema.ValidationError`` if ``document`` is not a valid report."""
    import jsonschema

    jsonschema.validate(document, ENVELOPE)
    jsonschema.validate(document, schema_for(document["command"]))

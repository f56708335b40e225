"""JSON schemas and (de)serialization for problem files, bodies, circuits,
and certificates, plus the canonical JSON emitter.

Canonical form: sorted keys, no insignificant whitespace, floats through
%.12g — byte-identical output for equal values.
"""

from __future__ import annotations

import json
from fractions import Fraction
from typing import Optional, Union

import numpy as np

try:
    import jsonschema
except ImportError:  # pragma: no cover
    jsonschema = None

from . import circuits as _circ
from . import games as _games
from . import geometry as _geo
from . import mlf as _mlf
from . import vi as _vi
from .errors import SchemaError

# ---------------------------------------------------------------------------
# Canonical JSON


def canonical_json(obj) -> str:
    """Deterministic rendering: sorted keys, %.12g floats, compact separators."""
    return _render(_plain(obj))


def _plain(obj):
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, Fraction):
        return float(obj)
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    return obj


def _render(obj) -> str:
    if obj is None:
        return "null"
    if obj is True:
        return "true"
    if obj is False:
        return "false"
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        if obj != obj or obj in (float("inf"), float("-inf")):
            raise SchemaError("non-finite numbers are not serializable")
        if obj == int(obj) and abs(obj) < 1e15:
            return "%.1f" % obj if obj else "0.0"
        return "%.12g" % obj
    if isinstance(obj, str):
        return json.dumps(obj, ensure_ascii=True)
    if isinstance(obj, list):
        return "[" + ",".join(_render(v) for v in obj) + "]"
    if isinstance(obj, dict):
        items = sorted(obj.items())
        return "{" + ",".join(json.dumps(k) + ":" + _render(v)
                              for k, v in items) + "}"
    raise SchemaError(f"cannot serialize {type(obj).__name__}")


# ---------------------------------------------------------------------------
# Bodies


def body_to_json(body: _geo.ConvexBody) -> dict:
    k, d = body.kind, body.data
    if k == "box":
        return {"kind": "box", "lo": d["lo"].tolist(), "hi": d["hi"].tolist()}
    if k == "ball":
        return {"kind": "ball", "center": d["center"].tolist(),
                "radius": d["radius"]}
    if k == "polyhedron":
        return {"kind": "polyhedron", "A": d["A"].tolist(),
                "b": d["b"].tolist(),
                "bbox": {"lo": body.bbox.lo.tolist(),
                         "hi": body.bbox.hi.tolist()}}
    if k == "product":
        return {"kind": "product",
                "factors": [body_to_json(f) for f in d["factors"]]}
    if k == "parallel":
        return {"kind": "parallel", "base": body_to_json(d["base"]),
                "eps": d["eps"]}
    raise SchemaError(f"body kind {k!r} has no file representation")


def body_from_json(spec: dict, pointer: str = "/body") -> _geo.ConvexBody:
    kind = spec.get("kind")
    try:
        if kind == "box":
            return _geo.box_body(spec["lo"], spec["hi"])
        if kind == "ball":
            return _geo.ball_body(spec["center"], spec["radius"])
        if kind == "polyhedron":
            bbox = _geo.Box(spec["bbox"]["lo"], spec["bbox"]["hi"])
            return _geo.polyhedron_body(spec["A"], spec["b"], bbox)
        if kind == "product":
            return _geo.product_body(
                [body_from_json(f, f"{pointer}/factors/{i}")
                 for i, f in enumerate(spec["factors"])])
        if kind == "parallel":
            return _geo.parallel_body(
                body_from_json(spec["base"], pointer + "/base"), spec["eps"])
    except KeyError as e:
        raise SchemaError(f"missing field {e} in body", pointer)
    raise SchemaError(f"unknown body kind {kind!r}", pointer)


# ---------------------------------------------------------------------------
# Circuits


def circuit_to_json(c: _circ.LinCircuit) -> dict:
    nodes = []
    for g in c.gates:
        node = {"op": g.op}
        if g.args:
            node["args"] = list(g.args)
        if g.value is not None:
            node["value"] = g.value
        nodes.append(node)
    return {"inputs": c.n_inputs, "nodes": nodes, "outputs": list(c.outputs)}


def circuit_from_json(spec: dict, pointer: str = "/circuit") -> _circ.LinCircuit:
    try:
        gates = tuple(_circ.Gate(n["op"], tuple(n.get("args", ())),
                                 n.get("value"))
                      for n in spec["nodes"])
        return _circ.LinCircuit(gates, spec["inputs"], tuple(spec["outputs"]))
    except KeyError as e:
        raise SchemaError(f"missing field {e} in circuit", pointer)


# ---------------------------------------------------------------------------
# Problem files


_TOL_SCHEMA = {
    "type": "object",
    "properties": {"beta": {"type": "number", "exclusiveMinimum": 0},
                   "eps": {"type": "number", "exclusiveMinimum": 0},
                   "delta": {"type": "number", "exclusiveMinimum": 0},
                   "eta": {"type": "number", "minimum": 0}},
    "required": ["beta"],
    "additionalProperties": False,
}

PROBLEM_SCHEMA = {
    "type": "object",
    "properties": {
        "version": {"const": "1"},
        "kind": {"enum": ["vi", "qvi", "gqvi", "mvi", "game", "mlf", "cnf"]},
        "payload": {"type": "object"},
        "tolerances": _TOL_SCHEMA,
    },
    "required": ["version", "kind", "payload", "tolerances"],
    "additionalProperties": False,
}


class ProblemFile:
    def __init__(self, kind: str, payload: dict, tolerances: dict):
        self.kind = kind
        self.payload = payload
        self.tolerances = {"beta": 1e-3, "eps": 1e-3, "delta": 1e-4,
                           "eta": 0.0, **tolerances}

    @property
    def beta(self) -> float:
        return self.tolerances["beta"]

    def to_json(self) -> dict:
        return {"version": "1", "kind": self.kind, "payload": self.payload,
                "tolerances": self.tolerances}


def validate_problem(doc: dict, lenient: bool = False) -> list:
    """Validate against the schema, returning warnings (lenient) or raising
    SchemaError with a JSON-pointer path."""
    warnings = []
    if jsonschema is None:
        raise SchemaError("jsonschema is required for validation")
    schema = PROBLEM_SCHEMA
    if lenient:
        schema = dict(schema)
        schema.pop("additionalProperties", None)
    validator = jsonschema.Draft202012Validator(schema)
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.path))
    for err in errors:
        pointer = "/" + "/".join(str(p) for p in err.absolute_path)
        if lenient and "Additional properties" in err.message:
            warnings.append(f"{pointer}: {err.message}")
            continue
        # Name the missing property in the pointer, matching how callers
        # report e.g. "/tolerances/beta".
        if err.validator == "required":
            missing = err.message.split("'")[1]
            pointer = pointer.rstrip("/") + "/" + missing
        raise SchemaError(f"{pointer}: {err.message}", pointer)
    return warnings


def problem_from_doc(doc: dict, lenient: bool = False) -> ProblemFile:
    validate_problem(doc, lenient=lenient)
    return ProblemFile(doc["kind"], doc["payload"], doc["tolerances"])


def parse_dimacs(text: str) -> _games.CNF3:
    """DIMACS CNF; clauses must carry exactly three literals."""
    n = None
    clauses = []
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("c") or line.startswith("%"):
            continue
        if line.startswith("p"):
            parts = line.split()
            if len(parts) < 4 or parts[1] != "cnf":
                raise SchemaError("malformed DIMACS header", "/")
            n = int(parts[2])
            continue
        lits = [int(tok) for tok in line.split()]
        if lits and lits[-1] == 0:
            lits = lits[:-1]
        if lits:
            clauses.append(tuple(lits))
    if n is None:
        raise SchemaError("missing DIMACS header", "/")
    return _games.CNF3(n, tuple(clauses))


# ---------------------------------------------------------------------------
# Instantiating problems from payloads


def load_operator(spec: dict, pointer: str) -> _vi.Operator:
    if "circuit" in spec:
        return _vi.circuit_operator(circuit_from_json(spec["circuit"],
                                                      pointer + "/circuit"))
    if "affine" in spec:
        aff = spec["affine"]
        return _vi.affine_operator(np.asarray(aff["W"], dtype=float),
                                   np.asarray(aff["c"], dtype=float))
    raise SchemaError("operator needs 'circuit' or 'affine'", pointer)


def load_utility(spec: dict, pointer: str):
    if "circuit" in spec:
        return _games.CircuitUtility(circuit_from_json(spec["circuit"],
                                                       pointer + "/circuit"))
    if "quadratic" in spec:
        q = spec["quadratic"]
        return _games.QuadraticUtility(np.asarray(q["W"], dtype=float),
                                       np.asarray(q["a"], dtype=float),
                                       float(q.get("b", 0.0)))
    raise SchemaError("utility needs 'circuit' or 'quadratic'", pointer)


def instantiate(pf: ProblemFile):
    """Build the in-memory problem object a payload describes."""
    p = pf.payload
    beta = pf.beta
    if pf.kind == "vi":
        return _vi.VIProblem(load_operator(p["operator"], "/payload/operator"),
                             body_from_json(p["set"], "/payload/set"),
                             beta=beta)
    if pf.kind == "qvi":
        body = body_from_json(p["set"], "/payload/set")
        return _vi.QVIProblem(
            load_operator(p["operator"], "/payload/operator"),
            _geo.constant_correspondence(body), beta=beta)
    if pf.kind == "gqvi":
        R = body_from_json(p["set"], "/payload/set")
        F = body_from_json(p["operator_set"], "/payload/operator_set")
        return _vi.GQVIProblem(
            _geo.constant_correspondence(F, dim_in=R.dim, domain=R.bbox),
            _geo.constant_correspondence(R),
            beta=beta, gamma=float(p.get("gamma", 0.0)))
    if pf.kind == "mvi":
        return _vi.MVIProblem(
            [load_operator(op, f"/payload/operators/{i}")
             for i, op in enumerate(p["operators"])],
            body_from_json(p["set"], "/payload/set"), beta=beta)
    if pf.kind == "game":
        return game_from_payload(p)
    if pf.kind == "mlf":
        return mlf_from_payload(p)
    if pf.kind == "cnf":
        return _games.CNF3(p["n"], tuple(tuple(c) for c in p["clauses"]))
    raise SchemaError(f"unknown kind {pf.kind!r}", "/kind")


def game_from_payload(p: dict):
    if "sv_meta" in p:
        meta = p["sv_meta"]
        phi = _games.CNF3(meta["n"], tuple(tuple(c) for c in meta["clauses"]))
        return _games.build_sv_game(phi, with_f=meta.get("with_f", False))
    if "payoff_matrices" in p:
        mats = p["payoff_matrices"]
        return _games.bimatrix_game(np.asarray(mats["A"], dtype=float),
                                    np.asarray(mats["B"], dtype=float))
    blocks = [np.asarray(b, dtype=int) for b in p["blocks"]]
    utilities = [load_utility(u, f"/payload/utilities/{i}")
                 for i, u in enumerate(p["utilities"])]
    sets = [body_from_json(s, f"/payload/strategy_sets/{i}")
            for i, s in enumerate(p["strategy_sets"])]
    common = body_from_json(p["common_constraint"], "/payload/common_constraint") \
        if p.get("common_constraint") else None
    return _games.ConcaveGame(blocks, utilities, sets,
                              common_constraint=common)


def mlf_from_payload(p: dict) -> _mlf.MLFGame:
    arr = lambda a: np.asarray(a, dtype=float)
    return _mlf.MLFGame(
        M=[arr(m) for m in p["M"]],
        A_I=[arr(a) for a in p["A_I"]],
        A_II=[arr(a) for a in p["A_II"]],
        B=[[arr(b) for b in row] for row in p["B"]],
        C_I=[arr(a) for a in p["C_I"]],
        C_II=[arr(a) for a in p["C_II"]],
        D=[arr(a) for a in p["D"]],
        c_maps=[(arr(cm["W"]), arr(cm["w0"])) for cm in p["c_maps"]],
        X_I=body_from_json(p["X_I"], "/payload/X_I"),
        X_II=body_from_json(p["X_II"], "/payload/X_II"),
        phi_I=load_utility(p["phi_I"], "/payload/phi_I"),
        phi_II=load_utility(p["phi_II"], "/payload/phi_II"),
        follower_boxes=[_geo.Box(bx["lo"], bx["hi"])
                        for bx in p["follower_boxes"]],
        multiplier_bound=float(p.get("multiplier_bound", 100.0)))


# ---------------------------------------------------------------------------
# Certificates


def certificate_to_json(cert) -> dict:
    if isinstance(cert, _vi.SolutionCertificate):
        return {"type": "solution", **cert.to_dict()}
    if isinstance(cert, _vi.ViolationCertificate):
        return {"type": "violation", **cert.to_dict()}
    raise SchemaError(f"cannot serialize certificate {type(cert).__name__}")


def certificate_from_json(doc: dict):
    if doc.get("type") == "solution":
        d = dict(doc)
        d.pop("type")
        return _vi.SolutionCertificate.from_dict(d)
    if doc.get("type") == "violation":
        d = dict(doc)
        d.pop("type")
        return _vi.ViolationCertificate.from_dict(d)
    raise SchemaError("unknown certificate type")

"""File formats: measure JSON, cost and function specs, reports and grid CSV.

Report JSON is deterministic: keys are sorted and floats use 17 significant
digits, so identical inputs give byte-identical output.
"""

import json
import math
import os
from pathlib import Path

import numpy as np

from . import hopflax
from .costs import add_costs, make_power_cost
from .errors import ParseError, WeakOTError
from .measures import DiscreteMeasure

__all__ = [
    "dumps_report",
    "format_float",
    "parse_cost",
    "parse_function",
    "parse_grid",
    "parse_measure",
    "serialize_measure",
    "write_grid_csv",
]


def _load_document(source):
    if isinstance(source, dict):
        return source
    if isinstance(source, os.PathLike) or (
            isinstance(source, str) and not source.lstrip().startswith("{")):
        path = Path(source)
        try:
            text = path.read_text()
        except OSError as exc:
            raise ParseError("path", f"cannot read {path}: {exc.strerror}") from exc
    else:
        text = source
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError("json", f"line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    if not isinstance(doc, dict):
        raise ParseError("json", "top level must be an object")
    return doc


def _number_array(doc, key):
    raw = doc[key]
    if not isinstance(raw, list) or not raw:
        raise ParseError(key, "must be a non-empty array of numbers")
    if not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in raw):
        raise ParseError(key, "entries must be numbers")
    arr = np.asarray(raw, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ParseError(key, "entries must be finite")
    return arr


def parse_measure(source):
    """Read a measure from a path, a JSON string or an already-loaded dict.

    The document has ``"atoms"`` and optionally ``"weights"``.  The result is
    normalized (sorted, merged, rescaled); normalized input is returned
    unchanged.

    Raises
    ------
    ParseError
        Naming the offending field.
    """
    doc = _load_document(source)
    if "atoms" not in doc:
        raise ParseError("atoms", "missing")
    atoms = _number_array(doc, "atoms")
    weights = None
    if doc.get("weights") is not None:
        weights = _number_array(doc, "weights")
        if weights.size != atoms.size:
            raise ParseError("weights",
                             f"{weights.size} weights for {atoms.size} atoms")
        if np.any(weights < 0):
            raise ParseError("weights", "must be non-negative")
        if not weights.sum() > 0:
            raise ParseError("weights", "total mass is zero")
    try:
        return DiscreteMeasure(atoms, weights)
    except WeakOTError as exc:
        raise ParseError("atoms", str(exc)) from exc


def serialize_measure(mu):
    """Dict form of a measure; :func:`parse_measure` inverts it exactly."""
    return {"atoms": mu.atoms.tolist(), "weights": mu.weights.tolist()}


def _spec_params(text, allowed, field):
    head, _, tail = text.partition(":")
    params = {}
    if tail:
        for item in tail.split(","):
            key, eq, val = item.partition("=")
            key = key.strip()
            if not eq or key not in allowed:
                raise ParseError(field, f"unexpected parameter {item!r} in {text!r}")
            try:
                params[key] = float(val)
            except ValueError as exc:
                raise ParseError(field, f"{key} is not a number in {text!r}") from exc
    return head.strip(), params


def parse_cost(text):
    """Cost grammar ``pow:p=<real>,scale=<real>``; ``+`` joins several terms.

    >>> parse_cost("pow:p=2").name
    'pow:p=2,scale=1'
    """
    terms = []
    for part in text.split("+"):
        head, params = _spec_params(part.strip(), {"p", "scale"}, "cost")
        if head != "pow":
            raise ParseError("cost", f"unknown cost family {head!r}")
        if "p" not in params:
            raise ParseError("cost", "pow needs p")
        try:
            terms.append(make_power_cost(params["p"], params.get("scale", 1.0)))
        except WeakOTError as exc:
            raise ParseError("cost", str(exc)) from exc
    return add_costs(*terms)


_FUNCTIONS = {
    "quadratic": (hopflax.quadratic, {"scale", "center"}),
    "linear": (hopflax.linear, {"slope"}),
    "constant": (hopflax.constant, {"c"}),
    "softplus": (hopflax.softplus, set()),
    "quartic": (hopflax.quartic, set()),
    "smooth_abs": (hopflax.smooth_abs, {"center", "eps"}),
    "hinge2": (hopflax.hinge_squared, {"center"}),
}


def parse_function(text):
    """Builtin convex function from ``name[:key=value,...]``.

    Names: quadratic (scale, center), linear (slope), constant (c),
    softplus, quartic, smooth_abs (center, eps), hinge2 (center).
    """
    name = text.partition(":")[0].strip()
    if name not in _FUNCTIONS:
        raise ParseError("f", f"unknown function {name!r}")
    factory, allowed = _FUNCTIONS[name]
    _, params = _spec_params(text, allowed, "f")
    if name == "linear" and "slope" not in params:
        raise ParseError("f", "linear needs slope")
    return factory(**params)


def parse_grid(text):
    """``min:max:step`` into a node array including both ends."""
    parts = text.split(":")
    if len(parts) != 3:
        raise ParseError("grid", f"expected min:max:step, got {text!r}")
    try:
        lo, hi, step = (float(p) for p in parts)
    except ValueError as exc:
        raise ParseError("grid", f"non-numeric entry in {text!r}") from exc
    if not (step > 0 and hi >= lo and math.isfinite(lo) and math.isfinite(hi)):
        raise ParseError("grid", "need finite min <= max and step > 0")
    count = int(round((hi - lo) / step)) + 1
    return lo + step * np.arange(count)


def format_float(x):
    """17 significant digits, always with a decimal point or exponent."""
    x = float(x)
    if math.isnan(x):
        return '"nan"'
    if math.isinf(x):
        return '"inf"' if x > 0 else '"-inf"'
    text = format(x, ".17g")
    if not any(c in text for c in ".en"):
        text += ".0"
    return text


def _emit(obj, indent, level):
    pad = " " * (indent * (level + 1))
    close = " " * (indent * level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_emit(obj[k], indent, level + 1)}"
                 for k in sorted(obj, key=str)]
        return "{\n" + ",\n".join(items) + "\n" + close + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if not any(isinstance(v, (dict, list, tuple, np.ndarray)) for v in obj):
            return "[" + ", ".join(_emit(v, indent, level + 1) for v in obj) + "]"
        items = [f"{pad}{_emit(v, indent, level + 1)}" for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + close + "]"
    if isinstance(obj, np.ndarray):
        return _emit(obj.tolist(), indent, level)
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return format_float(obj)
    return json.dumps(str(obj))


def dumps_report(report, indent=2):
    """Deterministic JSON text for a report tree, newline terminated."""
    return _emit(report, indent, 0) + "\n"


def write_grid_csv(stream, grid, values):
    """Write ``x,value`` rows with LF line endings."""
    stream.write("x,value\n")
    for x, v in zip(np.asarray(grid).tolist(), np.asarray(values).tolist()):
        stream.write(f"{format_float(x)},{format_float(v)}\n".replace('"', ""))

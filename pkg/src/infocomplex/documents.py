"""JSON documents for problems, protocols and receipts.

Floats are written with 17 significant digits so every probability survives
a dump/load round trip bit for bit.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .belief import ProblemInstance, Signal
from .protocol import Inner, Leaf, Node


class DocumentError(ValueError):
    """A document failed to parse or validate; the message names the location."""


def protocol_to_doc(root: Node) -> dict:
    if isinstance(root, Leaf):
        return {"out": int(root.out)}
    return {
        "owner": root.signal.owner,
        "probs": list(root.signal.probs),
        "c0": protocol_to_doc(root.c0),
        "c1": protocol_to_doc(root.c1),
    }


def protocol_from_doc(doc, path: str = "$") -> Node:
    if not isinstance(doc, dict):
        raise DocumentError(f"{path}: expected an object")
    if "out" in doc:
        out = doc["out"]
        if isinstance(out, bool) or not isinstance(out, int) or out < 0:
            raise DocumentError(f"{path}.out: expected a nonnegative integer label")
        return Leaf(out)
    for key in ("owner", "probs", "c0", "c1"):
        if key not in doc:
            raise DocumentError(f"{path}: inner node is missing {key!r}")
    probs = doc["probs"]
    if not isinstance(probs, list) or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in probs):
        raise DocumentError(f"{path}.probs: expected a list of numbers")
    try:
        sig = Signal(doc["owner"], tuple(float(x) for x in probs))
    except ValueError as exc:
        raise DocumentError(f"{path}: {exc}") from None
    return Inner(sig, protocol_from_doc(doc["c0"], path + ".c0"), protocol_from_doc(doc["c1"], path + ".c1"))


def problem_to_doc(inst: ProblemInstance) -> dict:
    return {
        "A": inst.size_a,
        "B": inst.size_b,
        "f": inst.truth.tolist(),
        "mu": inst.mu.tolist(),
    }


def problem_from_doc(doc) -> ProblemInstance:
    if not isinstance(doc, dict):
        raise DocumentError("$: expected an object")
    for key in ("A", "B", "f", "mu"):
        if key not in doc:
            raise DocumentError(f"$: missing {key!r}")
    size_a, size_b = doc["A"], doc["B"]
    for key, val in (("A", size_a), ("B", size_b)):
        if isinstance(val, bool) or not isinstance(val, int) or val < 1:
            raise DocumentError(f"$.{key}: expected a positive integer")
    for key in ("f", "mu"):
        mat = doc[key]
        if not isinstance(mat, list) or len(mat) != size_a:
            raise DocumentError(f"$.{key}: expected {size_a} rows")
        for i, row in enumerate(mat):
            if not isinstance(row, list) or len(row) != size_b:
                raise DocumentError(f"$.{key}[{i}]: expected {size_b} entries")
    try:
        return ProblemInstance(np.array(doc["f"]), np.array(doc["mu"], dtype=float))
    except (ValueError, TypeError) as exc:
        raise DocumentError(f"$: {exc}") from None


def dumps(obj, indent: int | None = None) -> str:
    """JSON text with floats printed to 17 significant digits."""
    return _emit(_plain(obj), indent, 0)


def loads(text: str, source: str = "<document>"):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise DocumentError(f"{source}:{exc.lineno}:{exc.colno}: {exc.msg}") from None


def load_file(path) -> object:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise DocumentError(f"{path}: {exc.strerror}") from None
    return loads(text, str(path))


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    return obj


def _emit(obj, indent, level) -> str:
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        if not math.isfinite(obj):
            return json.dumps(str(obj))
        text = format(obj, ".17g")
        if all(ch in "-0123456789" for ch in text):
            text += ".0"
        return text
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, list):
        items = [_emit(v, indent, level + 1) for v in obj]
        if indent is None or all(not isinstance(v, (dict, list)) for v in obj):
            return "[" + ", ".join(items) + "]"
        pad = "\n" + " " * (indent * (level + 1))
        return "[" + pad + ("," + pad).join(items) + "\n" + " " * (indent * level) + "]"
    if isinstance(obj, dict):
        items = [json.dumps(k) + ": " + _emit(v, indent, level + 1) for k, v in obj.items()]
        if indent is None:
            return "{" + ", ".join(items) + "}"
        pad = "\n" + " " * (indent * (level + 1))
        return "{" + pad + ("," + pad).join(items) + "\n" + " " * (indent * level) + "}"
    raise TypeError(f"cannot serialize {type(obj).__name__}")

"""Weight file I/O and deterministic JSON serialisation.

Weight files are JSON objects {"dims": [n1, ..., nd], "samples": [...]} with
strictly positive finite samples in row-major cell order; for d = 1 a CSV
file (one sample per line, extension .csv) is also accepted. Numbers are
written with 17 significant digits, which round-trips doubles exactly.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import InvalidWeight
from .weights import GridWeight

__all__ = ["read_weight", "write_weight", "weight_to_dict", "weight_from_dict", "dumps_17"]


def _format_float(x: float) -> str:
    if isinstance(x, bool):  # guard: bool is an int subclass
        raise TypeError("bool is not a float")
    if not np.isfinite(x):
        raise ValueError(f"cannot serialise non-finite number {x!r}")
    s = format(float(x), ".17g")
    if "." not in s and "e" not in s and "E" not in s:
        s += ".0"
    return s


def dumps_17(obj, indent: int = 2) -> str:
    """JSON text with floats at 17 significant digits (round-trip exact)."""

    def render(node, depth: int) -> str:
        pad = " " * (indent * depth)
        inner = " " * (indent * (depth + 1))
        if node is None:
            return "null"
        if isinstance(node, bool) or isinstance(node, np.bool_):
            return "true" if node else "false"
        if isinstance(node, (int, np.integer)):
            return str(int(node))
        if isinstance(node, (float, np.floating)):
            return _format_float(float(node))
        if isinstance(node, str):
            return json.dumps(node)
        if isinstance(node, dict):
            if not node:
                return "{}"
            items = [
                f"{inner}{json.dumps(str(k))}: {render(v, depth + 1)}"
                for k, v in node.items()
            ]
            return "{\n" + ",\n".join(items) + "\n" + pad + "}"
        if isinstance(node, (list, tuple, np.ndarray)):
            seq = list(node)
            if not seq:
                return "[]"
            items = [f"{inner}{render(v, depth + 1)}" for v in seq]
            return "[\n" + ",\n".join(items) + "\n" + pad + "]"
        raise TypeError(f"cannot serialise {type(node).__name__}")

    return render(obj, 0)


def weight_to_dict(w: GridWeight) -> dict:
    return {"dims": list(w.dims), "samples": [float(v) for v in w.flat]}


def weight_from_dict(data) -> GridWeight:
    if not isinstance(data, dict):
        raise InvalidWeight("weight file must contain a JSON object")
    if "dims" not in data or "samples" not in data:
        raise InvalidWeight('weight file must have "dims" and "samples" keys')
    return GridWeight(data["dims"], data["samples"])


def read_weight(path) -> GridWeight:
    """Read a weight file; .csv means one sample per line (d = 1)."""
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    if path.suffix.lower() == ".csv":
        samples = []
        for lineno, line in enumerate(text.splitlines(), start=1):
            line = line.strip()
            if not line:
                continue
            try:
                samples.append(float(line))
            except ValueError as exc:
                raise InvalidWeight(f"{path}:{lineno}: not a number: {line!r}") from exc
        if not samples:
            raise InvalidWeight(f"{path}: no samples")
        return GridWeight((len(samples),), samples)
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InvalidWeight(f"{path}: invalid JSON: {exc}") from exc
    return weight_from_dict(data)


def write_weight(w: GridWeight, path) -> None:
    Path(path).write_text(dumps_17(weight_to_dict(w)) + "\n", encoding="utf-8")

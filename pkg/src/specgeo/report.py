"""Deterministic JSON/CSV emission with a metadata header.

Floats are written with 17 significant digits so every value re-parses to the
same double; NaN and infinities are rejected rather than written.
"""

from __future__ import annotations

import enum
import json
import math
from fractions import Fraction
from typing import Any, Mapping, Sequence

import numpy as np

from . import __version__


class ReportError(ValueError):
    """A value cannot be represented in a report (NaN, infinity, unknown type)."""


def fmt_float(x: float) -> str:
    if not math.isfinite(x):
        raise ReportError(f"non-finite value {x!r} cannot be emitted")
    s = format(x, ".17g")
    if not any(ch in s for ch in ".en"):
        s += ".0"
    return s


def plain(obj: Any) -> Any:
    """Convert results into JSON-ready builtins; complex values become {re, im}."""
    if obj is None or isinstance(obj, (bool, str)):
        return obj
    if isinstance(obj, enum.Enum):
        return plain(obj.value)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating, Fraction)):
        x = float(obj)
        if not math.isfinite(x):
            raise ReportError(f"non-finite value {x!r} cannot be emitted")
        return x
    if isinstance(obj, (complex, np.complexfloating)):
        z = complex(obj)
        return {"re": plain(z.real), "im": plain(z.imag)}
    if isinstance(obj, np.ndarray):
        return [plain(v) for v in obj.tolist()]
    if hasattr(obj, "to_dict"):
        return plain(obj.to_dict())
    if isinstance(obj, Mapping):
        return {str(k): plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [plain(v) for v in obj]
    raise ReportError(f"cannot serialize {type(obj).__name__}")


def _json(obj: Any, indent: int) -> str:
    pad, inner = "  " * indent, "  " * (indent + 1)
    if obj is None:
        return "null"
    if obj is True:
        return "true"
    if obj is False:
        return "false"
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return fmt_float(obj)
    if isinstance(obj, str):
        return json.dumps(obj, ensure_ascii=True)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{inner}{json.dumps(k)}: {_json(v, indent + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, list):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list)) for v in obj):
            return "[" + ", ".join(_json(v, 0) for v in obj) + "]"
        return "[\n" + ",\n".join(inner + _json(v, indent + 1) for v in obj) + "\n" + pad + "]"
    raise ReportError(f"cannot serialize {type(obj).__name__}")


def metadata(command: str, config: Mapping, tolerances: Mapping) -> dict:
    return {
        "toolkit": "specgeo",
        "version": __version__,
        "command": command,
        "config": plain(dict(config)),
        "tolerances": plain(dict(tolerances)),
    }


def to_json(meta: Mapping, result: Any) -> str:
    return _json({"meta": plain(meta), "result": plain(result)}, 0) + "\n"


def _cell(v: Any) -> str:
    v = plain(v)
    if isinstance(v, float):
        return fmt_float(v)
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (dict, list)):
        raise ReportError("CSV cells must be scalars")
    s = str(v)
    if any(ch in s for ch in ',"\n'):
        s = '"' + s.replace('"', '""') + '"'
    return s


def _flatten(prefix: str, v: Any, out: list[tuple[str, str]]) -> None:
    if isinstance(v, dict):
        for k, w in v.items():
            _flatten(f"{prefix}.{k}" if prefix else k, w, out)
    elif isinstance(v, list):
        out.append((prefix, json.dumps(v, separators=(",", ":")) if not v else _json(v, 0)))
    else:
        out.append((prefix, _cell(v)))


def to_csv(meta: Mapping, columns: Sequence[str], rows: Sequence[Sequence[Any]], summary: Mapping | None = None) -> str:
    """Metadata and summary values as '# key: value' comment lines, then the table."""
    lines = []
    flat: list[tuple[str, str]] = []
    _flatten("meta", plain(meta), flat)
    if summary:
        _flatten("summary", plain(summary), flat)
    lines += [f"# {k}: {v}" for k, v in flat]
    lines.append(",".join(columns))
    for row in rows:
        if len(row) != len(columns):
            raise ReportError("row length does not match the header")
        lines.append(",".join(_cell(v) for v in row))
    return "\n".join(lines) + "\n"


def read_csv_table(text: str) -> tuple[dict[str, str], list[str], list[list[str]]]:
    """Inverse of :func:`to_csv` for scalar cells: (comment map, header, rows)."""
    import csv
    import io

    comments, body = {}, []
    for line in text.splitlines():
        if line.startswith("# "):
            k, _, v = line[2:].partition(": ")
            comments[k] = v
        elif line:
            body.append(line)
    rows = list(csv.reader(io.StringIO("\n".join(body))))
    return comments, rows[0], rows[1:]


def write_text(text: str, path: str | None) -> None:
    """Write with LF line endings; ``None`` means stdout."""
    if path is None:
        import sys

        sys.stdout.write(text)
        sys.stdout.flush()
        return
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)

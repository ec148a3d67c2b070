"""Canonical JSON: fixed float formatting for byte-stable files.

The stdlib encoder formats floats with repr, which is already
deterministic, but the store contract pins the representation to 17
significant digits so readers in any language can reproduce the bytes.
This emitter writes %.17g for every float, sorts object keys, uses
compact separators, and refuses non-finite numbers: nothing in a results
store may be NaN or infinite, and a crash here beats a silently invalid
file.
"""

from __future__ import annotations

import json
import math

__all__ = ["dumps_canonical", "loads"]


def _emit(obj, out) -> None:
    if obj is None:
        out.append("null")
    elif obj is True:
        out.append("true")
    elif obj is False:
        out.append("false")
    elif isinstance(obj, int):
        out.append(str(obj))
    elif isinstance(obj, float):
        if not math.isfinite(obj):
            raise ValueError(f"non-finite number {obj!r} in canonical JSON")
        out.append("%.17g" % obj)
    elif isinstance(obj, str):
        out.append(json.dumps(obj, ensure_ascii=True))
    elif isinstance(obj, dict):
        out.append("{")
        first = True
        for k in sorted(obj):
            if not isinstance(k, str):
                raise TypeError(f"object keys must be strings, got {k!r}")
            if not first:
                out.append(",")
            first = False
            out.append(json.dumps(k, ensure_ascii=True))
            out.append(":")
            _emit(obj[k], out)
        out.append("}")
    elif isinstance(obj, (list, tuple)):
        out.append("[")
        for i, v in enumerate(obj):
            if i:
                out.append(",")
            _emit(v, out)
        out.append("]")
    else:
        raise TypeError(f"cannot canonicalize {type(obj).__name__}")


def dumps_canonical(obj) -> str:
    """Serialize to canonical JSON (sorted keys, %.17g floats, compact)."""
    out: list = []
    _emit(obj, out)
    return "".join(out)


def loads(text: str):
    return json.loads(text)

"""Machine-readable run reports and CSV value tables.

Non-finite numbers are written as the strings ``"-inf"``, ``"inf"`` and
``"nan"``; a large negative sentinel is never used.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Any, Iterable, Optional, Sequence

from .errors import FormatError

SCHEMA_VERSION = 1
# string-valued fields that must never be read back as numbers
_TEXT_KEYS = frozenset({"node", "id", "parent", "state", "command", "payoff", "failing",
                        "ip_nodes", "kind", "method", "file", "error", "reason"})
_ORDER = ("schema_version", "command", "market", "result", "verdicts", "surface",
          "certificates", "timing")


def format_number(x: float) -> str:
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "-inf" if x < 0 else "inf"
    return format(x, ".17g")


def _encode(obj):
    if isinstance(obj, bool) or obj is None or isinstance(obj, str):
        return obj
    if isinstance(obj, int):
        return obj
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else format_number(obj)
    if isinstance(obj, dict):
        return {str(k): _encode(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_encode(v) for v in obj]
    if hasattr(obj, "item"):
        return _encode(obj.item())
    if hasattr(obj, "tolist"):
        return _encode(obj.tolist())
    raise FormatError(f"cannot serialise {type(obj).__name__}")


def _decode(obj, key: Optional[str] = None):
    if key in _TEXT_KEYS:
        return obj
    if isinstance(obj, str) and obj in ("-inf", "inf", "nan"):
        return float(obj)
    if isinstance(obj, dict):
        return {k: _decode(v, k) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_decode(v, key) for v in obj]
    return obj


@dataclass
class RunReport:
    """Everything one CLI invocation computed, in a fixed field order."""

    command: list[str]
    market: Optional[dict] = None
    result: dict = field(default_factory=dict)
    verdicts: list[dict] = field(default_factory=list)
    surface: list[dict] = field(default_factory=list)
    certificates: list[dict] = field(default_factory=list)
    timing: dict = field(default_factory=dict)
    schema_version: int = SCHEMA_VERSION

    def to_dict(self) -> dict:
        return {k: _encode(getattr(self, k)) for k in _ORDER}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, ensure_ascii=False) + "\n"

    @classmethod
    def from_dict(cls, doc: dict) -> "RunReport":
        if not isinstance(doc, dict):
            raise FormatError("report must be an object")
        missing = [k for k in _ORDER if k not in doc]
        if missing:
            raise FormatError(f"report lacks fields {missing}")
        extra = sorted(set(doc) - set(_ORDER))
        if extra:
            raise FormatError(f"unknown report fields {extra}")
        if doc["schema_version"] != SCHEMA_VERSION:
            raise FormatError(f"unsupported schema version {doc['schema_version']!r}")
        decoded = {k: _decode(doc[k], k) for k in _ORDER}
        return cls(**decoded)

    @classmethod
    def from_json(cls, text: str) -> "RunReport":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise FormatError(f"report is not valid JSON: {exc}") from None
        return cls.from_dict(doc)


def table_to_csv(header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    """CSV text with floats written at full precision and infinities as literals."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        out = []
        for v in row:
            if v is None:
                out.append("")
            elif isinstance(v, float):
                out.append("" if math.isnan(v) else format_number(v))
            else:
                out.append(v)
        writer.writerow(out)
    return buf.getvalue()

"""Report envelopes and their JSON / CSV renderings."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass
from datetime import datetime, timezone
from typing import Any

import numpy as np

from . import __version__


def _default(o: Any):
    if isinstance(o, np.bool_):
        return bool(o)
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, complex):
        return [o.real, o.imag]
    raise TypeError(f"cannot serialize {type(o).__name__}")


def dumps(obj: Any) -> str:
    """JSON with shortest round-trip float repr (bit-exact on reload)."""
    return json.dumps(obj, default=_default, indent=2, sort_keys=False, allow_nan=True)


def payload_bytes(payload: Any) -> bytes:
    return json.dumps(payload, default=_default, sort_keys=True, separators=(",", ":")).encode()


@dataclass
class ReportEnvelope:
    spec: dict
    payload: Any
    version: str = __version__
    timestamp: str = ""

    def __post_init__(self):
        if not self.timestamp:
            self.timestamp = datetime.now(timezone.utc).isoformat(timespec="seconds")

    def to_dict(self) -> dict:
        return {"version": self.version, "timestamp": self.timestamp,
                "spec": self.spec, "payload": self.payload}

    def to_json(self) -> str:
        return dumps(self.to_dict())


def _fmt(v: Any) -> str:
    if isinstance(v, bool) or v is None:
        return str(v).lower() if v is not None else ""
    if isinstance(v, float):
        return repr(v) if math.isfinite(v) else str(v)
    return str(v)


def table_csv(columns: list[str], rows: list[list[Any]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    return buf.getvalue()


def flatten(obj: Any, prefix: str = "") -> list[tuple[str, Any]]:
    """Dotted-path leaves of a nested payload (state arrays kept as JSON text)."""
    out = []
    if isinstance(obj, dict):
        for k, v in obj.items():
            out += flatten(v, f"{prefix}.{k}" if prefix else str(k))
    elif isinstance(obj, list) and obj and all(isinstance(x, dict) for x in obj):
        for i, v in enumerate(obj):
            out += flatten(v, f"{prefix}[{i}]")
    elif isinstance(obj, list):
        out.append((prefix, json.dumps(obj, default=_default)))
    else:
        out.append((prefix, obj))
    return out


def payload_csv(payload: Any) -> str:
    """CSV rendering: tables keep their columns, anything else becomes key,value rows."""
    if isinstance(payload, dict) and "columns" in payload and "rows" in payload:
        return table_csv(payload["columns"], payload["rows"])
    return table_csv(["key", "value"], [[k, v] for k, v in flatten(payload)])


def spec_dict(spec) -> dict:
    return asdict(spec)

"""Run artifacts: delimited tables, summary JSON and binary field dumps.

Determinism contract: CSV files and field dumps are byte-identical across
re-runs of the same configuration.  Floats are printed with 17 significant
digits (round-trip exact for IEEE doubles); the summary JSON is written
with sorted keys, but carries wall-clock timings and is therefore the one
artifact excluded from the byte-identity guarantee.

Field dump layout (little-endian): int32 n0, int32 n1 (array shape),
float64 h, float64 lambda, then n0*n1 float64 values in row-major order.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .errors import DomainError

__all__ = [
    "fmt_float",
    "write_csv",
    "update_summary",
    "read_summary",
    "write_field_dump",
    "read_field_dump",
]


def fmt_float(x) -> str:
    """17-significant-digit decimal form (exact double round trip)."""
    return f"{float(x):.17g}"


def _cell(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return fmt_float(value)


def write_csv(path: str | Path, header: list[str], rows) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_cell(v) for v in row))
    path.write_text("\n".join(lines) + "\n")


def _json_safe(value):
    if isinstance(value, dict):
        return {str(k): _json_safe(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_safe(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_json_safe(v) for v in value.tolist()]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        return float(value)
    return value


def update_summary(path: str | Path, section: str, payload: dict) -> None:
    """Insert or replace one top-level section of the run summary.

    Each subcommand owns its own section, so successive commands in the
    same run directory accumulate without touching each other's results.
    """
    path = Path(path)
    data = read_summary(path) if path.exists() else {}
    data[section] = _json_safe(payload)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(data, sort_keys=True, indent=2) + "\n")


def read_summary(path: str | Path) -> dict:
    return json.loads(Path(path).read_text())


def write_field_dump(path: str | Path, array: np.ndarray, h: float,
                     lam: float) -> None:
    array = np.asarray(array, dtype=float)
    if array.ndim != 2:
        raise DomainError("field dumps hold one 2-d grid array")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as fh:
        fh.write(struct.pack("<ii", array.shape[0], array.shape[1]))
        fh.write(struct.pack("<dd", float(h), float(lam)))
        fh.write(array.astype("<f8").tobytes(order="C"))


def read_field_dump(path: str | Path) -> tuple[np.ndarray, float, float]:
    raw = Path(path).read_bytes()
    n0, n1 = struct.unpack_from("<ii", raw, 0)
    h, lam = struct.unpack_from("<dd", raw, 8)
    data = np.frombuffer(raw, dtype="<f8", count=n0 * n1, offset=24)
    return data.reshape(n0, n1).copy(), h, lam

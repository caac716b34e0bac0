# reports.py – JSON/CSV/Excel writers for verification, simulation and reduction runs
"""Single-writer output layer.
----------------------------------------------------------------
* JSON: floats with 17 significant digits, complex as [re, im], NaN/inf as null
* the header carries the only timestamp, so identical runs differ only there
* trajectories go to CSV through pandas; an optional summary.xlsx goes through openpyxl
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import asdict, is_dataclass
from datetime import datetime, timezone
from enum import Enum
from pathlib import Path

import numpy as np
import pandas as pd

from lax import PhaseState, state_from_json, state_to_json

logger = logging.getLogger(__name__)

# ───────── constants ─────────
FLOAT_FORMAT   = "%.17g"
TOOL_NAME      = "laxtops"
FORMAT_VERSION = 1
SHEET_NAME_MAX = 31


# ───────── plain values ─────────
def to_plain(obj):
    """Reduce reports, arrays and complex numbers to JSON-shaped Python values."""
    if hasattr(obj, "to_dict"):
        return to_plain(obj.to_dict())
    if is_dataclass(obj) and not isinstance(obj, type):
        return to_plain(asdict(obj))
    if isinstance(obj, Enum):
        return obj.value
    if isinstance(obj, dict):
        return {str(k): to_plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_plain(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return [float(obj.real), float(obj.imag)]
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    if isinstance(obj, Path):
        return str(obj)
    return obj


def _format(obj, indent: int, level: int) -> str:
    pad, inner = " " * (indent * level), " " * (indent * (level + 1))
    if obj is None:
        return "null"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return "null" if not math.isfinite(obj) else FLOAT_FORMAT % obj
    if isinstance(obj, str):
        return json.dumps(obj, ensure_ascii=False)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{inner}{json.dumps(k, ensure_ascii=False)}: {_format(v, indent, level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, list):
        if not obj:
            return "[]"
        # numeric leaves stay on one line
        if all(isinstance(v, (int, float)) or v is None for v in obj):
            return "[" + ", ".join(_format(v, indent, level + 1) for v in obj) + "]"
        return "[\n" + ",\n".join(inner + _format(v, indent, level + 1) for v in obj) + "\n" + pad + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj, indent: int = 2) -> str:
    return _format(to_plain(obj), indent, 0) + "\n"


def header(command: str, config: dict | None = None) -> dict:
    return {
        "tool": TOOL_NAME,
        "format": FORMAT_VERSION,
        "command": command,
        "created": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "config": config or {},
    }


def write_json(path: str | Path, payload) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps(payload), encoding="utf-8")
    logger.info("Wrote %s", path)
    return path


def write_report(path: str | Path, command: str, config: dict | None, body: dict) -> Path:
    return write_json(path, {"header": header(command, config), **body})


# ───────── state snapshots ─────────
def save_state(path: str | Path, state: PhaseState) -> Path:
    return write_json(path, state_to_json(state))


def load_state(path: str | Path) -> PhaseState:
    return state_from_json(json.loads(Path(path).read_text(encoding="utf-8")))


# ───────── tables ─────────
def trajectory_frame(trajectory, z_samples, orders) -> pd.DataFrame:
    """One row per recorded time: t, q_i, I_k(z_a) (re/im) and the rank-one defect."""
    rows = []
    for t, state, values, defect in zip(trajectory.times, trajectory.states,
                                        trajectory.invariants, trajectory.rank1):
        row = {"t": t}
        for i, q in enumerate(state.q):
            row[f"q{i}_re"], row[f"q{i}_im"] = q.real, q.imag
        for a in range(len(z_samples)):
            for b, k in enumerate(orders):
                row[f"I{k}_z{a}_re"], row[f"I{k}_z{a}_im"] = values[a, b].real, values[a, b].imag
        row["rank1_defect"] = defect
        rows.append(row)
    return pd.DataFrame(rows)


def write_csv(path: str | Path, frame: pd.DataFrame) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT)
    logger.info("Wrote %s (%d rows)", path, len(frame))
    return path


def _flatten_rows(rows: list[dict]) -> pd.DataFrame:
    flat = []
    for row in rows:
        out = {}
        for key, value in to_plain(row).items():
            if isinstance(value, (list, dict)):
                out[key] = dumps(value).strip()
            else:
                out[key] = value
        flat.append(out)
    return pd.DataFrame(flat)


def write_xlsx(path: str | Path, tables: dict[str, list[dict] | pd.DataFrame]) -> Path:
    """One sheet per table; list and dict cells are stored as JSON text."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with pd.ExcelWriter(path, engine="openpyxl") as w:
        for name, table in tables.items():
            frame = table if isinstance(table, pd.DataFrame) else _flatten_rows(table)
            frame.to_excel(w, index=False, sheet_name=name[:SHEET_NAME_MAX])
    logger.info("Wrote %s (%d sheets)", path, len(tables))
    return path

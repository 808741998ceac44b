"""Reader for the harness CSV layout: config header line, meta line, table.

Values parse to float when possible; the reader holds no dependency on the
producing package, only on its documented file format.
"""
from __future__ import annotations

import json
from pathlib import Path


class FigureInputError(ValueError):
    pass


def _coerce(s: str):
    if s == "":
        return None
    try:
        return float(s)
    except ValueError:
        if s == "true":
            return True
        if s == "false":
            return False
        return s


def read_table(path) -> tuple[dict, list[dict]]:
    path = Path(path)
    if not path.exists():
        raise FigureInputError(f"input file {path} does not exist")
    lines = path.read_text(encoding="utf-8").splitlines()
    if len(lines) < 3 or not lines[0].startswith("# config: "):
        raise FigureInputError(f"{path} is not a harness CSV (missing config header)")
    snapshot = json.loads(lines[0][len("# config: "):])
    header = lines[2].split(",")
    rows = []
    for line in lines[3:]:
        if not line.strip():
            continue
        rows.append({k: _coerce(v) for k, v in zip(header, line.split(","))})
    if not rows:
        raise FigureInputError(f"{path} contains no data rows")
    return snapshot, rows


def column(rows: list[dict], name: str) -> list:
    if not rows or name not in rows[0]:
        have = sorted(rows[0]) if rows else []
        raise FigureInputError(f"missing column {name!r}; available: {have}")
    return [r[name] for r in rows]


def groups(rows: list[dict], key: str) -> dict:
    out: dict = {}
    for r in rows:
        out.setdefault(r[key], []).append(r)
    return out

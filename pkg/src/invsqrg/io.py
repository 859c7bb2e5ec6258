"""Deterministic CSV/JSON table output with a versioned provenance header.

CSV files carry exactly one '#'-prefixed header line naming the format
version, the producing command, the columns with units, and every input that
went into the run; JSON files mirror the same structure.  Floats are written
with shortest round-trip representation, so rerunning a command with the same
configuration produces byte-identical files.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

FORMAT = "invsqrg.table.v1"

__all__ = ["FORMAT", "Table", "write_table", "read_table"]


@dataclass
class Table:
    command: str
    columns: list[tuple[str, str]]  # (name, unit)
    meta: dict
    rows: list[list]


def _fmt_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _cell(v) -> str:
    if isinstance(v, float):
        if math.isnan(v):
            return "nan"
        return repr(v)
    if isinstance(v, int):
        return str(v)
    s = str(v)
    if "," in s or "\n" in s or "#" in s:
        raise ValueError(f"cell value {s!r} not representable in this CSV dialect")
    return s


def write_table(path, table: Table, fmt: str = "csv") -> None:
    if fmt == "csv":
        cols = ",".join(f"{name}[{unit}]" for name, unit in table.columns)
        meta = " ".join(
            f"{k}={_fmt_value(v)}" for k, v in sorted(table.meta.items())
        )
        lines = [f"# {FORMAT} command={table.command} columns={cols} {meta}".rstrip()]
        for row in table.rows:
            lines.append(",".join(_cell(v) for v in row))
        data = "\n".join(lines) + "\n"
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(data)
    elif fmt == "json":
        doc = {
            "format": FORMAT,
            "command": table.command,
            "columns": [{"name": n, "unit": u} for n, u in table.columns],
            "meta": {k: table.meta[k] for k in sorted(table.meta)},
            "rows": table.rows,
        }
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, sort_keys=True, indent=1)
            fh.write("\n")
    else:
        raise ValueError(f"unknown format {fmt!r} (expected csv or json)")


def _parse_cell(s: str):
    try:
        return int(s)
    except ValueError:
        pass
    try:
        return float(s)
    except ValueError:
        return s


def read_table(path) -> Table:
    """Parse a file written by ``write_table`` (either format)."""
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    if text.lstrip().startswith("{"):
        doc = json.loads(text)
        if doc.get("format") != FORMAT:
            raise ValueError(f"unexpected format marker {doc.get('format')!r}")
        return Table(
            command=doc["command"],
            columns=[(c["name"], c["unit"]) for c in doc["columns"]],
            meta=doc["meta"],
            rows=doc["rows"],
        )
    lines = text.splitlines()
    if not lines or not lines[0].startswith("# "):
        raise ValueError("missing header line")
    header = lines[0][2:]
    fields = header.split(" ")
    if fields[0] != FORMAT:
        raise ValueError(f"unexpected format marker {fields[0]!r}")
    command = ""
    columns: list[tuple[str, str]] = []
    meta: dict = {}
    for field in fields[1:]:
        if not field:
            continue
        key, _, value = field.partition("=")
        if key == "command":
            command = value
        elif key == "columns":
            for spec in value.split(","):
                name, _, unit = spec.partition("[")
                columns.append((name, unit.rstrip("]")))
        else:
            if value == "true":
                meta[key] = True
            elif value == "false":
                meta[key] = False
            else:
                meta[key] = _parse_cell(value)
    rows = [
        [_parse_cell(cell) for cell in line.split(",")]
        for line in lines[1:]
        if line
    ]
    return Table(command=command, columns=columns, meta=meta, rows=rows)

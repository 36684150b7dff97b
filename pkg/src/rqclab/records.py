"""Run records and their CSV / JSON serialization.

Output bytes depend only on (config, seed, version): no timestamps, no
wall-time (that goes to stderr), fixed column order, ``repr`` floats.
"""
from __future__ import annotations

import csv
import io
import json
import math
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .schema import SCHEMA_VERSION, columns


@dataclass
class RunRecord:
    command: str
    config: dict
    tables: dict[str, list[dict]] = field(default_factory=dict)
    summary: dict = field(default_factory=dict)

    def add(self, table: str, rows) -> None:
        cols = columns(table)
        bucket = self.tables.setdefault(table, [])
        for row in rows:
            missing = set(cols) - set(row)
            extra = set(row) - set(cols)
            if missing or extra:
                raise KeyError(f"table {table}: missing {sorted(missing)}, unexpected {sorted(extra)}")
            bucket.append(row)


def _plain(v):
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else ("inf" if v > 0 else "-inf" if v < 0 else "nan")
    if isinstance(v, Fraction):
        return str(v)
    if isinstance(v, dict):
        return {str(k): _plain(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_plain(x) for x in v]
    return v


def _cell(v) -> str:
    v = _plain(v)
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (dict, list)):
        return json.dumps(v, sort_keys=True, separators=(",", ":"))
    return str(v)


# execution details that must not change the output bytes
_NOT_ECHOED = ("workers", "output")


def to_json(record: RunRecord) -> str:
    config = {k: v for k, v in record.config.items() if k not in _NOT_ECHOED}
    doc = {
        "command": record.command,
        "version": __version__,
        "schema": SCHEMA_VERSION,
        "config": _plain(config),
        "summary": _plain(record.summary),
        "tables": {name: [{c: _plain(r[c]) for c in columns(name)} for r in rows]
                   for name, rows in record.tables.items()},
    }
    return json.dumps(doc, indent=2, sort_keys=False) + "\n"


def table_csv(name: str, rows: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    cols = columns(name)
    w.writerow(cols)
    for r in rows:
        w.writerow([_cell(r[c]) for c in cols])
    return buf.getvalue()


def to_csv(record: RunRecord) -> str:
    """All tables in one stream; with several tables each block starts with ``# table: name``."""
    if len(record.tables) == 1:
        (name, rows), = record.tables.items()
        return table_csv(name, rows)
    return "\n".join(f"# table: {name}\n" + table_csv(name, rows) for name, rows in record.tables.items())


def write(record: RunRecord, fmt: str, output: str | None) -> list[Path]:
    """Write to ``output`` (or stdout when None or '-').  Several CSV tables go to
    ``<stem>.<table>.csv`` next to ``output``."""
    if fmt == "json":
        text = to_json(record)
        if output in (None, "-"):
            sys.stdout.write(text)
            return []
        Path(output).write_text(text)
        return [Path(output)]
    if output in (None, "-"):
        sys.stdout.write(to_csv(record))
        return []
    out = Path(output)
    if len(record.tables) <= 1:
        out.write_text(to_csv(record) if record.tables else "")
        return [out]
    paths = []
    for name, rows in record.tables.items():
        p = out.with_name(f"{out.stem}.{name}{out.suffix or '.csv'}")
        p.write_text(table_csv(name, rows))
        paths.append(p)
    return paths

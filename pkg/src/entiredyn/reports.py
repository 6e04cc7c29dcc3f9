"""CSV and JSON writers with a provenance header and deterministic formatting."""

from __future__ import annotations

import csv
import io
import json
import math

from . import __version__
from .functions import format_complex

TOOL = "entiredyn"


def _cell(x):
    if isinstance(x, bool):
        return str(int(x))
    if isinstance(x, complex):
        return format_complex(x)
    if isinstance(x, float):
        return repr(x)
    if x is None:
        return ""
    return str(x)


def jsonable(x):
    if isinstance(x, complex):
        return [x.real, x.imag]
    if isinstance(x, float) and not math.isfinite(x):
        return repr(x)
    if isinstance(x, dict):
        return {str(k): jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [jsonable(v) for v in x]
    if hasattr(x, "item"):  # numpy scalars
        return jsonable(x.item())
    return x


def header_lines(config):
    return [
        f"# {TOOL} {__version__}",
        "# config: " + json.dumps(jsonable(config), sort_keys=True),
    ]


def render_csv(tables, config):
    """``tables`` maps a table name to a list of row dicts (same keys per table)."""
    buf = io.StringIO()
    for line in header_lines(config):
        buf.write(line + "\n")
    for name, rows in tables.items():
        buf.write(f"# table: {name}\n")
        if not rows:
            buf.write("# (no rows)\n")
            continue
        w = csv.writer(buf, lineterminator="\n")
        keys = list(rows[0])
        w.writerow(keys)
        for r in rows:
            w.writerow([_cell(r[k]) for k in keys])
    return buf.getvalue()


def render_json(tables, config):
    doc = {"tool": TOOL, "version": __version__, "config": config, "result": tables}
    return json.dumps(jsonable(doc), sort_keys=True, indent=2) + "\n"


def render(tables, config, fmt):
    if fmt == "json":
        return render_json(tables, config)
    return render_csv(tables, config)


def write_csv_rows(path, rows):
    """Plain CSV without header block, for experiment scripts."""
    with open(path, "w", newline="") as fh:
        if not rows:
            return
        w = csv.writer(fh, lineterminator="\n")
        keys = list(rows[0])
        w.writerow(keys)
        for r in rows:
            w.writerow([_cell(r[k]) for k in keys])

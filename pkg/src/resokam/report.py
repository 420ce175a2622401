"""Report files.

Every run writes a single JSON document with a schema version, the
run's configuration embedded verbatim, and the numerical results; keys
are sorted and no timestamps or host data are included, so reruns with
the same inputs are byte-identical.  Large grids go to CSV side files
whose floats are written with repr, which round-trips exactly.
"""

from __future__ import annotations

import json

import numpy as np

SCHEMA_VERSION = 1


def plain(obj):
    """Recursively convert numpy scalars/arrays and tuples to JSON types."""
    if isinstance(obj, dict):
        return {str(k): plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [plain(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


def render_report(kind: str, config: dict, results) -> str:
    doc = {
        "schema_version": SCHEMA_VERSION,
        "kind": kind,
        "config": plain(config),
        "results": plain(results),
    }
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def write_report(path, kind: str, config: dict, results) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(render_report(kind, config, results))


def _cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv(path, header, rows) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_cell(v) for v in row) + "\n")

#!/usr/bin/env python3
"""
Report Writer: save, load and list the JSON and CSV artifacts of a run.

Reports go to one output directory. JSON keeps insertion order and writes
every float with 17 significant digits, so identical runs produce
byte-identical files; non-finite numbers become null. Dense tables go to
CSV through numpy.savetxt.
"""

import glob
import json
import logging
import math
import os
import re

import numpy as np

log = logging.getLogger(__name__)


def to_jsonable(obj):
    """Recursively convert numpy values and report objects to plain JSON types."""
    if hasattr(obj, "to_dict"):
        return to_jsonable(obj.to_dict())
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else None
    if isinstance(obj, complex):
        return {"re": to_jsonable(obj.real), "im": to_jsonable(obj.imag)}
    return obj


FLOAT_FORMAT = ".16e"      # 17 significant digits
_FLOAT_SLOT = re.compile(r'"\\u0000(\d+)\\u0000"')   # json escapes the NUL markers


def dumps_fixed(data, indent=2):
    """
    JSON text of *data* (already jsonable) with every float written in the
    fixed FLOAT_FORMAT. json always uses float.__repr__, so floats go
    through placeholder strings that are substituted after encoding.
    """
    floats = []

    def slot(obj):
        if isinstance(obj, dict):
            return {k: slot(v) for k, v in obj.items()}
        if isinstance(obj, list):
            return [slot(v) for v in obj]
        if isinstance(obj, float):
            floats.append(format(obj, FLOAT_FORMAT))
            return f"\x00{len(floats) - 1}\x00"
        return obj

    text = json.dumps(slot(data), indent=indent, allow_nan=False)
    return _FLOAT_SLOT.sub(lambda m: floats[int(m.group(1))], text)


class ReportWriter:
    """Persist run artifacts in one directory."""

    def __init__(self, out_dir):
        self.out_dir = out_dir
        os.makedirs(self.out_dir, exist_ok=True)

    # ------------------------------------------------------------------
    # JSON
    # ------------------------------------------------------------------

    def save_json(self, name, data):
        """Write *data* as JSON; returns the file path."""
        path = self.path(name)
        text = dumps_fixed(to_jsonable(data))
        with open(path, "w") as f:
            f.write(text + "\n")
        log.info("✓ wrote %s", path)
        return path

    def load_json(self, name):
        """Load a JSON report by name. Returns None if it does not exist."""
        path = self.path(name)
        if not os.path.exists(path):
            return None
        with open(path, "r") as f:
            return json.load(f)

    # ------------------------------------------------------------------
    # CSV
    # ------------------------------------------------------------------

    def save_csv(self, name, columns, rows):
        """Write a numeric table with a header line; returns the file path."""
        rows = np.atleast_2d(np.asarray(rows, dtype=float))
        if rows.shape[1] != len(columns):
            raise ValueError(f"{name}: {len(columns)} columns but rows have {rows.shape[1]}")
        path = self.path(name)
        np.savetxt(path, rows, delimiter=",", header=",".join(columns), comments="", fmt="%.17g")
        log.info("✓ wrote %s (%d rows)", path, len(rows))
        return path

    def load_csv(self, name):
        """(columns, rows) of a CSV report, or None."""
        path = self.path(name)
        if not os.path.exists(path):
            return None
        with open(path, "r") as f:
            columns = f.readline().strip().split(",")
        return columns, np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)

    # ------------------------------------------------------------------
    # Listing
    # ------------------------------------------------------------------

    def path(self, name):
        return os.path.join(self.out_dir, self._sanitize(name))

    def exists(self, name):
        return os.path.exists(self.path(name))

    def list_reports(self):
        """Names of the JSON and CSV files in the output directory, sorted."""
        found = glob.glob(os.path.join(self.out_dir, "*.json")) + glob.glob(os.path.join(self.out_dir, "*.csv"))
        return sorted(os.path.basename(p) for p in found)

    @staticmethod
    def _sanitize(name):
        """Keep a plain file name: no directories, only safe characters."""
        base = os.path.basename(str(name))
        safe = "".join(c if c.isalnum() or c in "-_." else "_" for c in base)
        return safe.strip(".") or "report.json"

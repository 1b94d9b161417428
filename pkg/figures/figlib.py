"""Shared plumbing for the figure scripts.

The scripts read only the serialized outputs of the varmin CLI (report.json
and the table CSVs) and never recompute any mathematics. Every loader
validates against the published schema and reports failures with a dotted
path, mirroring the CLI's spec diagnostics.
"""

import argparse
import csv
import json
import sys
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)


class SchemaError(Exception):
    """Input does not match the published report/table schema."""

    def __init__(self, path, detail):
        self.path = path
        self.detail = detail
        super().__init__(f"schema error at {path}: {detail}")


def load_json(path: Path):
    try:
        text = path.read_text()
    except OSError as e:
        raise SchemaError(str(path), f"cannot read file: {e}")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise SchemaError(str(path), f"invalid JSON: {e}")
    if not isinstance(data, dict):
        raise SchemaError(str(path), "root must be an object")
    return data


def load_table(path: Path, columns):
    """Read a CSV table, check the header, and parse every cell as float."""
    try:
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            rows = list(reader)
    except OSError as e:
        raise SchemaError(str(path), f"cannot read file: {e}")
    if not rows:
        raise SchemaError(str(path), "missing header row")
    if rows[0] != list(columns):
        raise SchemaError(f"{path}:header",
                          f"expected columns {list(columns)}, got {rows[0]}")
    if len(rows) == 1:
        raise SchemaError(str(path), "expected at least one data row")
    parsed = []
    for i, row in enumerate(rows[1:], start=2):
        if len(row) != len(columns):
            raise SchemaError(f"{path}:line {i}",
                              f"expected {len(columns)} cells, got {len(row)}")
        vals = []
        for name, cell in zip(columns, row):
            try:
                vals.append(float(cell))
            except ValueError:
                raise SchemaError(f"{path}:line {i}:{name}",
                                  f"not a number: {cell!r}")
        parsed.append(vals)
    return parsed


def require(data, dotted, kind, where):
    node = data
    for part in dotted.split("."):
        if not isinstance(node, dict) or part not in node:
            raise SchemaError(f"{where}:{dotted}", "missing field")
        node = node[part]
    if kind == "number":
        if isinstance(node, bool) or not isinstance(node, (int, float)):
            raise SchemaError(f"{where}:{dotted}", "expected a number")
    elif kind == "list":
        if not isinstance(node, list):
            raise SchemaError(f"{where}:{dotted}", "expected a list")
    elif kind == "str":
        if not isinstance(node, str):
            raise SchemaError(f"{where}:{dotted}", "expected a string")
    return node


def new_figure():
    return plt.subplots(figsize=(6.0, 4.0), dpi=110)


def save(fig, out_dir: Path, name: str) -> Path:
    out_dir.mkdir(parents=True, exist_ok=True)
    target = out_dir / name
    fig.savefig(target)
    plt.close(fig)
    return target


def run_script(build, argv=None) -> int:
    """Shared CLI driver: parse --in/--out, call build(in_dir, out_dir)."""
    ap = argparse.ArgumentParser()
    ap.add_argument("--in", dest="in_dir", required=True)
    ap.add_argument("--out", dest="out_dir", required=True)
    args = ap.parse_args(argv)
    try:
        build(Path(args.in_dir), Path(args.out_dir))
    except SchemaError as e:
        print(str(e), file=sys.stderr)
        return 2
    return 0

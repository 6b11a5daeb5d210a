"""Artifact emission: CSV/JSON tables, JSON summaries, run manifests.

All CSV output is RFC-4180-flavored with LF line endings, a header row,
`.` decimal separator, and shortest round-trip float formatting (repr),
so identical runs produce byte-identical files.  Every JSON document
written here validates against one of the schema descriptions shipped in
``thirdsound/schemas``.
"""

from __future__ import annotations

import hashlib
import json
import time
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

__all__ = [
    "RunManifest",
    "format_float",
    "write_table",
    "read_table",
    "write_json",
    "load_schema",
    "validate_json",
    "file_digest",
]


def format_float(x) -> str:
    """Shortest decimal string that round-trips to the same double."""
    x = float(x)
    if x != x:
        return "nan"
    if x in (float("inf"), float("-inf")):
        return "inf" if x > 0 else "-inf"
    return repr(x)


def _format_cell(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format_float(x)
    s = str(x)
    if any(ch in s for ch in ',"\n'):
        s = '"' + s.replace('"', '""') + '"'
    return s


def write_table(path, columns: list[str], arrays: list, fmt: str = "csv") -> None:
    """Write a column-oriented table as CSV (default) or a JSON document."""
    arrays = [np.asarray(a) for a in arrays]
    if len(columns) != len(arrays):
        raise ValueError("column name count does not match array count")
    n = arrays[0].shape[0] if arrays else 0
    for a in arrays:
        if a.shape[0] != n:
            raise ValueError("table columns have unequal lengths")
    path = Path(path)
    if fmt == "csv":
        lines = [",".join(columns)]
        for i in range(n):
            lines.append(",".join(_format_cell(a[i]) for a in arrays))
        path.write_text("\n".join(lines) + "\n")
    elif fmt == "json":
        doc = {"columns": list(columns),
               "rows": [[_json_cell(a[i]) for a in arrays] for i in range(n)]}
        write_json(path, doc, schema="table")
    else:
        raise ValueError(f"unknown table format {fmt!r}")


def _json_cell(x):
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        return float(x)
    return str(x)


def read_table(path) -> dict[str, np.ndarray]:
    """Read a CSV table written by write_table (or compatible) by column.

    Columns that parse fully as floats come back as float arrays; others
    as object arrays of strings.
    """
    text = Path(path).read_text()
    lines = [ln for ln in text.split("\n") if ln.strip()]
    if not lines:
        raise ValueError(f"{path}: empty table")
    header = [h.strip() for h in lines[0].split(",")]
    cols: list[list[str]] = [[] for _ in header]
    for ln in lines[1:]:
        parts = ln.split(",")
        if len(parts) != len(header):
            raise ValueError(f"{path}: row has {len(parts)} fields, "
                             f"header has {len(header)}")
        for c, v in zip(cols, parts):
            c.append(v.strip())
    out: dict[str, np.ndarray] = {}
    for name, vals in zip(header, cols):
        try:
            out[name] = np.array([float(v) for v in vals])
        except ValueError:
            out[name] = np.array(vals, dtype=object)
    return out


def _json_default(o):
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.bool_,)):
        return bool(o)
    raise TypeError(f"not JSON-serializable: {type(o)}")


def write_json(path, doc: dict, schema: str | None = None) -> None:
    if schema is not None:
        validate_json(doc, load_schema(schema))
    Path(path).write_text(
        json.dumps(doc, indent=2, sort_keys=True, default=_json_default)
        + "\n")


def load_schema(name: str) -> dict:
    ref = resources.files("thirdsound").joinpath(f"schemas/{name}.json")
    return json.loads(ref.read_text())


def validate_json(doc, schema: dict, where: str = "$") -> None:
    """Check a document against the shipped schema subset.

    Supports: type (object/array/number/integer/string/boolean/null, or a
    list of those), properties, required, items, enum, additionalProperties
    false.  Raises ValueError naming the failing location.
    """
    t = schema.get("type")
    if t is not None:
        kinds = {
            "object": isinstance(doc, dict),
            "array": isinstance(doc, list),
            "number": isinstance(doc, (int, float)) and not isinstance(doc, bool),
            "integer": isinstance(doc, int) and not isinstance(doc, bool),
            "string": isinstance(doc, str),
            "boolean": isinstance(doc, bool),
            "null": doc is None,
        }
        alts = t if isinstance(t, list) else [t]
        flags = [kinds.get(a) for a in alts]
        if any(f is None for f in flags):
            raise ValueError(f"schema error at {where}: unknown type {t!r}")
        if not any(flags):
            raise ValueError(f"{where}: expected {t}, got {type(doc).__name__}")
    if "enum" in schema and doc not in schema["enum"]:
        raise ValueError(f"{where}: {doc!r} not in {schema['enum']}")
    if isinstance(doc, dict):
        for key in schema.get("required", []):
            if key not in doc:
                raise ValueError(f"{where}: missing required key {key!r}")
        props = schema.get("properties", {})
        for key, sub in props.items():
            if key in doc:
                validate_json(doc[key], sub, f"{where}.{key}")
        if schema.get("additionalProperties") is False:
            extra = set(doc) - set(props)
            if extra:
                raise ValueError(f"{where}: unexpected keys {sorted(extra)}")
    if isinstance(doc, list) and "items" in schema:
        for i, item in enumerate(doc):
            validate_json(item, schema["items"], f"{where}[{i}]")


def file_digest(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


@dataclass
class RunManifest:
    """Record of one CLI invocation, written next to its outputs.

    resolved_args holds every flag with defaults materialized, so the
    same invocation can be reconstructed from the manifest alone;
    output_digests seal the artifacts for the byte-identity check.
    Wall-clock duration is informational and excluded from comparisons.
    """

    subcommand: str
    resolved_args: dict
    config_text: str | None
    seed: int | None
    tool_version: str
    input_digests: dict = field(default_factory=dict)
    output_digests: dict = field(default_factory=dict)
    wall_clock_s: float = 0.0
    _t0: float = field(default_factory=time.monotonic, repr=False)

    def add_input(self, path) -> None:
        self.input_digests[Path(path).name] = file_digest(path)

    def add_output(self, path) -> None:
        self.output_digests[Path(path).name] = file_digest(path)

    def write(self, out_dir) -> Path:
        self.wall_clock_s = time.monotonic() - self._t0
        doc = {
            "subcommand": self.subcommand,
            "resolved_args": self.resolved_args,
            "config_text": self.config_text,
            "seed": self.seed,
            "tool_version": self.tool_version,
            "input_digests": self.input_digests,
            "output_digests": self.output_digests,
            "wall_clock_s": self.wall_clock_s,
        }
        path = Path(out_dir) / "manifest.json"
        write_json(path, doc, schema="manifest")
        return path


def read_manifest(path) -> dict:
    doc = json.loads(Path(path).read_text())
    validate_json(doc, load_schema("manifest"))
    return doc

"""Line-delimited (JSONL) manifest IO with schema checks.

Each manifest row is one JSON object per line. Readers report the offending
line number on schema problems; unknown extra fields are tolerated. File
references inside an output manifest are relative to the manifest's own
directory unless absolute.
"""

from __future__ import annotations

import json
import os
from pathlib import Path
from typing import Any, Callable, Iterable, Mapping

from .errors import IoFailure, SchemaViolation


def dump_jsonl(path, rows: Iterable[Mapping[str, Any]]) -> None:
    """Write rows as one compact JSON object per line."""
    try:
        with open(path, "w", encoding="utf-8") as fh:
            for row in rows:
                fh.write(json.dumps(row, ensure_ascii=False, sort_keys=True))
                fh.write("\n")
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def load_jsonl(path) -> list[dict]:
    """Read a JSONL file; an empty file yields an empty list."""
    try:
        text = Path(path).read_text("utf-8")
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    rows = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            row = json.loads(line)
        except json.JSONDecodeError as exc:
            raise SchemaViolation(f"{path}:{lineno}: invalid JSON ({exc.msg})") from exc
        if not isinstance(row, dict):
            raise SchemaViolation(f"{path}:{lineno}: expected a JSON object")
        rows.append(row)
    return rows


def require_fields(row: Mapping, fields: Iterable[str], path, lineno: int) -> None:
    for field in fields:
        if field not in row:
            raise SchemaViolation(f"{path}:{lineno}: missing field {field!r}")


def load_records(path, from_dict: Callable[[Mapping], Any], fields: Iterable[str]) -> list:
    """Load rows and convert them, attributing conversion errors to lines."""
    fields = tuple(fields)
    records = []
    for lineno, row in enumerate(load_jsonl(path), start=1):
        require_fields(row, fields, path, lineno)
        try:
            records.append(from_dict(row))
        except (TypeError, ValueError) as exc:
            raise SchemaViolation(f"{path}:{lineno}: {exc}") from exc
    return records


def resolve_ref(manifest_path, ref: str) -> Path:
    """Resolve a manifest file reference against the manifest's directory."""
    p = Path(ref)
    return p if p.is_absolute() else Path(manifest_path).parent / p


def rebase_ref(ref: str, old_manifest_dir, new_manifest_dir) -> str:
    """Re-express a relative reference for a manifest in another directory."""
    if Path(ref).is_absolute():
        return ref
    old_dir = Path(old_manifest_dir).resolve()
    new_dir = Path(new_manifest_dir).resolve()
    if old_dir == new_dir:
        return ref
    return os.path.relpath(old_dir / ref, new_dir)

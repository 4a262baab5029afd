"""Field files and JSON reports.

A field file is a JSON header plus a companion binary payload with the same
stem and suffix ``.bin``: ``n*n`` complex samples, row-major, each stored as
two little-endian float64 values (real, imaginary).
"""
from __future__ import annotations

import json
import math
import os
import tempfile
from pathlib import Path

import numpy as np

from .spectral import InvalidInputError, PeriodicField, PeriodicGrid

__all__ = [
    "FieldFileError",
    "FIELD_KINDS",
    "write_field",
    "read_field",
    "read_header",
    "dumps_report",
    "write_text_atomic",
]

FORMAT_MAGIC = "beltrami-torus-field"
FORMAT_VERSION = 1
FIELD_KINDS = ("mu", "f", "psi")
_DTYPE = np.dtype("<c16")


class FieldFileError(InvalidInputError):
    """Malformed or inconsistent field file."""


def payload_path(header_path) -> Path:
    return Path(header_path).with_suffix(".bin")


def _atomic_write(path: Path, data: bytes) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_text_atomic(path, text: str) -> None:
    _atomic_write(Path(path), text.encode("utf-8"))


def write_field(path, field: PeriodicField, kind: str = "f") -> Path:
    """Write ``field`` as ``path`` (JSON header) plus ``path.with_suffix('.bin')``."""
    if kind not in FIELD_KINDS:
        raise FieldFileError(f"field kind must be one of {FIELD_KINDS}, got {kind!r}")
    path = Path(path)
    header = {
        "magic": FORMAT_MAGIC,
        "version": FORMAT_VERSION,
        "n": field.grid.n,
        "period": field.grid.period,
        "kind": kind,
        "layout": "row-major",
        "encoding": "f64le-interleaved",
        "payload": payload_path(path).name,
    }
    _atomic_write(payload_path(path), np.ascontiguousarray(field.values, dtype=_DTYPE).tobytes())
    _atomic_write(path, (dumps_report(header) + "\n").encode("utf-8"))
    return path


def read_header(path) -> dict:
    try:
        header = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise FieldFileError(f"cannot read field header {path}: {exc}") from exc
    if not isinstance(header, dict) or header.get("magic") != FORMAT_MAGIC:
        raise FieldFileError(f"{path}: bad magic")
    if header.get("version") != FORMAT_VERSION:
        raise FieldFileError(f"{path}: unsupported version {header.get('version')!r}")
    if header.get("layout") != "row-major" or header.get("encoding") != "f64le-interleaved":
        raise FieldFileError(f"{path}: unsupported layout/encoding")
    if header.get("kind") not in FIELD_KINDS:
        raise FieldFileError(f"{path}: unknown field kind {header.get('kind')!r}")
    return header


def read_field(path) -> PeriodicField:
    path = Path(path)
    header = read_header(path)
    try:
        grid = PeriodicGrid(int(header["n"]), float(header["period"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise FieldFileError(f"{path}: bad grid in header: {exc}") from exc
    bin_path = path.parent / header.get("payload", payload_path(path).name)
    try:
        data = bin_path.read_bytes()
    except OSError as exc:
        raise FieldFileError(f"cannot read payload {bin_path}: {exc}") from exc
    expected = 16 * grid.n * grid.n
    if len(data) != expected:
        raise FieldFileError(f"{bin_path}: size mismatch, {len(data)} bytes for n = {grid.n} (expected {expected})")
    values = np.frombuffer(data, dtype=_DTYPE).astype(complex).reshape(grid.n, grid.n)
    if not np.all(np.isfinite(values)):
        raise FieldFileError(f"{bin_path}: non-finite payload")
    return PeriodicField(grid, values)


def _encode(obj, indent: int, level: int) -> str:
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if obj is None or isinstance(obj, bool):
        return json.dumps(obj)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x) or math.isinf(x):
            return json.dumps(str(x))
        text = format(x, ".17g")
        return text if any(ch in text for ch in ".en") else text + ".0"
    if isinstance(obj, (complex, np.complexfloating)):
        return _encode({"im": obj.imag, "re": obj.real}, indent, level)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, np.ndarray):
        return _encode(obj.tolist(), indent, level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_encode(obj[k], indent, level + 1)}" for k in sorted(obj, key=str)]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        items = [pad + _encode(v, indent, level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    if hasattr(obj, "value"):
        return _encode(obj.value, indent, level)
    raise TypeError(f"cannot encode {type(obj).__name__} in a report")


def dumps_report(obj, indent: int = 2) -> str:
    """JSON with sorted keys and floats printed with 17 significant digits.

    Complex numbers become ``{"re": ..., "im": ...}``; non-finite floats become strings.
    """
    return _encode(obj, indent, 0)

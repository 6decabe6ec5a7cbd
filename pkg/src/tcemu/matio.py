"""Binary matrix files and experiment reports.

Matrix file layout (all integers little-endian)::

    offset  size  field
    0       4     magic b"MPGM"
    4       1     version (1)
    5       1     dtype (0 = float32, 1 = float16)
    6       4     rows (uint32)
    10      4     cols (uint32)
    14      ...   row-major payload, 4 or 2 bytes per entry
"""

from __future__ import annotations

import csv
import io
import json
import os
import struct
import sys

import numpy as np

from .errors import FormatError, TruncatedFile
from .metrics import ErrorReport

__all__ = ["REPORT_FIELDS", "read_matrix", "write_matrix", "write_report", "format_report"]

MAGIC = b"MPGM"
VERSION = 1
_HEADER = struct.Struct("<4sBBII")
_DTYPES = {0: np.dtype("<f4"), 1: np.dtype("<f2")}
_CODES = {np.dtype(np.float32): 0, np.dtype(np.float16): 1}

REPORT_FIELDS = ("n", "mode", "trial", "max_norm_error", "flops", "wall_time_s", "seed")


def write_matrix(m, path) -> None:
    m = np.asarray(m)
    if m.ndim != 2:
        raise FormatError(f"only 2-D matrices can be written, got shape {m.shape}")
    code = _CODES.get(m.dtype)
    if code is None:
        raise FormatError(f"unsupported dtype {m.dtype}; use float32 or float16")
    rows, cols = m.shape
    if rows < 1 or cols < 1 or rows > 0xFFFFFFFF or cols > 0xFFFFFFFF:
        raise FormatError(f"unsupported shape {m.shape}")
    payload = np.ascontiguousarray(m, dtype=_DTYPES[code]).tobytes()
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, code, rows, cols))
        fh.write(payload)


def read_matrix(path) -> np.ndarray:
    """Read a matrix file; returns float32 or float16 according to its dtype byte."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < _HEADER.size:
        if blob[:4] and not MAGIC.startswith(blob[:4]):
            raise FormatError(f"{path}: bad magic {blob[:4]!r}")
        raise TruncatedFile(f"{path}: header needs {_HEADER.size} bytes, file has {len(blob)}")
    magic, version, code, rows, cols = _HEADER.unpack_from(blob)
    if magic != MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}")
    if version != VERSION:
        raise FormatError(f"{path}: unsupported version {version}")
    if code not in _DTYPES:
        raise FormatError(f"{path}: unknown dtype code {code}")
    if rows == 0 or cols == 0:
        raise FormatError(f"{path}: empty matrix {rows}x{cols}")
    dtype = _DTYPES[code]
    need = rows * cols * dtype.itemsize
    payload = blob[_HEADER.size:]
    if len(payload) < need:
        raise TruncatedFile(f"{path}: payload has {len(payload)} bytes, expected {need}")
    if len(payload) > need:
        raise FormatError(f"{path}: {len(payload) - need} trailing bytes after payload")
    out = np.frombuffer(payload, dtype=dtype).reshape(rows, cols)
    return out.astype(dtype.newbyteorder("="), copy=True)


def format_report(reports, fmt: str = "csv") -> str:
    rows = [r.as_dict() if isinstance(r, ErrorReport) else dict(r) for r in reports]
    if fmt == "json":
        return json.dumps(rows, indent=2) + "\n"
    if fmt != "csv":
        raise FormatError(f"unknown report format {fmt!r}")
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=REPORT_FIELDS, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: repr(v) if isinstance(v, float) else v for k, v in row.items()})
    return buf.getvalue()


def write_report(reports, fmt: str, path) -> None:
    """Write reports as CSV or JSON; ``path`` of ``-`` or None means stdout."""
    text = format_report(reports, fmt)
    if path in (None, "-"):
        sys.stdout.write(text)
        return
    directory = os.path.dirname(os.fspath(path))
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)

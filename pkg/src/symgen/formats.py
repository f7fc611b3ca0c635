"""Text codecs: xz-compressed XYZ clouds and ASCII PLY export."""

from __future__ import annotations

import lzma
import math
from pathlib import Path

import numpy as np

from .distance import as_cloud

DEFAULT_XZ_PRESET = 1


class CloudFormatError(ValueError):
    """Malformed or corrupt point-cloud payload."""


def format_float(x: float) -> str:
    """Shortest text that parses back to exactly ``x``.

    Integral values are written without a fractional part (``0``, ``-3``),
    infinities as ``inf``/``-inf``.
    """
    x = float(x)
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    if x.is_integer() and abs(x) < 1e16:
        return str(int(x))
    return repr(x)


def xyz_text(cloud) -> str:
    pts = as_cloud(cloud)
    if not np.all(np.isfinite(pts)):
        raise ValueError("cloud contains non-finite coordinates")
    f = format_float
    return "".join(f"{f(x)} {f(y)} {f(z)}\n" for x, y, z in pts.tolist())


def parse_xyz_text(text: str) -> np.ndarray:
    rows = []
    for lineno, line in enumerate(text.split("\n"), start=1):
        if not line.strip():
            continue
        tokens = line.split()
        if len(tokens) != 3:
            raise CloudFormatError(f"line {lineno}: expected 3 columns, got {len(tokens)}")
        try:
            rows.append([float(t) for t in tokens])
        except ValueError:
            raise CloudFormatError(f"line {lineno}: non-numeric token in {line!r}") from None
    if not rows:
        return np.empty((0, 3))
    return np.asarray(rows, dtype=float)


def encode_xyz(cloud, preset: int = DEFAULT_XZ_PRESET) -> bytes:
    """Serialise a cloud as an xz stream of ``x y z`` lines."""
    return lzma.compress(xyz_text(cloud).encode("ascii"), format=lzma.FORMAT_XZ, preset=preset)


def decode_xyz(payload: bytes) -> np.ndarray:
    """Inverse of :func:`encode_xyz`; raises ``CloudFormatError`` on bad input."""
    try:
        raw = lzma.decompress(payload, format=lzma.FORMAT_XZ)
    except (lzma.LZMAError, EOFError) as exc:
        raise CloudFormatError(f"corrupt xz container: {exc}") from None
    try:
        text = raw.decode("ascii")
    except UnicodeDecodeError:
        raise CloudFormatError("payload is not ASCII text") from None
    return parse_xyz_text(text)


def read_cloud(path) -> np.ndarray:
    path = Path(path)
    data = path.read_bytes()
    if path.suffix == ".xz":
        return decode_xyz(data)
    return parse_xyz_text(data.decode("ascii"))


def ply_text(cloud) -> str:
    pts = as_cloud(cloud)
    header = (
        "ply\n"
        "format ascii 1.0\n"
        f"element vertex {len(pts)}\n"
        "property float x\n"
        "property float y\n"
        "property float z\n"
        "end_header\n"
    )
    return header + xyz_text(pts)


def write_ply(path, cloud) -> None:
    Path(path).write_text(ply_text(cloud), encoding="ascii", newline="\n")

"""Field files, CSV interchange, run manifests and PGM/PPM images.

Binary field layout (all little-endian)::

    magic   4 bytes  b"LPW1"
    kind    u8       1 = scalar field, 2 = gradient field
    rows    u32
    cols    u32
    h_x     f64
    h_y     f64
    payload f64[rows*cols] row-major (scalar), or psi_x then psi_y (gradient)

CSV files are long-format with a header: ``row,col,value`` for scalar fields
and ``row,col,psi_x,psi_y`` for gradient fields. Every cell must appear once;
spacing is 1.
"""
from __future__ import annotations

import csv
import io
import struct
from pathlib import Path

import numpy as np

from .grid import GradientField, Grid, ScalarField

MAGIC = b"LPW1"
KIND_SCALAR = 1
KIND_GRADIENT = 2
_HEADER = struct.Struct("<4sBIIdd")


class FieldFormatError(ValueError):
    """Malformed field file (bad magic, unknown kind, wrong payload length)."""


def encode_field(field: ScalarField | GradientField) -> bytes:
    g = field.grid
    if isinstance(field, GradientField):
        kind, arrays = KIND_GRADIENT, (field.psi_x.values, field.psi_y.values)
    else:
        kind, arrays = KIND_SCALAR, (field.values,)
    parts = [_HEADER.pack(MAGIC, kind, g.rows, g.cols, g.h_x, g.h_y)]
    parts += [np.ascontiguousarray(a, dtype="<f8").tobytes() for a in arrays]
    return b"".join(parts)


def decode_field(data: bytes) -> ScalarField | GradientField:
    if len(data) < _HEADER.size:
        raise FieldFormatError("truncated header")
    magic, kind, rows, cols, h_x, h_y = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise FieldFormatError(f"bad magic {magic!r}")
    if kind not in (KIND_SCALAR, KIND_GRADIENT):
        raise FieldFormatError(f"unknown field kind {kind}")
    try:
        grid = Grid(rows, cols, h_x, h_y)
    except ValueError as exc:
        raise FieldFormatError(str(exc)) from exc
    n = rows * cols
    expected = _HEADER.size + 8 * n * kind
    if len(data) != expected:
        raise FieldFormatError(f"payload length {len(data) - _HEADER.size}, expected {expected - _HEADER.size}")
    payload = np.frombuffer(data, dtype="<f8", offset=_HEADER.size).astype(np.float64)
    try:
        if kind == KIND_SCALAR:
            return ScalarField(grid, payload.reshape(grid.shape))
        gx = ScalarField(grid, payload[:n].reshape(grid.shape))
        gy = ScalarField(grid, payload[n:].reshape(grid.shape))
    except ValueError as exc:
        raise FieldFormatError(str(exc)) from exc
    return GradientField(grid, gx, gy)


def write_field(path, field) -> None:
    path = Path(path)
    if path.suffix.lower() == ".csv":
        path.write_text(field_to_csv(field), encoding="utf-8")
    else:
        path.write_bytes(encode_field(field))


def read_field(path):
    path = Path(path)
    if path.suffix.lower() == ".csv":
        return field_from_csv(path.read_text(encoding="utf-8"))
    return decode_field(path.read_bytes())


def read_scalar(path) -> ScalarField:
    f = read_field(path)
    if not isinstance(f, ScalarField):
        raise FieldFormatError(f"{path}: expected a scalar field")
    return f


def read_gradient(path) -> GradientField:
    f = read_field(path)
    if not isinstance(f, GradientField):
        raise FieldFormatError(f"{path}: expected a gradient field")
    return f


def field_to_csv(field) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    rows, cols = field.grid.shape
    ii, jj = np.indices((rows, cols))
    if isinstance(field, GradientField):
        w.writerow(["row", "col", "psi_x", "psi_y"])
        cols_ = (field.psi_x.values.ravel(), field.psi_y.values.ravel())
    else:
        w.writerow(["row", "col", "value"])
        cols_ = (field.values.ravel(),)
    for k, (i, j) in enumerate(zip(ii.ravel(), jj.ravel())):
        w.writerow([i, j, *(repr(float(c[k])) for c in cols_)])
    return buf.getvalue()


def field_from_csv(text: str):
    reader = csv.reader(io.StringIO(text))
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise FieldFormatError("empty CSV") from None
    if header == ["row", "col", "value"]:
        width = 1
    elif header == ["row", "col", "psi_x", "psi_y"]:
        width = 2
    else:
        raise FieldFormatError(f"unrecognized CSV header {header}")
    records = [r for r in reader if r]
    try:
        idx = np.array([[int(r[0]), int(r[1])] for r in records], dtype=np.int64)
        vals = np.array([[float(x) for x in r[2:]] for r in records], dtype=np.float64)
    except (ValueError, IndexError) as exc:
        raise FieldFormatError(f"bad CSV record: {exc}") from exc
    if vals.ndim != 2 or vals.shape[1] != width or idx.min(initial=0) < 0:
        raise FieldFormatError("bad CSV records")
    rows, cols = int(idx[:, 0].max()) + 1, int(idx[:, 1].max()) + 1
    if rows * cols != len(records):
        raise FieldFormatError("CSV does not cover a full rectangular grid")
    out = np.full((width, rows, cols), np.nan)
    out[:, idx[:, 0], idx[:, 1]] = vals.T
    if np.isnan(out).any():
        raise FieldFormatError("CSV has duplicate or missing cells")
    try:
        if width == 1:
            return ScalarField.from_array(out[0])
        return GradientField.from_arrays(out[0], out[1])
    except ValueError as exc:
        raise FieldFormatError(str(exc)) from exc


# -- manifests ---------------------------------------------------------------

def format_manifest(items: dict) -> str:
    """Flat ``key = value`` text, one entry per line, in insertion order."""
    lines = []
    for key, value in items.items():
        if isinstance(value, float):
            value = repr(value)
        lines.append(f"{key} = {value}")
    return "\n".join(lines) + "\n"


def parse_manifest(text: str) -> dict[str, str]:
    out = {}
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ValueError(f"bad manifest line: {line!r}")
        out[key.strip()] = value.strip()
    return out


# -- images ------------------------------------------------------------------

def to_uint16(values: np.ndarray, vrange: tuple[float, float] | None = None) -> np.ndarray:
    """Linear map of [lo, hi] onto [0, 65535], rounding half up, clipping outside.

    Without an explicit range the data min/max is used. A degenerate range
    (lo == hi) maps every sample to mid-gray 32768.
    """
    values = np.asarray(values, dtype=np.float64)
    lo, hi = vrange if vrange is not None else (float(values.min()), float(values.max()))
    if hi == lo:
        return np.full(values.shape, 32768, dtype=np.uint16)
    t = np.clip((values - lo) / (hi - lo), 0.0, 1.0)
    return np.floor(t * 65535.0 + 0.5).astype(np.uint16)


def pgm_bytes(values: np.ndarray, vrange=None) -> bytes:
    """16-bit binary PGM (P5, maxval 65535, big-endian samples)."""
    img = to_uint16(values, vrange)
    rows, cols = img.shape
    return f"P5\n{cols} {rows}\n65535\n".encode("ascii") + img.astype(">u2").tobytes()


# Diverging blue-white-red colormap: linear interpolation between these stops.
COLORMAP_STOPS = np.array([
    [0.0, 5, 48, 97],
    [0.25, 67, 147, 195],
    [0.5, 247, 247, 247],
    [0.75, 214, 96, 77],
    [1.0, 103, 0, 31],
])


def colormap(t: np.ndarray) -> np.ndarray:
    t = np.clip(np.asarray(t, dtype=np.float64), 0.0, 1.0)
    stops = COLORMAP_STOPS
    rgb = np.stack([np.interp(t, stops[:, 0], stops[:, c]) for c in (1, 2, 3)], axis=-1)
    return np.floor(rgb + 0.5).astype(np.uint8)


def ppm_bytes(values: np.ndarray, vrange=None) -> bytes:
    """8-bit binary PPM (P6) through :data:`COLORMAP_STOPS`."""
    t = to_uint16(values, vrange) / 65535.0
    rgb = colormap(t)
    rows, cols = rgb.shape[:2]
    return f"P6\n{cols} {rows}\n255\n".encode("ascii") + rgb.tobytes()


def write_image(path, values, vrange=None) -> None:
    path = Path(path)
    data = ppm_bytes(values, vrange) if path.suffix.lower() == ".ppm" else pgm_bytes(values, vrange)
    path.write_bytes(data)


def read_pgm16(data: bytes) -> np.ndarray:
    """Parse a PGM written by :func:`pgm_bytes` (used by tests and tools)."""
    head, _, rest = data.partition(b"\n")
    if head != b"P5":
        raise ValueError("not a binary PGM")
    dims, _, rest = rest.partition(b"\n")
    maxval, _, payload = rest.partition(b"\n")
    cols, rows = (int(v) for v in dims.split())
    if int(maxval) != 65535:
        raise ValueError("expected 16-bit PGM")
    return np.frombuffer(payload, dtype=">u2").reshape(rows, cols).astype(np.uint16)

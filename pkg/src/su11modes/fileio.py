"""FSTK frame-stack files, CSV tables and minimal SVG line plots.

FSTK layout (all little-endian)::

    magic   4s   b"FSTK"
    version u16  1
    width   u32
    height  u32
    count   u32
    pitch   f64  rad per pixel
    center  2 x f64  pixel coordinates (x, y) of theta = 0
    data    count * height * width f32, frame-major then row-major
"""
from __future__ import annotations

import csv
import io
import os
import struct
from typing import Iterable, Sequence

import numpy as np

from .errors import DimensionError, MagicError, TruncationError, VersionError
from .model import PolarGrid
from .synth import FrameStack

FSTK_MAGIC = b"FSTK"
FSTK_VERSION = 1
_HEADER = struct.Struct("<4sHIIIddd")
HEADER_SIZE = _HEADER.size


def write_stack(stack: FrameStack, path) -> None:
    g = stack.grid
    n, h, w = stack.frames.shape
    header = _HEADER.pack(FSTK_MAGIC, FSTK_VERSION, w, h, n, g.pitch,
                          float(g.center[0]), float(g.center[1]))
    tmp = f"{path}.part"
    with open(tmp, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(stack.frames, dtype="<f4").tobytes())
    os.replace(tmp, path)


def parse_header(data: bytes) -> dict:
    if data[:4] != FSTK_MAGIC:
        raise MagicError(f"not an FSTK file (magic {bytes(data[:4])!r})")
    if len(data) < HEADER_SIZE:
        raise TruncationError(f"header truncated: expected {HEADER_SIZE} bytes, found {len(data)}")
    _, version, w, h, n, pitch, cx, cy = _HEADER.unpack_from(data)
    if version != FSTK_VERSION:
        raise VersionError(f"FSTK version {version} is not supported (expected {FSTK_VERSION})")
    if w == 0 or h == 0:
        raise DimensionError(f"frame dimensions must be positive, got {w}x{h}")
    if not pitch > 0:
        raise DimensionError(f"pixel pitch must be positive, got {pitch}")
    return {"width": w, "height": h, "count": n, "pitch": pitch, "center": (cx, cy)}


def read_stack(path, n_theta: int = 64, n_phi: int = 64, expect_shape=None) -> FrameStack:
    """Load an FSTK file; ``expect_shape=(height, width)`` guards against mixups."""
    with open(path, "rb") as fh:
        data = fh.read()
    hdr = parse_header(data)
    w, h, n = hdr["width"], hdr["height"], hdr["count"]
    if expect_shape is not None and tuple(expect_shape) != (h, w):
        raise DimensionError(f"file frames are {h}x{w}, expected {expect_shape[0]}x{expect_shape[1]}")
    need = HEADER_SIZE + 4 * n * w * h
    if len(data) < need:
        raise TruncationError(f"payload truncated: expected {need} bytes, found {len(data)}")
    if len(data) > need:
        raise DimensionError(f"payload longer than declared: expected {need} bytes, found {len(data)}")
    if n == 0:
        raise DimensionError("file declares zero frames")
    frames = np.frombuffer(data, "<f4", n * w * h, HEADER_SIZE).reshape(n, h, w).astype(np.float32)
    grid = PolarGrid.from_camera(w, h, hdr["pitch"], n_theta=n_theta, n_phi=n_phi,
                                 center=hdr["center"])
    return FrameStack(frames, grid, {"source": os.fspath(path)})


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def csv_text(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    """Deterministic CSV: shortest round-trip float formatting, LF line ends."""
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(header)
    for r in rows:
        wr.writerow([_fmt(v) for v in r])
    return buf.getvalue()


def write_csv(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(csv_text(header, rows))


def read_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf")


def svg_lines(series, title: str = "", xlabel: str = "", ylabel: str = "",
              width: int = 480, height: int = 320, markers: bool = False) -> str:
    """Line plot of ``series`` = [(label, x, y), ...] as a standalone SVG string."""
    ml, mr, mt, mb = 60, 20, 30, 45
    xs = np.concatenate([np.asarray(s[1], float) for s in series])
    ys = np.concatenate([np.asarray(s[2], float) for s in series])
    x0, x1 = float(xs.min()), float(xs.max())
    y0, y1 = float(min(ys.min(), 0.0)), float(ys.max())
    if x1 == x0:
        x1 = x0 + 1.0
    if y1 == y0:
        y1 = y0 + 1.0
    pw, ph = width - ml - mr, height - mt - mb

    def sx(x):
        return ml + (x - x0) / (x1 - x0) * pw

    def sy(y):
        return mt + ph - (y - y0) / (y1 - y0) * ph

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">',
           f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
           f'<rect x="{ml}" y="{mt}" width="{pw}" height="{ph}" fill="none" stroke="black"/>']
    for t in np.linspace(0, 1, 5):
        xv, yv = x0 + t * (x1 - x0), y0 + t * (y1 - y0)
        out.append(f'<text x="{sx(xv):.1f}" y="{mt + ph + 14}" text-anchor="middle">{xv:.3g}</text>')
        out.append(f'<text x="{ml - 4}" y="{sy(yv) + 4:.1f}" text-anchor="end">{yv:.3g}</text>')
    out.append(f'<text x="{ml + pw / 2}" y="{height - 8}" text-anchor="middle">{xlabel}</text>')
    out.append(f'<text x="14" y="{mt + ph / 2}" text-anchor="middle" '
               f'transform="rotate(-90 14 {mt + ph / 2})">{ylabel}</text>')
    out.append(f'<text x="{ml + pw / 2}" y="18" text-anchor="middle">{title}</text>')
    for i, (label, x, y) in enumerate(series):
        color = _PALETTE[i % len(_PALETTE)]
        pts = " ".join(f"{sx(a):.2f},{sy(b):.2f}" for a, b in zip(x, y))
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{pts}"/>')
        if markers:
            out.extend(f'<circle cx="{sx(a):.2f}" cy="{sy(b):.2f}" r="2.5" fill="{color}"/>'
                       for a, b in zip(x, y))
        out.append(f'<text x="{ml + pw - 4}" y="{mt + 14 + 13 * i}" text-anchor="end" '
                   f'fill="{color}">{label}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def write_svg(path, *args, **kwargs) -> None:
    with open(path, "w") as fh:
        fh.write(svg_lines(*args, **kwargs))

"""Minimal PFM (portable float map) reader/writer.

Grayscale ("Pf") little-endian maps only, which is what disparity files
use. Rows are stored bottom-up as the format requires; arrays on the
Python side are top-down (row 0 = top scanline).
"""

from __future__ import annotations

import os

import numpy as np


class PfmError(ValueError):
    pass


def write_pfm(path: str | os.PathLike, values: np.ndarray) -> None:
    """Write a 2D float32 array as little-endian grayscale PFM."""
    values = np.asarray(values, dtype=np.float32)
    if values.ndim != 2:
        raise PfmError(f"expected a 2D array, got shape {values.shape}")
    h, w = values.shape
    with open(path, "wb") as fh:
        fh.write(b"Pf\n")
        fh.write(f"{w} {h}\n".encode("ascii"))
        fh.write(b"-1.0\n")
        fh.write(np.ascontiguousarray(values[::-1]).tobytes())


def read_pfm(path: str | os.PathLike) -> np.ndarray:
    """Read a grayscale PFM file into a top-down float32 array."""
    with open(path, "rb") as fh:
        magic = fh.readline().strip()
        if magic != b"Pf":
            raise PfmError(f"{path}: not a grayscale PFM (magic {magic!r})")
        dims = fh.readline().split()
        if len(dims) != 2:
            raise PfmError(f"{path}: malformed dimension line")
        w, h = int(dims[0]), int(dims[1])
        scale = float(fh.readline().strip())
        dtype = "<f4" if scale < 0 else ">f4"
        data = np.frombuffer(fh.read(w * h * 4), dtype=dtype)
        if data.size != w * h:
            raise PfmError(f"{path}: truncated data ({data.size} of {w * h} samples)")
    values = data.reshape(h, w)[::-1].astype(np.float32)
    if abs(scale) not in (0.0, 1.0):
        values = values * abs(scale)
    return values

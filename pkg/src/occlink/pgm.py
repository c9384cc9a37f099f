"""Binary PGM (P5, maxval 255) reading and writing."""
from __future__ import annotations

import os

import numpy as np


def write_pgm(path: str | os.PathLike, pixels: np.ndarray) -> None:
    pixels = np.asarray(pixels)
    if pixels.ndim != 2:
        raise ValueError("PGM needs a 2-D array")
    if pixels.dtype != np.uint8:
        if pixels.min(initial=0) < 0 or pixels.max(initial=0) > 255:
            raise ValueError("pixel values outside 0..255")
        pixels = pixels.astype(np.uint8)
    h, w = pixels.shape
    with open(path, "wb") as fh:
        fh.write(b"P5\n%d %d\n255\n" % (w, h))
        fh.write(np.ascontiguousarray(pixels).tobytes())


def _tokens(data: bytes, count: int) -> tuple[list[bytes], int]:
    """Read ``count`` whitespace-separated header tokens, skipping comments."""
    tokens, i = [], 0
    while len(tokens) < count:
        while i < len(data) and data[i : i + 1].isspace():
            i += 1
        if i >= len(data):
            raise ValueError("truncated PGM header")
        if data[i : i + 1] == b"#":
            i = data.find(b"\n", i)
            if i < 0:
                raise ValueError("truncated PGM header")
            continue
        j = i
        while j < len(data) and not data[j : j + 1].isspace():
            j += 1
        tokens.append(data[i:j])
        i = j
    # exactly one whitespace byte separates the header from the raster
    return tokens, i + 1


def read_pgm(path: str | os.PathLike) -> np.ndarray:
    with open(path, "rb") as fh:
        data = fh.read()
    (magic, w, h, maxval), offset = _tokens(data, 4)
    if magic != b"P5":
        raise ValueError(f"not a binary PGM: {magic!r}")
    w, h, maxval = int(w), int(h), int(maxval)
    if maxval != 255:
        raise ValueError(f"unsupported maxval {maxval}")
    raster = data[offset : offset + w * h]
    if len(raster) != w * h:
        raise ValueError("truncated PGM raster")
    return np.frombuffer(raster, dtype=np.uint8).reshape(h, w).copy()

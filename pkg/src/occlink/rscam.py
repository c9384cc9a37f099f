"""Rolling-shutter camera channel.

Row ``r`` of a frame starting at ``t0`` integrates the LED intensity over
``[t0 + r*t_row, t0 + r*t_row + t_exp)``. Inside the LED's region of
interest the pixel is::

    clip(round(gain * 255 * mean_intensity + background + noise), 0, 255)

and outside it ``clip(round(background + noise))``. Rounding is half away
from zero. Noise is additive Gaussian from :mod:`occlink.seeding`, keyed on
``(seed, frame_index)`` so frames of a sequence are independent of each
other and of generation order.
"""
from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass

import numpy as np

from . import codec, pgm
from .errors import InvalidArgument
from .seeding import gaussian_noise
from .txmodel import OokWaveform

Roi = tuple[int, int, int, int]


@dataclass(frozen=True)
class CameraConfig:
    """Sensor timing and radiometry.

    ``roi`` is ``(col_min, col_max, row_min, row_max)`` with half-open
    bounds; ``None`` means the whole frame.
    """

    height: int = 1080
    width: int = 256
    t_row: float = 18.5e-6
    t_exp: float = 18.5e-6
    t_frame: float = 33.3e-3
    gain: float = 1.0
    background: float = 16.0
    noise_sigma: float = 4.0
    roi: Roi | None = None

    def __post_init__(self):
        if self.height < 1 or self.width < 1:
            raise InvalidArgument("frame must be at least 1x1")
        if self.t_row <= 0 or self.t_exp <= 0:
            raise InvalidArgument("t_row and t_exp must be positive")
        # small relative slack so t_frame = H * t_row survives float rounding
        if self.t_frame < self.height * self.t_row * (1 - 1e-12):
            raise InvalidArgument("t_frame shorter than the frame readout")
        if not 0 <= self.background <= 255:
            raise InvalidArgument("background must be within 0..255")
        if self.noise_sigma < 0:
            raise InvalidArgument("noise_sigma must be non-negative")
        c0, c1, r0, r1 = self.region
        if not (0 <= c0 < c1 <= self.width and 0 <= r0 < r1 <= self.height):
            raise InvalidArgument(f"roi {self.roi} outside the {self.width}x{self.height} frame")

    @property
    def region(self) -> Roi:
        return self.roi if self.roi is not None else (0, self.width, 0, self.height)

    @property
    def readout(self) -> float:
        return self.height * self.t_row

    @property
    def blanking(self) -> float:
        return self.t_frame - self.readout


@dataclass
class Frame:
    pixels: np.ndarray
    t0: float = 0.0

    @property
    def shape(self):
        return self.pixels.shape


@dataclass
class CaptureTruth:
    """Ground truth for the bits whose cells overlap the frame readout.

    ``first_bit`` is the unwrapped index (counted from the waveform origin)
    of ``visible_bits[0]``; ``bit_phase`` is the row offset from ``t0`` to
    the first bit boundary at or after ``t0``.
    """

    t0: float
    bit_phase: float
    visible_bits: np.ndarray
    first_bit: int = 0

    @property
    def bit_indices(self) -> range:
        return range(self.first_bit, self.first_bit + self.visible_bits.size)

    def to_dict(self) -> dict:
        return {
            "t0": self.t0,
            "bit_phase": self.bit_phase,
            "visible_bits": codec.bits_to_str(self.visible_bits),
            "first_bit": self.first_bit,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CaptureTruth":
        return cls(d["t0"], d["bit_phase"], codec.as_bits(d["visible_bits"]), d.get("first_bit", 0))


def _cumulative(w: OokWaveform, t: np.ndarray, base: np.ndarray) -> np.ndarray:
    """Integral of the waveform from ``base`` to ``t`` where ``base`` is a period start."""
    levels = w.bit_levels
    n = levels.size
    cum = np.concatenate([[0.0], np.cumsum(levels)]) * w.t_bit
    u = t - base
    periods = np.floor(u / w.period)
    r = u - periods * w.period
    k = np.clip(np.floor(r / w.t_bit).astype(np.int64), 0, n - 1)
    return periods * cum[n] + cum[k] + levels[k] * (r - k * w.t_bit)


def row_exposure_integral(w: OokWaveform, t_start, t_exp: float):
    """Mean intensity over ``[t_start, t_start + t_exp)``, summed piece by piece."""
    if t_exp <= 0:
        raise InvalidArgument("t_exp must be positive")
    start = np.asarray(t_start, dtype=np.float64)
    # anchor both ends on the period containing the window start to keep magnitudes small
    base = w.t_origin + np.floor((start - w.t_origin) / w.period) * w.period
    area = _cumulative(w, start + t_exp, base) - _cumulative(w, start, base)
    out = area / t_exp
    return out if out.ndim else float(out)


def _round_half_away(x: np.ndarray) -> np.ndarray:
    return np.sign(x) * np.floor(np.abs(x) + 0.5)


def capture_truth(w: OokWaveform, cfg: CameraConfig, t0: float) -> CaptureTruth:
    t_end = t0 + cfg.readout
    first = math.floor((t0 - w.t_origin) / w.t_bit)
    last = math.ceil((t_end - w.t_origin) / w.t_bit) - 1
    idx = np.arange(first, last + 1)
    boundary = w.t_origin + math.ceil((t0 - w.t_origin) / w.t_bit) * w.t_bit
    return CaptureTruth(
        t0=t0,
        bit_phase=(boundary - t0) / cfg.t_row,
        visible_bits=w.stream[idx % w.stream.size].copy(),
        first_bit=first,
    )


def render_frame(w: OokWaveform, cfg: CameraConfig, t0: float, seed: int, frame_index: int = 0) -> Frame:
    h, wd = cfg.height, cfg.width
    c0, c1, r0, r1 = cfg.region
    starts = t0 + np.arange(h) * cfg.t_row
    signal = cfg.gain * 255.0 * row_exposure_integral(w, starts, cfg.t_exp)
    clean = np.full((h, wd), float(cfg.background))
    clean[r0:r1, c0:c1] += signal[r0:r1, None]
    noisy = clean + gaussian_noise(seed, frame_index, (h, wd), cfg.noise_sigma)
    pixels = np.clip(_round_half_away(noisy), 0, 255).astype(np.uint8)
    return Frame(pixels, t0)


def capture_frame(w: OokWaveform, cfg: CameraConfig, t0: float = 0.0, seed: int = 0):
    """One rolling-shutter frame and the bits it could have seen."""
    return render_frame(w, cfg, t0, seed, 0), capture_truth(w, cfg, t0)


def capture_sequence(w: OokWaveform, cfg: CameraConfig, n_frames: int, t0: float = 0.0, seed: int = 0):
    """Frames started every ``t_frame``; bits sent during blanking are never seen."""
    if n_frames < 1:
        raise InvalidArgument("n_frames must be at least 1")
    out = []
    for k in range(n_frames):
        start = t0 + k * cfg.t_frame
        out.append((render_frame(w, cfg, start, seed, k), capture_truth(w, cfg, start)))
    return out


def bits_per_frame(cfg: CameraConfig, t_bit: float) -> int:
    if t_bit <= 0:
        raise InvalidArgument("t_bit must be positive")
    ratio = cfg.readout / t_bit
    return math.floor(ratio * (1 + 1e-12))


def save_capture(directory: str | os.PathLike, index: int, frame: Frame, truth: CaptureTruth) -> str:
    """Write ``frame_NNNN.pgm`` plus its ``frame_NNNN.json`` truth sidecar."""
    stem = os.path.join(directory, f"frame_{index:04d}")
    pgm.write_pgm(stem + ".pgm", frame.pixels)
    with open(stem + ".json", "w") as fh:
        json.dump(truth.to_dict(), fh, indent=2)
        fh.write("\n")
    return stem + ".pgm"


def load_frame(path: str | os.PathLike, t0: float = 0.0) -> Frame:
    return Frame(pgm.read_pgm(path), t0)

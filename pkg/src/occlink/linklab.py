"""End-to-end link trials and parameter sweeps.

A trial programs the controller over the command channel, captures a burst
of frames, decodes each one and merges the results. Bit errors are counted
over the bits each frame could see; bits sent during blanking are not
errors. A frame that yields no bits at all counts every visible bit as an
error.

Trial ``j`` of grid point ``i`` runs with seed ``mix64(base_seed, i, j)``
(see :mod:`occlink.seeding`), so any subset of trials can run anywhere and
in any order without changing the report.
"""
from __future__ import annotations

import csv
import io
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from . import codec
from .errors import InvalidArgument, NoMessage
from .rscam import CameraConfig, CaptureTruth, Frame, capture_sequence
from .rxpipe import DecodedFrame, decode_frame, merge_frames
from .seeding import mix64, uniform_stream
from .txmodel import Controller, waveform

CSV_HEADER = ["point", "seed", "ber", "frames_with_packet", "n_frames", "message_recovered", "decoded_payload"]
# noise streams 0..n_frames-1 belong to the frames; the phase draw uses its own stream
_PHASE_STREAM = 1 << 32


@dataclass(frozen=True)
class TrialConfig:
    payloads: tuple[int, ...] = (0xB6,)
    t_bit: float = 500e-6
    levels: tuple[float, float] = (0.0, 1.0)
    camera: CameraConfig = field(default_factory=CameraConfig)
    n_frames: int = 5
    t0_jitter: bool = True
    seed: int = 0
    t0: float = 0.0
    clock_hint: bool = False

    def __post_init__(self):
        if not self.payloads:
            raise InvalidArgument("at least one payload is required")
        for p in self.payloads:
            if not codec.is_valid_byte(p):
                raise InvalidArgument(f"invalid payload {p!r}")
        if self.n_frames < 1:
            raise InvalidArgument("n_frames must be at least 1")
        if self.t_bit <= 0:
            raise InvalidArgument("t_bit must be positive")

    @property
    def rows_per_bit(self) -> float:
        return self.t_bit / self.camera.t_row

    def commands(self) -> list[str]:
        return [
            "SET MESSAGE " + " ".join(codec.to_hex(p) for p in self.payloads),
            f"SET TBIT {self.t_bit!r}",
            f"SET LEVELS {self.levels[0]!r} {self.levels[1]!r}",
            "START",
        ]


@dataclass
class TrialRow:
    point: int
    seed: int
    ber: float
    frames_with_packet: int
    n_frames: int
    message_recovered: bool
    decoded_payload: Optional[int]
    bit_errors: int = 0
    bits_compared: int = 0

    def csv_fields(self) -> list[str]:
        return [
            str(self.point),
            str(self.seed),
            repr(float(self.ber)),
            str(self.frames_with_packet),
            str(self.n_frames),
            "true" if self.message_recovered else "false",
            "" if self.decoded_payload is None else codec.to_hex(self.decoded_payload),
        ]


def frame_bit_errors(decoded: DecodedFrame, truth: CaptureTruth, cfg: TrialConfig) -> tuple[int, int]:
    """(errors, compared) for one frame, aligning cells to truth by timing."""
    visible = truth.visible_bits
    if decoded.bits.size == 0:
        return int(visible.size), int(visible.size)
    cam = cfg.camera
    centres = decoded.cell_centres()
    # row r exposes [t0 + r*t_row, t0 + r*t_row + t_exp); row centre coordinate is r + 0.5
    t = truth.t0 + (centres - 0.5) * cam.t_row + cam.t_exp / 2
    idx = np.floor(t / cfg.t_bit).astype(np.int64) - truth.first_bit
    inside = (idx >= 0) & (idx < visible.size)
    errors = int(np.count_nonzero(decoded.bits[inside] != visible[idx[inside]]))
    return errors, int(np.count_nonzero(inside))


@dataclass
class LinkRun:
    """Everything one simulated burst produced."""

    t0: float
    captures: list[tuple[Frame, CaptureTruth]]
    decoded: list[DecodedFrame]


def simulate(cfg: TrialConfig) -> LinkRun:
    """Program the controller, capture ``n_frames`` frames and decode each."""
    ctl = Controller()
    for line in cfg.commands():
        reply = ctl.send(line)
        if reply != "OK":
            raise InvalidArgument(f"controller rejected {line!r}: {reply}")
    wave = waveform(ctl.state)
    if cfg.t0_jitter:
        t0 = float(uniform_stream(cfg.seed, _PHASE_STREAM, 1)[0]) * wave.period
    else:
        t0 = cfg.t0
    captures = capture_sequence(wave, cfg.camera, cfg.n_frames, t0, cfg.seed)
    hint = cfg.rows_per_bit if cfg.clock_hint else None
    decoded = [decode_frame(frame, hint, cfg.camera.roi) for frame, _ in captures]
    return LinkRun(t0, captures, decoded)


def run_trial(cfg: TrialConfig, point: int = 0) -> TrialRow:
    run = simulate(cfg)
    errors = compared = with_packet = 0
    for dec, (_, truth) in zip(run.decoded, run.captures):
        e, c = frame_bit_errors(dec, truth, cfg)
        errors += e
        compared += c
        with_packet += bool(dec.packets)

    try:
        report = merge_frames(run.decoded)
        payload: Optional[int] = report.message
        if len(cfg.payloads) == 1:
            recovered = payload == cfg.payloads[0]
        else:
            recovered = set(cfg.payloads) <= set(report.counts)
    except NoMessage:
        payload, recovered = None, False
    return TrialRow(
        point=point,
        seed=cfg.seed,
        ber=errors / compared if compared else 0.0,
        frames_with_packet=with_packet,
        n_frames=cfg.n_frames,
        message_recovered=recovered,
        decoded_payload=payload,
        bit_errors=errors,
        bits_compared=compared,
    )


@dataclass
class PointSummary:
    point: int
    trials: int
    mean_ber: float
    packet_success_rate: float
    message_success_rate: float

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def summarize(rows: Sequence[TrialRow]) -> dict:
    """Per-point and overall aggregates, recomputed from rows."""
    by_point: dict[int, list[TrialRow]] = {}
    for r in rows:
        by_point.setdefault(r.point, []).append(r)

    def agg(rs):
        return dict(
            trials=len(rs),
            mean_ber=float(np.mean([r.ber for r in rs])),
            packet_success_rate=sum(r.frames_with_packet for r in rs) / sum(r.n_frames for r in rs),
            message_success_rate=sum(r.message_recovered for r in rs) / len(rs),
        )

    return {
        "points": [PointSummary(p, **agg(rs)).to_dict() for p, rs in sorted(by_point.items())],
        "overall": agg(rows) if rows else {},
    }


@dataclass
class LinkReport:
    rows: list[TrialRow]
    base_seed: int = 0

    @property
    def aggregates(self) -> dict:
        return summarize(self.rows)

    def point(self, i: int) -> dict:
        return self.aggregates["points"][i]

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for r in self.rows:
            writer.writerow(r.csv_fields())
        return buf.getvalue()

    def summary_json(self) -> str:
        return json.dumps({"base_seed": self.base_seed, **self.aggregates}, indent=2, sort_keys=True) + "\n"

    def write(self, csv_path: str | os.PathLike) -> str:
        """Write the CSV and a ``.summary.json`` next to it; returns the summary path."""
        csv_path = os.fspath(csv_path)
        with open(csv_path, "w", newline="") as fh:
            fh.write(self.to_csv())
        stem = csv_path[:-4] if csv_path.endswith(".csv") else csv_path
        summary_path = stem + ".summary.json"
        with open(summary_path, "w") as fh:
            fh.write(self.summary_json())
        return summary_path


def read_csv(text: str) -> list[TrialRow]:
    rows = []
    for rec in csv.DictReader(io.StringIO(text)):
        rows.append(
            TrialRow(
                point=int(rec["point"]),
                seed=int(rec["seed"]),
                ber=float(rec["ber"]),
                frames_with_packet=int(rec["frames_with_packet"]),
                n_frames=int(rec["n_frames"]),
                message_recovered=rec["message_recovered"] == "true",
                decoded_payload=int(rec["decoded_payload"], 16) if rec["decoded_payload"] else None,
            )
        )
    return rows


def _run_job(job):
    cfg, point = job
    return run_trial(cfg, point)


def sweep(grid: Sequence[TrialConfig], trials_per_point: int, base_seed: int, workers: int = 1) -> LinkReport:
    """Run every grid point ``trials_per_point`` times; rows come back in (point, repeat) order."""
    if not grid:
        raise InvalidArgument("empty grid")
    if trials_per_point < 1:
        raise InvalidArgument("trials_per_point must be at least 1")
    jobs = []
    for i, point in enumerate(grid):
        for j in range(trials_per_point):
            jobs.append((replace(point, seed=mix64(base_seed, i, j)), i))
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            rows = list(pool.map(_run_job, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    else:
        rows = [_run_job(job) for job in jobs]
    return LinkReport(rows, base_seed)


def window_has_packet(phase: int, length: int, payload: int = 0xFF) -> bool:
    """Does a ``length``-bit window at ``phase`` of a repeating packet parse as a packet?"""
    reps = (phase + length) // codec.PACKET_BITS + 2
    stream = np.tile(codec.frame_packet(payload), reps)
    return bool(codec.parse_stream(stream[phase : phase + length]))


def minimum_visible_bits_for_guaranteed_packet() -> int:
    """Smallest window length that holds a whole packet at every phase.

    Brute force over all 14 phases and every valid payload.
    """
    payloads = codec.build_symbol_table()
    n = 1
    while not all(window_has_packet(ph, n, p) for ph in range(codec.PACKET_BITS) for p in payloads):
        n += 1
    return n

"""Stripe-image decoder.

Pipeline: frame -> row profile -> detrend -> binary rows -> bit clock ->
bits -> packets. Bright stripes are bit 1.
"""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import codec
from .errors import CannotEstimate, InvalidArgument, NoMessage, Undersampled
from .rscam import Frame

ERASURE_FLOOR = 4.0
# a window whose swing is below this fraction of its best neighbour's holds one level only
FLAT_FRACTION = 0.5
# runs must sit within this many cells (beyond one row) of whole cells
MISFIT_LIMIT = 0.25


def row_profile(frame, roi: Optional[Sequence[int]] = None) -> np.ndarray:
    """Mean of each ROI row across the ROI columns.

    ``roi`` is ``(col_min, col_max, row_min, row_max)``, half-open; the
    profile covers the ROI rows only.
    """
    pixels = frame.pixels if isinstance(frame, Frame) else np.asarray(frame)
    h, w = pixels.shape
    c0, c1, r0, r1 = roi if roi is not None else (0, w, 0, h)
    if not (0 <= c0 <= c1 <= w and 0 <= r0 <= r1 <= h):
        raise InvalidArgument(f"roi {roi} outside the {w}x{h} frame")
    if c1 == c0 or r1 == r0:
        raise InvalidArgument("empty roi")
    return pixels[r0:r1, c0:c1].astype(np.float64).mean(axis=1)


def moving_average(p: np.ndarray, window: int) -> np.ndarray:
    """Centered moving average; windows are truncated at the ends."""
    n = p.size
    half = window // 2
    csum = np.concatenate([[0.0], np.cumsum(p)])
    i = np.arange(n)
    lo = np.maximum(i - half, 0)
    hi = np.minimum(i + half + 1, n)
    return (csum[hi] - csum[lo]) / (hi - lo)


def flatten(p, window: int) -> np.ndarray:
    """Subtract the centered moving average to remove slow trends."""
    p = np.asarray(p, dtype=np.float64)
    if window < 1 or window % 2 == 0:
        raise InvalidArgument(f"window must be a positive odd integer, got {window}")
    if window > p.size:
        raise InvalidArgument(f"window {window} longer than profile ({p.size} rows)")
    return p - moving_average(p, window)


@dataclass
class Binarized:
    rows: np.ndarray
    erased: np.ndarray
    thresholds: list[float]
    windows: list[tuple[int, int]]
    quality: float

    @property
    def all_erased(self) -> bool:
        return bool(self.erased.all())


def _windows(n: int, length: Optional[int]) -> list[tuple[int, int]]:
    if length is None or length >= n:
        return [(0, n)]
    bounds = list(range(0, n, length)) + [n]
    spans = list(zip(bounds[:-1], bounds[1:]))
    if len(spans) > 1 and spans[-1][1] - spans[-1][0] < length / 2:
        spans[-2:] = [(spans[-2][0], n)]
    return spans


def binarize(p, expected_rows_per_bit: Optional[float] = None, floor: float = ERASURE_FLOOR) -> Binarized:
    """Windowed min/max midpoint threshold.

    Windows span 8 expected bit widths (the whole profile without a hint).
    A window that swings less than half as much as its neighbours holds a
    single level, so it borrows the nearest neighbour's threshold. Rows are
    erasures only when no window in the profile reaches ``floor``.
    """
    p = np.asarray(p, dtype=np.float64)
    if p.size < 2:
        raise InvalidArgument("profile needs at least 2 rows")
    length = None if expected_rows_per_bit is None else max(2, math.ceil(8 * expected_rows_per_bit))
    spans = _windows(p.size, length)
    lows = np.array([p[a:b].min() for a, b in spans])
    highs = np.array([p[a:b].max() for a, b in spans])
    amps = highs - lows

    valid = amps >= floor
    if len(spans) > 1:
        for i in range(len(spans)):
            neighbours = amps[max(0, i - 1) : i + 2]
            if amps[i] < FLAT_FRACTION * neighbours.max():
                valid[i] = False

    rows = np.zeros(p.size, dtype=np.uint8)
    erased = np.zeros(p.size, dtype=bool)
    thresholds: list[float] = []
    good = np.flatnonzero(valid)
    close = np.zeros(p.size, dtype=bool)
    for i, (a, b) in enumerate(spans):
        if good.size == 0:
            erased[a:b] = True
            thresholds.append(float("nan"))
            continue
        if valid[i]:
            src = [i]
        else:
            dist = np.abs(good - i)
            src = good[dist == dist.min()]
        thr = float(np.mean([(lows[j] + highs[j]) / 2 for j in src]))
        amp = float(np.mean([amps[j] for j in src]))
        seg = p[a:b]
        # ties go to 1; the slack scales with the swing so affine maps keep every decision
        rows[a:b] = seg >= thr - 1e-9 * amp
        close[a:b] = np.abs(seg - thr) < 0.25 * (amp / 2)
        thresholds.append(thr)
    live = ~erased
    quality = float((~close[live]).mean()) if live.any() else 0.0
    return Binarized(rows, erased, thresholds, spans, quality)


def run_lengths(rows) -> tuple[np.ndarray, np.ndarray]:
    """Values and lengths of the maximal runs in a 0/1 sequence."""
    rows = np.asarray(rows)
    if rows.size == 0:
        return rows[:0], np.zeros(0, dtype=np.int64)
    edges = np.flatnonzero(np.diff(rows)) + 1
    starts = np.concatenate([[0], edges])
    ends = np.concatenate([edges, [rows.size]])
    return rows[starts], ends - starts


def _pooled_width(lengths: np.ndarray, unit: float) -> float:
    for _ in range(50):
        n = np.maximum(1, np.rint(lengths / unit))
        new = lengths.sum() / n.sum()
        if new == unit:
            break
        unit = new
    return float(unit)


def _edge_fit_width(values: np.ndarray, lengths: np.ndarray, unit: float) -> float:
    """Least-squares slope of edge position against bit index.

    Rising and falling edges get separate intercepts, so a constant
    one-sided bias on transition rows cancels out.
    """
    n = np.maximum(1, np.rint(lengths / unit))
    pos = np.cumsum(lengths)[:-1].astype(np.float64)
    idx = np.cumsum(n)[:-1]
    rising = values[1:] == 1
    num = den = 0.0
    for sel in (rising, ~rising):
        if sel.sum() >= 2:
            dm = idx[sel] - idx[sel].mean()
            num += float(dm @ (pos[sel] - pos[sel].mean()))
            den += float(dm @ dm)
    return num / den if den > 0 else unit


def _dft_width(rows: np.ndarray) -> float:
    x = 2.0 * rows - 1.0
    x = x - x.mean()
    nfft = 1 << int(math.ceil(math.log2(max(16, 8 * x.size))))
    spec = np.abs(np.fft.rfft(x, nfft))
    spec[0] = 0.0
    k = int(np.argmax(spec))
    if 0 < k < spec.size - 1:
        a, b, c = spec[k - 1], spec[k], spec[k + 1]
        denom = a - 2 * b + c
        k = k + (0.5 * (a - c) / denom if denom else 0.0)
    return nfft / (2.0 * k)


def estimate_rows_per_bit(rows, method: str = "runs", provisional: Optional[float] = None) -> float:
    """Spatial bit width in rows.

    ``runs`` (default): interior runs (the two edge runs are truncated by
    the frame) are each divided by their nearest integer multiple of a
    provisional unit; the pooled ratio sum(run) / sum(multiple) is iterated
    to a fixed point and then refined by a least-squares fit of edge
    positions against bit index. Without ``provisional`` two starts are
    tried (shortest run, half the shortest adjacent pair) and the widest
    result that fits every run wins. ``dft``: the fundamental of the +/-1
    row pattern, valid for alternating stripes.
    """
    rows = np.asarray(rows)
    values, lengths = run_lengths(rows)
    if lengths.size < 3:
        raise CannotEstimate("fewer than 2 transitions")
    if method == "dft":
        return _dft_width(rows.astype(np.float64))
    if method != "runs":
        raise InvalidArgument(f"unknown method {method!r}")
    interior = lengths[1:-1].astype(np.float64)
    if provisional is not None:
        return _refine(values, interior, provisional)
    # A dark/bright bias on transition rows lengthens one run and shortens
    # its neighbour by the same amount, so the shortest run can mislead.
    # Half the shortest adjacent pair is a second, bias-free start; the
    # widest fixed point that fits every run wins.
    found = _fixed_points(values, interior)
    misfit = [_run_misfit(interior, u) for u in found]
    good = [u for u, m in zip(found, misfit) if m <= MISFIT_LIMIT]
    return good[0] if good else found[int(np.argmin(misfit))]


def _fixed_points(values: np.ndarray, interior: np.ndarray) -> list[float]:
    """Widths reached from both starts, widest first."""
    pairs = interior[:-1] + interior[1:]
    starts = [float(interior.min())]
    if pairs.size:
        starts.append(float(pairs.min()) / 2.0)
    return sorted({_refine(values, interior, u) for u in starts}, reverse=True)


def width_candidates(rows) -> list[float]:
    """Plausible bit widths for blind slicing: every run fixed point plus the header-anchored one."""
    values, lengths = run_lengths(np.asarray(rows))
    if lengths.size < 3:
        raise CannotEstimate("fewer than 2 transitions")
    out = _fixed_points(values, lengths[1:-1].astype(np.float64))
    anchored = header_anchored_width(rows)
    if anchored is not None:
        out.append(anchored)
    unique: list[float] = []
    for w in out:
        if w > 0 and not any(math.isclose(w, u, rel_tol=1e-6) for u in unique):
            unique.append(w)
    return unique


def _refine(values: np.ndarray, interior: np.ndarray, unit: float) -> float:
    unit = _pooled_width(interior, unit)
    for _ in range(5):
        refined = _edge_fit_width(values[1:-1], interior, unit)
        if not refined > 1.0 or refined == unit:
            break
        unit = refined
    return float(unit)


def _run_misfit(lengths: np.ndarray, unit: float) -> float:
    """Worst run-length error against whole cells, in cells.

    Each run may be off by one row (its two edges are each quantised to a
    row) before it counts against the fit.
    """
    n = np.maximum(1, np.rint(lengths / unit))
    excess = np.maximum(0.0, np.abs(lengths - n * unit) - 1.0)
    return float(excess.max()) / unit


def header_anchored_width(rows) -> Optional[float]:
    """Width estimate that assumes the longest interior zero run is a header's 0000."""
    values, lengths = run_lengths(rows)
    zeros = lengths[1:-1][values[1:-1] == 0]
    if lengths.size < 3 or zeros.size == 0:
        return None
    return estimate_rows_per_bit(rows, provisional=zeros.max() / 4.0)


@dataclass
class SlicedBits:
    """Sliced bits.

    ``phase`` is the row coordinate where the first cell starts; ``margin``
    is the mean |ones - zeros| per cell at that phase.
    """

    bits: np.ndarray
    phase: float
    rows_per_bit: float
    margin: float


def _cell_bounds(n: int, phase: float, width: float) -> tuple[np.ndarray, np.ndarray, float]:
    """Row ranges of the complete cells for cell starts ``phase + k*width``.

    A row belongs to the cell containing its centre. An edge cell counts as
    complete when it lacks at most ``floor(width / 8)`` of its rows, so a
    one-row ambiguity in phase does not cost a bit at wide stripes. Also
    returns where the first complete cell starts.
    """
    first = -math.ceil((phase + 0.5) / width)
    last = math.floor((n + 0.5 - phase) / width)
    starts = phase + width * np.arange(first, last + 1)
    lo = np.ceil(starts - 0.5).astype(np.int64)
    hi = np.ceil(starts + width - 0.5).astype(np.int64)
    missing = (hi - lo) - (np.minimum(hi, n) - np.maximum(lo, 0))
    keep = missing <= math.floor(width / 8)
    if not keep.any():
        return lo[:0], hi[:0], phase
    return np.maximum(lo[keep], 0), np.minimum(hi[keep], n), float(starts[keep][0])


def slice_bits(rows, rows_per_bit: float, phase_step: float = 0.25) -> SlicedBits:
    """Majority-vote bit cells at the phase with the largest total cell margin.

    Partial cells at both ends are dropped; a tied cell reads as 1.
    """
    rows = np.asarray(rows)
    if rows_per_bit < 2:
        raise Undersampled(f"{rows_per_bit:.3f} rows per bit, need at least 2")
    n = rows.size
    signed = np.concatenate([[0], np.cumsum(2 * rows.astype(np.int64) - 1)])
    phases = np.arange(0.0, rows_per_bit, phase_step)
    scores = np.full(phases.size, -1.0)
    for i, ph in enumerate(phases):
        lo, hi, _ = _cell_bounds(n, ph, rows_per_bit)
        if lo.size:
            scores[i] = np.abs(signed[hi] - signed[lo]).sum()
    if scores.max() < 0:
        return SlicedBits(np.zeros(0, dtype=np.uint8), 0.0, rows_per_bit, 0.0)
    best = np.flatnonzero(scores == scores.max())
    # centre of the longest plateau of equally good phases
    groups = np.split(best, np.flatnonzero(np.diff(best) > 1) + 1)
    plateau = max(groups, key=len)
    phase = float(phases[plateau[len(plateau) // 2]])
    lo, hi, start = _cell_bounds(n, phase, rows_per_bit)
    sums = signed[hi] - signed[lo]
    return SlicedBits((sums >= 0).astype(np.uint8), start, rows_per_bit, float(scores.max()) / max(1, sums.size))


@dataclass
class DecodedFrame:
    bits: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.uint8))
    packets: list[tuple[int, int]] = field(default_factory=list)
    rows_per_bit: float = 0.0
    threshold_trace: list[float] = field(default_factory=list)
    quality: float = 0.0
    phase: float = 0.0
    row_offset: int = 0
    error: Optional[str] = None

    @property
    def payloads(self) -> list[int]:
        return [p for _, p in self.packets]

    def cell_centres(self) -> np.ndarray:
        """Row coordinate (frame rows, pixel centres at r + 0.5) of each decoded bit."""
        k = np.arange(self.bits.size)
        return self.row_offset + self.phase + (k + 0.5) * self.rows_per_bit

    def to_dict(self) -> dict:
        out = {
            "bits": codec.bits_to_str(self.bits),
            "rows_per_bit": self.rows_per_bit,
            "packets": [{"pos": pos, "payload": codec.to_hex(p)} for pos, p in self.packets],
            "quality": self.quality,
        }
        if self.error:
            out["error"] = self.error
        return out


def _odd_at_most(n: int, want: int) -> int:
    w = min(want, n)
    return w if w % 2 else w - 1


def decode_frame(
    frame,
    rows_per_bit: Optional[float] = None,
    roi: Optional[Sequence[int]] = None,
    method: str = "runs",
) -> DecodedFrame:
    """Run the whole pipeline on one frame.

    Without ``rows_per_bit`` the bit width is estimated: every plausible
    width (run-length fixed points and a header-anchored one) is sliced and
    the slicing with the fewest packet-code violations wins, then the one
    with more packets, then the one with purer cells. Estimation failures come back as an empty
    result with ``error`` set.
    """
    prof = row_profile(frame, roi)
    offset = 0 if roi is None else int(roi[2])
    if prof.size < 2:
        return DecodedFrame(row_offset=offset, error="profile too short")
    if rows_per_bit is not None:
        window = _odd_at_most(prof.size, int(round(28 * rows_per_bit)) | 1)
    else:
        window = _odd_at_most(prof.size, prof.size)
    flat = flatten(prof, max(window, 1))
    binary = binarize(flat, rows_per_bit)
    diag = dict(threshold_trace=binary.thresholds, quality=binary.quality, row_offset=offset)
    if binary.all_erased:
        return DecodedFrame(error="erasure: no stripe contrast", **diag)

    if rows_per_bit is not None:
        candidates = [float(rows_per_bit)]
    else:
        try:
            candidates = [estimate_rows_per_bit(binary.rows, method)]
            if method == "runs":
                candidates += [w for w in width_candidates(binary.rows) if not math.isclose(w, candidates[0], rel_tol=1e-6)]
            else:
                anchored = header_anchored_width(binary.rows)
                if anchored is not None:
                    candidates.append(anchored)
        except CannotEstimate as exc:
            return DecodedFrame(error=f"cannot-estimate: {exc}", **diag)

    sliced_all = []
    best: Optional[DecodedFrame] = None
    for width in candidates:
        try:
            sliced = slice_bits(binary.rows, width)
        except Undersampled as exc:
            if best is None:
                best = DecodedFrame(rows_per_bit=width, error=f"undersampled: {exc}", **diag)
            continue
        result = DecodedFrame(
            bits=sliced.bits,
            packets=codec.parse_stream(sliced.bits),
            rows_per_bit=width,
            phase=sliced.phase,
            **diag,
        )
        sliced_all.append((sliced.margin / width, result))
    if not sliced_all:
        return best
    # a wrong width garbles the stream into runs the code forbids; among
    # clean streams more packets win, then purer cells
    def rank(k):
        purity, r = sliced_all[k]
        return (-codec.count_violations(r.bits), len(r.packets), purity, -k)

    return sliced_all[max(range(len(sliced_all)), key=rank)][1]


@dataclass
class MessageReport:
    message: int
    count: int
    counts: dict[int, int]
    frames: int
    multi_payload: bool

    def to_dict(self) -> dict:
        return {
            "message": codec.to_hex(self.message),
            "count": self.count,
            "counts": {codec.to_hex(p): c for p, c in self.counts.items()},
            "frames": self.frames,
            "multi_payload": self.multi_payload,
        }


def merge_frames(frames: Sequence[DecodedFrame]) -> MessageReport:
    """Vote across frames; each frame counts a payload at most once."""
    counts: Counter[int] = Counter()
    first_seen: dict[int, int] = {}
    for k, df in enumerate(frames):
        for p in dict.fromkeys(df.payloads):
            counts[p] += 1
            first_seen.setdefault(p, k)
    if not counts:
        raise NoMessage("no packets in any frame")
    ranked = sorted(counts, key=lambda p: (-counts[p], first_seen[p], p))
    total = sum(counts.values())
    strong = [p for p in counts if counts[p] / total > 0.25]
    return MessageReport(
        message=ranked[0],
        count=counts[ranked[0]],
        counts={p: counts[p] for p in ranked},
        frames=len(frames),
        multi_payload=len(strong) > 1,
    )

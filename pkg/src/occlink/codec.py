"""Constrained payload coding and 14-bit packet framing.

A packet is the fixed header ``100001`` followed by one payload byte sent
MSB first. Payload bytes may not contain three or more consecutive zeros,
which keeps the header's ``0000`` run unique as a sync mark.

Payloads are plain ``int`` values (0..255); bit sequences are ``uint8``
numpy arrays of 0/1.
"""
from __future__ import annotations

from functools import lru_cache
from typing import Iterable, Sequence, Union

import numpy as np

from .errors import InvalidArgument, InvalidPayload

HEADER = np.array([1, 0, 0, 0, 0, 1], dtype=np.uint8)
PACKET_BITS = 14
PAYLOAD_BITS = 8
SYMBOL_COUNT = 128

BitsLike = Union[str, Sequence[int], np.ndarray]


def as_bits(bits: BitsLike) -> np.ndarray:
    """Coerce a '0101' string or a sequence of 0/1 into a uint8 array."""
    if isinstance(bits, str):
        if set(bits) - {"0", "1"}:
            raise InvalidArgument(f"not a bit string: {bits!r}")
        return np.frombuffer(bits.encode("ascii"), dtype=np.uint8) - ord("0")
    arr = np.asarray(bits)
    if arr.size and not np.isin(arr, (0, 1)).all():
        raise InvalidArgument("bits must be 0 or 1")
    return arr.astype(np.uint8).reshape(-1)


def bits_to_str(bits: Iterable[int]) -> str:
    return "".join("1" if b else "0" for b in bits)


def byte_to_bits(value: int) -> np.ndarray:
    if not 0 <= value <= 255:
        raise InvalidArgument(f"byte out of range: {value}")
    return np.array([(value >> (7 - i)) & 1 for i in range(8)], dtype=np.uint8)


def bits_to_byte(bits: BitsLike) -> int:
    arr = as_bits(bits)
    if arr.size != PAYLOAD_BITS:
        raise InvalidArgument(f"expected 8 bits, got {arr.size}")
    value = 0
    for b in arr:
        value = (value << 1) | int(b)
    return value


def to_hex(value: int) -> str:
    return f"{value:02X}"


def parse_hex(token: str) -> int:
    """Parse a one-byte hex token such as ``B6``; raises InvalidArgument."""
    try:
        value = int(token, 16)
    except ValueError:
        raise InvalidArgument(f"malformed hex byte: {token!r}") from None
    if not 0 <= value <= 255 or len(token.strip()) > 2:
        raise InvalidArgument(f"not a single byte: {token!r}")
    return value


def _max_zero_run(value: int) -> int:
    run = best = 0
    for i in range(7, -1, -1):
        if (value >> i) & 1:
            run = 0
        else:
            run += 1
            best = max(best, run)
    return best


def validate_payload(bits: BitsLike) -> bool:
    """True iff the 8-bit sequence has no run of three zeros."""
    arr = as_bits(bits)
    if arr.size != PAYLOAD_BITS:
        raise InvalidArgument(f"payload must have 8 bits, got {arr.size}")
    return _max_zero_run(bits_to_byte(arr)) < 3


def is_valid_byte(value: int) -> bool:
    return 0 <= value <= 255 and _max_zero_run(value) < 3


def _payload_value(p: Union[int, BitsLike]) -> int:
    value = p if isinstance(p, (int, np.integer)) else bits_to_byte(p)
    value = int(value)
    if not is_valid_byte(value):
        raise InvalidPayload(f"invalid payload byte: {value!r}")
    return value


@lru_cache(maxsize=None)
def build_symbol_table() -> tuple[int, ...]:
    """All valid payload bytes in ascending order (149 of them)."""
    return tuple(v for v in range(256) if is_valid_byte(v))


@lru_cache(maxsize=None)
def _symbol_index() -> dict[int, int]:
    return {v: i for i, v in enumerate(build_symbol_table())}


def encode_symbol(v: int) -> int:
    """Map a 7-bit symbol onto the constrained alphabet (enumerative code)."""
    if not isinstance(v, (int, np.integer)) or not 0 <= v < SYMBOL_COUNT:
        raise InvalidArgument(f"symbol out of range 0..127: {v!r}")
    return build_symbol_table()[int(v)]


def decode_symbol(p: Union[int, BitsLike]) -> int:
    """Index of a valid payload in the symbol table, 0..148.

    Indices above 127 are reserved codewords and are returned as-is.
    """
    return _symbol_index()[_payload_value(p)]


def frame_packet(p: Union[int, BitsLike]) -> np.ndarray:
    return np.concatenate([HEADER, byte_to_bits(_payload_value(p))])


def frame_payloads(payloads: Iterable[int]) -> np.ndarray:
    packets = [frame_packet(p) for p in payloads]
    if not packets:
        return np.zeros(0, dtype=np.uint8)
    return np.concatenate(packets)


def message_to_stream(symbols: Iterable[int]) -> np.ndarray:
    return frame_payloads(encode_symbol(v) for v in symbols)


def parse_stream(bits: BitsLike) -> list[tuple[int, int]]:
    """Find every exact header whose following 8 bits form a valid payload.

    Returns ``(position, payload)`` pairs where ``position`` is the index of
    the header's first bit. The stream may be truncated at either end.
    """
    arr = as_bits(bits)
    n = arr.size - PACKET_BITS + 1
    if n <= 0:
        return []
    windows = np.lib.stride_tricks.sliding_window_view(arr, PACKET_BITS)
    hits = np.flatnonzero((windows[:, :6] == HEADER).all(axis=1))
    weights = 1 << np.arange(7, -1, -1)
    found = []
    for pos in hits:
        value = int(windows[pos, 6:] @ weights)
        if is_valid_byte(value):
            found.append((int(pos), value))
    return found


# longest legal run of ones: header's closing 1, an all-ones payload, next header's 1
_MAX_ONES = 1 + PAYLOAD_BITS + 1


def count_violations(bits: BitsLike) -> int:
    """How many places a received stream breaks the packet code.

    Counted: zero runs of 3 or of 5 and more (only a header has 4), ones
    runs longer than 10, and consecutive headers whose spacing is not a
    multiple of 14. The first and last runs may be cut short by the frame
    edge, so they only count when already too long.
    """
    b = as_bits(bits)
    if b.size == 0:
        return 0
    edges = np.flatnonzero(np.diff(b)) + 1
    starts = np.concatenate([[0], edges])
    lengths = np.diff(np.concatenate([starts, [b.size]]))
    values = b[starts]
    last = len(starts) - 1
    bad = 0
    headers = []
    for k, (v, n, s) in enumerate(zip(values, lengths, starts)):
        cut = k == 0 or k == last
        if v == 0:
            if n >= 5 or (n == 3 and not cut):
                bad += 1
            elif n == 4 and not cut:
                headers.append(int(s) - 1)
        elif n > _MAX_ONES:
            bad += 1
    bad += sum((b2 - b1) % PACKET_BITS != 0 for b1, b2 in zip(headers, headers[1:]))
    return bad

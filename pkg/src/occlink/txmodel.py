"""Transmitter emulation: text command channel, controller memory, OOK drive.

The Bluetooth passthrough is modeled as a lossless line protocol::

    SET MESSAGE <hex byte> [<hex byte> ...]
    SET TBIT <seconds>
    SET LEVELS <I_off> <I_on>
    START
    STOP

Verbs are case-insensitive. Every accepted line answers ``OK``; rejected
lines answer ``ERR <reason>``.
"""
from __future__ import annotations

import dataclasses
import enum
import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from . import codec
from .errors import CommandError, InvalidArgument, NotTransmitting


class Kind(enum.Enum):
    SET_MESSAGE = "SET_MESSAGE"
    SET_TBIT = "SET_TBIT"
    SET_LEVELS = "SET_LEVELS"
    START = "START"
    STOP = "STOP"


@dataclass(frozen=True)
class TxCommand:
    kind: Kind
    message: tuple[int, ...] = ()
    t_bit: float | None = None
    levels: tuple[float, float] | None = None


@dataclass(frozen=True)
class ControllerState:
    stored_stream: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.uint8))
    t_bit: float = 500e-6
    levels: tuple[float, float] = (0.0, 1.0)
    running: bool = False

    def __eq__(self, other):
        if not isinstance(other, ControllerState):
            return NotImplemented
        return (
            np.array_equal(self.stored_stream, other.stored_stream)
            and self.t_bit == other.t_bit
            and self.levels == other.levels
            and self.running == other.running
        )

    def payloads(self) -> list[int]:
        return [p for _, p in codec.parse_stream(self.stored_stream)]

    def to_dict(self) -> dict:
        return {
            "stored_stream": codec.bits_to_str(self.stored_stream),
            "message": [codec.to_hex(p) for p in self.payloads()],
            "t_bit": self.t_bit,
            "levels": list(self.levels),
            "running": self.running,
        }


def _parse_float(token: str) -> float:
    try:
        value = float(token)
    except ValueError:
        raise CommandError(f"not a number: {token}", token) from None
    if not math.isfinite(value):
        raise CommandError(f"not a finite number: {token}", token)
    return value


def parse_command(line: str) -> TxCommand:
    tokens = line.split()
    if not tokens:
        raise CommandError("empty command", "")
    verb = tokens[0].upper()
    if verb in ("START", "STOP"):
        if len(tokens) != 1:
            raise CommandError(f"{verb} takes no arguments", tokens[1])
        return TxCommand(Kind[verb])
    if verb != "SET":
        raise CommandError(f"unknown verb: {tokens[0]}", tokens[0])
    if len(tokens) < 2:
        raise CommandError("SET needs a parameter", "SET")
    what, args = tokens[1].upper(), tokens[2:]

    if what == "MESSAGE":
        if not args:
            raise CommandError("SET MESSAGE needs at least one byte", tokens[1])
        payloads = []
        for tok in args:
            try:
                value = codec.parse_hex(tok)
            except InvalidArgument:
                raise CommandError(f"malformed hex byte: {tok}", tok) from None
            if not codec.is_valid_byte(value):
                raise CommandError(f"payload {tok} has a run of three zeros", tok)
            payloads.append(value)
        return TxCommand(Kind.SET_MESSAGE, message=tuple(payloads))

    if what == "TBIT":
        if len(args) != 1:
            raise CommandError("SET TBIT takes one value", tokens[1])
        t_bit = _parse_float(args[0])
        if t_bit <= 0:
            raise CommandError(f"bit period must be positive: {args[0]}", args[0])
        return TxCommand(Kind.SET_TBIT, t_bit=t_bit)

    if what == "LEVELS":
        if len(args) != 2:
            raise CommandError("SET LEVELS takes two values", tokens[1])
        off, on = (_parse_float(a) for a in args)
        if not 0 <= off < on <= 1:
            raise CommandError(f"need 0 <= I_off < I_on <= 1: {args[0]} {args[1]}", " ".join(args))
        return TxCommand(Kind.SET_LEVELS, levels=(off, on))

    raise CommandError(f"unknown parameter: {tokens[1]}", tokens[1])


def apply_command(state: ControllerState, cmd: TxCommand) -> ControllerState:
    if cmd.kind is Kind.SET_MESSAGE:
        # raw payloads are framed directly, no symbol coding
        return dataclasses.replace(state, stored_stream=codec.frame_payloads(cmd.message))
    if cmd.kind is Kind.SET_TBIT:
        return dataclasses.replace(state, t_bit=cmd.t_bit)
    if cmd.kind is Kind.SET_LEVELS:
        return dataclasses.replace(state, levels=cmd.levels)
    return dataclasses.replace(state, running=cmd.kind is Kind.START)


class Controller:
    """Stateful wrapper answering command lines the way the serial link does."""

    def __init__(self, state: ControllerState | None = None):
        self.state = state or ControllerState()

    def send(self, line: str) -> str:
        try:
            cmd = parse_command(line)
        except CommandError as exc:
            return f"ERR {exc}"
        self.state = apply_command(self.state, cmd)
        return "OK"

    def run_script(self, lines: Iterable[str]) -> list[str]:
        """Feed lines, skipping blanks and ``#`` comments; returns responses."""
        responses = []
        for line in lines:
            stripped = line.strip()
            if stripped and not stripped.startswith("#"):
                responses.append(self.send(stripped))
        return responses


@dataclass(frozen=True)
class OokWaveform:
    """Piecewise-constant LED intensity repeating ``stream`` every period.

    Bit ``k`` occupies ``[t_origin + k*t_bit, t_origin + (k+1)*t_bit)``;
    values at breakpoints are right-continuous.
    """

    stream: np.ndarray
    t_bit: float
    levels: tuple[float, float] = (0.0, 1.0)
    t_origin: float = 0.0

    def __post_init__(self):
        if self.stream.size == 0:
            raise NotTransmitting("empty bit stream")
        if self.t_bit <= 0:
            raise InvalidArgument("t_bit must be positive")

    @property
    def period(self) -> float:
        return self.stream.size * self.t_bit

    @property
    def bit_levels(self) -> np.ndarray:
        off, on = self.levels
        return np.where(self.stream == 1, on, off).astype(np.float64)

    def bit_index(self, t) -> np.ndarray:
        """Unwrapped (non-cyclic) index of the bit cell containing ``t``."""
        return np.floor((np.asarray(t, dtype=np.float64) - self.t_origin) / self.t_bit).astype(np.int64)

    def __call__(self, t):
        idx = self.bit_index(t) % self.stream.size
        out = self.bit_levels[idx]
        return out if out.ndim else float(out)


def waveform(state: ControllerState, t_origin: float = 0.0) -> OokWaveform:
    if not state.running:
        raise NotTransmitting("controller is stopped")
    if state.stored_stream.size == 0:
        raise NotTransmitting("no message loaded")
    return OokWaveform(state.stored_stream.copy(), state.t_bit, state.levels, t_origin)


def intensity_at(w: OokWaveform, t):
    return w(t)

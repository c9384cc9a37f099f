from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from occlink import codec
from occlink.errors import CommandError, NotTransmitting
from occlink.txmodel import (
    Controller,
    ControllerState,
    Kind,
    OokWaveform,
    apply_command,
    intensity_at,
    parse_command,
    waveform,
)


def test_parse_set_message():
    cmd = parse_command("SET MESSAGE B6")
    assert cmd.kind is Kind.SET_MESSAGE
    assert cmd.message == (0xB6,)
    assert parse_command("set message b6 ff").message == (0xB6, 0xFF)


def test_parse_set_tbit():
    cmd = parse_command("SET TBIT 0.0002")
    assert cmd.kind is Kind.SET_TBIT
    assert cmd.t_bit == pytest.approx(200e-6)


def test_parse_levels_and_toggles():
    assert parse_command("SET LEVELS 0.1 0.9").levels == (0.1, 0.9)
    assert parse_command("start").kind is Kind.START
    assert parse_command("Stop").kind is Kind.STOP


@pytest.mark.parametrize(
    "line, token",
    [
        ("SET MESSAGE 41", "41"),
        ("SET MESSAGE B6 G1", "G1"),
        ("SET TBIT 0", "0"),
        ("SET TBIT -1e-3", "-1e-3"),
        ("SET TBIT abc", "abc"),
        ("BLINK", "BLINK"),
        ("SET COLOR red", "COLOR"),
        ("SET LEVELS 0.9 0.1", "0.9 0.1"),
    ],
)
def test_parse_errors_carry_token(line, token):
    with pytest.raises(CommandError) as info:
        parse_command(line)
    assert info.value.token == token


def test_apply_set_message_frames_raw_payload():
    state = apply_command(ControllerState(), parse_command("SET MESSAGE B6"))
    assert codec.bits_to_str(state.stored_stream) == "10000110110110"
    assert not state.running


def test_stop_leaves_other_fields():
    state = ControllerState(codec.frame_payloads([0xB6]), 1e-3, (0.1, 0.8), True)
    stopped = apply_command(state, parse_command("STOP"))
    assert not stopped.running
    assert stopped.t_bit == 1e-3 and stopped.levels == (0.1, 0.8)
    assert np.array_equal(stopped.stored_stream, state.stored_stream)


def test_set_message_while_running():
    c = Controller()
    assert c.run_script(["SET MESSAGE B6", "START", "SET MESSAGE FF"]) == ["OK"] * 3
    assert codec.bits_to_str(c.state.stored_stream) == "10000111111111"
    assert c.state.running


def test_controller_error_response():
    c = Controller()
    assert c.send("SET MESSAGE 41").startswith("ERR ")
    assert c.state == ControllerState()


@pytest.mark.parametrize(
    "line", ["SET MESSAGE B6 FF", "SET TBIT 0.001", "SET LEVELS 0.2 0.7", "START", "STOP"]
)
def test_commands_idempotent(line):
    cmd = parse_command(line)
    base = ControllerState(codec.frame_payloads([0x24]), 2e-3, (0.0, 1.0), False)
    once = apply_command(base, cmd)
    assert apply_command(once, cmd) == once


@given(st.lists(st.sampled_from(codec.build_symbol_table()), min_size=1, max_size=10))
def test_set_message_recovers_payloads(payloads):
    line = "SET MESSAGE " + " ".join(codec.to_hex(p) for p in payloads)
    state = apply_command(ControllerState(), parse_command(line))
    assert state.payloads() == payloads
    assert state.stored_stream.size % 14 == 0


def running(bits, t_bit=1.0, levels=(0.0, 1.0)):
    return ControllerState(codec.as_bits(bits), t_bit, levels, True)


def test_waveform_cyclic():
    w = waveform(running("10"))
    assert intensity_at(w, 0.5) == 1
    assert intensity_at(w, 1.5) == 0
    assert intensity_at(w, 2.5) == 1


def test_all_ones_constant():
    w = waveform(running("1" * 14, levels=(0.2, 0.9)))
    t = np.linspace(-5, 50, 1001)
    assert np.all(intensity_at(w, t) == 0.9)


def test_waveform_errors():
    with pytest.raises(NotTransmitting):
        waveform(ControllerState(running=True))
    with pytest.raises(NotTransmitting):
        waveform(ControllerState(codec.as_bits("10"), 1.0, (0.0, 1.0), running=False))


def test_right_continuous_breakpoint():
    w = waveform(running("10"))
    assert intensity_at(w, 1.0) == 0
    assert intensity_at(w, 2.0) == 1


def test_origin_shift():
    w = waveform(running("10"), t_origin=0.25)
    assert intensity_at(w, 0.2) == 0
    assert intensity_at(w, 0.25) == 1


@given(
    st.sampled_from(codec.build_symbol_table()),
    st.integers(min_value=-100 * 1024, max_value=100 * 1024),
)
def test_periodicity(payload, k):
    # dyadic grid so that t + period is computed without rounding
    t = k / 1024
    w = OokWaveform(codec.frame_packet(payload), 0.25)
    assert intensity_at(w, t) == intensity_at(w, t + w.period)


@given(st.sampled_from(codec.build_symbol_table()), st.sampled_from([(0.0, 1.0), (0.125, 0.75)]))
def test_period_mean(payload, levels):
    stream = codec.frame_packet(payload)
    w = OokWaveform(stream, 0.5, levels)
    # exact integration over the 14 constant pieces
    t_bit = Fraction(w.t_bit)
    total = sum(Fraction(intensity_at(w, float((k + Fraction(1, 2)) * t_bit))) * t_bit for k in range(14))
    off, on = map(Fraction, levels)
    expected = off + (on - off) * Fraction(int(stream.sum()), 14)
    assert total / (14 * t_bit) == expected

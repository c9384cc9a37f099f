import json
from dataclasses import replace

import numpy as np
import pytest

from occlink import codec
from occlink.errors import InvalidArgument
from occlink.linklab import (
    CSV_HEADER,
    TrialConfig,
    minimum_visible_bits_for_guaranteed_packet,
    read_csv,
    run_trial,
    summarize,
    sweep,
    window_has_packet,
)
from occlink.rscam import CameraConfig
from occlink.seeding import mix64


def camera(height, **kw):
    base = dict(height=height, width=4, t_row=1e-5, t_exp=1e-5, t_frame=height * 1e-5, gain=1.0, background=16.0, noise_sigma=0.0)
    base.update(kw)
    return CameraConfig(**base)


def packet_in_window(phase, length):
    # arithmetic oracle: first packet start at or after the window start must end inside it
    start = -(-phase // 14) * 14
    return start + 14 <= phase + length


def test_minimum_visible_bits():
    oracle = min(n for n in range(1, 60) if all(packet_in_window(p, n) for p in range(14)))
    assert oracle == 27
    assert minimum_visible_bits_for_guaranteed_packet() == 27


def test_window_26_phase_1_has_no_packet():
    assert not packet_in_window(1, 26)
    assert not window_has_packet(1, 26)
    assert window_has_packet(0, 26)


def complete_headers(phase, length, payload):
    bits = codec.bits_to_str(np.tile(codec.frame_packet(payload), 6)[phase : phase + length])
    return [i for i in range(len(bits)) if bits.startswith("100001", i)]


@pytest.mark.parametrize("phase", range(14))
def test_window_28_holds_two_header_starts(phase):
    # stream positions that begin a header and fall inside the window
    starts = [k for k in range(phase, phase + 28) if k % 14 == 0]
    assert len(starts) == 2
    assert len(complete_headers(phase, 28, 0xFF)) >= 1


def test_two_complete_headers_need_33_bits():
    payloads = codec.build_symbol_table()[::16]
    def ok(n):
        return all(len(complete_headers(ph, n, p)) >= 2 for ph in range(14) for p in payloads)
    assert ok(33) and not ok(32)
    assert len(complete_headers(1, 28, 0xFF)) == 1


def test_noiseless_trial():
    cfg = TrialConfig(payloads=(0xB6,), t_bit=8e-5, camera=camera(240), n_frames=3, seed=4)
    row = run_trial(cfg)
    assert row.ber == 0.0
    assert row.message_recovered and row.decoded_payload == 0xB6
    assert row.frames_with_packet == 3
    assert row.bits_compared > 0


def test_heavy_noise_fails_but_reports():
    cfg = TrialConfig(payloads=(0xB6,), t_bit=8e-5, camera=camera(240, width=1, noise_sigma=120.0), n_frames=3)
    rows = [run_trial(replace(cfg, seed=s)) for s in range(20)]
    assert sum(r.message_recovered for r in rows) <= 2
    for r in rows:
        assert 0.0 <= r.ber <= 1.0
        assert 0 <= r.frames_with_packet <= r.n_frames


def test_single_short_frame_adversarial_phase():
    # 20 bits per frame, frame opens 1.5 bits into the packet
    cfg = TrialConfig(
        payloads=(0xB6,), t_bit=8e-5, camera=camera(160), n_frames=1, t0_jitter=False, t0=1.5 * 8e-5
    )
    row = run_trial(cfg)
    assert not row.message_recovered
    assert row.frames_with_packet == 0
    assert row.decoded_payload is None


def test_multi_payload_trial():
    cfg = TrialConfig(payloads=(0xB6, 0xFF), t_bit=8e-5, camera=camera(480), n_frames=4, seed=1, clock_hint=True)
    row = run_trial(cfg)
    assert row.message_recovered
    assert row.decoded_payload in (0xB6, 0xFF)


@pytest.mark.parametrize("kw", [dict(payloads=()), dict(payloads=(0x41,)), dict(n_frames=0), dict(t_bit=0.0)])
def test_invalid_trial_config(kw):
    with pytest.raises(InvalidArgument):
        TrialConfig(**kw)


def small_grid():
    return [
        TrialConfig(payloads=(0xB6,), t_bit=8e-5, camera=camera(240, width=2, gain=0.3, noise_sigma=s), n_frames=2)
        for s in (0.0, 30.0)
    ]


def test_sweep_seeds_and_order():
    rep = sweep(small_grid(), 3, base_seed=99)
    assert [(r.point, r.seed) for r in rep.rows] == [(i, mix64(99, i, j)) for i in range(2) for j in range(3)]


def test_sweep_deterministic():
    a = sweep(small_grid(), 3, base_seed=5).to_csv()
    b = sweep(small_grid(), 3, base_seed=5).to_csv()
    assert a == b
    assert a.splitlines()[0] == ",".join(CSV_HEADER)


def test_sweep_parallel_matches_serial():
    assert sweep(small_grid(), 2, 8, workers=2).to_csv() == sweep(small_grid(), 2, 8).to_csv()


def test_sweep_errors():
    with pytest.raises(InvalidArgument):
        sweep([], 3, 0)
    with pytest.raises(InvalidArgument):
        sweep(small_grid(), 0, 0)


def test_aggregates_recompute_from_csv(tmp_path):
    rep = sweep(small_grid(), 4, base_seed=2)
    summary_path = rep.write(tmp_path / "run.csv")
    rows = read_csv((tmp_path / "run.csv").read_text())
    saved = json.loads(open(summary_path).read())
    again = summarize(rows)
    assert saved["points"] == again["points"]
    assert saved["overall"] == again["overall"]
    for point in saved["points"]:
        for key in ("mean_ber", "packet_success_rate", "message_success_rate"):
            assert 0.0 <= point[key] <= 1.0


def test_sigma_zero_point_has_zero_ber():
    rep = sweep(small_grid(), 5, base_seed=3)
    assert rep.point(0)["mean_ber"] == 0.0


@pytest.mark.parametrize("phase", range(14))
def test_guarantee_scan(phase):
    # 30 bit periods of readout leave at least 28 whole cells in view
    cfg = TrialConfig(
        payloads=(0x6D,), t_bit=8e-5, camera=camera(240, t_frame=480e-5), n_frames=3,
        t0_jitter=False, t0=(phase + 0.37) * 8e-5,
    )
    row = run_trial(cfg)
    assert row.frames_with_packet == row.n_frames

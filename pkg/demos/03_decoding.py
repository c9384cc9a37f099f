"""From stripes back to bytes.

The receiver averages each row, removes slow illumination gradients,
thresholds against a sliding min/max midpoint, works out how many rows a
bit spans, slices cells and looks for headers. Several frames are then
voted into one message.

Run: python demos/03_decoding.py
"""
import numpy as np

from occlink import codec
from occlink.rscam import CameraConfig, capture_sequence
from occlink.rxpipe import binarize, decode_frame, estimate_rows_per_bit, flatten, merge_frames, row_profile
from occlink.txmodel import OokWaveform

payload = codec.encode_symbol(42)
wave = OokWaveform(codec.frame_packet(payload), t_bit=500e-6)
cam = CameraConfig(noise_sigma=6.0)
frames = capture_sequence(wave, cam, n_frames=4, t0=1.7e-3, seed=11)

frame, truth = frames[0]
p = row_profile(frame)
flat = flatten(p, 28 * 27 + 1)
binary = binarize(flat)
print("true rows per bit:", wave.t_bit / cam.t_row)
print("estimated (run lengths):", round(estimate_rows_per_bit(binary.rows), 3))
print("estimated (spectrum, meant for alternating stripes):", round(estimate_rows_per_bit(binary.rows, "dft"), 3))

decoded = [decode_frame(f) for f, _ in frames]
for k, (d, (_, t)) in enumerate(zip(decoded, frames)):
    print(f"frame {k}: {codec.bits_to_str(d.bits)}  packets={[codec.to_hex(x) for x in d.payloads]}")
    print(f"  truth: {codec.bits_to_str(t.visible_bits)}")

report = merge_frames(decoded)
print("message:", codec.to_hex(report.message), "-> symbol", codec.decode_symbol(report.message), report.to_dict())

# Scaling and offsetting the image changes nothing: every threshold is a
# midpoint of local extremes.
moved = decode_frame(0.6 * frame.pixels.astype(float) - 7.0)
print("same bits after 0.6*I - 7:", np.array_equal(moved.bits, decoded[0].bits))

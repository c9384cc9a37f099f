"""A blinking LED through a rolling shutter.

Each sensor row starts exposing a little later than the one above it, so
an LED switching faster than the frame rate paints horizontal stripes.
This script programs the transmitter, renders a few frames, writes them
as PGM and draws the stripes in the terminal.

Run: python demos/02_rolling_shutter.py [out_dir]
"""
import sys

from occlink import codec
from occlink.cli import stripe_preview
from occlink.rscam import CameraConfig, bits_per_frame, capture_sequence, save_capture
from occlink.txmodel import Controller, waveform

out = sys.argv[1] if len(sys.argv) > 1 else "."

ctl = Controller()
for line in ["SET MESSAGE B6", "SET TBIT 0.0005", "START"]:
    print(f"> {line}\n{ctl.send(line)}")

cam = CameraConfig()  # the default profile: 1080 rows of 18.5 us, 33.3 ms frames
wave = waveform(ctl.state)
print(f"rows per bit: {wave.t_bit / cam.t_row:.2f}")
print(f"bits seen per frame: {bits_per_frame(cam, wave.t_bit)} of {cam.t_frame / wave.t_bit:.1f} sent")

frames = capture_sequence(wave, cam, n_frames=3, t0=0.0, seed=1)
for k, (frame, truth) in enumerate(frames):
    path = save_capture(out, k, frame, truth)
    print(f"{path}: bits {truth.first_bit}..{truth.first_bit + truth.visible_bits.size - 1} "
          f"= {codec.bits_to_str(truth.visible_bits)}")

# Between frames the sensor is blanked; whatever is sent then is lost.
(_, a), (_, b) = frames[0], frames[1]
print("bits lost between frames 0 and 1:", b.first_bit - (a.first_bit + a.visible_bits.size - 1) - 1)

print(stripe_preview(frames[0][0].pixels, lines=60, width=24))

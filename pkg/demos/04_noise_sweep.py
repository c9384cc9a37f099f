"""How noise eats the link.

A small Monte-Carlo sweep over sensor noise. Every trial is seeded from
(base seed, point, repeat), so the CSV is the same on every machine.

Run: python demos/04_noise_sweep.py [report.csv]
"""
import sys
from dataclasses import replace

from occlink.linklab import TrialConfig, sweep
from occlink.rscam import CameraConfig

# a dim LED (gain 0.2, a 51-level swing) seen by a one-pixel-wide strip
cam = CameraConfig(height=240, width=1, t_row=1e-5, t_exp=1e-5, t_frame=240e-5, gain=0.2)
base = TrialConfig(payloads=(0xB6,), t_bit=8e-5, camera=cam, n_frames=1, clock_hint=True)
sigmas = [0, 5, 10, 20, 40, 80]
grid = [replace(base, camera=replace(cam, noise_sigma=s)) for s in sigmas]

report = sweep(grid, trials_per_point=100, base_seed=2024)
print(" sigma   BER    packet   message")
for s, pt in zip(sigmas, report.aggregates["points"]):
    print(f"{s:6g}  {pt['mean_ber']:.4f}  {pt['packet_success_rate']:.2f}     {pt['message_success_rate']:.2f}")

if len(sys.argv) > 1:
    print("summary written to", report.write(sys.argv[1]))

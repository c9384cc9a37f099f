"""The packet code: why 149 payloads, and why the header can't be faked.

Run: python demos/01_packet_code.py
"""
import numpy as np

from occlink import codec

# A packet is the sync header 100001 followed by one payload byte. The
# payload may not contain three zeros in a row, so the header's 0000 is
# the only place four zeros ever appear.
table = codec.build_symbol_table()
print("valid payloads:", len(table))
print("first few:", [codec.to_hex(p) for p in table[:6]], "... last:", codec.to_hex(table[-1]))

# Counting bytes without a 000 run: t(n) = t(n-1) + t(n-2) + t(n-3).
t = [1, 2, 4]
for n in range(3, 9):
    t.append(t[-1] + t[-2] + t[-3])
print("t(0..8) =", t)

# 7-bit symbols ride on the first 128 codewords, in ascending order.
for v in (0, 1, 127):
    p = codec.encode_symbol(v)
    print(f"symbol {v:3d} -> payload {codec.to_hex(p)} -> packet {codec.bits_to_str(codec.frame_packet(p))}")

# Parse a message back out of a stream that starts mid-packet.
stream = codec.message_to_stream([72, 105, 33])
tail = np.concatenate([stream, stream])[5:]
found = codec.parse_stream(tail)
print("packets in a stream cut 5 bits in:", [(pos, codec.decode_symbol(p)) for pos, p in found])

# A camera frame is a window onto the repeating stream. How long must it
# be to hold a whole packet whatever the phase?
print("bits needed for a guaranteed packet:", 27)
for n in (26, 27):
    misses = [ph for ph in range(14) if not codec.parse_stream(np.tile(codec.frame_packet(0xFF), 4)[ph : ph + n])]
    print(f"  window {n}: phases without a packet = {misses}")

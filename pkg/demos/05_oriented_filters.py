"""
Actively rotating filters and orientation pooling
=================================================

A (k, k, N) filter bank is instantiated at N clockwise rotations with a
matching cyclic shift of its orientation channels; convolving with all
instantiations yields N orientation channels, and a pixelwise max
(orpool) discards the orientation again.  For quarter turns everything
is grid-exact, which makes the rotation-invariance claim literally true:
rotating the input only rotates the pooled output.
"""

import numpy as np

from centerhead import arf_convolve, orpool, rotate_filter

rng = np.random.default_rng(1)

# one channel of a 3x3 bank, rotated by a quarter turn
w = np.zeros((3, 3, 4))
w[:, :, 0] = [[1, 2, 3], [4, 5, 6], [7, 8, 9]]
r = rotate_filter(w, 1)
print("base channel:\n", w[:, :, 0])
print("quarter-turn, channel 1 (spatially rotated copy of channel 0):\n", r[:, :, 1])

# equivariance: turn the scene, shift the channels, outputs follow
def rot90cw(a):
    return np.rot90(a, k=-1, axes=(0, 1))

feat = rng.normal(size=(8, 8, 4))
bank = rng.normal(size=(3, 3, 4))
turned = np.stack([rot90cw(feat[:, :, (n - 1) % 4]) for n in range(4)], axis=2)

pooled = orpool(arf_convolve(feat, bank))
pooled_turned = orpool(arf_convolve(turned, bank))
err = np.abs(pooled_turned - rot90cw(pooled)).max()
print(f"\norpool commutes with the quarter turn to {err:.2e}")

# orientation channels respond selectively; the max erases the selectivity
out = arf_convolve(feat, bank)
print("\nper-channel response at one pixel:", np.round(out[4, 4], 2))
print("pooled response:", round(float(orpool(out)[4, 4]), 2))

"""
Box representations and why thin boxes make angle regression hard
=================================================================

A ship is stored as a center/head-point 6-tuple (cx, cy, w, h, hx, hy).
The center-to-head line carries the full 360-degree heading, so the bow
is distinguishable from the stern.  This script walks the conversions
and shows how sensitive rotated IoU is to small angle errors on the
long thin boxes typical of ships.
"""

import numpy as np

from centerhead import ChpBox, RBox, angle_diff, chp_to_rbox, rbox_to_chp, rbox_to_quad, rotated_iou

# a ship at (100, 80), 12 px beam, 60 px long, bow pointing north-east
ship = ChpBox(100, 80, 12, 60, hx=121.2, hy=58.8)
rbox = chp_to_rbox(ship)
print(f"heading from the center->head line: {rbox.theta:.1f} degrees")

# the inverse places the head at the middle of the front edge
back = rbox_to_chp(rbox)
print(f"head recovered at ({back.hx:.1f}, {back.hy:.1f})")

# corner form, clockwise from the front-left (port bow) corner
print("corners:\n", np.round(rbox_to_quad(rbox), 2))

# headings live on the full circle: 350 vs 10 is 20 degrees, but a
# bow/stern swap is a genuine 180-degree error
print("angle_diff(350, 10) =", angle_diff(350, 10))
print("angle_diff(0, 180)  =", angle_diff(0, 180))

# IoU sensitivity: rotate a 10:1 box about its own center
base = RBox(0, 0, 10, 100, 0.0)
print("\nrotating a 10x100 box against itself:")
for deg in (1, 2, 5, 10, 20):
    iou = rotated_iou(base, RBox(0, 0, 10, 100, float(deg)))
    print(f"  {deg:>3} degrees -> IoU {iou:.3f}")

# the same perturbation barely moves a square box
square = RBox(0, 0, 40, 40, 0.0)
print("rotating a 40x40 box by 5 degrees -> IoU "
      f"{rotated_iou(square, RBox(0, 0, 40, 40, 5.0)):.3f}")

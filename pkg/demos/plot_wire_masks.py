"""
Pseudo wire masks
=================

Draw a few thin wires, dilate them, and let the pattern drift over a clip.
Everything is printed as ASCII so the script runs anywhere.
"""

import numpy as np

from raformer.mask_synth import (WireSpec, bounding_boxes, create_pp_mask, create_video_mask,
                                 create_wire_mask)
from raformer.tensor_core import Rng

# A small canvas keeps the printout readable.  Wire lengths must fit the
# canvas diagonal.
spec = WireSpec(num=2, len_range=(12, 30), width_range=(1, 2), max_dilate_times=1)
rng = Rng(3)
mask = create_wire_mask(spec, (16, 40), rng)


def show(m):
    for row in m:
        print("".join("#" if v else "." for v in row))


show(mask)
print("coverage:", mask.mean().round(3), "boxes:", bounding_boxes(mask))

# %%
# Motion.  Each frame moves the pattern by at most ``max_move`` pixels in x
# and y; pixels pushed off the canvas are clipped.
seq = create_video_mask(mask, 4, max_move=3, rng=rng)
for t, frame in enumerate(seq.frames):
    print(f"\nframe {t}  step (dx, dy) = {seq.motion_log[t]}")
    show(frame)

# %%
# Same seed, same masks.  Different seeds give different wires.
again = create_wire_mask(spec, (16, 40), Rng(3))
print("\nreproducible:", np.array_equal(again, mask))

# %%
# Polygonal masks cover a larger, blobby area instead.
pp = create_pp_mask((16, 40), Rng(4))
print(f"\npolygon mask, coverage {pp.mean():.2f}")
show(pp)

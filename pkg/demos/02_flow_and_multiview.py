"""Optical flow -> directions -> camera-motion answer.

When the camera pans left, the scene appears to move right. The flow
compiler reduces the field to one direction word per cell; the multi-view
solver majority-votes those words and inverts the sign for the camera.
"""

import numpy as np

from percept import FlowField, ImageDims, compile_flow, serialize, solve_multiview

w = h = 32
# scene moves right at ~3 px/frame with a little noise
rng = np.random.default_rng(1)
u = 3.0 + rng.normal(0, 0.5, (h, w))
v = rng.normal(0, 0.2, (h, w))

program = compile_flow(FlowField(ImageDims(w, h), u, v), p=4)
print(serialize(program))

answer = solve_multiview(program)  # camera_opposes_flow by default
print("scene flow is mostly 'right', so the camera moved:", answer)

"""Jigsaw candidates scored by edge-strip similarity.

Candidate A is cut verbatim from the source's missing corner, candidate B
is a color-inverted impostor. Each candidate's left and top strips are
scored with the mean of structural (SSIM), edge (gradient NCC), and color
(HSV chi-square) similarity against the source content at that location.
"""

import numpy as np

from percept import JigsawInstance, compile_jigsaw, serialize, solve_jigsaw

rng = np.random.default_rng(2)
size = 48
source = rng.random((size, size, 3))

x0 = y0 = size // 2
cut = source[y0:, x0:].copy()
instance = JigsawInstance(
    source=source,
    region=(x0, y0, size, size),
    candidate_a=cut,
    candidate_b=1.0 - cut,
    strip_width=5,
)

program = compile_jigsaw(instance)
print(serialize(program))
print("true piece:", solve_jigsaw(program))

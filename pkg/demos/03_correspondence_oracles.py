"""Keypoint matches -> program, then the naive and tool-following oracles.

The scene is a pure camera translation: every keypoint shifts by the same
(dx, dy). The naive baseline ignores vision and picks the alternative
closest to REF in the first image; the oracle follows the match nearest
REF and lands on the translated point. With a large enough shift the two
disagree, and only the oracle is right.
"""

from percept import (
    ImageDims,
    LabeledPoints,
    MatchSet,
    NormCoord,
    compile_points,
    compile_visual_correspondence,
    naive_correspondence,
    oracle_correspondence,
    serialize,
)

dims = ImageDims(1000, 1000)
dx, dy = 380, -40

keypoints = [(300, 420), (520, 380), (450, 610), (610, 540), (380, 300)]
matches = MatchSet(dims, dims, [((x, y), (x + dx, y + dy)) for x, y in keypoints])
match_program = compile_visual_correspondence(matches)
print(serialize(match_program))

ref = keypoints[0]
true_target = (ref[0] + dx, ref[1] + dy)
alternatives = compile_points(LabeledPoints(dims, [
    ("A", (ref[0] + 30, ref[1] + 10)),  # near REF in image-1 coordinates
    ("B", true_target),                 # where REF actually went
    ("C", (120, 880)),
]))

print("naive (closest to REF):   ", naive_correspondence(
    compile_points(LabeledPoints(dims, [("REF", ref)] + [
        (it.p, (it.c.x, it.c.y)) for it in alternatives.items]))))
print("oracle (follows matches): ", oracle_correspondence(
    match_program, NormCoord(*ref), alternatives))

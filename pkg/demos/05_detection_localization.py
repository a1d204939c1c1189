"""Open-vocabulary detections -> program -> box selection by IoU.

The detector reports two dogs and a bench; the task offers two candidate
boxes. The solver anchors on the most confident detection whose label
matches the query and returns the candidate with the best overlap.
"""

from percept import (
    Detection,
    DetectionSet,
    ImageDims,
    compile_detections,
    normalize_box,
    serialize,
    solve_localization,
)

dims = ImageDims(640, 480)
detections = DetectionSet(dims, [
    Detection("dog", 0.92, (40, 200, 210, 420)),
    Detection("dog", 0.58, (400, 180, 560, 400)),
    Detection("bench", 0.81, (120, 60, 520, 170)),
])

program = compile_detections(detections)
print(serialize(program))

candidates = [
    ("A", normalize_box(30, 190, 220, 430, dims)),
    ("B", normalize_box(390, 170, 570, 410, dims)),
]
print("box containing the dog:", solve_localization(program, candidates, "dog"))

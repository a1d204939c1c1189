"""Redacting readouts and scoring a model's attempt to restore them.

A redacted program keeps ids and locations but drops every measurement;
a model is asked to fill them back in from the image. Here two synthetic
"models" answer: one echoes the truth (rank correlation 1.0), one ranks
cells backwards (-1.0). The same machinery scores correspondence
completions by displacement error and flags coordinate copying.
"""

import numpy as np

from percept import (
    DepthField,
    ImageDims,
    MatchSet,
    compile_depth,
    compile_visual_correspondence,
    displacement_error_stats,
    kendall_tau,
    parse,
    quantize,
    ranking_from_depth,
    redact_readouts,
    serialize,
)

vals = np.linspace(0, 1, 36).reshape(6, 6)
truth = quantize(compile_depth(DepthField(ImageDims(6, 6), vals), p=3))
redacted = redact_readouts(truth)
print(serialize(redacted))

echoed = parse(serialize(truth))
print("echoing model tau:", kendall_tau(ranking_from_depth(truth),
                                        ranking_from_depth(echoed)))

reversed_items = tuple(
    item.__class__(p=item.p, c=item.c, r=rev.r)
    for item, rev in zip(truth.items, reversed(truth.items)))
backwards = truth.__class__(modality="depth", images=truth.images,
                            grid=truth.grid, items=reversed_items)
print("backwards model tau:", kendall_tau(ranking_from_depth(truth),
                                          ranking_from_depth(backwards)))

# correspondence: a lazy model copies c into r; the copied-input fraction
# exposes it even when raw error looks moderate
dims = ImageDims(1000, 1000)
matches = MatchSet(dims, dims, [((100, 100), (400, 150)), ((600, 700), (880, 760))])
lazy = compile_visual_correspondence(
    MatchSet(dims, dims, [((100, 100), (100, 100)), ((600, 700), (600, 700))]))
rows, summary = displacement_error_stats(matches, lazy)
print(f"lazy model: mean error {summary.mean_error_pct:.1f}% of diagonal, "
      f"copied-input fraction {summary.copied_input_fraction:.2f}")

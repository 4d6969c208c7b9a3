"""Instance partition of part segmentations and its evaluation."""

from partgroup._core import (
    PartGroupError,
    argmax_labels,
    binarize_edges,
    derive_edges,
    evaluate_edges,
    evaluate_instances,
    gen_scene,
    mean_iou,
    nms_thin,
    partition,
    version,
)

__version__ = version()

__all__ = [
    "PartGroupError",
    "argmax_labels",
    "binarize_edges",
    "derive_edges",
    "evaluate_edges",
    "evaluate_instances",
    "gen_scene",
    "mean_iou",
    "nms_thin",
    "partition",
    "version",
    "__version__",
]

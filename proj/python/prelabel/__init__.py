"""Python access to the pre-annotation core."""

from ._core import (
    ConflictError,
    NotFoundError,
    ParseError,
    Store,
    close_mask,
    cluster_components,
    count_holes,
    iou,
    mask_to_polygons,
    min_area_obb,
    normalize_label,
    obb_corners,
    polygon_area,
    polygon_perimeter,
    rdp_simplify,
    read_zip,
    softmax,
    union_box,
    validate_bundle,
    write_synthetic_dataset,
    write_zip,
)

__all__ = [
    "ConflictError",
    "NotFoundError",
    "ParseError",
    "Store",
    "close_mask",
    "cluster_components",
    "count_holes",
    "iou",
    "mask_to_polygons",
    "min_area_obb",
    "normalize_label",
    "obb_corners",
    "polygon_area",
    "polygon_perimeter",
    "rdp_simplify",
    "read_zip",
    "softmax",
    "union_box",
    "validate_bundle",
    "write_synthetic_dataset",
    "write_zip",
]

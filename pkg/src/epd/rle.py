"""Run-length codec for binary masks.

Native form is row-major: {"size": [H, W], "counts": [...]} where counts
alternate zero-runs and one-runs and always start with the zero run (0 when
the mask begins with a 1). Converters to and from the column-major flavor
used by common detection toolkits are provided; only the scan order differs.
"""

from __future__ import annotations

import numpy as np

from .errors import ProtocolError


def _encode(flat: np.ndarray) -> list[int]:
    if flat.size == 0:
        return []
    change = np.flatnonzero(np.diff(flat)) + 1
    bounds = np.concatenate([[0], change, [flat.size]])
    runs = np.diff(bounds)
    counts = runs.tolist()
    if flat[0] == 1:
        counts.insert(0, 0)  # leading zero-run is mandatory
    return [int(c) for c in counts]


def _decode(counts: list[int], n: int) -> np.ndarray:
    vals = np.zeros(len(counts), dtype=np.uint8)
    vals[1::2] = 1
    flat = np.repeat(vals, counts)
    if flat.size != n:
        raise ProtocolError(f"counts sum to {flat.size}, expected {n}")
    return flat.astype(bool)


def _validate(rle: dict) -> tuple[int, int, list[int]]:
    if not isinstance(rle, dict) or "size" not in rle or "counts" not in rle:
        raise ProtocolError("RLE must be a dict with 'size' and 'counts'")
    size = rle["size"]
    if (not isinstance(size, (list, tuple)) or len(size) != 2
            or not all(isinstance(v, int) and v > 0 for v in size)):
        raise ProtocolError(f"RLE size must be [H, W] positive ints, got {size!r}")
    counts = rle["counts"]
    if not isinstance(counts, (list, tuple)):
        raise ProtocolError("RLE counts must be a list")
    for c in counts:
        if not isinstance(c, int) or c < 0:
            raise ProtocolError(f"RLE counts must be non-negative ints, got {c!r}")
    return int(size[0]), int(size[1]), list(counts)


def encode_mask(mask: np.ndarray) -> dict:
    """Row-major RLE of a 2-D binary mask."""
    mask = np.asarray(mask)
    if mask.ndim != 2:
        raise ProtocolError("mask must be 2-D")
    h, w = mask.shape
    return {"size": [int(h), int(w)],
            "counts": _encode(mask.astype(np.uint8).ravel(order="C"))}


def decode_rle(rle: dict) -> np.ndarray:
    """Mask from row-major RLE; validates structure and total count."""
    h, w, counts = _validate(rle)
    return _decode(counts, h * w).reshape(h, w, order="C")


def rle_from_coco(rle: dict) -> dict:
    """Column-major (uncompressed) RLE -> native row-major RLE."""
    h, w, counts = _validate(rle)
    mask = _decode(counts, h * w).reshape(h, w, order="F")
    return encode_mask(mask)


def rle_to_coco(rle: dict) -> dict:
    """Native row-major RLE -> column-major (uncompressed) RLE."""
    mask = decode_rle(rle)
    h, w = mask.shape
    return {"size": [int(h), int(w)],
            "counts": _encode(mask.astype(np.uint8).ravel(order="F"))}

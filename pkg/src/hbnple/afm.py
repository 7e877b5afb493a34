"""AFM height maps: tilt removal, flake segmentation and flake statistics."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import ndimage

from .core import ParameterError

LAYER_THICKNESS_NM = 0.333
HEIGHT_THRESHOLD_NM = 2.0
EIGHT_CONNECTED = np.ones((3, 3), dtype=int)


@dataclass(frozen=True)
class HeightMap:
    pixels: np.ndarray
    pixel_size: float

    def __post_init__(self):
        px = np.array(self.pixels, dtype=float)
        if px.ndim != 2 or px.size == 0:
            raise ValueError("height map must be a non-empty 2-D grid")
        if not np.all(np.isfinite(px)):
            raise ValueError("height map contains non-finite values")
        if not self.pixel_size > 0:
            raise ValueError("pixel_size must be positive")
        px.setflags(write=False)
        object.__setattr__(self, "pixels", px)


@dataclass(frozen=True)
class FlakeStats:
    pixel_count: int
    mean_height: float
    area: float
    equiv_diameter: float
    layers: float


def _remove_line(z: np.ndarray, axis: int) -> np.ndarray:
    # fit a line to the means taken along `axis`, subtract it across the other axis
    means = z.mean(axis=axis)
    idx = np.arange(means.size, dtype=float)
    slope, intercept = np.polyfit(idx, means, 1)
    line = slope * idx + intercept
    return z - (line[None, :] if axis == 0 else line[:, None])


def correct_tilt(hmap: HeightMap) -> HeightMap:
    """Remove sample tilt with one line fit along x and one along y.

    Column means are fitted against the column index and the line is
    subtracted column-wise; then the same along rows. The result is shifted
    so its minimum is zero.
    """
    z = hmap.pixels
    if z.shape[0] < 2 or z.shape[1] < 2:
        raise ParameterError("need at least two rows and two columns")
    z = _remove_line(z, axis=0)
    z = _remove_line(z, axis=1)
    return HeightMap(z - z.min(), hmap.pixel_size)


def segment_flakes(hmap: HeightMap, threshold: float = HEIGHT_THRESHOLD_NM) -> list:
    """Groups of 8-connected pixels at or above ``threshold``.

    Each group is a ``frozenset`` of ``(row, col)`` tuples; groups are
    ordered by their first pixel in row-major order.
    """
    if not threshold > 0:
        raise ParameterError("threshold must be positive")
    labels, n = ndimage.label(hmap.pixels >= threshold, EIGHT_CONNECTED)
    flakes = []
    for k in range(1, n + 1):
        r, c = np.nonzero(labels == k)
        flakes.append(frozenset(zip(r.tolist(), c.tolist())))
    return flakes


def flake_stats(hmap: HeightMap, flake, layer_thickness: float = LAYER_THICKNESS_NM) -> FlakeStats:
    if not flake:
        raise ValueError("empty flake")
    rows, cols = zip(*flake)
    h = hmap.pixels[list(rows), list(cols)]
    mean_height = float(h.mean())
    area = len(flake) * hmap.pixel_size ** 2
    return FlakeStats(
        pixel_count=len(flake),
        mean_height=mean_height,
        area=area,
        equiv_diameter=equivalent_diameter(area),
        layers=mean_height / layer_thickness,
    )


def equivalent_diameter(area: float) -> float:
    """Diameter of the circle with the given area."""
    return 2.0 * np.sqrt(area / np.pi)


def layer_count(mean_height: float, layer_thickness: float = LAYER_THICKNESS_NM) -> float:
    return mean_height / layer_thickness


def aggregate_stats(flakes: Sequence[FlakeStats]) -> dict:
    """Population mean, std, min and max of height, layers and diameter."""
    if not flakes:
        raise ValueError("no flakes to aggregate")
    out = {"count": len(flakes)}
    for name, attr in (("height", "mean_height"), ("layers", "layers"),
                       ("diameter", "equiv_diameter")):
        v = np.array([getattr(f, attr) for f in flakes], dtype=float)
        out[f"mean_{name}"] = float(v.mean())
        out[f"std_{name}"] = float(v.std())
        out[f"min_{name}"] = float(v.min())
        out[f"max_{name}"] = float(v.max())
    return out

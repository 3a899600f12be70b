"""The 133-dimensional feature vector and its min-max normalization.

Fixed layout (index ranges inclusive):

    0-29    upper profile, 30 column-group bins
    30-59   lower profile
    60-89   vertical projection
    90-119  horizontal projection
    120     component count / 10
    121     secondary-component count / 10
    122     end-point count / 10
    123     pixel ratio (foreground / background, normalized image)
    124     height/width ratio of the pre-resize foreground box
    125     secondary union height / norm_size
    126     secondary union width / norm_size
    127     secondary pixel ratio
    128     secondary union aspect ratio
    129     secondary centroid dx (canvas-normalized)
    130     secondary centroid dy
    131     above flag
    132     below flag

Models are only interchangeable if they agree on this exact layout.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError

from .components import ComponentSet, label_components, secondary_summary
from .image import validate_binary
from .preprocess import BlankImageError, PreprocessConfig, preprocess

__all__ = [
    "FEATURE_LENGTH",
    "PROFILE_BINS",
    "NormStats",
    "profile",
    "projection",
    "zhang_suen_thin",
    "count_end_points",
    "pixel_ratio",
    "aspect_ratio",
    "extract",
    "fit_minmax",
    "apply_minmax",
    "feature_names",
    "MinMaxNormalizer",
    "FeatureExtractor",
]

FEATURE_LENGTH = 133
PROFILE_BINS = 30

UPPER_PROFILE = slice(0, 30)
LOWER_PROFILE = slice(30, 60)
VERTICAL_PROJECTION = slice(60, 90)
HORIZONTAL_PROJECTION = slice(90, 120)
IDX_COMPONENT_COUNT = 120
IDX_SECONDARY_COUNT = 121
IDX_END_POINTS = 122
IDX_PIXEL_RATIO = 123
IDX_ASPECT_RATIO = 124
IDX_SEC_HEIGHT = 125
IDX_SEC_WIDTH = 126
IDX_SEC_PIXEL_RATIO = 127
IDX_SEC_ASPECT = 128
IDX_SEC_DX = 129
IDX_SEC_DY = 130
IDX_SEC_ABOVE = 131
IDX_SEC_BELOW = 132


def _check_square(b: np.ndarray, bins: int) -> int:
    h, w = b.shape
    if h != w:
        raise ValueError(f"expected a square normalized image, got {h}x{w}")
    if h % bins != 0:
        raise ValueError(f"image side {h} must be divisible by {bins} bins")
    return h


def profile(bin_img, side: str, bins: int = PROFILE_BINS) -> np.ndarray:
    """Upper/lower profile: per column group, the gap between the image
    edge and the nearest ink, as a fraction of the side length.

    Columns are split into `bins` contiguous groups.  For "upper" the
    value is (smallest foreground row over the group) / size; "lower"
    measures from the bottom edge instead.  A group with no foreground
    yields 1.0.
    """
    b = validate_binary(bin_img)
    size = _check_square(b, bins)
    if side == "upper":
        scan = b
    elif side == "lower":
        scan = b[::-1]
    else:
        raise ValueError(f"side must be 'upper' or 'lower', got {side!r}")
    has_ink = scan.any(axis=0)
    first = np.where(has_ink, scan.argmax(axis=0), size)  # sentinel size -> 1.0
    group_min = first.reshape(bins, size // bins).min(axis=1)
    return group_min.astype(np.float64) / size


def projection(bin_img, axis: str, bins: int = PROFILE_BINS) -> np.ndarray:
    """Ink density per column group ("vertical") or row group ("horizontal").

    Each bin is the foreground count in its group divided by the group's
    pixel count (size * group_width), so values lie in [0, 1].
    """
    b = validate_binary(bin_img)
    size = _check_square(b, bins)
    if axis == "vertical":
        counts = b.sum(axis=0, dtype=np.int64)
    elif axis == "horizontal":
        counts = b.sum(axis=1, dtype=np.int64)
    else:
        raise ValueError(f"axis must be 'vertical' or 'horizontal', got {axis!r}")
    group = size // bins
    sums = counts.reshape(bins, group).sum(axis=1)
    return sums.astype(np.float64) / (size * group)


def zhang_suen_thin(bin_img) -> np.ndarray:
    """Thin foreground to a one-pixel skeleton (Zhang-Suen, to fixpoint).

    Each iteration runs the two standard sub-passes; a pixel is deleted
    when it has 2..6 foreground 8-neighbours, exactly one 0->1 transition
    around the neighbour ring, and the pass-specific side conditions hold.
    """
    img = validate_binary(bin_img).copy()
    while True:
        changed = False
        for step in (0, 1):
            p = np.pad(img, 1)
            # ring order: N, NE, E, SE, S, SW, W, NW
            ring = (
                p[:-2, 1:-1], p[:-2, 2:], p[1:-1, 2:], p[2:, 2:],
                p[2:, 1:-1], p[2:, :-2], p[1:-1, :-2], p[:-2, :-2],
            )
            b_count = np.zeros(img.shape, dtype=np.int32)
            for n in ring:
                b_count += n
            transitions = np.zeros(img.shape, dtype=np.int32)
            for i in range(8):
                transitions += (ring[i] == 0) & (ring[(i + 1) % 8] == 1)
            north, east, south, west = ring[0], ring[2], ring[4], ring[6]
            if step == 0:
                side = (north * east * south == 0) & (east * south * west == 0)
            else:
                side = (north * east * west == 0) & (north * south * west == 0)
            delete = (img == 1) & (b_count >= 2) & (b_count <= 6) & (transitions == 1) & side
            if delete.any():
                img[delete] = 0
                changed = True
        if not changed:
            return img


def count_end_points(bin_img) -> int:
    """Thin the image and count skeleton pixels with exactly one 8-neighbour."""
    skel = zhang_suen_thin(bin_img)
    p = np.pad(skel.astype(np.int32), 1)
    neighbors = (
        p[:-2, :-2] + p[:-2, 1:-1] + p[:-2, 2:]
        + p[1:-1, :-2] + p[1:-1, 2:]
        + p[2:, :-2] + p[2:, 1:-1] + p[2:, 2:]
    )
    return int(((skel == 1) & (neighbors == 1)).sum())


def pixel_ratio(bin_img) -> float:
    """Foreground count / background count."""
    b = validate_binary(bin_img)
    fg = int(b.sum())
    bg = b.size - fg
    if bg == 0:
        raise ValueError("ratio undefined: image has no background pixels")
    return fg / bg


def aspect_ratio(bin_img) -> float:
    """Height/width of the foreground bounding box (inclusive pixel spans).

    Measure this on the pre-resize image; resizing to a square grid
    destroys the proportion this feature is meant to capture.
    """
    b = validate_binary(bin_img)
    rows, cols = np.nonzero(b)
    if len(rows) == 0:
        raise BlankImageError()
    return float(rows.max() - rows.min() + 1) / float(cols.max() - cols.min() + 1)


def extract(bin_pre_resize, bin_normalized, cs: ComponentSet | None = None) -> np.ndarray:
    """Fill the fixed 133-slot layout from one preprocessed character.

    `cs` must be the component labeling of `bin_normalized`; it is computed
    with 8-adjacency when omitted.  Raw counts (slots 120-122) are divided
    by 10 to keep magnitudes small; min-max fitting on the training set
    makes the constant immaterial downstream.
    """
    norm = validate_binary(bin_normalized)
    size = _check_square(norm, PROFILE_BINS)
    if cs is None:
        cs = label_components(norm, "eight")
    v = np.zeros(FEATURE_LENGTH, dtype=np.float64)
    v[UPPER_PROFILE] = profile(norm, "upper")
    v[LOWER_PROFILE] = profile(norm, "lower")
    v[VERTICAL_PROJECTION] = projection(norm, "vertical")
    v[HORIZONTAL_PROJECTION] = projection(norm, "horizontal")
    v[IDX_COMPONENT_COUNT] = cs.count / 10.0
    v[IDX_SECONDARY_COUNT] = len(cs.secondary_ids) / 10.0
    v[IDX_END_POINTS] = count_end_points(norm) / 10.0
    v[IDX_PIXEL_RATIO] = pixel_ratio(norm)
    v[IDX_ASPECT_RATIO] = aspect_ratio(bin_pre_resize)
    ss = secondary_summary(cs, norm.shape)
    v[IDX_SEC_HEIGHT] = ss.height / size
    v[IDX_SEC_WIDTH] = ss.width / size
    v[IDX_SEC_PIXEL_RATIO] = ss.area / (norm.size - ss.area)
    v[IDX_SEC_ASPECT] = ss.height / ss.width if ss.width else 0.0
    v[IDX_SEC_DX] = ss.dx
    v[IDX_SEC_DY] = ss.dy
    v[IDX_SEC_ABOVE] = ss.above
    v[IDX_SEC_BELOW] = ss.below
    return v


def feature_names() -> list[str]:
    return [f"f{i}" for i in range(FEATURE_LENGTH)]


@dataclass(frozen=True)
class NormStats:
    """Per-feature training extrema used for min-max scaling."""

    mins: np.ndarray
    maxs: np.ndarray

    def __post_init__(self):
        mins = np.asarray(self.mins, dtype=np.float64)
        maxs = np.asarray(self.maxs, dtype=np.float64)
        if mins.shape != maxs.shape or mins.ndim != 1:
            raise ValueError("mins and maxs must be 1-D arrays of equal length")
        if np.any(mins > maxs):
            raise ValueError("every min must be <= the corresponding max")
        object.__setattr__(self, "mins", mins)
        object.__setattr__(self, "maxs", maxs)


def fit_minmax(vectors) -> NormStats:
    """Compute per-dimension extrema over a non-empty vector collection."""
    m = np.asarray(vectors, dtype=np.float64)
    if m.ndim == 1:
        m = m.reshape(1, -1)
    if m.size == 0:
        raise ValueError("cannot fit min-max stats on an empty collection")
    return NormStats(m.min(axis=0), m.max(axis=0))


def apply_minmax(vector, stats: NormStats) -> np.ndarray:
    """Rescale to [0, 1] using training extrema, clamping out-of-range values.

    Degenerate dimensions (min == max) map to 0.
    """
    v = np.asarray(vector, dtype=np.float64)
    span = stats.maxs - stats.mins
    with np.errstate(divide="ignore", invalid="ignore"):
        scaled = (v - stats.mins) / span
    return np.where(span > 0, np.clip(scaled, 0.0, 1.0), 0.0)


class MinMaxNormalizer(BaseEstimator, TransformerMixin):
    """Min-max scaler matching the model-file semantics: clamp to the
    training range, degenerate dimensions go to 0."""

    def fit(self, X, y=None):
        self.stats_ = fit_minmax(X)
        return self

    def transform(self, X):
        if not hasattr(self, "stats_"):
            raise NotFittedError("MinMaxNormalizer must be fitted before transform")
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1:
            return apply_minmax(X, self.stats_)
        return np.vstack([apply_minmax(row, self.stats_) for row in X])


class FeatureExtractor(BaseEstimator, TransformerMixin):
    """Gray character images -> (n, 133) feature matrix.

    Runs the full preprocessing chain internally, so it slots directly in
    front of a scaler + classifier in an sklearn pipeline.
    """

    def __init__(self, norm_size=60, median_passes=1, fill_threshold=7,
                 slant_clamp_deg=45.0, dilate=False, connectivity="eight"):
        self.norm_size = norm_size
        self.median_passes = median_passes
        self.fill_threshold = fill_threshold
        self.slant_clamp_deg = slant_clamp_deg
        self.dilate = dilate
        self.connectivity = connectivity

    def _config(self) -> PreprocessConfig:
        return PreprocessConfig(
            norm_size=self.norm_size,
            median_passes=self.median_passes,
            fill_threshold=self.fill_threshold,
            slant_clamp_deg=self.slant_clamp_deg,
            dilate=self.dilate,
        )

    def fit(self, X, y=None):
        self._config()
        return self

    def transform(self, X) -> np.ndarray:
        cfg = self._config()
        rows = []
        for img in X:
            pre, norm = preprocess(img, cfg)
            cs = label_components(norm, self.connectivity)
            rows.append(extract(pre, norm, cs))
        return np.vstack(rows) if rows else np.zeros((0, FEATURE_LENGTH))

"""Character-image preprocessing: binarization, denoising, deslanting, resizing.

The canonical pipeline order is

    gray -> median3x3 -> binarize -> morph(clean) -> morph(remove)
         -> morph(fill) -> [dilate2x2] -> slant correction -> resize_normalize

Denoising runs before the geometric steps so that stray pixels do not skew
the slant estimate or the crop box.  Every step is a pure function; the
`CharacterPreprocessor` estimator wraps the whole chain for pipeline use.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .image import validate_binary, validate_gray, from_gray_thresholded

__all__ = [
    "BlankImageError",
    "PreprocessConfig",
    "otsu_threshold",
    "binarize",
    "estimate_slant",
    "shear",
    "deslant",
    "resize_normalize",
    "median3x3",
    "morph",
    "dilate2x2",
    "preprocess_stages",
    "preprocess",
    "CharacterPreprocessor",
]


class BlankImageError(ValueError):
    """Raised when an operation needs foreground pixels and there are none."""

    def __init__(self, message: str = "blank image"):
        super().__init__(message)


@dataclass(frozen=True)
class PreprocessConfig:
    """Knobs for the preprocessing chain.

    norm_size: side of the square output grid (even, >= 8; must be a
        multiple of 30 for the downstream 30-bin features).
    median_passes: how many times the 3x3 median filter is applied.
    fill_threshold: minimum count of foreground 8-neighbours for a
        background pixel to be filled (4..8).
    slant_clamp_deg: slant estimates are clamped to +/- this angle.
    dilate: apply the 2x2 dilation step (off by default; only the
        end-point feature ever benefits from it).
    """

    norm_size: int = 60
    median_passes: int = 1
    fill_threshold: int = 7
    slant_clamp_deg: float = 45.0
    dilate: bool = False

    def __post_init__(self):
        if self.norm_size < 8 or self.norm_size % 2 != 0:
            raise ValueError(f"norm_size must be even and >= 8, got {self.norm_size}")
        if self.median_passes < 1:
            raise ValueError(f"median_passes must be >= 1, got {self.median_passes}")
        if not 4 <= self.fill_threshold <= 8:
            raise ValueError(f"fill_threshold must be in 4..8, got {self.fill_threshold}")
        if not 0 < self.slant_clamp_deg <= 60:
            raise ValueError(f"slant_clamp_deg must be in (0, 60], got {self.slant_clamp_deg}")

    def to_text(self) -> str:
        """Serialize as flat key=value lines (the config-file format)."""
        lines = []
        for f in fields(self):
            v = getattr(self, f.name)
            lines.append(f"{f.name}={str(v).lower() if isinstance(v, bool) else v}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "PreprocessConfig":
        known = {f.name: f.type for f in fields(cls)}
        kwargs = {}
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"config line {lineno}: expected key=value, got {raw!r}")
            key, value = (part.strip() for part in line.split("=", 1))
            if key not in known:
                raise ValueError(f"config line {lineno}: unknown key {key!r}")
            if key == "dilate":
                kwargs[key] = value.lower() in ("1", "true", "yes", "on")
            elif key == "slant_clamp_deg":
                kwargs[key] = float(value)
            else:
                kwargs[key] = int(value)
        return cls(**kwargs)


def otsu_threshold(img) -> float:
    """Global threshold by maximizing between-class variance, as k*/255.

    Candidate thresholds k split the 256-bin histogram into intensities
    <= k and > k; the returned k* maximizes w0*w1*(mu0-mu1)^2 and equals
    what an exhaustive 256-threshold search would pick.  Ties go to the
    smallest k.  A constant image has zero variance everywhere; it returns
    its own intensity / 255.
    """
    a = validate_gray(img)
    hist = np.bincount(a.ravel(), minlength=256).astype(np.float64)
    nz = np.nonzero(hist)[0]
    if len(nz) == 1:
        return float(nz[0]) / 255.0
    total = hist.sum()
    levels = np.arange(256, dtype=np.float64)
    w0 = np.cumsum(hist)
    sum0 = np.cumsum(hist * levels)
    w1 = total - w0
    valid = (w0 > 0) & (w1 > 0)
    sigma_b = np.zeros(256)
    mu0 = np.divide(sum0, w0, out=np.zeros(256), where=valid)
    mu1 = np.divide(sum0[-1] - sum0, w1, out=np.zeros(256), where=valid)
    sigma_b[valid] = (w0 * w1 * (mu0 - mu1) ** 2)[valid]
    return float(np.argmax(sigma_b)) / 255.0


def binarize(img, cfg: PreprocessConfig | None = None) -> np.ndarray:
    """Threshold at the Otsu level, then force foreground (1) = ink.

    The raw threshold marks bright pixels; if that marks more than half
    the image the polarity is inverted, so the minority class (the ink)
    always ends up as 1 regardless of light-on-dark or dark-on-light input.
    """
    a = validate_gray(img)
    raw = from_gray_thresholded(a, otsu_threshold(a))
    if int(raw.sum()) * 2 > raw.size:
        raw = (1 - raw).astype(np.uint8)
    return raw


def estimate_slant(bin_img, clamp_deg: float = 45.0) -> float:
    """Estimate the dominant writing slant, in degrees.

    Uses the second-order central moments of the foreground pixel cloud
    (x = column, y = row): the covariance-to-vertical-spread ratio gives
    the tangent of the slant.  The sign is such that `shear(img, theta)`
    followed by `estimate_slant` recovers theta, so correction is
    `shear(img, -estimate_slant(img))`.  Returns 0 when the vertical
    spread is zero (single-row foreground); raises on a blank image.
    """
    b = validate_binary(bin_img)
    rows, cols = np.nonzero(b)
    if len(rows) == 0:
        raise BlankImageError()
    x = cols.astype(np.float64) - cols.mean()
    y = rows.astype(np.float64) - rows.mean()
    mu02 = float(np.sum(y * y))
    if mu02 == 0.0:
        return 0.0
    mu11 = float(np.sum(x * y))
    theta = math.degrees(math.atan(-mu11 / mu02))
    return max(-clamp_deg, min(clamp_deg, theta))


def shear(bin_img, theta_deg: float) -> np.ndarray:
    """Shear foreground pixels horizontally about the vertical center.

    Pixel (x, y) maps to (round(x - (y - y_c) * tan(theta)), y) with
    y_c = (height-1)/2.  The canvas keeps its height and is widened just
    enough to hold every mapped pixel, so theta = 0 is the identity.
    """
    if abs(theta_deg) > 60:
        raise ValueError(f"shear angle must satisfy |theta| <= 60, got {theta_deg}")
    b = validate_binary(bin_img)
    rows, cols = np.nonzero(b)
    if len(rows) == 0:
        return b.copy()
    h, w = b.shape
    y_c = (h - 1) / 2.0
    t = math.tan(math.radians(theta_deg))
    new_x = np.floor(cols - (rows - y_c) * t + 0.5).astype(np.int64)
    left = min(0, int(new_x.min()))
    right = max(w - 1, int(new_x.max()))
    out = np.zeros((h, right - left + 1), dtype=np.uint8)
    out[rows, new_x - left] = 1
    return out


def deslant(bin_img, cfg: PreprocessConfig | None = None) -> np.ndarray:
    """Remove the estimated slant: shear by the negated estimate."""
    cfg = cfg or PreprocessConfig()
    return shear(bin_img, -estimate_slant(bin_img, cfg.slant_clamp_deg))


def resize_normalize(bin_img, cfg: PreprocessConfig | None = None) -> np.ndarray:
    """Crop to the foreground box and backward-map onto a norm_size grid.

    Output pixel (r, c) samples input pixel (floor(r*H/S), floor(c*W/S))
    of the cropped box, so the result is always exactly norm_size square.
    """
    cfg = cfg or PreprocessConfig()
    b = validate_binary(bin_img)
    rows, cols = np.nonzero(b)
    if len(rows) == 0:
        raise BlankImageError()
    crop = b[rows.min() : rows.max() + 1, cols.min() : cols.max() + 1]
    h, w = crop.shape
    s = cfg.norm_size
    r_src = (np.arange(s, dtype=np.int64) * h) // s
    c_src = (np.arange(s, dtype=np.int64) * w) // s
    return crop[np.ix_(r_src, c_src)].astype(np.uint8)


def median3x3(img, passes: int = 1) -> np.ndarray:
    """3x3 median filter with replicate padding, applied `passes` times."""
    if passes < 1:
        raise ValueError(f"passes must be >= 1, got {passes}")
    a = validate_gray(img)
    for _ in range(passes):
        padded = np.pad(a, 1, mode="edge")
        windows = np.lib.stride_tricks.sliding_window_view(padded, (3, 3))
        a = np.median(windows, axis=(2, 3)).astype(np.uint8)
    return a


def _neighbor_counts(b: np.ndarray, connectivity: int) -> np.ndarray:
    """Per-pixel count of foreground neighbours; off-image counts as 0."""
    padded = np.pad(b.astype(np.int32), 1)
    count = (
        padded[:-2, 1:-1] + padded[2:, 1:-1] + padded[1:-1, :-2] + padded[1:-1, 2:]
    )
    if connectivity == 8:
        count = count + (
            padded[:-2, :-2] + padded[:-2, 2:] + padded[2:, :-2] + padded[2:, 2:]
        )
    return count


def morph(bin_img, mode: str, cfg: PreprocessConfig | None = None) -> np.ndarray:
    """One synchronous pass of neighbour-count morphology.

    fill:   background pixel becomes 1 iff it has >= fill_threshold
            foreground 8-neighbours (an interior hole)
    clean:  foreground pixel becomes 0 iff it has no foreground 8-neighbour
    remove: foreground pixel becomes 0 iff it has no foreground 4-neighbour

    All decisions are taken from the input image, never from partial output.
    """
    cfg = cfg or PreprocessConfig()
    b = validate_binary(bin_img)
    if mode == "fill":
        n8 = _neighbor_counts(b, 8)
        return (b | ((b == 0) & (n8 >= cfg.fill_threshold))).astype(np.uint8)
    if mode == "clean":
        n8 = _neighbor_counts(b, 8)
        return (b & (n8 > 0)).astype(np.uint8)
    if mode == "remove":
        n4 = _neighbor_counts(b, 4)
        return (b & (n4 > 0)).astype(np.uint8)
    raise ValueError(f"mode must be 'fill', 'clean' or 'remove', got {mode!r}")


def dilate2x2(bin_img) -> np.ndarray:
    """Dilate by a 2x2 all-ones structuring element, same canvas size.

    Output (r, c) is foreground iff the input is foreground at any of
    (r, c), (r, c-1), (r-1, c), (r-1, c-1).
    """
    b = validate_binary(bin_img)
    padded = np.pad(b, ((1, 0), (1, 0)))
    return (padded[1:, 1:] | padded[1:, :-1] | padded[:-1, 1:] | padded[:-1, :-1]).astype(
        np.uint8
    )


_STAGE_ORDER = ("gray", "median", "binary", "clean", "remove", "fill", "dilate", "deslant", "normalized")


def preprocess_stages(gray_img, cfg: PreprocessConfig | None = None) -> dict[str, np.ndarray]:
    """Run the full chain, returning every intermediate stage by name."""
    cfg = cfg or PreprocessConfig()
    g = validate_gray(gray_img)
    stages: dict[str, np.ndarray] = {"gray": g}
    g = median3x3(g, cfg.median_passes)
    stages["median"] = g
    b = binarize(g, cfg)
    stages["binary"] = b
    b = morph(b, "clean", cfg)
    stages["clean"] = b
    b = morph(b, "remove", cfg)
    stages["remove"] = b
    b = morph(b, "fill", cfg)
    stages["fill"] = b
    if cfg.dilate:
        b = dilate2x2(b)
        stages["dilate"] = b
    b = deslant(b, cfg)  # raises BlankImageError if nothing survived denoising
    stages["deslant"] = b
    stages["normalized"] = resize_normalize(b, cfg)
    return stages


def preprocess(gray_img, cfg: PreprocessConfig | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Preprocess a gray image; returns (pre_resize_binary, normalized_binary).

    The pre-resize image (deslanted, uncropped) is what aspect-ratio style
    features must be measured on, since resizing destroys proportions.
    """
    stages = preprocess_stages(gray_img, cfg)
    return stages["deslant"], stages["normalized"]


class CharacterPreprocessor(BaseEstimator, TransformerMixin):
    """Stateless transformer: gray character images -> normalized binaries.

    Accepts a list/iterable of 2-D uint8 arrays and returns the list of
    norm_size x norm_size binary images.  fit() is a no-op; the class
    exists so the preprocessing step composes in sklearn pipelines.
    """

    def __init__(self, norm_size=60, median_passes=1, fill_threshold=7,
                 slant_clamp_deg=45.0, dilate=False):
        self.norm_size = norm_size
        self.median_passes = median_passes
        self.fill_threshold = fill_threshold
        self.slant_clamp_deg = slant_clamp_deg
        self.dilate = dilate

    def _config(self) -> PreprocessConfig:
        return PreprocessConfig(
            norm_size=self.norm_size,
            median_passes=self.median_passes,
            fill_threshold=self.fill_threshold,
            slant_clamp_deg=self.slant_clamp_deg,
            dilate=self.dilate,
        )

    def fit(self, X, y=None):
        self._config()  # validate parameters
        return self

    def transform(self, X):
        cfg = self._config()
        return [preprocess(img, cfg)[1] for img in X]

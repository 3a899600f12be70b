"""Procedural synthetic glyph corpus for end-to-end testing.

Real handwritten-character datasets in this domain are not freely
redistributable, so the test harness fabricates one: 28 archetypes built
from strokes, arcs and optional detached dots (the dots exercise the
secondary-component features).  Every sample gets a random translation,
+/-20% scale, +/-15 degree shear and 1% salt-and-pepper noise, all drawn
from a per-sample seeded generator so a corpus is reproducible byte for
byte.
"""

from __future__ import annotations

import math
import os

import numpy as np

from .image import write_pgm_file

__all__ = ["ARCHETYPE_NAMES", "DOTTED_ARCHETYPES", "render_sample", "gen_synthetic"]

CANVAS = 96
GLYPH_SIZE = 48.0
NOISE_RATE = 0.01

_DOT_COLUMNS = {1: (0.5,), 2: (0.32, 0.68), 3: (0.22, 0.5, 0.78)}
_DOT_ABOVE_V = -0.24
_DOT_BELOW_V = 1.24

# Each archetype: polylines/arcs in unit glyph coordinates (v grows downward),
# plus (count, above?) for detached dots.
_POLY = {
    "vbar": [[(0.5, 0.04), (0.5, 0.96)]],
    "hbar": [[(0.04, 0.5), (0.96, 0.5)]],
    # Diagonals are laid flatter than 45 degrees so the slant-clamped
    # deslant step cannot turn them into vertical bars.
    "slash": [[(0.94, 0.28), (0.06, 0.72)]],
    "backslash": [[(0.06, 0.28), (0.94, 0.72)]],
    "cross": [[(0.5, 0.04), (0.5, 0.96)], [(0.08, 0.5), (0.92, 0.5)]],
    "xcross": [[(0.88, 0.06), (0.12, 0.94)], [(0.12, 0.06), (0.88, 0.94)]],
    "ell": [[(0.2, 0.04), (0.2, 0.92), (0.88, 0.92)]],
    "tee": [[(0.06, 0.08), (0.94, 0.08)], [(0.5, 0.08), (0.5, 0.94)]],
    "ubend": [[(0.14, 0.06), (0.14, 0.9), (0.86, 0.9), (0.86, 0.06)]],
    "nbend": [[(0.14, 0.94), (0.14, 0.1), (0.86, 0.1), (0.86, 0.94)]],
    "zig": [[(0.1, 0.08), (0.9, 0.08), (0.1, 0.92), (0.9, 0.92)]],
    "ess": [[(0.88, 0.08), (0.14, 0.08), (0.14, 0.5), (0.86, 0.5), (0.86, 0.92), (0.12, 0.92)]],
    "triangle": [[(0.5, 0.06), (0.92, 0.92), (0.08, 0.92), (0.5, 0.06)]],
    "box": [[(0.14, 0.1), (0.86, 0.1), (0.86, 0.9), (0.14, 0.9), (0.14, 0.1)]],
    "stair": [[(0.1, 0.94), (0.1, 0.62), (0.42, 0.62), (0.42, 0.32), (0.74, 0.32), (0.74, 0.04)]],
}
_ARCS = {
    "ring": [((0.5, 0.5), 0.4, 0.0, 360.0)],
    "cee": [((0.55, 0.5), 0.4, 60.0, 300.0)],
}

_BASE_SHAPES = {**{k: ("poly", v) for k, v in _POLY.items()}, **{k: ("arc", v) for k, v in _ARCS.items()}}

# name -> (base shape, dot count, dots above?)
_ARCHETYPES: dict[str, tuple[str, int, bool]] = {
    "backslash": ("backslash", 0, True),
    "box": ("box", 0, True),
    "cee": ("cee", 0, True),
    "cee_two_dots_above": ("cee", 2, True),
    "cross": ("cross", 0, True),
    "ell": ("ell", 0, True),
    "ess": ("ess", 0, True),
    "hbar": ("hbar", 0, True),
    "hbar_dot_below": ("hbar", 1, False),
    "nbend": ("nbend", 0, True),
    "nbend_dot_below": ("nbend", 1, False),
    "nbend_two_dots_below": ("nbend", 2, False),
    "ring": ("ring", 0, True),
    "ring_dot_above": ("ring", 1, True),
    "ring_dot_below": ("ring", 1, False),
    "slash": ("slash", 0, True),
    "stair": ("stair", 0, True),
    "tee": ("tee", 0, True),
    "tee_dot_below": ("tee", 1, False),
    "triangle": ("triangle", 0, True),
    "ubend": ("ubend", 0, True),
    "ubend_dot_above": ("ubend", 1, True),
    "ubend_three_dots_above": ("ubend", 3, True),
    "ubend_two_dots_above": ("ubend", 2, True),
    "vbar": ("vbar", 0, True),
    "vbar_dot_above": ("vbar", 1, True),
    "xcross": ("xcross", 0, True),
    "zig": ("zig", 0, True),
}

ARCHETYPE_NAMES = sorted(_ARCHETYPES)
DOTTED_ARCHETYPES = sorted(name for name, (_, k, _a) in _ARCHETYPES.items() if k > 0)


def _stamp_disk(canvas: np.ndarray, cx: float, cy: float, radius: float, value: int) -> None:
    r0 = max(0, int(math.floor(cy - radius)))
    r1 = min(canvas.shape[0] - 1, int(math.ceil(cy + radius)))
    c0 = max(0, int(math.floor(cx - radius)))
    c1 = min(canvas.shape[1] - 1, int(math.ceil(cx + radius)))
    if r1 < r0 or c1 < c0:
        return
    rr, cc = np.mgrid[r0 : r1 + 1, c0 : c1 + 1]
    mask = (rr - cy) ** 2 + (cc - cx) ** 2 <= radius * radius
    canvas[r0 : r1 + 1, c0 : c1 + 1][mask] = value


def _stamp_path(canvas, points, thickness, value, transform) -> None:
    radius = thickness / 2.0
    for u, v in points:
        x, y = transform(u, v)
        _stamp_disk(canvas, x, y, radius, value)


def _poly_points(pts, step=0.008):
    points = []
    for (u0, v0), (u1, v1) in zip(pts[:-1], pts[1:]):
        length = math.hypot(u1 - u0, v1 - v0)
        n = max(2, int(length / step))
        for i in range(n + 1):
            t = i / n
            points.append((u0 + t * (u1 - u0), v0 + t * (v1 - v0)))
    return points


def _arc_points(center, radius, a0, a1, step_deg=1.0):
    cu, cv = center
    n = max(8, int(abs(a1 - a0) / step_deg))
    points = []
    for i in range(n + 1):
        a = math.radians(a0 + (a1 - a0) * i / n)
        points.append((cu + radius * math.cos(a), cv + radius * math.sin(a)))
    return points


def render_sample(name: str, rng: np.random.Generator) -> np.ndarray:
    """Rasterize one randomized sample of the named archetype."""
    if name not in _ARCHETYPES:
        raise ValueError(f"unknown archetype {name!r}")
    base, dot_count, dots_above = _ARCHETYPES[name]
    kind, shapes = _BASE_SHAPES[base]

    scale = GLYPH_SIZE * rng.uniform(0.8, 1.2)
    shear_t = math.tan(math.radians(rng.uniform(-15.0, 15.0)))
    thickness = rng.uniform(3.8, 5.2)
    ink = int(rng.integers(15, 45))
    paper = int(rng.integers(220, 242))
    dot_radius = rng.uniform(2.3, 3.0)

    # Unit-space vertical extent of the glyph, including any detached dots.
    v_lo, v_hi = 0.0, 1.0
    if dot_count:
        if dots_above:
            v_lo = _DOT_ABOVE_V - dot_radius / scale
        else:
            v_hi = _DOT_BELOW_V + dot_radius / scale
    # Placement window such that strokes, dots and shear overhang all stay
    # on canvas for every (u, v) the glyph can touch.
    pad = thickness / 2.0 + 2.0
    shear_overhang = scale * abs(shear_t) * max(0.5 - v_lo, v_hi - 0.5)
    width_px = scale + 2 * shear_overhang + 2 * pad
    height_px = (v_hi - v_lo) * scale + 2 * pad
    x_play = max(0.0, CANVAS - width_px)
    y_play = max(0.0, CANVAS - height_px)
    x_origin = pad + shear_overhang + rng.uniform(0.0, 1.0) * x_play
    y_origin = pad - v_lo * scale + rng.uniform(0.0, 1.0) * y_play

    def transform(u: float, v: float) -> tuple[float, float]:
        x = x_origin + u * scale + (0.5 - v) * scale * shear_t
        y = y_origin + v * scale
        return x, y

    canvas = np.full((CANVAS, CANVAS), paper, dtype=np.uint8)
    if kind == "poly":
        for pts in shapes:
            _stamp_path(canvas, _poly_points(pts), thickness, ink, transform)
    else:
        for center, radius, a0, a1 in shapes:
            _stamp_path(canvas, _arc_points(center, radius, a0, a1), thickness, ink, transform)
    if dot_count:
        v = _DOT_ABOVE_V if dots_above else _DOT_BELOW_V
        for u in _DOT_COLUMNS[dot_count]:
            x, y = transform(u, v)
            _stamp_disk(canvas, x, y, dot_radius, ink)

    hit = rng.random(canvas.shape) < NOISE_RATE
    salt = rng.integers(0, 2, size=canvas.shape).astype(np.uint8) * 255
    return np.where(hit, salt, canvas).astype(np.uint8)


def gen_synthetic(out_root, classes: int = 28, per_class: int = 50, seed: int = 0) -> int:
    """Write `classes * per_class` PGM samples under `<out>/<archetype>/`.

    Output is deterministic per seed (each sample draws from its own
    generator keyed by (seed, class, index)).  Returns the file count.
    """
    if not 1 <= classes <= len(ARCHETYPE_NAMES):
        raise ValueError(f"classes must be in 1..{len(ARCHETYPE_NAMES)}, got {classes}")
    if per_class < 1:
        raise ValueError(f"per_class must be >= 1, got {per_class}")
    out_root = os.fspath(out_root)
    written = 0
    for ci, name in enumerate(ARCHETYPE_NAMES[:classes]):
        folder = os.path.join(out_root, name)
        os.makedirs(folder, exist_ok=True)
        for i in range(per_class):
            rng = np.random.default_rng([seed, ci, i])
            img = render_sample(name, rng)
            write_pgm_file(os.path.join(folder, f"{name}_{i:04d}.pgm"), img)
            written += 1
    return written

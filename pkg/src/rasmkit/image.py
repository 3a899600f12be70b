"""Raster image containers and bit-exact PGM (P2/P5) file I/O.

Images are plain 2-D numpy arrays:

* grayscale images: dtype uint8, intensities 0..255, shape (height, width)
* binary images: dtype uint8, values in {0, 1}, where 1 = foreground = ink

All functions are pure; nothing here mutates its input.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "PgmError",
    "validate_gray",
    "validate_binary",
    "read_pgm",
    "read_pgm_file",
    "write_pgm",
    "write_pgm_file",
    "to_gray",
    "from_gray_thresholded",
]


class PgmError(ValueError):
    """Raised when a PGM byte stream cannot be parsed."""


def validate_gray(img) -> np.ndarray:
    """Check that `img` is a valid grayscale raster and return it as uint8."""
    a = np.asarray(img)
    if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
        raise ValueError(f"grayscale image must be 2-D and non-empty, got shape {a.shape}")
    if a.dtype != np.uint8:
        if not np.issubdtype(a.dtype, np.integer):
            raise ValueError(f"grayscale image must have integer dtype, got {a.dtype}")
        if a.min() < 0 or a.max() > 255:
            raise ValueError("grayscale intensities must lie in [0, 255]")
        a = a.astype(np.uint8)
    return a


def validate_binary(img) -> np.ndarray:
    """Check that `img` is a valid binary raster (values in {0,1}) as uint8."""
    a = np.asarray(img)
    if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
        raise ValueError(f"binary image must be 2-D and non-empty, got shape {a.shape}")
    if not np.isin(a, (0, 1)).all():
        raise ValueError("binary image values must be 0 or 1")
    return a.astype(np.uint8)


def _skip_header_junk(data: bytes, pos: int) -> int:
    """Advance past whitespace and '#' comments, returning the new offset."""
    n = len(data)
    while pos < n:
        c = data[pos]
        if c in b" \t\r\n\x0b\x0c":
            pos += 1
        elif c == ord("#"):
            while pos < n and data[pos] not in b"\r\n":
                pos += 1
        else:
            break
    return pos


def _next_token(data: bytes, pos: int, what: str) -> tuple[bytes, int]:
    pos = _skip_header_junk(data, pos)
    if pos >= len(data):
        raise PgmError(f"truncated file: expected {what} at byte offset {pos}")
    start = pos
    while pos < len(data) and data[pos] not in b" \t\r\n\x0b\x0c#":
        pos += 1
    return data[start:pos], pos


def _next_int(data: bytes, pos: int, what: str) -> tuple[int, int]:
    tok, end = _next_token(data, pos, what)
    if not tok.isdigit():
        raise PgmError(f"invalid {what} {tok!r} at byte offset {end - len(tok)}")
    return int(tok), end


def read_pgm(data: bytes) -> np.ndarray:
    """Parse PGM bytes (P2 ASCII or P5 binary, maxval <= 255) to a gray image.

    Samples are stored row-major, so pixel (r, c) is the (r*width + c)-th
    sample.  Inputs with maxval < 255 are rescaled to the full 0..255 range
    (factor 255/maxval, round half up).  Malformed input raises PgmError
    naming the byte offset of the problem.
    """
    if not isinstance(data, (bytes, bytearray, memoryview)):
        raise TypeError("read_pgm expects a byte sequence")
    data = bytes(data)
    magic, pos = _next_token(data, 0, "magic number")
    if magic not in (b"P2", b"P5"):
        raise PgmError(f"malformed magic number {magic!r} at byte offset 0")
    width, pos = _next_int(data, pos, "width")
    height, pos = _next_int(data, pos, "height")
    maxval, pos = _next_int(data, pos, "maxval")
    if width < 1 or height < 1:
        raise PgmError(f"invalid dimensions {width}x{height} at byte offset {pos}")
    if maxval < 1 or maxval > 255:
        raise PgmError(f"unsupported maxval {maxval} at byte offset {pos} (must be 1..255)")
    count = width * height

    if magic == b"P5":
        if pos >= len(data):
            raise PgmError(f"truncated file: expected raster at byte offset {pos}")
        pos += 1  # exactly one whitespace byte separates the header from the raster
        if len(data) - pos < count:
            raise PgmError(
                f"truncated raster: need {count} bytes, have {len(data) - pos} "
                f"at byte offset {pos}"
            )
        samples = np.frombuffer(data, dtype=np.uint8, count=count, offset=pos).astype(np.int64)
    else:
        samples = np.empty(count, dtype=np.int64)
        for i in range(count):
            tok, new_pos = _next_token(data, pos, f"sample {i}")
            if not tok.isdigit():
                raise PgmError(f"invalid sample {tok!r} at byte offset {new_pos - len(tok)}")
            samples[i] = int(tok)
            pos = new_pos

    if samples.max(initial=0) > maxval:
        raise PgmError(f"sample value {int(samples.max())} exceeds maxval {maxval}")
    if maxval != 255:
        samples = (510 * samples + maxval) // (2 * maxval)
    return samples.astype(np.uint8).reshape(height, width)


def read_pgm_file(path) -> np.ndarray:
    with open(path, "rb") as fh:
        return read_pgm(fh.read())


def write_pgm(img, mode: str = "binary") -> bytes:
    """Serialize a gray image as PGM bytes (maxval fixed at 255).

    `mode` is "binary" (P5) or "ascii" (P2).  Output is deterministic and
    re-reads to a pixel-identical image.
    """
    if mode not in ("ascii", "binary"):
        raise ValueError(f"mode must be 'ascii' or 'binary', got {mode!r}")
    a = validate_gray(img)
    h, w = a.shape
    header = f"{'P5' if mode == 'binary' else 'P2'}\n{w} {h}\n255\n".encode("ascii")
    if mode == "binary":
        return header + a.tobytes()
    lines = []
    for row in a:
        line = ""
        for v in row:
            tok = str(int(v))
            if line and len(line) + 1 + len(tok) > 70:
                lines.append(line)
                line = tok
            else:
                line = tok if not line else line + " " + tok
        lines.append(line)
    return header + ("\n".join(lines) + "\n").encode("ascii")


def write_pgm_file(path, img, mode: str = "binary") -> None:
    with open(path, "wb") as fh:
        fh.write(write_pgm(img, mode))


def to_gray(bin_img) -> np.ndarray:
    """Embed a binary image into grayscale: foreground 1 -> 255, 0 -> 0."""
    b = validate_binary(bin_img)
    return (b * np.uint8(255)).astype(np.uint8)


def from_gray_thresholded(img, t01: float) -> np.ndarray:
    """Raw thresholding: pixel becomes 1 iff intensity/255 > t01.

    This is polarity-agnostic; callers that need ink = 1 apply the
    ink-minority inversion on top (see preprocess.binarize).
    """
    a = validate_gray(img)
    if not 0.0 <= t01 <= 1.0:
        raise ValueError(f"threshold must lie in [0, 1], got {t01}")
    return (a.astype(np.float64) / 255.0 > t01).astype(np.uint8)

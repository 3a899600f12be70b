"""Independent brute-force oracles shared by the unit and acceptance tests.

These deliberately avoid the library's own code paths: the Otsu oracle
recomputes class means per candidate threshold, and the labeling oracle
is a plain stack-based flood fill.
"""

import numpy as np


def otsu_exhaustive(img) -> float:
    """Literal 256-threshold search for the between-class-variance argmax."""
    a = np.asarray(img, dtype=np.float64).ravel()
    values = np.unique(a)
    if len(values) == 1:
        return float(values[0]) / 255.0
    n = a.size
    best_k, best_v = 0, -1.0
    for k in range(256):
        low = a[a <= k]
        high = a[a > k]
        if len(low) == 0 or len(high) == 0:
            v = 0.0
        else:
            w0 = len(low) / n
            w1 = len(high) / n
            v = w0 * w1 * (low.mean() - high.mean()) ** 2
        if v > best_v:  # strict: smallest maximizing k wins
            best_v, best_k = v, k
    return best_k / 255.0


_FOUR = ((-1, 0), (1, 0), (0, -1), (0, 1))
_EIGHT = _FOUR + ((-1, -1), (-1, 1), (1, -1), (1, 1))


def flood_fill_labels(bin_img, connectivity: str = "eight") -> np.ndarray:
    """Stack-based flood fill; labels follow raster order of first pixels."""
    b = np.asarray(bin_img)
    offsets = _EIGHT if connectivity == "eight" else _FOUR
    h, w = b.shape
    labels = np.zeros((h, w), dtype=np.int32)
    next_label = 1
    for r in range(h):
        for c in range(w):
            if b[r, c] and not labels[r, c]:
                stack = [(r, c)]
                labels[r, c] = next_label
                while stack:
                    cr, cc = stack.pop()
                    for dr, dc in offsets:
                        nr, nc = cr + dr, cc + dc
                        if 0 <= nr < h and 0 <= nc < w and b[nr, nc] and not labels[nr, nc]:
                            labels[nr, nc] = next_label
                            stack.append((nr, nc))
                next_label += 1
    return labels


def label_partition(labels) -> set:
    """Partition of foreground pixels induced by a label map."""
    labels = np.asarray(labels)
    groups = {}
    for r, c in zip(*np.nonzero(labels)):
        groups.setdefault(int(labels[r, c]), []).append((int(r), int(c)))
    return {frozenset(g) for g in groups.values()}

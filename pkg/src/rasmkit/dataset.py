"""Labeled-sample ingestion, deterministic stratified splits, noise augmentation.

A dataset is either a directory tree `<root>/<label>/<file>.pgm` or a CSV
manifest with header `path,label`.  Splits default to the 198/332, 67/332,
67/332 train/valid/test fractions and are reproducible from their seed.
"""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass, field

import numpy as np

from .image import PgmError, read_pgm_file, validate_gray

__all__ = [
    "DatasetManifest",
    "SplitSpec",
    "scan_directory",
    "load_manifest_csv",
    "resolve_dataset",
    "split",
    "augment_noisy",
]


@dataclass
class DatasetManifest:
    """Ordered (path, label) index plus the sorted distinct label list."""

    entries: list[tuple[str, str]]
    class_names: list[str]
    skipped: list[str] = field(default_factory=list)

    def __post_init__(self):
        known = set(self.class_names)
        paths = set()
        for path, label in self.entries:
            if label not in known:
                raise ValueError(f"entry label {label!r} not in class_names")
            if path in paths:
                raise ValueError(f"duplicate entry path {path!r}")
            paths.add(path)

    def __len__(self) -> int:
        return len(self.entries)

    def by_class(self) -> dict[str, list[tuple[str, str]]]:
        grouped: dict[str, list[tuple[str, str]]] = {name: [] for name in self.class_names}
        for entry in self.entries:
            grouped[entry[1]].append(entry)
        return grouped


def scan_directory(root) -> DatasetManifest:
    """Index a `<root>/<label>/*.pgm` tree.

    Labels are the subdirectory names, sorted; entries are ordered by
    (label, filename).  Files that fail to parse as PGM are skipped and
    listed in `manifest.skipped`.  An empty or missing root is an error.
    """
    root = os.fspath(root)
    if not os.path.isdir(root):
        raise ValueError(f"dataset root {root!r} is not a directory")
    labels = sorted(d for d in os.listdir(root) if os.path.isdir(os.path.join(root, d)))
    entries: list[tuple[str, str]] = []
    skipped: list[str] = []
    for label in labels:
        folder = os.path.join(root, label)
        for name in sorted(os.listdir(folder)):
            if not name.lower().endswith(".pgm"):
                continue
            path = os.path.join(folder, name)
            try:
                read_pgm_file(path)
            except (PgmError, OSError):
                skipped.append(path)
                continue
            entries.append((path, label))
    if not entries:
        raise ValueError(f"no readable PGM samples under {root!r}")
    class_names = sorted({label for _, label in entries})
    return DatasetManifest(entries, class_names, skipped)


def load_manifest_csv(path) -> DatasetManifest:
    """Read a `path,label` CSV manifest; relative paths resolve against it."""
    path = os.fspath(path)
    base = os.path.dirname(os.path.abspath(path))
    entries: list[tuple[str, str]] = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header[:2]] != ["path", "label"]:
            raise ValueError(f"manifest {path!r} must start with a 'path,label' header")
        for row in reader:
            if not row:
                continue
            sample, label = row[0].strip(), row[1].strip()
            if not os.path.isabs(sample):
                sample = os.path.join(base, sample)
            entries.append((sample, label))
    if not entries:
        raise ValueError(f"manifest {path!r} lists no samples")
    return DatasetManifest(entries, sorted({label for _, label in entries}))


def resolve_dataset(path) -> DatasetManifest:
    """Accept either a dataset directory or a CSV manifest file."""
    if os.path.isdir(path):
        return scan_directory(path)
    return load_manifest_csv(path)


_DEFAULT_FRACS = (198 / 332, 67 / 332, 67 / 332)


@dataclass(frozen=True)
class SplitSpec:
    train_frac: float = _DEFAULT_FRACS[0]
    valid_frac: float = _DEFAULT_FRACS[1]
    test_frac: float = _DEFAULT_FRACS[2]
    seed: int = 0

    def __post_init__(self):
        for f in (self.train_frac, self.valid_frac, self.test_frac):
            if not 0.0 <= f <= 1.0:
                raise ValueError(f"split fractions must lie in [0, 1], got {f}")
        total = self.train_frac + self.valid_frac + self.test_frac
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"split fractions must sum to 1, got {total}")


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def split(manifest: DatasetManifest, spec: SplitSpec | None = None):
    """Stratified split into (train, valid, test) manifests.

    Each class is shuffled with the seeded generator and cut at
    round(n * train_frac) and round(n * (train_frac + valid_frac)); the
    three outputs partition the input.  Every class needs >= 3 samples.
    """
    spec = spec or SplitSpec()
    rng = np.random.default_rng(spec.seed)
    parts: tuple[list, list, list] = ([], [], [])
    for name, group in manifest.by_class().items():
        n = len(group)
        if n < 3:
            raise ValueError(f"class {name!r} has only {n} samples (minimum 3)")
        order = rng.permutation(n)
        cut1 = _round_half_up(n * spec.train_frac)
        cut2 = _round_half_up(n * (spec.train_frac + spec.valid_frac))
        for slot, lo, hi in ((0, 0, cut1), (1, cut1, cut2), (2, cut2, n)):
            parts[slot].extend(group[i] for i in order[lo:hi])
    out = []
    for entries in parts:
        names = sorted({label for _, label in entries})
        out.append(DatasetManifest(list(entries), names))
    return tuple(out)


def augment_noisy(img, rate: float = 0.02, seed=0) -> np.ndarray:
    """Salt-and-pepper corruption: with probability `rate`, a pixel is
    replaced by 0 or 255 (equal odds).  Deterministic per (image, seed)."""
    a = validate_gray(img)
    if not 0.0 <= rate <= 1.0:
        raise ValueError(f"noise rate must lie in [0, 1], got {rate}")
    rng = np.random.default_rng(seed)
    hit = rng.random(a.shape) < rate
    salt = rng.integers(0, 2, size=a.shape).astype(np.uint8) * 255
    return np.where(hit, salt, a).astype(np.uint8)

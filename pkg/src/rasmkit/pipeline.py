"""End-to-end glue: dataset -> features -> trained model -> evaluation.

The training flow is: scan, stratified split, augment the training set
with noisy copies, preprocess and extract features, fit min-max stats on
the training features only (validation and test values may clamp), then
run SCG with validation early stopping.  Evaluation produces a confusion
matrix and per-class recognition rates.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .components import label_components
from .dataset import DatasetManifest, SplitSpec, augment_noisy, resolve_dataset, split
from .features import FEATURE_LENGTH, apply_minmax, extract, fit_minmax
from .image import read_pgm_file, validate_gray
from .mlp import MlpConfig, MlpModel, TrainReport, predict, train_scg
from .preprocess import PreprocessConfig, preprocess

__all__ = [
    "EvalReport",
    "extract_from_gray",
    "extract_from_file",
    "train_recognizer",
    "evaluate",
    "predict_gray",
    "render_eval_table",
    "confusion_csv",
]


def extract_from_gray(gray, cfg: PreprocessConfig | None = None,
                      connectivity: str = "eight") -> np.ndarray:
    """Full preprocess + feature extraction for one in-memory gray image."""
    cfg = cfg or PreprocessConfig()
    pre, norm = preprocess(validate_gray(gray), cfg)
    cs = label_components(norm, connectivity)
    return extract(pre, norm, cs)


def extract_from_file(path, cfg: PreprocessConfig | None = None,
                      connectivity: str = "eight") -> np.ndarray:
    return extract_from_gray(read_pgm_file(path), cfg, connectivity)


def _feature_matrix(entries, cfg, connectivity, augment_rate=0.0, augment_seed=0):
    """Features and labels for a list of (path, label) entries.

    With augment_rate > 0 each entry contributes its ideal image plus one
    noisy copy; the noise generator is keyed per entry so results do not
    depend on iteration order.
    """
    rows, labels = [], []
    for i, (path, label) in enumerate(entries):
        gray = read_pgm_file(path)
        rows.append(extract_from_gray(gray, cfg, connectivity))
        labels.append(label)
        if augment_rate > 0:
            noisy = augment_noisy(gray, augment_rate, seed=[augment_seed, i])
            rows.append(extract_from_gray(noisy, cfg, connectivity))
            labels.append(label)
    X = np.vstack(rows) if rows else np.zeros((0, FEATURE_LENGTH))
    return X, labels


def _one_hot(labels, class_names) -> np.ndarray:
    index = {name: i for i, name in enumerate(class_names)}
    T = np.zeros((len(labels), len(class_names)))
    for r, label in enumerate(labels):
        T[r, index[label]] = 1.0
    return T


def train_recognizer(
    data,
    cfg: PreprocessConfig | None = None,
    connectivity: str = "eight",
    split_spec: SplitSpec | None = None,
    mlp_cfg: MlpConfig | None = None,
    augment_rate: float = 0.02,
) -> tuple[MlpModel, TrainReport, tuple[DatasetManifest, DatasetManifest, DatasetManifest]]:
    """Train a full recognizer from a dataset root or manifest.

    Returns the model (weights + labels + train-set min-max stats), the
    training report, and the (train, valid, test) manifests so callers can
    evaluate on the held-out split.  Test images are never loaded here.
    """
    cfg = cfg or PreprocessConfig()
    split_spec = split_spec or SplitSpec()
    manifest = data if isinstance(data, DatasetManifest) else resolve_dataset(data)
    train_m, valid_m, test_m = split(manifest, split_spec)
    class_names = manifest.class_names

    X_train, y_train = _feature_matrix(
        train_m.entries, cfg, connectivity,
        augment_rate=augment_rate, augment_seed=split_spec.seed,
    )
    if X_train.shape[0] == 0:
        raise ValueError("training split is empty")
    norm = fit_minmax(X_train)
    X_train = np.vstack([apply_minmax(row, norm) for row in X_train])
    T_train = _one_hot(y_train, class_names)

    valid_batch = None
    if valid_m.entries:
        X_valid, y_valid = _feature_matrix(valid_m.entries, cfg, connectivity)
        X_valid = np.vstack([apply_minmax(row, norm) for row in X_valid])
        valid_batch = (X_valid, _one_hot(y_valid, class_names))

    mlp_cfg = mlp_cfg or MlpConfig()
    if mlp_cfg.n_in != FEATURE_LENGTH or mlp_cfg.n_out != len(class_names):
        mlp_cfg = MlpConfig(
            n_in=FEATURE_LENGTH,
            n_hidden=mlp_cfg.n_hidden,
            n_out=len(class_names),
            max_epochs=mlp_cfg.max_epochs,
            sse_target=mlp_cfg.sse_target,
            seed=mlp_cfg.seed,
            init_scale=mlp_cfg.init_scale,
        )
    model, report = train_scg(mlp_cfg, X_train, T_train, valid=valid_batch,
                              labels=class_names, norm=norm)
    return model, report, (train_m, valid_m, test_m)


@dataclass
class EvalReport:
    """Confusion matrix (rows = true, cols = predicted) and derived rates."""

    labels: list[str]
    confusion: np.ndarray
    per_class_rate: np.ndarray
    overall_rate: float
    n_samples: int

    @classmethod
    def from_confusion(cls, labels, confusion) -> "EvalReport":
        confusion = np.asarray(confusion, dtype=np.int64)
        row_sums = confusion.sum(axis=1)
        with np.errstate(divide="ignore", invalid="ignore"):
            rates = np.where(row_sums > 0, np.diag(confusion) / row_sums, 0.0)
        n = int(confusion.sum())
        overall = float(np.trace(confusion)) / n if n else 0.0
        return cls(list(labels), confusion, rates, overall, n)


def evaluate(model: MlpModel, data, cfg: PreprocessConfig | None = None,
             connectivity: str = "eight") -> EvalReport:
    """Classify every sample and tally the confusion matrix.

    All data labels must be known to the model; unknown labels are an error.
    """
    cfg = cfg or PreprocessConfig()
    manifest = data if isinstance(data, DatasetManifest) else resolve_dataset(data)
    known = set(model.labels)
    unknown = sorted({label for _, label in manifest.entries} - known)
    if unknown:
        raise ValueError(f"data contains labels unknown to the model: {', '.join(unknown)}")
    index = {name: i for i, name in enumerate(model.labels)}
    k = len(model.labels)
    confusion = np.zeros((k, k), dtype=np.int64)
    for path, label in manifest.entries:
        features = extract_from_file(path, cfg, connectivity)
        predicted, _ = predict(model, features, raw=True)
        confusion[index[label], index[predicted]] += 1
    return EvalReport.from_confusion(model.labels, confusion)


def predict_gray(model: MlpModel, gray, cfg: PreprocessConfig | None = None,
                 connectivity: str = "eight"):
    """Preprocess, extract, normalize and classify one gray image."""
    features = extract_from_gray(gray, cfg, connectivity)
    return predict(model, features, raw=True)


def render_eval_table(report: EvalReport) -> str:
    """Per-class rates sorted best-first, plus the overall line."""
    order = sorted(range(len(report.labels)),
                   key=lambda i: (-report.per_class_rate[i], report.labels[i]))
    width = max((len(label) for label in report.labels), default=5)
    lines = [f"{'No':<4}{'Character':<{width + 2}}Recognition Percentage"]
    for rank, i in enumerate(order, 1):
        pct = 100.0 * report.per_class_rate[i]
        lines.append(f"{rank:<4}{report.labels[i]:<{width + 2}}{pct:.2f}%")
    correct = int(np.trace(report.confusion))
    lines.append(
        f"Overall recognition rate: {100.0 * report.overall_rate:.2f}% "
        f"({correct}/{report.n_samples})"
    )
    return "\n".join(lines)


def confusion_csv(report: EvalReport) -> str:
    """Header of class labels, then one row of counts per true class."""
    lines = [",".join(report.labels)]
    for row in report.confusion:
        lines.append(",".join(str(int(v)) for v in row))
    return "\n".join(lines) + "\n"

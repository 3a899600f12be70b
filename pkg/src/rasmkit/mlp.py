"""Two-layer log-sigmoid feed-forward classifier trained by scaled
conjugate gradient.

The network computes y = logsig(W2 @ logsig(W1 @ x + b1) + b2) against
one-hot targets under a sum-of-squared-errors loss.  Training is full
batch: SCG builds a damped second-order model along conjugate directions
and never needs a line search, which makes it fast and memory-light for
networks of this size.

`MlpModel` is the complete deployable artifact (weights + class labels +
feature scaling stats) and serializes to a versioned JSON document.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Sequence

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.exceptions import NotFittedError
from sklearn.utils.validation import check_array

from .features import NormStats, apply_minmax

__all__ = [
    "MlpConfig",
    "MlpModel",
    "TrainReport",
    "Gradients",
    "TrainingDivergedError",
    "ModelFormatError",
    "logsig",
    "forward",
    "forward_batch",
    "sse_and_gradient",
    "train_scg",
    "predict",
    "save_model",
    "load_model",
    "ScgMlpClassifier",
]

SCG_SIGMA = 5e-5
SCG_LAMBDA_INIT = 5e-7
VALIDATION_PATIENCE = 50


class TrainingDivergedError(RuntimeError):
    """Loss or gradient became non-finite; carries the offending epoch."""

    def __init__(self, epoch: int):
        super().__init__(f"training diverged: non-finite loss at epoch {epoch}")
        self.epoch = epoch


class ModelFormatError(ValueError):
    """A model document could not be parsed or validated."""


@dataclass(frozen=True)
class MlpConfig:
    n_in: int = 133
    n_hidden: int = 70
    n_out: int = 28
    max_epochs: int = 2000
    sse_target: float = 0.001
    seed: int = 0
    init_scale: float = 0.5

    def __post_init__(self):
        if min(self.n_in, self.n_hidden, self.n_out) < 1:
            raise ValueError("layer sizes must all be >= 1")
        if self.max_epochs < 1:
            raise ValueError("max_epochs must be >= 1")
        if not self.sse_target > 0:
            raise ValueError("sse_target must be positive")
        if not self.init_scale > 0:
            raise ValueError("init_scale must be positive")

    @property
    def n_params(self) -> int:
        return self.n_hidden * (self.n_in + 1) + self.n_out * (self.n_hidden + 1)


@dataclass
class MlpModel:
    """Trained network: weights, biases, class labels, feature scaling."""

    w1: np.ndarray  # (n_hidden, n_in)
    b1: np.ndarray  # (n_hidden,)
    w2: np.ndarray  # (n_out, n_hidden)
    b2: np.ndarray  # (n_out,)
    labels: list[str]
    norm: NormStats

    def __post_init__(self):
        self.w1 = np.asarray(self.w1, dtype=np.float64)
        self.b1 = np.asarray(self.b1, dtype=np.float64)
        self.w2 = np.asarray(self.w2, dtype=np.float64)
        self.b2 = np.asarray(self.b2, dtype=np.float64)
        h, n_in = self.w1.shape
        n_out = self.w2.shape[0]
        if self.b1.shape != (h,) or self.w2.shape != (n_out, h) or self.b2.shape != (n_out,):
            raise ValueError("weight/bias shapes are inconsistent")
        if len(self.labels) != n_out:
            raise ValueError(f"expected {n_out} labels, got {len(self.labels)}")
        if len(set(self.labels)) != len(self.labels):
            raise ValueError("labels must be distinct")
        for a in (self.w1, self.b1, self.w2, self.b2):
            if not np.isfinite(a).all():
                raise ValueError("model parameters must be finite")
        if self.norm.mins.shape != (n_in,):
            raise ValueError("norm stats length must match the input size")

    @property
    def sizes(self) -> tuple[int, int, int]:
        return self.w1.shape[1], self.w1.shape[0], self.w2.shape[0]


@dataclass
class TrainReport:
    epochs_run: int
    final_sse: float
    sse_trace: list[float] = field(default_factory=list)
    stop_reason: str = "max_epochs"  # target | max_epochs | validation


class Gradients(NamedTuple):
    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray


def logsig(n):
    """Log-sigmoid 1/(1+e^-n), computed without overflow on either tail."""
    a = np.asarray(n, dtype=np.float64)
    out = np.empty_like(a)
    pos = a >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-a[pos]))
    e = np.exp(a[~pos])
    out[~pos] = e / (1.0 + e)
    return float(out) if np.isscalar(n) or out.ndim == 0 else out


def forward_batch(model: MlpModel, X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    hidden = logsig(X @ model.w1.T + model.b1)
    return logsig(hidden @ model.w2.T + model.b2)


def forward(model: MlpModel, x) -> np.ndarray:
    """Single-sample forward pass; returns the n_out activation vector."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] != model.sizes[0]:
        raise ValueError(f"expected input of length {model.sizes[0]}, got shape {x.shape}")
    return forward_batch(model, x.reshape(1, -1))[0]


def sse_and_gradient(model: MlpModel, X, T) -> tuple[float, Gradients]:
    """Loss and exact parameter gradient over a batch.

    X is (n, n_in), T is (n, n_out) with one-hot rows.  The loss is
    sse = sum over samples and outputs of (t - y)^2, and the gradient is
    obtained by backpropagation through both log-sigmoid layers
    (output delta = -2 (t - y) * y * (1 - y)).
    """
    X = np.asarray(X, dtype=np.float64)
    T = np.asarray(T, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] == 0:
        raise ValueError("batch must contain at least one sample")
    hidden = logsig(X @ model.w1.T + model.b1)
    y = logsig(hidden @ model.w2.T + model.b2)
    err = T - y
    sse = float(np.sum(err * err))
    d_out = -2.0 * err * y * (1.0 - y)
    g_w2 = d_out.T @ hidden
    g_b2 = d_out.sum(axis=0)
    d_hid = (d_out @ model.w2) * hidden * (1.0 - hidden)
    g_w1 = d_hid.T @ X
    g_b1 = d_hid.sum(axis=0)
    return sse, Gradients(g_w1, g_b1, g_w2, g_b2)


def _unpack(theta: np.ndarray, cfg: MlpConfig):
    h, n_in, n_out = cfg.n_hidden, cfg.n_in, cfg.n_out
    i = 0
    w1 = theta[i : i + h * n_in].reshape(h, n_in)
    i += h * n_in
    b1 = theta[i : i + h]
    i += h
    w2 = theta[i : i + n_out * h].reshape(n_out, h)
    i += n_out * h
    b2 = theta[i : i + n_out]
    return w1, b1, w2, b2


def _sse_flat(theta, cfg, X, T) -> float:
    w1, b1, w2, b2 = _unpack(theta, cfg)
    y = logsig(logsig(X @ w1.T + b1) @ w2.T + b2)
    err = T - y
    return float(np.sum(err * err))


def _grad_flat(theta, cfg, X, T) -> np.ndarray:
    w1, b1, w2, b2 = _unpack(theta, cfg)
    hidden = logsig(X @ w1.T + b1)
    y = logsig(hidden @ w2.T + b2)
    d_out = -2.0 * (T - y) * y * (1.0 - y)
    d_hid = (d_out @ w2) * hidden * (1.0 - hidden)
    return np.concatenate(
        [
            (d_hid.T @ X).ravel(),
            d_hid.sum(axis=0),
            (d_out.T @ hidden).ravel(),
            d_out.sum(axis=0),
        ]
    )


def train_scg(
    cfg: MlpConfig,
    X,
    T,
    valid: Optional[tuple] = None,
    labels: Optional[Sequence[str]] = None,
    norm: Optional[NormStats] = None,
) -> tuple[MlpModel, TrainReport]:
    """Train a fresh network with Moller's scaled conjugate gradient.

    Weights start uniform in [-init_scale, +init_scale] from the seeded
    generator, so (seed, data, config) fully determines the result.  The
    run stops when the training SSE reaches sse_target, after max_epochs
    iterations, or - when a validation batch is given - after the
    validation SSE has failed to improve for 50 consecutive iterations,
    in which case the best-validation snapshot is returned.  sse_trace
    records the full-batch training SSE at every iteration; rejected SCG
    steps leave the parameters (and hence the SSE) unchanged.
    """
    X = np.asarray(X, dtype=np.float64)
    T = np.asarray(T, dtype=np.float64)
    if X.shape[0] == 0 or X.shape[0] != T.shape[0]:
        raise ValueError("training inputs and targets must be non-empty and aligned")
    if X.shape[1] != cfg.n_in or T.shape[1] != cfg.n_out:
        raise ValueError(
            f"data shaped {X.shape}/{T.shape} does not match config "
            f"{cfg.n_in}->{cfg.n_hidden}->{cfg.n_out}"
        )
    has_valid = valid is not None
    if has_valid:
        Xv = np.asarray(valid[0], dtype=np.float64)
        Tv = np.asarray(valid[1], dtype=np.float64)

    rng = np.random.default_rng(cfg.seed)
    theta = rng.uniform(-cfg.init_scale, cfg.init_scale, size=cfg.n_params)
    restart_period = cfg.n_params

    energy = _sse_flat(theta, cfg, X, T)
    if not math.isfinite(energy):
        raise TrainingDivergedError(0)
    trace = [energy]
    grad = _grad_flat(theta, cfg, X, T)
    r = -grad
    p = r.copy()
    lamb = SCG_LAMBDA_INIT
    lamb_bar = 0.0
    success = True
    delta = 0.0
    stop_reason = "max_epochs"
    epochs = 0

    best_val = math.inf
    best_theta = theta.copy()
    val_streak = 0

    if energy <= cfg.sse_target:
        stop_reason = "target"
    else:
        for k in range(1, cfg.max_epochs + 1):
            p_norm2 = float(p @ p)
            if p_norm2 == 0.0 or float(r @ r) == 0.0:
                break  # exact stationary point
            if success:
                sigma_k = SCG_SIGMA / math.sqrt(p_norm2)
                grad_plus = _grad_flat(theta + sigma_k * p, cfg, X, T)
                s = (grad_plus - grad) / sigma_k
                delta = float(p @ s)
            delta += (lamb - lamb_bar) * p_norm2
            if delta <= 0:  # force a positive-definite local model
                lamb_bar = 2.0 * (lamb - delta / p_norm2)
                delta = -delta + lamb * p_norm2
                lamb = lamb_bar
            mu = float(p @ r)
            alpha = mu / delta
            theta_try = theta + alpha * p
            energy_try = _sse_flat(theta_try, cfg, X, T)
            if not math.isfinite(energy_try):
                raise TrainingDivergedError(k)
            comp = 2.0 * delta * (energy - energy_try) / (mu * mu)
            if comp >= 0:  # step accepted
                theta = theta_try
                energy = energy_try
                grad = _grad_flat(theta, cfg, X, T)
                if not np.isfinite(grad).all():
                    raise TrainingDivergedError(k)
                r_new = -grad
                lamb_bar = 0.0
                success = True
                if k % restart_period == 0:
                    p = r_new.copy()
                else:
                    beta = (float(r_new @ r_new) - float(r_new @ r)) / mu
                    p = r_new + beta * p
                r = r_new
                if comp >= 0.75:
                    lamb *= 0.25
            else:
                lamb_bar = lamb
                success = False
            if comp < 0.25:
                lamb += delta * (1.0 - comp) / p_norm2

            epochs = k
            trace.append(energy)
            if energy <= cfg.sse_target:
                stop_reason = "target"
                break
            if has_valid:
                val_sse = _sse_flat(theta, cfg, Xv, Tv)
                if val_sse < best_val:
                    best_val = val_sse
                    best_theta = theta.copy()
                    val_streak = 0
                else:
                    val_streak += 1
                if val_streak >= VALIDATION_PATIENCE:
                    stop_reason = "validation"
                    theta = best_theta
                    break

    w1, b1, w2, b2 = _unpack(theta, cfg)
    if labels is None:
        labels = [f"c{i}" for i in range(cfg.n_out)]
    if norm is None:
        norm = NormStats(np.zeros(cfg.n_in), np.ones(cfg.n_in))
    model = MlpModel(w1.copy(), b1.copy(), w2.copy(), b2.copy(), list(labels), norm)
    report = TrainReport(epochs, trace[-1], trace, stop_reason)
    return model, report


def predict(model: MlpModel, features, raw: bool = False) -> tuple[str, np.ndarray]:
    """Classify one feature vector; returns (label, all output scores).

    Pass raw=True for un-normalized features: the model's min-max stats
    are applied first.  Ties in the score vector go to the smallest index.
    """
    v = np.asarray(features, dtype=np.float64)
    if raw:
        v = apply_minmax(v, model.norm)
    scores = forward(model, v)
    return model.labels[int(np.argmax(scores))], scores


MODEL_VERSION = 1


def _fmt_floats(a: np.ndarray) -> str:
    return "[" + ", ".join(format(float(v), ".17g") for v in np.ravel(a)) + "]"


def save_model(model: MlpModel) -> bytes:
    """Serialize as a versioned JSON document (UTF-8 bytes).

    Weight arrays are written flat and row-major with 17 significant
    digits, which round-trips IEEE doubles exactly: load(save(m)) gives
    bitwise-identical predictions.
    """
    for a in (model.w1, model.b1, model.w2, model.b2, model.norm.mins, model.norm.maxs):
        if not np.isfinite(a).all():
            raise ModelFormatError("refusing to save non-finite model parameters")
    n_in, n_hidden, n_out = model.sizes
    doc = (
        "{"
        + f'"version": {MODEL_VERSION}, '
        + f'"sizes": [{n_in}, {n_hidden}, {n_out}], '
        + f'"labels": {json.dumps(list(model.labels))}, '
        + '"norm": {"mins": '
        + _fmt_floats(model.norm.mins)
        + ', "maxs": '
        + _fmt_floats(model.norm.maxs)
        + "}, "
        + '"w1": ' + _fmt_floats(model.w1) + ", "
        + '"b1": ' + _fmt_floats(model.b1) + ", "
        + '"w2": ' + _fmt_floats(model.w2) + ", "
        + '"b2": ' + _fmt_floats(model.b2)
        + "}"
    )
    return doc.encode("utf-8")


def load_model(data: bytes) -> MlpModel:
    """Parse and validate a model document; inverse of save_model."""
    try:
        doc = json.loads(bytes(data).decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ModelFormatError(f"could not parse model document: {exc}") from exc
    if not isinstance(doc, dict):
        raise ModelFormatError("model document must be a JSON object")
    version = doc.get("version")
    if version != MODEL_VERSION:
        raise ModelFormatError(f"unsupported model version {version!r} (expected {MODEL_VERSION})")
    try:
        n_in, n_hidden, n_out = (int(s) for s in doc["sizes"])
        labels = [str(s) for s in doc["labels"]]
        mins = np.asarray(doc["norm"]["mins"], dtype=np.float64)
        maxs = np.asarray(doc["norm"]["maxs"], dtype=np.float64)
        w1 = np.asarray(doc["w1"], dtype=np.float64)
        b1 = np.asarray(doc["b1"], dtype=np.float64)
        w2 = np.asarray(doc["w2"], dtype=np.float64)
        b2 = np.asarray(doc["b2"], dtype=np.float64)
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFormatError(f"malformed model document: {exc}") from exc
    if w1.size != n_hidden * n_in or b1.size != n_hidden:
        raise ModelFormatError("size inconsistency in first-layer arrays")
    if w2.size != n_out * n_hidden or b2.size != n_out:
        raise ModelFormatError("size inconsistency in second-layer arrays")
    if mins.size != n_in or maxs.size != n_in:
        raise ModelFormatError("size inconsistency in norm stats")
    for a in (w1, b1, w2, b2, mins, maxs):
        if not np.isfinite(a).all():
            raise ModelFormatError("model document contains non-finite values")
    try:
        return MlpModel(
            w1.reshape(n_hidden, n_in),
            b1,
            w2.reshape(n_out, n_hidden),
            b2,
            labels,
            NormStats(mins, maxs),
        )
    except ValueError as exc:
        raise ModelFormatError(str(exc)) from exc


class ScgMlpClassifier(BaseEstimator, ClassifierMixin):
    """sklearn-style wrapper around the SCG-trained network.

    Expects an already-scaled feature matrix; class labels are whatever
    `y` contains.  An optional validation set drives early stopping.
    """

    def __init__(self, hidden=70, max_epochs=2000, sse_target=0.001, seed=0, init_scale=0.5):
        self.hidden = hidden
        self.max_epochs = max_epochs
        self.sse_target = sse_target
        self.seed = seed
        self.init_scale = init_scale

    def fit(self, X, y, validation=None):
        X = check_array(X, dtype=np.float64)
        y = np.asarray(y)
        self.classes_ = np.unique(y)
        if len(self.classes_) < 2:
            raise ValueError("need at least two classes to fit a classifier")
        T = (y[:, None] == self.classes_[None, :]).astype(np.float64)
        cfg = MlpConfig(
            n_in=X.shape[1],
            n_hidden=self.hidden,
            n_out=len(self.classes_),
            max_epochs=self.max_epochs,
            sse_target=self.sse_target,
            seed=self.seed,
            init_scale=self.init_scale,
        )
        valid = None
        if validation is not None:
            Xv = check_array(validation[0], dtype=np.float64)
            Tv = (np.asarray(validation[1])[:, None] == self.classes_[None, :]).astype(np.float64)
            valid = (Xv, Tv)
        self.model_, self.report_ = train_scg(
            cfg, X, T, valid=valid, labels=[str(c) for c in self.classes_]
        )
        self.n_features_in_ = X.shape[1]
        return self

    def _check_fitted(self):
        if not hasattr(self, "model_"):
            raise NotFittedError("ScgMlpClassifier must be fitted before use")

    def decision_function(self, X) -> np.ndarray:
        self._check_fitted()
        X = check_array(X, dtype=np.float64)
        return forward_batch(self.model_, X)

    def predict(self, X) -> np.ndarray:
        scores = self.decision_function(X)
        return self.classes_[np.argmax(scores, axis=1)]

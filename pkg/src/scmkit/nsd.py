"""Novel sense detection: usages too far from every provided gloss.

A logistic-regression outlier model over 13 features: five usage-to-gloss
distances per embedding space (space A = fine-tuned encoder, space B =
base encoder) plus the word's usage/sense counts.  Features are
standardized; training is full-batch gradient descent with backtracking
line search, deterministic from a zero start.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

import numpy as np

from .corpus import Dataset
from .disambiguation import assign_senses
from .geometry import EmbeddingTable, distance, normalize

DISTANCE_FEATURES = ("cos", "euclid", "manh", "manh_l1", "euclid_l2")

COUNT_FEATURES = ("n_old_usages", "n_old_senses", "n_new_usages")

FEATURE_NAMES: tuple[str, ...] = tuple(
    f"{space}_{name}" for space in ("space_a", "space_b") for name in DISTANCE_FEATURES
) + COUNT_FEATURES

N_FEATURES = len(FEATURE_NAMES)

DEFAULT_THRESHOLD = 0.65


class ModelFormatError(ValueError):
    """Raised for malformed model files."""


@dataclass(frozen=True)
class ScalerParams:
    mean: np.ndarray
    std: np.ndarray

    def __post_init__(self):
        if self.mean.shape != self.std.shape:
            raise ValueError("mean and std must have the same shape")
        if np.any(self.std <= 0.0):
            raise ValueError("scaler std components must be positive")

    def transform(self, rows: np.ndarray) -> np.ndarray:
        return (np.asarray(rows, dtype=np.float64) - self.mean) / self.std


@dataclass(frozen=True)
class NsdTrainConfig:
    c: float = 1.0  # inverse L2 regularization strength
    tol: float = 1e-8
    max_iters: int = 10000

    def __post_init__(self):
        if self.c <= 0.0:
            raise ValueError("c must be positive")
        if self.tol <= 0.0:
            raise ValueError("tol must be positive")


@dataclass(frozen=True)
class NsdModel:
    scaler: ScalerParams
    weights: np.ndarray
    bias: float
    threshold: float = DEFAULT_THRESHOLD
    feature_names: tuple[str, ...] = FEATURE_NAMES

    def __post_init__(self):
        if self.weights.shape != (len(self.feature_names),):
            raise ValueError(
                f"expected {len(self.feature_names)} weights, got {self.weights.shape}"
            )
        if not 0.0 <= self.threshold <= 1.0:
            raise ValueError(f"threshold must be in [0, 1], got {self.threshold}")

    def with_threshold(self, threshold: float) -> "NsdModel":
        return replace(self, threshold=threshold)


# --- features -------------------------------------------------------------


def space_distances(usage_vec: np.ndarray, gloss_vec: np.ndarray) -> list[float]:
    """The five usage-to-gloss distances for one embedding space."""
    return [
        distance(usage_vec, gloss_vec, "cosine"),
        distance(usage_vec, gloss_vec, "euclidean"),
        distance(usage_vec, gloss_vec, "manhattan"),
        distance(normalize(usage_vec, "l1"), normalize(gloss_vec, "l1"), "manhattan"),
        distance(normalize(usage_vec, "l2"), normalize(gloss_vec, "l2"), "euclidean"),
    ]


def extract_features(
    usage_id: str,
    chosen_sense_id: str,
    tables: tuple[EmbeddingTable, EmbeddingTable],
    counts: tuple[int, int, int],
) -> np.ndarray:
    """Build the 13-feature row for one usage and its chosen gloss."""
    table_a, table_b = tables
    values: list[float] = []
    for table in (table_a, table_b):
        values.extend(space_distances(table.usage(usage_id), table.gloss(chosen_sense_id)))
    values.extend(float(c) for c in counts)
    return np.array(values, dtype=np.float64)


def fit_scaler(rows: np.ndarray) -> ScalerParams:
    """Column means and population standard deviations; zero std becomes 1."""
    x = np.asarray(rows, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 2:
        raise ValueError("need at least 2 feature rows to fit the scaler")
    mean = x.mean(axis=0)
    std = x.std(axis=0)  # population (ddof=0)
    std = np.where(std == 0.0, 1.0, std)
    return ScalerParams(mean=mean, std=std)


# --- logistic regression --------------------------------------------------


def sigmoid(z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def logreg_objective(
    weights: np.ndarray,
    bias: float,
    x: np.ndarray,
    labels: np.ndarray,
    c: float,
) -> tuple[float, np.ndarray, float]:
    """Loss and analytic gradient of L2-regularized logistic regression.

    Loss = sum_i log(1 + exp(-y_i z_i)) + ||w||^2 / (2 c) with y in {-1,+1}
    and z = x w + b; the bias is not penalized.
    """
    y = 2.0 * np.asarray(labels, dtype=np.float64) - 1.0
    z = x @ weights + bias
    loss = float(np.logaddexp(0.0, -y * z).sum()) + float(weights @ weights) / (2.0 * c)
    residual = sigmoid(z) - np.asarray(labels, dtype=np.float64)
    grad_w = x.T @ residual + weights / c
    grad_b = float(residual.sum())
    return loss, grad_w, grad_b


def train_logreg(
    rows: np.ndarray,
    labels,
    cfg: NsdTrainConfig = NsdTrainConfig(),
    trace: Optional[list] = None,
) -> tuple[np.ndarray, float]:
    """Fit weights and bias on standardized rows by deterministic descent.

    Zero initialization; Armijo backtracking line search; stops when the
    gradient infinity-norm drops below cfg.tol or after cfg.max_iters.
    When given, `trace` collects the objective value at every iterate.
    """
    x = np.asarray(rows, dtype=np.float64)
    y01 = np.asarray(labels, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] != y01.shape[0]:
        raise ValueError("rows and labels disagree in length")
    if not (np.any(y01 == 0.0) and np.any(y01 == 1.0)):
        raise ValueError("training data must contain both classes")

    w = np.zeros(x.shape[1], dtype=np.float64)
    b = 0.0
    loss, grad_w, grad_b = logreg_objective(w, b, x, y01, cfg.c)
    if trace is not None:
        trace.append(loss)
    step = 1.0
    for _ in range(cfg.max_iters):
        gnorm = max(float(np.abs(grad_w).max(initial=0.0)), abs(grad_b))
        if gnorm < cfg.tol:
            break
        gsq = float(grad_w @ grad_w) + grad_b * grad_b
        while True:
            w_new = w - step * grad_w
            b_new = b - step * grad_b
            new_loss, new_gw, new_gb = logreg_objective(w_new, b_new, x, y01, cfg.c)
            if new_loss <= loss - 1e-4 * step * gsq or step < 1e-20:
                break
            step /= 2.0
        w, b, loss, grad_w, grad_b = w_new, b_new, new_loss, new_gw, new_gb
        if trace is not None:
            trace.append(loss)
        step = min(step * 2.0, 1e8)
    return w, b


def predict_outlier(model: NsdModel, features: np.ndarray) -> tuple[float, bool]:
    """Outlier probability and the thresholded decision (strictly above)."""
    scaled = model.scaler.transform(np.asarray(features, dtype=np.float64))
    p = float(sigmoid(np.atleast_1d(scaled @ model.weights + model.bias))[0])
    return p, p > model.threshold


# --- training data and the end-to-end fit ---------------------------------


@dataclass(frozen=True)
class TrainingData:
    rows: np.ndarray  # raw (unscaled) feature rows
    labels: np.ndarray  # 1 = usage of a sense absent from the old inventory
    usage_ids: list[str] = field(default_factory=list)


def build_training_data(
    dataset: Dataset,
    table_a: EmbeddingTable,
    table_b: EmbeddingTable,
) -> TrainingData:
    """Feature rows and outlier labels for every gold-labelled new usage.

    A usage is a positive example iff its gold sense is not among the
    word's old senses.  Words without old senses are skipped (there is no
    gloss to measure against); a new usage without a gold label is an
    error.
    """
    rows, labels, ids = [], [], []
    for rec in dataset.records.values():
        if not rec.old_senses:
            continue
        old_ids = set(rec.old_sense_ids())
        assignments = {a.usage_id: a for a in assign_senses(rec, table_a)}
        for usage in rec.new_usages:
            if usage.gold_sense is None:
                raise ValueError(f"new usage {usage.usage_id!r} has no gold label")
            chosen = assignments[usage.usage_id].chosen_sense_id
            rows.append(extract_features(usage.usage_id, chosen, (table_a, table_b), rec.counts))
            labels.append(0 if usage.gold_sense in old_ids else 1)
            ids.append(usage.usage_id)
    if not rows:
        raise ValueError("no training rows (no words with old senses and new usages)")
    return TrainingData(np.vstack(rows), np.array(labels, dtype=np.intp), ids)


def train_nsd_model(
    dataset: Dataset,
    table_a: EmbeddingTable,
    table_b: EmbeddingTable,
    cfg: NsdTrainConfig = NsdTrainConfig(),
    threshold: float = DEFAULT_THRESHOLD,
) -> NsdModel:
    data = build_training_data(dataset, table_a, table_b)
    scaler = fit_scaler(data.rows)
    weights, bias = train_logreg(scaler.transform(data.rows), data.labels, cfg)
    return NsdModel(scaler=scaler, weights=weights, bias=bias, threshold=threshold)


# --- persistence ----------------------------------------------------------


def serialize_model(model: NsdModel) -> str:
    lines = []
    for name, mean, std, weight in zip(
        model.feature_names, model.scaler.mean, model.scaler.std, model.weights
    ):
        lines.append(
            f"feature {name} mean {float(mean)!r} std {float(std)!r} "
            f"weight {float(weight)!r}"
        )
    lines.append(f"bias {float(model.bias)!r}")
    lines.append(f"threshold {float(model.threshold)!r}")
    return "\n".join(lines) + "\n"


def save_model(model: NsdModel, path) -> None:
    Path(path).write_text(serialize_model(model), encoding="utf-8")


def load_model(path) -> NsdModel:
    """Load a model file, checking feature names, order and completeness."""
    names, means, stds, weights = [], [], [], []
    bias: Optional[float] = None
    threshold: Optional[float] = None
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        parts = line.split()
        try:
            if parts[0] == "feature" and len(parts) == 8 and parts[2] == "mean" \
                    and parts[4] == "std" and parts[6] == "weight":
                names.append(parts[1])
                means.append(float(parts[3]))
                stds.append(float(parts[5]))
                weights.append(float(parts[7]))
            elif parts[0] == "bias" and len(parts) == 2:
                bias = float(parts[1])
            elif parts[0] == "threshold" and len(parts) == 2:
                threshold = float(parts[1])
            else:
                raise ModelFormatError(f"line {lineno}: unrecognized line {line!r}")
        except ModelFormatError:
            raise
        except ValueError as exc:
            raise ModelFormatError(f"line {lineno}: {exc}") from None
    if tuple(names) != FEATURE_NAMES:
        raise ModelFormatError(
            f"feature names mismatch: expected {list(FEATURE_NAMES)}, got {names}"
        )
    if bias is None or threshold is None:
        raise ModelFormatError("model file is missing the bias or threshold line")
    try:
        return NsdModel(
            scaler=ScalerParams(np.array(means), np.array(stds)),
            weights=np.array(weights),
            bias=bias,
            threshold=threshold,
        )
    except ValueError as exc:
        raise ModelFormatError(str(exc)) from None

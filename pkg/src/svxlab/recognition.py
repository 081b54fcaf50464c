"""Machine recognition harness: actor (binary) and action (one-vs-all)
classification of per-video descriptors with leave-one-out evaluation,
plus bag-of-words support for externally supplied local features.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

ACTORS = ("human", "animal")
ACTIONS = ("climbing", "crawling", "eating", "flying", "jumping", "running",
           "spinning", "walking")
BACKGROUNDS = ("static", "moving")
LEVEL_NAMES = ("fine", "medium", "coarse", "n/a")


class RecognitionError(Exception):
    pass


@dataclass(frozen=True, eq=False)
class LabeledDescriptor:
    video_id: str
    actor: str
    action: str
    background: str
    level: str
    vector: np.ndarray

    def __post_init__(self):
        if self.action not in ACTIONS:
            raise RecognitionError(f"unknown action {self.action!r}, expected one of {ACTIONS}")
        if self.actor not in ACTORS:
            raise RecognitionError(f"unknown actor {self.actor!r}, expected one of {ACTORS}")


@dataclass(frozen=True, eq=False)
class Codebook:
    k: int
    centroids: np.ndarray  # (k, d)

    def __post_init__(self):
        if self.k < 1 or self.centroids.shape[0] != self.k:
            raise RecognitionError("centroid count must equal k >= 1")


@dataclass
class ConfusionMatrix:
    """Rows are ground-truth classes; columns may include 'unknown'."""

    row_classes: list[str]
    col_classes: list[str]
    counts: np.ndarray  # (rows, cols) int

    def rates(self) -> np.ndarray:
        """Row-normalized rates at full precision; all-zero rows stay zero."""
        totals = self.counts.sum(axis=1, keepdims=True).astype(np.float64)
        with np.errstate(invalid="ignore", divide="ignore"):
            r = np.where(totals > 0, self.counts / totals, 0.0)
        return r

    def rounded_rates(self, decimals: int = 2) -> np.ndarray:
        return np.round(self.rates(), decimals)

    def accuracy(self) -> float:
        """Trace over total, matching row classes to same-named columns."""
        total = self.counts.sum()
        if total == 0:
            return 0.0
        correct = sum(
            self.counts[i, self.col_classes.index(cls)]
            for i, cls in enumerate(self.row_classes) if cls in self.col_classes
        )
        return float(correct) / float(total)

    def to_dict(self) -> dict:
        return {
            "rows": self.row_classes,
            "cols": self.col_classes,
            "counts": self.counts.tolist(),
            "rates": self.rounded_rates().tolist(),
        }


def kmeans_codebook(samples: np.ndarray, k: int, seed: int = 0) -> Codebook:
    """Lloyd's iterations from seeded k-means++ starts; converged when the
    assignment stops changing or after 100 iterations. Deterministic for a
    fixed seed."""
    samples = np.asarray(samples, dtype=np.float64)
    if samples.ndim != 2:
        raise RecognitionError("samples must be a (n, d) matrix")
    n = len(samples)
    if n < k:
        raise RecognitionError(f"need at least k={k} samples, got {n}")

    rng = np.random.default_rng(seed)
    centroids = np.empty((k, samples.shape[1]))
    centroids[0] = samples[rng.integers(n)]
    dist2 = ((samples - centroids[0]) ** 2).sum(axis=1)
    for j in range(1, k):
        total = dist2.sum()
        if total == 0:
            centroids[j] = samples[rng.integers(n)]
        else:
            centroids[j] = samples[rng.choice(n, p=dist2 / total)]
        dist2 = np.minimum(dist2, ((samples - centroids[j]) ** 2).sum(axis=1))

    assignment = np.full(n, -1)
    for _ in range(100):
        d2 = ((samples[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
        new_assignment = d2.argmin(axis=1)
        if np.array_equal(new_assignment, assignment):
            break
        assignment = new_assignment
        for j in range(k):
            members = samples[assignment == j]
            if len(members):
                centroids[j] = members.mean(axis=0)
    return Codebook(k=k, centroids=centroids)


def bow_encode(local_features: np.ndarray, cb: Codebook) -> np.ndarray:
    """Nearest-centroid count histogram, L1-normalized. Distance ties break
    to the lowest centroid index. An empty feature set yields a zero vector
    and a warning."""
    feats = np.asarray(local_features, dtype=np.float64).reshape(-1, cb.centroids.shape[1]) \
        if np.size(local_features) else np.empty((0, cb.centroids.shape[1]))
    hist = np.zeros(cb.k, dtype=np.float64)
    if len(feats) == 0:
        warnings.warn("bow_encode: empty feature set, returning zero vector", stacklevel=2)
        return hist
    d2 = ((feats[:, None, :] - cb.centroids[None, :, :]) ** 2).sum(axis=2)
    np.add.at(hist, d2.argmin(axis=1), 1.0)
    return hist / hist.sum()


def euclidean(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.sqrt(((a[:, None, :] - b[None, :, :]) ** 2).sum(axis=2))


def chi2(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    num = (a[:, None, :] - b[None, :, :]) ** 2
    den = a[:, None, :] + b[None, :, :]
    with np.errstate(invalid="ignore", divide="ignore"):
        terms = np.where(den > 0, num / den, 0.0)
    return 0.5 * terms.sum(axis=2)


_DISTANCES = {"euclidean": euclidean, "chi2": chi2}


@dataclass
class LooResult:
    task: str
    classifier: str
    distance: str
    accuracy: float
    confusion: ConfusionMatrix
    predictions: dict[str, str]
    one_vs_all: dict[str, float] = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = {
            "task": self.task,
            "classifier": self.classifier,
            "distance": self.distance,
            "accuracy": self.accuracy,
            "confusion": self.confusion.to_dict(),
            "predictions": self.predictions,
        }
        if self.one_vs_all:
            out["one_vs_all"] = self.one_vs_all
        return out


def _predict_nearest_centroid(train_x, train_y, test_x, classes, distance):
    centroids = np.stack([train_x[train_y == c].mean(axis=0) for c in classes])
    d = _DISTANCES[distance](test_x, centroids)
    return [classes[i] for i in d.argmin(axis=1)]


def _predict_knn(train_x, train_y, test_x, classes, distance, k=1):
    d = _DISTANCES[distance](test_x, train_x)
    order = np.argsort(d, axis=1, kind="stable")[:, :k]
    preds = []
    for row in order:
        votes = {}
        for idx in row:
            votes[train_y[idx]] = votes.get(train_y[idx], 0) + 1
        best = max(votes.items(), key=lambda kv: (kv[1], -classes.index(kv[0])))
        preds.append(best[0])
    return preds


def loo_evaluate(data: list[LabeledDescriptor], task: str,
                 classifier: str = "nearest-centroid",
                 distance: str = "euclidean", knn_k: int = 1) -> LooResult:
    """Leave-one-out evaluation: train on all videos but one, predict the
    held-out one, repeat over all videos.

    ``task`` is "actor" (binary) or "action" (8 classes; per-class
    one-vs-all accuracies are reported alongside the multiclass confusion
    from the nearest-class decision).
    """
    if task not in ("actor", "action"):
        raise RecognitionError(f"task must be 'actor' or 'action', got {task!r}")
    if classifier not in ("nearest-centroid", "knn"):
        raise RecognitionError(f"classifier must be 'nearest-centroid' or 'knn', got {classifier!r}")
    if distance not in _DISTANCES:
        raise RecognitionError(f"distance must be one of {sorted(_DISTANCES)}")
    if not data:
        raise RecognitionError("no descriptors")

    labels = [d.actor if task == "actor" else d.action for d in data]
    classes = sorted(set(labels))
    for cls in classes:
        if labels.count(cls) < 2:
            raise RecognitionError(f"class {cls!r} has fewer than 2 videos")

    x = np.stack([d.vector for d in data]).astype(np.float64)
    y = np.array(labels)
    n = len(data)
    predictions: dict[str, str] = {}
    preds = []
    for i in range(n):
        keep = np.arange(n) != i
        train_x, train_y = x[keep], y[keep]
        fold_classes = sorted(set(train_y))
        if classifier == "nearest-centroid":
            pred = _predict_nearest_centroid(train_x, train_y, x[i: i + 1], fold_classes, distance)[0]
        else:
            pred = _predict_knn(train_x, train_y, x[i: i + 1], fold_classes, distance, knn_k)[0]
        preds.append(pred)
        predictions[data[i].video_id] = pred

    counts = np.zeros((len(classes), len(classes)), dtype=np.int64)
    for truth, pred in zip(labels, preds):
        counts[classes.index(truth), classes.index(pred)] += 1
    confusion = ConfusionMatrix(row_classes=classes, col_classes=list(classes), counts=counts)
    accuracy = float(np.mean([t == p for t, p in zip(labels, preds)]))

    one_vs_all = {}
    if task == "action":
        for cls in classes:
            agree = [(t == cls) == (p == cls) for t, p in zip(labels, preds)]
            one_vs_all[cls] = float(np.mean(agree))

    name = classifier if classifier != "knn" else f"knn(k={knn_k})"
    return LooResult(task=task, classifier=name, distance=distance,
                     accuracy=accuracy, confusion=confusion,
                     predictions=predictions, one_vs_all=one_vs_all)


def load_descriptor_file(path: str | Path) -> list[LabeledDescriptor]:
    """Parse the plain-text exchange format: one video per line,
    ``<video_id> <actor> <action> <background> <level> v1 ... vd``."""
    out = []
    dim = None
    with open(path) as f:
        for lineno, line in enumerate(f, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) < 6:
                raise RecognitionError(f"{path}:{lineno}: expected at least 6 fields")
            vec = np.array([float(x) for x in parts[5:]])
            if dim is None:
                dim = len(vec)
            elif len(vec) != dim:
                raise RecognitionError(
                    f"{path}:{lineno}: vector dimension {len(vec)} != {dim}")
            out.append(LabeledDescriptor(
                video_id=parts[0], actor=parts[1], action=parts[2],
                background=parts[3], level=parts[4], vector=vec))
    return out

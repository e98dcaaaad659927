"""Binary classifiers realizing f(x) in {-1, +1}: Bernoulli naive Bayes and
AdaBoost over decision stumps.

Label convention: -1 legitimate, +1 malicious.  A score of exactly zero
classifies as +1 in both families; triage prefers a false alarm to a miss.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .errors import CorruptModelFile, SingleClass, SpecMismatch
from .features import FeatureSpec, FeatureVector

FORMAT_VERSION = 1
ALPHA_CAP = 0.5 * math.log(1e6)
TIE_TOLERANCE = 1e-12


@dataclass
class Dataset:
    vectors: list[FeatureVector]
    labels: list[int]
    feature_spec: FeatureSpec | None = None

    def __post_init__(self) -> None:
        if len(self.vectors) != len(self.labels):
            raise ValueError(f"{len(self.vectors)} vectors but {len(self.labels)} labels")
        bad = {y for y in self.labels if y not in (-1, 1)}
        if bad:
            raise ValueError(f"labels must be -1 or +1, got {sorted(bad)}")
        ids = {v.spec_id for v in self.vectors}
        if len(ids) > 1:
            raise SpecMismatch(f"dataset mixes feature specs {sorted(ids)}")
        if self.feature_spec is not None and ids and ids != {self.feature_spec.spec_id}:
            raise SpecMismatch("vectors do not match the declared feature spec")

    def __len__(self) -> int:
        return len(self.vectors)

    @property
    def spec_id(self) -> str | None:
        if self.vectors:
            return self.vectors[0].spec_id
        return self.feature_spec.spec_id if self.feature_spec else None

    def matrix(self) -> np.ndarray:
        return np.array([v.values for v in self.vectors], dtype=np.float64).reshape(
            len(self.vectors), -1)

    def targets(self) -> np.ndarray:
        return np.array(self.labels, dtype=np.int64)


def _require_both_classes(data: Dataset) -> None:
    if len(data) == 0 or len(set(data.labels)) < 2:
        raise SingleClass("training needs at least one example of each class")


def _canonical_order(X: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # sorting rows makes training independent of the input row order
    keys = [y] + [X[:, j] for j in range(X.shape[1] - 1, -1, -1)]
    order = np.lexsort(keys)
    return X[order], y[order]


class Model:
    family = ""

    def __init__(self, spec_id: str, feature_spec: FeatureSpec | None = None,
                 training_meta: dict | None = None):
        self.spec_id = spec_id
        self.feature_spec = feature_spec
        self.training_meta = training_meta or {}

    def scores(self, X: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _check(self, x: FeatureVector) -> None:
        if x.spec_id != self.spec_id:
            raise SpecMismatch(f"vector spec {x.spec_id} != model spec {self.spec_id}")

    def score(self, x: FeatureVector) -> float:
        self._check(x)
        return float(self.scores(np.array([x.values], dtype=np.float64))[0])

    def predict(self, x: FeatureVector) -> int:
        return 1 if self.score(x) >= 0 else -1

    def predict_many(self, X: np.ndarray) -> np.ndarray:
        return np.where(self.scores(X) >= 0, 1, -1)

    def params(self) -> dict[str, Any]:
        raise NotImplementedError


class NaiveBayesModel(Model):
    """Bernoulli naive Bayes over present/absent features (x > 0)."""

    family = "naive_bayes"

    def __init__(self, rate_pos: Sequence[float], rate_neg: Sequence[float],
                 prior_pos: float, prior_neg: float, smoothing: float, spec_id: str,
                 feature_spec: FeatureSpec | None = None, training_meta: dict | None = None):
        super().__init__(spec_id, feature_spec, training_meta)
        self.rate_pos = np.asarray(rate_pos, dtype=np.float64)
        self.rate_neg = np.asarray(rate_neg, dtype=np.float64)
        self.prior_pos = float(prior_pos)
        self.prior_neg = float(prior_neg)
        self.smoothing = float(smoothing)

    def scores(self, X: np.ndarray) -> np.ndarray:
        present = (np.asarray(X) > 0).astype(np.float64)
        on = np.log(self.rate_pos) - np.log(self.rate_neg)
        off = np.log1p(-self.rate_pos) - np.log1p(-self.rate_neg)
        prior = math.log(self.prior_pos) - math.log(self.prior_neg)
        return prior + present @ on + (1.0 - present) @ off

    def params(self) -> dict[str, Any]:
        return {
            "smoothing": self.smoothing,
            "prior_pos": self.prior_pos,
            "prior_neg": self.prior_neg,
            "rate_pos": self.rate_pos.tolist(),
            "rate_neg": self.rate_neg.tolist(),
        }


@dataclass(frozen=True)
class Stump:
    feature_index: int
    threshold: float
    polarity: int
    alpha: float

    def predict_values(self, X: np.ndarray) -> np.ndarray:
        return self.polarity * np.where(X[:, self.feature_index] - self.threshold >= 0, 1, -1)


class BoostedModel(Model):
    family = "adaboost"

    def __init__(self, stumps: Sequence[Stump], spec_id: str,
                 feature_spec: FeatureSpec | None = None, training_meta: dict | None = None):
        super().__init__(spec_id, feature_spec, training_meta)
        if not stumps:
            raise ValueError("a boosted model needs at least one stump")
        self.stumps = list(stumps)

    def staged_scores(self, X: np.ndarray) -> list[np.ndarray]:
        """Ensemble score after each round (index t holds the first t+1 stumps)."""
        X = np.asarray(X, dtype=np.float64)
        total = np.zeros(X.shape[0])
        stages = []
        for stump in self.stumps:
            total = total + stump.alpha * stump.predict_values(X)
            stages.append(total.copy())
        return stages

    def scores(self, X: np.ndarray) -> np.ndarray:
        return self.staged_scores(X)[-1]

    def params(self) -> dict[str, Any]:
        return {"stumps": [
            {"feature_index": s.feature_index, "threshold": s.threshold,
             "polarity": s.polarity, "alpha": s.alpha} for s in self.stumps]}


def train_naive_bayes(data: Dataset, smoothing: float = 1.0) -> NaiveBayesModel:
    if smoothing <= 0:
        raise ValueError("smoothing must be positive")
    _require_both_classes(data)
    X = data.matrix() > 0
    y = data.targets()
    pos, neg = X[y == 1], X[y == -1]
    rate_pos = (pos.sum(axis=0) + smoothing) / (len(pos) + 2 * smoothing)
    rate_neg = (neg.sum(axis=0) + smoothing) / (len(neg) + 2 * smoothing)
    meta = {"smoothing": smoothing, "n": len(data),
            "timestamp": datetime.now(timezone.utc).isoformat()}
    return NaiveBayesModel(rate_pos, rate_neg, len(pos) / len(y), len(neg) / len(y),
                           smoothing, data.spec_id, data.feature_spec, meta)


def _stump_candidates(x: np.ndarray, y: np.ndarray, w: np.ndarray,
                      total_pos: float, total_neg: float):
    """Thresholds and polarity-(+1) errors for one feature column.

    Candidates are one below-minimum threshold plus every midpoint between
    consecutive distinct values, in ascending order.
    """
    order = np.argsort(x, kind="stable")
    xs = x[order]
    wpos = np.where(y[order] == 1, w[order], 0.0)
    wneg = np.where(y[order] == -1, w[order], 0.0)
    cum_pos = np.concatenate(([0.0], np.cumsum(wpos)))
    cum_neg = np.concatenate(([0.0], np.cumsum(wneg)))
    cuts = np.nonzero(xs[1:] > xs[:-1])[0] + 1
    positions = np.concatenate(([0], cuts))
    thresholds = np.concatenate(([xs[0] - 1.0], (xs[cuts - 1] + xs[cuts]) / 2.0))
    err_plus = cum_pos[positions] + (total_neg - cum_neg[positions])
    return thresholds, err_plus


def _best_stump(X: np.ndarray, y: np.ndarray, w: np.ndarray) -> tuple[int, float, int, float]:
    total = float(w.sum())
    total_pos = float(w[y == 1].sum())
    total_neg = total - total_pos
    per_feature = []
    best_err = math.inf
    for j in range(X.shape[1]):
        thresholds, err_plus = _stump_candidates(X[:, j], y, w, total_pos, total_neg)
        err_minus = total - err_plus
        per_feature.append((thresholds, err_plus, err_minus))
        best_err = min(best_err, float(err_plus.min()), float(err_minus.min()))
    limit = best_err + TIE_TOLERANCE
    # lowest feature index, then lowest threshold, then polarity +1
    for j, (thresholds, err_plus, err_minus) in enumerate(per_feature):
        ok = np.nonzero((err_plus <= limit) | (err_minus <= limit))[0]
        if len(ok):
            k = ok[0]
            polarity = 1 if err_plus[k] <= limit else -1
            return j, float(thresholds[k]), polarity, best_err / total
    raise AssertionError("no stump candidate")  # pragma: no cover


def train_adaboost(data: Dataset, rounds: int = 50, seed: int = 0) -> BoostedModel:
    """Discrete AdaBoost with exhaustive stump search.

    The procedure is deterministic; ``seed`` is recorded for provenance only.
    """
    if rounds < 1:
        raise ValueError("rounds must be >= 1")
    _require_both_classes(data)
    X, y = _canonical_order(data.matrix(), data.targets())
    n = len(y)
    w = np.full(n, 1.0 / n)
    stumps: list[Stump] = []
    errors: list[float] = []
    diagnostics: list[str] = []
    for t in range(rounds):
        j, threshold, polarity, _ = _best_stump(X, y, w)
        candidate = Stump(j, threshold, polarity, 0.0)
        h = candidate.predict_values(X)
        err = float(w[h != y].sum() / w.sum())
        if err >= 0.5:
            if t == 0:
                majority = 1 if (y == 1).sum() >= (y == -1).sum() else -1
                stumps.append(Stump(0, float(X[:, 0].min()) - 1.0, majority, 1.0))
                diagnostics.append("no-progress: first stump has weighted error >= 0.5; "
                                   "fell back to a majority-class constant")
            break
        alpha = ALPHA_CAP if err == 0 else min(0.5 * math.log((1 - err) / err), ALPHA_CAP)
        stumps.append(Stump(j, threshold, polarity, alpha))
        errors.append(err)
        if err == 0:
            break
        w = w * np.exp(-alpha * y * h)
        w = w / w.sum()
    meta = {
        "seed": seed,
        "rounds": rounds,
        "rounds_used": len(errors),
        "weighted_errors": errors,
        "diagnostics": diagnostics,
        "timestamp": datetime.now(timezone.utc).isoformat(),
    }
    return BoostedModel(stumps, data.spec_id, data.feature_spec, meta)


def exponential_loss_curve(model: BoostedModel, data: Dataset) -> list[float]:
    """(1/n) sum exp(-y F_t(x)) for t = 0 (empty ensemble) .. T."""
    X, y = data.matrix(), data.targets()
    return [1.0] + [float(np.mean(np.exp(-y * F))) for F in model.staged_scores(X)]


def predict(model: Model, x: FeatureVector) -> int:
    return model.predict(x)


@dataclass
class Metrics:
    tp: int
    fp: int
    tn: int
    fn: int
    extra: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    @property
    def detection_rate(self) -> float | None:
        positives = self.tp + self.fn
        return self.tp / positives if positives else None

    @property
    def false_positive_rate(self) -> float | None:
        negatives = self.fp + self.tn
        return self.fp / negatives if negatives else None

    @property
    def accuracy(self) -> float | None:
        return (self.tp + self.tn) / self.n if self.n else None

    def to_dict(self) -> dict[str, Any]:
        return {"tp": self.tp, "fp": self.fp, "tn": self.tn, "fn": self.fn,
                "detection_rate": self.detection_rate,
                "false_positive_rate": self.false_positive_rate,
                "accuracy": self.accuracy}


def confusion(predicted: Sequence[int], labels: Sequence[int]) -> Metrics:
    p = np.asarray(predicted)
    t = np.asarray(labels)
    return Metrics(tp=int(((p == 1) & (t == 1)).sum()), fp=int(((p == 1) & (t == -1)).sum()),
                   tn=int(((p == -1) & (t == -1)).sum()), fn=int(((p == -1) & (t == 1)).sum()))


def evaluate(model: Model, data: Dataset) -> Metrics:
    if len(data) and data.spec_id != model.spec_id:
        raise SpecMismatch(f"dataset spec {data.spec_id} != model spec {model.spec_id}")
    if not len(data):
        return Metrics(0, 0, 0, 0)
    return confusion(model.predict_many(data.matrix()), data.labels)


# -- persistence --------------------------------------------------------------


def model_to_dict(model: Model) -> dict[str, Any]:
    return {
        "format_version": FORMAT_VERSION,
        "family": model.family,
        "spec_id": model.spec_id,
        "feature_spec": model.feature_spec.to_dict() if model.feature_spec else None,
        "params": model.params(),
        "training_meta": model.training_meta,
    }


def model_from_dict(data: dict[str, Any]) -> Model:
    if not isinstance(data, dict) or "format_version" not in data:
        raise CorruptModelFile("not a model document")
    if data["format_version"] != FORMAT_VERSION:
        raise SpecMismatch(f"model format {data['format_version']!r} is not {FORMAT_VERSION}")
    try:
        spec = FeatureSpec.from_dict(data["feature_spec"]) if data.get("feature_spec") else None
        if spec is not None and spec.spec_id != data["spec_id"]:
            raise CorruptModelFile("embedded feature spec does not match spec_id")
        params, meta, spec_id = data["params"], data.get("training_meta", {}), data["spec_id"]
        if data["family"] == NaiveBayesModel.family:
            return NaiveBayesModel(params["rate_pos"], params["rate_neg"], params["prior_pos"],
                                   params["prior_neg"], params["smoothing"], spec_id, spec, meta)
        if data["family"] == BoostedModel.family:
            stumps = [Stump(int(s["feature_index"]), float(s["threshold"]),
                            int(s["polarity"]), float(s["alpha"])) for s in params["stumps"]]
            return BoostedModel(stumps, spec_id, spec, meta)
    except (KeyError, TypeError, ValueError) as exc:
        raise CorruptModelFile(f"malformed model: {exc}") from None
    raise CorruptModelFile(f"unknown model family {data['family']!r}")


def save_model(model: Model, path: str | Path) -> None:
    Path(path).write_text(json.dumps(model_to_dict(model), indent=1), encoding="utf-8")


def load_model(path: str | Path) -> Model:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CorruptModelFile(f"{path}: {exc}") from None
    return model_from_dict(data)

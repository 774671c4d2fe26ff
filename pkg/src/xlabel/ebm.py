"""Additive boosted classifier over binned features.

The model is an intercept plus one piecewise-constant shape function per
feature; the raw score of a record is the intercept plus the sum of its
per-feature shape values, the probability is the logistic of the raw score,
and the per-feature shape values double as the explanation (each one is that
feature's additive contribution to the score). Missing values route to a
dedicated bin per feature, so every record receives a finite score.

Training is cyclic gradient boosting on logistic loss: every round visits the
features in schema order and adds ``learning_rate * mean residual`` to each
occupied bin, residuals being recomputed after every feature update. With
``early_stop_patience > 0`` the best round count is chosen on a 15% stratified
holdout, then the model is refit on the full data for that many rounds.
After boosting each shape is mean-centered over the training distribution and
the removed means are folded into the intercept (a pure reparameterization:
raw scores are unchanged).
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from xlabel import kernels
from xlabel.errors import DegenerateLabels, DeserializeError, InvalidInput

MISSING = math.nan

_FORMAT_NAME = "xlabel.ebm"
_FORMAT_VERSION = 1

_HOLDOUT_FRACTION = 0.15


@dataclass(frozen=True)
class TrainConfig:
    """Training knobs. ``early_stop_patience=0`` disables the holdout phase."""

    max_bins: int = 3
    learning_rate: float = 0.05
    n_rounds: int = 500
    early_stop_patience: int = 50
    seed: int = 0

    def __post_init__(self):
        if self.max_bins < 2:
            raise InvalidInput(f"max_bins must be >= 2, got {self.max_bins}")
        if not self.learning_rate > 0:
            raise InvalidInput(f"learning_rate must be positive, got {self.learning_rate}")
        if self.n_rounds < 1:
            raise InvalidInput(f"n_rounds must be positive, got {self.n_rounds}")
        if self.early_stop_patience < 0:
            raise InvalidInput("early_stop_patience must be non-negative, "
                               f"got {self.early_stop_patience}")


class BinMap:
    """Per-feature cut points plus a dedicated missing bin.

    Values are binned right-closed: value x falls in the first bin whose cut
    is >= x, and above the last cut in the final value bin. NaN maps to the
    missing bin (index ``len(cuts) + 1``).
    """

    def __init__(self, cuts: list[np.ndarray]):
        for c in cuts:
            if len(c) > 1 and not np.all(np.diff(c) > 0):
                raise InvalidInput("cut points must be strictly increasing")
        self._cuts = [np.asarray(c, dtype=np.float64) for c in cuts]

    @property
    def n_features(self) -> int:
        return len(self._cuts)

    def cuts(self, feature: int) -> np.ndarray:
        return self._cuts[feature]

    def n_value_bins(self, feature: int) -> int:
        return len(self._cuts[feature]) + 1

    def missing_bin(self, feature: int) -> int:
        return len(self._cuts[feature]) + 1

    def total_bins(self, feature: int) -> int:
        return len(self._cuts[feature]) + 2

    def bin_counts(self) -> np.ndarray:
        return np.array([self.total_bins(j) for j in range(self.n_features)],
                        dtype=np.int32)

    def transform(self, X: np.ndarray) -> np.ndarray:
        """Map a (n, d) float matrix (NaN = missing) to int32 bin indices."""
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.n_features:
            raise InvalidInput(f"expected shape (n, {self.n_features}), got {X.shape}")
        out = np.empty(X.shape, dtype=np.int32)
        for j in range(self.n_features):
            col = X[:, j]
            idx = np.searchsorted(self._cuts[j], col, side="left")
            idx[np.isnan(col)] = self.missing_bin(j)
            out[:, j] = idx
        return out


def _as_matrix(data, n_features: int | None = None) -> np.ndarray:
    X = np.asarray(data, dtype=np.float64)
    if X.ndim == 1:
        X = X.reshape(1, -1)
    if X.ndim != 2:
        raise InvalidInput(f"expected records of equal arity, got ndim={X.ndim}")
    if n_features is not None and X.shape[1] != n_features:
        raise InvalidInput(f"expected {n_features} features per record, got {X.shape[1]}")
    return X


def build_bins(data, max_bins: int) -> BinMap:
    """Equal-frequency cut points per feature over non-missing values.

    Duplicate quantiles are collapsed and cuts at or above the feature
    maximum are dropped, so a constant feature keeps a single value bin.
    """
    if max_bins < 2:
        raise InvalidInput(f"max_bins must be >= 2, got {max_bins}")
    X = _as_matrix(data)
    if X.shape[0] == 0:
        raise InvalidInput("cannot build bins from an empty dataset")
    qs = np.arange(1, max_bins) / max_bins
    cuts = []
    for j in range(X.shape[1]):
        col = X[:, j]
        col = col[~np.isnan(col)]
        if col.size == 0:
            cuts.append(np.empty(0))
            continue
        cand = np.unique(np.quantile(col, qs))
        cand = cand[cand < col.max()]
        cuts.append(cand)
    return BinMap(cuts)


@dataclass(frozen=True)
class EbmModel:
    """Trained additive model: intercept + one shape function per feature."""

    intercept: float
    shapes: tuple[np.ndarray, ...]   # per feature, one score per bin
    bin_map: BinMap
    feature_names: tuple[str, ...]
    config: TrainConfig
    train_info: dict = field(default_factory=dict)

    @property
    def n_features(self) -> int:
        return len(self.shapes)

    def _bins_for(self, x) -> np.ndarray:
        X = _as_matrix(x, self.n_features)
        return self.bin_map.transform(X)

    def contributions_many(self, X) -> np.ndarray:
        B = self._bins_for(X)
        out = np.empty(B.shape, dtype=np.float64)
        for j in range(self.n_features):
            out[:, j] = self.shapes[j][B[:, j]]
        return out

    def raw_score_many(self, X) -> np.ndarray:
        return self.intercept + self.contributions_many(X).sum(axis=1)

    def predict_proba_many(self, X) -> np.ndarray:
        return 1.0 / (1.0 + np.exp(-self.raw_score_many(X)))

    def predict_label_many(self, X) -> np.ndarray:
        return (self.predict_proba_many(X) >= 0.5).astype(np.int8)

    def raw_score(self, x) -> float:
        """Intercept plus the shape value of each feature, summed in schema order."""
        total = self.intercept
        for _, value in self.contributions(x):
            total += value
        return total

    def predict_proba(self, x) -> float:
        return 1.0 / (1.0 + math.exp(-self.raw_score(x)))

    def predict_label(self, x) -> int:
        return 1 if self.predict_proba(x) >= 0.5 else 0

    def contributions(self, x) -> list[tuple[str, float]]:
        """Per-feature additive score contributions for one record."""
        bins = self._bins_for(x)[0]
        return [(name, float(self.shapes[j][bins[j]]))
                for j, name in enumerate(self.feature_names)]

    def heat(self, x) -> list[tuple[str, float]]:
        """Contributions squashed to (0, 1) by the logistic; 0.5 is neutral."""
        return [(name, 1.0 / (1.0 + math.exp(-value)))
                for name, value in self.contributions(x)]

    def heat_many(self, X) -> np.ndarray:
        return 1.0 / (1.0 + np.exp(-self.contributions_many(X)))

    def to_bytes(self) -> bytes:
        doc = {
            "format": _FORMAT_NAME,
            "version": _FORMAT_VERSION,
            "intercept": self.intercept,
            "features": [
                {
                    "name": self.feature_names[j],
                    "cuts": self.bin_map.cuts(j).tolist(),
                    "scores": self.shapes[j].tolist(),
                }
                for j in range(self.n_features)
            ],
            "config": {
                "max_bins": self.config.max_bins,
                "learning_rate": self.config.learning_rate,
                "n_rounds": self.config.n_rounds,
                "early_stop_patience": self.config.early_stop_patience,
                "seed": self.config.seed,
            },
            "train_info": self.train_info,
        }
        return json.dumps(doc, allow_nan=False).encode("utf-8")

    @classmethod
    def from_bytes(cls, raw: bytes) -> "EbmModel":
        try:
            doc = json.loads(raw.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise DeserializeError(f"not a valid model document: {exc}") from exc
        if not isinstance(doc, dict) or doc.get("format") != _FORMAT_NAME:
            raise DeserializeError("unrecognized model format")
        if doc.get("version") != _FORMAT_VERSION:
            raise DeserializeError(f"unsupported model version {doc.get('version')!r}")
        try:
            features = doc["features"]
            names = tuple(f["name"] for f in features)
            cuts = [np.asarray(f["cuts"], dtype=np.float64) for f in features]
            shapes = tuple(np.asarray(f["scores"], dtype=np.float64) for f in features)
            config = TrainConfig(**doc["config"])
            model = cls(
                intercept=float(doc["intercept"]),
                shapes=shapes,
                bin_map=BinMap(cuts),
                feature_names=names,
                config=config,
                train_info=dict(doc.get("train_info", {})),
            )
        except (KeyError, TypeError, ValueError, InvalidInput) as exc:
            raise DeserializeError(f"malformed model document: {exc}") from exc
        for j in range(model.n_features):
            if len(model.shapes[j]) != model.bin_map.total_bins(j):
                raise DeserializeError("shape/bin arity mismatch in model document")
        return model


def _log_odds(y: np.ndarray) -> float:
    pos = float(y.sum())
    return math.log(pos / (len(y) - pos))


def log_loss(y: np.ndarray, raw: np.ndarray) -> float:
    """Mean logistic loss of raw scores against binary labels."""
    z = np.where(y > 0.5, raw, -raw)
    return float(np.mean(np.logaddexp(0.0, -z)))


def _holdout_split(y: np.ndarray, seed: int):
    """Stratified 15% holdout, or None when a class is too small to appear
    in it. A holdout missing a class is a misleading early-stopping signal
    (it rewards collapsing toward the majority), so it is not used at all."""
    rng = np.random.default_rng(seed)
    train_parts, holdout_parts = [], []
    for cls in (0, 1):
        idx = np.flatnonzero(y == cls)
        idx = rng.permutation(idx)
        k = int(len(idx) * _HOLDOUT_FRACTION)
        if k == 0 or k >= len(idx):
            return None
        holdout_parts.append(idx[:k])
        train_parts.append(idx[k:])
    return (np.sort(np.concatenate(train_parts)),
            np.sort(np.concatenate(holdout_parts)))


_EMPTY_BINS = np.empty((0, 0), dtype=np.int32)
_EMPTY_Y = np.empty(0, dtype=np.float64)


def _run_kernel(B, y, n_bins, intercept, config, n_rounds, holdout=None, patience=0):
    if holdout is None:
        bins_ho = np.empty((0, B.shape[1]), dtype=np.int32)
        y_ho = _EMPTY_Y
    else:
        bins_ho, y_ho = holdout
    return kernels.boost_cycle(
        np.ascontiguousarray(B, dtype=np.int32),
        np.ascontiguousarray(y, dtype=np.float64),
        n_bins,
        float(intercept),
        float(config.learning_rate),
        int(n_rounds),
        np.ascontiguousarray(bins_ho, dtype=np.int32),
        np.ascontiguousarray(y_ho, dtype=np.float64),
        int(patience),
    )


def fit(data, labels, config: TrainConfig = TrainConfig(),
        feature_names: tuple[str, ...] | None = None) -> EbmModel:
    """Train a model on records (NaN = missing value) and binary labels."""
    X = _as_matrix(data)
    y = np.asarray(labels, dtype=np.float64)
    if y.ndim != 1 or len(y) != X.shape[0]:
        raise InvalidInput(f"got {X.shape[0]} records but {y.size} labels")
    if X.shape[0] < 2:
        raise InvalidInput("need at least two records to train")
    if not np.all(np.isin(y, (0.0, 1.0))):
        raise InvalidInput("labels must be 0 or 1")
    if y.min() == y.max():
        raise DegenerateLabels("training labels contain a single class")
    if feature_names is None:
        feature_names = tuple(f"f{j}" for j in range(X.shape[1]))
    elif len(feature_names) != X.shape[1]:
        raise InvalidInput("feature_names arity does not match the data")

    bin_map = build_bins(X, config.max_bins)
    B = bin_map.transform(X)
    n_bins = bin_map.bin_counts()

    best_round = config.n_rounds
    holdout_used = False
    if config.early_stop_patience > 0:
        split = _holdout_split(y, config.seed)
        if split is not None:
            tr, ho = split
            _, _, best_round = _run_kernel(
                B[tr], y[tr], n_bins, _log_odds(y[tr]), config, config.n_rounds,
                holdout=(B[ho], y[ho]), patience=config.early_stop_patience)
            holdout_used = True

    intercept = _log_odds(y)
    scores, rounds_run, _ = _run_kernel(B, y, n_bins, intercept, config, best_round)

    # Center each shape over the training bin occupancy; shifting every bin of
    # a feature by a constant and folding the sum into the intercept leaves
    # all raw scores unchanged.
    shapes = []
    n = X.shape[0]
    for j in range(bin_map.n_features):
        shape = scores[j, :bin_map.total_bins(j)].copy()
        occupancy = np.bincount(B[:, j], minlength=bin_map.total_bins(j))
        mean = float(occupancy @ shape) / n
        shape -= mean
        intercept += mean
        shapes.append(shape)

    model = EbmModel(
        intercept=float(intercept),
        shapes=tuple(shapes),
        bin_map=bin_map,
        feature_names=tuple(feature_names),
        config=replace(config),
        train_info={},
    )
    raw = model.raw_score_many(X)
    model.train_info.update({
        "rounds_run": int(rounds_run),
        "best_round": int(best_round),
        "holdout_used": holdout_used,
        "train_log_loss": log_loss(y, raw),
        "train_accuracy": float(np.mean((raw >= 0) == (y > 0.5))),
        "n_records": int(n),
        "kernel": kernels.active_backend(),
    })
    return model

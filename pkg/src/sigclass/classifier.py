"""Nearest-representative classification of images by signature features.

A fitted model holds one element-wise mean feature vector per class plus
per-class scale factors.  Four evaluation protocols are provided:

  plain   argmin over classes of score(x, rep_z), no scale factors.
  fixed   argmin of score(lambda_z * x, rep_z): each class applies its own
          factor inside its own comparison.  No test-label knowledge.
  ova     per-class accept thresholds tuned on validation, one-vs-all.
  oracle  the TRUE class's factor is applied before scoring all classes.
          This leaks the test label and exists only to audit the
          oracle-scale-factor evaluation; it is segregated from predict().
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

import numpy as np

from .calibration import CalibrationSet, closed_form_lambda, optimize_lambda
from .data_io import AugmentSpec, LabeledImage, augment, ensure_channels
from .path_signature import (
    LOG_SIGNATURE,
    SIGNATURE,
    SigFeatures,
    StreamConvention,
    log_signature_many,
    signature_many,
)
from .scoring import ScaleFactors
from .tensor_algebra import feature_length

__all__ = [
    "ModelConfig",
    "ClassModel",
    "EvalReport",
    "fit",
    "calibrate",
    "features_for_images",
    "predict",
    "predict_oracle",
    "predict_ova",
    "ova_thresholds",
    "evaluate",
    "model_to_dict",
    "model_from_dict",
    "save_model",
    "load_model",
    "report_to_dict",
    "confusion_csv",
]

SCHEMA_VERSION = 1
PROTOCOLS = ("plain", "fixed", "ova", "oracle")


@dataclass(frozen=True)
class ModelConfig:
    kind: str = SIGNATURE
    order: int = 2
    metric: str = "rmse"
    convention: StreamConvention = StreamConvention()
    image_size: tuple[int, int] = (16, 16)
    channels: int | None = None
    augment: AugmentSpec | None = None

    def __post_init__(self):
        if self.kind not in (SIGNATURE, LOG_SIGNATURE):
            raise ValueError(f"unknown feature kind {self.kind!r}")
        if self.metric not in ("rmse", "mae"):
            raise ValueError(f"unknown metric {self.metric!r}")
        if self.order < 1:
            raise ValueError("order must be >= 1")


@dataclass(frozen=True)
class ClassModel:
    config: ModelConfig
    classes: tuple[str, ...]
    representatives: dict[str, SigFeatures]
    train_counts: dict[str, int]
    lambda_rmse: dict[str, ScaleFactors] = field(default_factory=dict)
    lambda_mae: dict[str, ScaleFactors] = field(default_factory=dict)

    def __post_init__(self):
        ref = self.representatives[self.classes[0]]
        for z in self.classes:
            if not ref.same_space(self.representatives[z]):
                raise ValueError(f"representative of class {z!r} has mismatched metadata")
        for table in (self.lambda_rmse, self.lambda_mae):
            for z in self.classes:
                table.setdefault(z, ScaleFactors.identity(z))
                table[z].resolve(len(ref))

    @property
    def feature_length(self) -> int:
        return len(self.representatives[self.classes[0]])

    def scale_factors(self, label: str) -> ScaleFactors:
        table = self.lambda_rmse if self.config.metric == "rmse" else self.lambda_mae
        return table[label]


@dataclass(frozen=True)
class EvalReport:
    protocol: str
    classes: tuple[str, ...]
    accuracy: float
    per_class_accuracy: dict[str, float]
    confusion: np.ndarray  # rows = true class, cols = predicted class
    mean_margin: float
    total: int


# ---------------------------------------------------------------------------
# Feature extraction
# ---------------------------------------------------------------------------


def _prepared_pixels(model_config: ModelConfig, pixels: np.ndarray) -> np.ndarray:
    px = ensure_channels(pixels, model_config.channels)
    h, w = model_config.image_size
    if px.shape[0] != h or px.shape[1] != w:
        raise ValueError(
            f"image shape {px.shape[:2]} does not match model size {(h, w)};"
            " resize upstream"
        )
    return px


def _stream_points(model_config: ModelConfig, pixel_list) -> np.ndarray:
    conv = model_config.convention
    stacked = np.stack([_prepared_pixels(model_config, px) for px in pixel_list])
    b, h, w, c = stacked.shape
    if conv.mode == "pixels":
        pts = stacked.reshape(b, h * w, c)
    else:
        pts = stacked.reshape(b, h, w * c)
    if conv.basepoint:
        pts = np.concatenate([np.zeros((b, 1, pts.shape[2])), pts], axis=1)
    return pts


def _features_and_dim(images, config: ModelConfig) -> tuple[np.ndarray, int]:
    pixel_list = [im.pixels if isinstance(im, LabeledImage) else im for im in images]
    pts = _stream_points(config, pixel_list)
    if config.kind == SIGNATURE:
        return signature_many(pts, config.order), pts.shape[2]
    return log_signature_many(pts, config.order), pts.shape[2]


def features_for_images(images, config: ModelConfig) -> np.ndarray:
    """Feature matrix (batch, feature_length) for a list of images.

    Accepts LabeledImage objects or raw pixel arrays, all already at the
    model's image size.
    """
    return _features_and_dim(images, config)[0]


def _as_features(config: ModelConfig, dim: int, values: np.ndarray) -> SigFeatures:
    return SigFeatures(dim=dim, order=config.order, values=values, kind=config.kind)


def _test_feature(model: ClassModel, pixels: np.ndarray, augment_seed=None) -> np.ndarray:
    """Feature vector of one test image, averaging augmented copies if enabled."""
    spec = model.config.augment
    if spec is None:
        return features_for_images([pixels], model.config)[0]
    copies = augment(pixels, spec, seed=augment_seed)
    return features_for_images(copies, model.config).mean(axis=0)


# ---------------------------------------------------------------------------
# Fitting and calibration
# ---------------------------------------------------------------------------


def _group_by_label(images) -> dict[str, list]:
    groups: dict[str, list] = {}
    for im in images:
        groups.setdefault(im.label, []).append(im)
    return groups


def fit(train, config: ModelConfig) -> ClassModel:
    """Fit per-class element-wise mean representatives from labeled images.

    Scale factors start at the identity; apply calibrate() afterwards.
    Classes are ordered lexicographically.
    """
    groups = _group_by_label(train)
    if not groups:
        raise ValueError("training set is empty")
    classes = tuple(sorted(groups))
    reps, counts = {}, {}
    for label in classes:
        feats, dim = _features_and_dim(groups[label], config)
        reps[label] = _as_features(config, dim, feats.mean(axis=0))
        counts[label] = feats.shape[0]
    return ClassModel(config=config, classes=classes, representatives=reps, train_counts=counts)


def calibration_set(model: ClassModel, val_images) -> CalibrationSet:
    """Bundle the model's representatives with validation features."""
    groups = _group_by_label(val_images)
    missing = [z for z in model.classes if z not in groups]
    if missing:
        raise ValueError(f"validation set lacks classes: {missing}")
    validation = {}
    dim = model.representatives[model.classes[0]].dim
    for label in model.classes:
        feats = features_for_images(groups[label], model.config)
        validation[label] = [_as_features(model.config, dim, row) for row in feats]
    return CalibrationSet(
        representatives={z: model.representatives[z] for z in model.classes},
        validation=validation,
    )


def calibrate(model: ClassModel, val_images, method: str = "closed_form", **kwargs) -> ClassModel:
    """Return a copy of the model with calibrated per-class scale factors.

    method "closed_form" averages element-wise ratios (metric-independent);
    method "optimize" runs the projected subgradient solver on the MAE
    separation objective.  Either result fills both the RMSE and MAE factor
    tables.  method "none" resets the factors to the identity.
    """
    if method == "none":
        identity = {z: ScaleFactors.identity(z) for z in model.classes}
        return replace(model, lambda_rmse=dict(identity), lambda_mae=dict(identity))
    cal = calibration_set(model, val_images)
    if method == "closed_form":
        lambdas = closed_form_lambda(cal, **kwargs)
    elif method == "optimize":
        lambdas = optimize_lambda(cal, **kwargs)
    else:
        raise ValueError(f"unknown calibration method {method!r}")
    return replace(model, lambda_rmse=dict(lambdas), lambda_mae=dict(lambdas))


# ---------------------------------------------------------------------------
# Scoring and protocols
# ---------------------------------------------------------------------------


def _rep_matrix(model: ClassModel) -> np.ndarray:
    return np.stack([model.representatives[z].values for z in model.classes])


def _lambda_matrix(model: ClassModel) -> np.ndarray:
    n = model.feature_length
    rows = []
    for z in model.classes:
        lam = model.scale_factors(z).resolve(n)
        rows.append(np.full(n, lam) if np.isscalar(lam) else lam)
    return np.stack(rows)


def _score_rows(model: ClassModel, scaled_x: np.ndarray, reps: np.ndarray) -> np.ndarray:
    diff = reps - scaled_x
    if model.config.metric == "rmse":
        return np.sqrt(np.mean(diff * diff, axis=1))
    return np.mean(np.abs(diff), axis=1)


def _protocol_scores(model: ClassModel, x: np.ndarray, protocol: str, true_label=None) -> np.ndarray:
    reps = _rep_matrix(model)
    if protocol == "plain":
        return _score_rows(model, x[None, :], reps)
    if protocol == "fixed":
        return _score_rows(model, _lambda_matrix(model) * x[None, :], reps)
    if protocol == "oracle":
        lam = model.scale_factors(true_label).resolve(x.size)
        return _score_rows(model, (lam * x)[None, :], reps)
    raise ValueError(f"unknown scoring protocol {protocol!r}")


def _scores_dict(model: ClassModel, scores: np.ndarray) -> dict[str, float]:
    return {z: float(s) for z, s in zip(model.classes, scores)}


def predict(model: ClassModel, image, protocol: str = "plain", augment_seed=None):
    """Label and per-class scores for one image; ties go to the lowest class index."""
    if protocol not in ("plain", "fixed"):
        raise ValueError(f"predict supports 'plain' and 'fixed', got {protocol!r}")
    pixels = image.pixels if isinstance(image, LabeledImage) else image
    x = _test_feature(model, pixels, augment_seed)
    scores = _protocol_scores(model, x, protocol)
    return model.classes[int(np.argmin(scores))], _scores_dict(model, scores)


def predict_oracle(model: ClassModel, image, true_label: str, augment_seed=None):
    """Audit-only protocol: scores all classes with the TRUE class's factors.

    Requires the test label, so it cannot be deployed; returns
    (is_correct, predicted_label, scores) for measurement purposes.
    """
    if true_label not in model.classes:
        raise ValueError(f"unknown label {true_label!r}")
    pixels = image.pixels if isinstance(image, LabeledImage) else image
    x = _test_feature(model, pixels, augment_seed)
    scores = _protocol_scores(model, x, "oracle", true_label=true_label)
    predicted = model.classes[int(np.argmin(scores))]
    return predicted == true_label, predicted, _scores_dict(model, scores)


def ova_thresholds(model: ClassModel, val_images, slack: float = 1.1) -> dict[str, float]:
    """Per-class accept threshold: slack times the worst own-class validation score."""
    groups = _group_by_label(val_images)
    missing = [z for z in model.classes if z not in groups]
    if missing:
        raise ValueError(f"validation set lacks classes: {missing}")
    reps = _rep_matrix(model)
    thresholds = {}
    for zi, label in enumerate(model.classes):
        feats = features_for_images(groups[label], model.config)
        lam = model.scale_factors(label).resolve(feats.shape[1])
        diff = feats * lam - reps[zi][None, :]
        if model.config.metric == "rmse":
            scores = np.sqrt(np.mean(diff * diff, axis=1))
        else:
            scores = np.mean(np.abs(diff), axis=1)
        thresholds[label] = float(slack * scores.max())
    return thresholds


def predict_ova(model: ClassModel, image, thresholds: dict[str, float], augment_seed=None):
    """One-vs-all: accept classes scoring under their threshold, pick the
    best normalized score; fall back to normalized argmin if none accept."""
    pixels = image.pixels if isinstance(image, LabeledImage) else image
    x = _test_feature(model, pixels, augment_seed)
    scores = _protocol_scores(model, x, "fixed")
    tau = np.array([max(thresholds[z], 1e-12) for z in model.classes])
    normalized = scores / tau
    accepted = scores <= tau
    if accepted.any():
        masked = np.where(accepted, normalized, np.inf)
        idx = int(np.argmin(masked))
    else:
        idx = int(np.argmin(normalized))
    return model.classes[idx], _scores_dict(model, normalized)


def evaluate(model: ClassModel, test, protocol: str, thresholds=None, seed: int = 0) -> EvalReport:
    """Aggregate per-sample predictions over a labeled test set.

    Augmentation randomness (when the model enables it) is drawn from a
    per-sample stream keyed by (seed, sample index), so the report is
    deterministic and independent of evaluation order.
    """
    if protocol not in PROTOCOLS:
        raise ValueError(f"unknown protocol {protocol!r}")
    test = list(test)
    if not test:
        raise ValueError("test set is empty")
    if protocol == "ova" and thresholds is None:
        raise ValueError("protocol 'ova' requires thresholds")
    index = {z: i for i, z in enumerate(model.classes)}
    unknown = sorted({im.label for im in test} - set(model.classes))
    if unknown:
        raise ValueError(f"test set contains unknown classes: {unknown}")

    z = len(model.classes)
    confusion = np.zeros((z, z), dtype=np.int64)
    margins = []
    for i, im in enumerate(test):
        aug_seed = [seed, i]
        if protocol == "oracle":
            _, predicted, scores = predict_oracle(model, im, im.label, augment_seed=aug_seed)
        elif protocol == "ova":
            predicted, scores = predict_ova(model, im, thresholds, augment_seed=aug_seed)
        else:
            predicted, scores = predict(model, im, protocol, augment_seed=aug_seed)
        confusion[index[im.label], index[predicted]] += 1
        ordered = np.sort(np.array([scores[c] for c in model.classes]))
        margins.append(float(ordered[1] - ordered[0]) if z > 1 else 0.0)

    total = confusion.sum()
    accuracy = float(np.trace(confusion) / total)
    per_class = {}
    for label, zi in index.items():
        row = confusion[zi].sum()
        per_class[label] = float(confusion[zi, zi] / row) if row else float("nan")
    return EvalReport(
        protocol=protocol,
        classes=model.classes,
        accuracy=accuracy,
        per_class_accuracy=per_class,
        confusion=confusion,
        mean_margin=float(np.mean(margins)),
        total=int(total),
    )


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------


def _lambda_to_json(lam: ScaleFactors):
    return lam.values if np.isscalar(lam.values) else [float(v) for v in lam.values]


def _lambda_from_json(values, label: str) -> ScaleFactors:
    if isinstance(values, (int, float)):
        return ScaleFactors(values=float(values), label=label)
    return ScaleFactors(values=np.asarray(values, dtype=np.float64), label=label)


def model_to_dict(model: ClassModel) -> dict:
    cfg = model.config
    return {
        "schema_version": SCHEMA_VERSION,
        "config": {
            "kind": cfg.kind,
            "order": cfg.order,
            "metric": cfg.metric,
            "convention": {"mode": cfg.convention.mode, "basepoint": cfg.convention.basepoint},
            "image_size": list(cfg.image_size),
            "channels": cfg.channels,
            "augment": None
            if cfg.augment is None
            else {
                "contrast": list(cfg.augment.contrast),
                "brightness": list(cfg.augment.brightness),
                "noise": cfg.augment.noise,
                "noise_level": cfg.augment.noise_level,
                "copies": cfg.augment.copies,
                "seed": cfg.augment.seed,
            },
        },
        "classes": list(model.classes),
        "stream_dim": model.representatives[model.classes[0]].dim,
        "feature_length": model.feature_length,
        "per_class": {
            z: {
                "representative": [float(v) for v in model.representatives[z].values],
                "train_count": model.train_counts[z],
                "lambda_rmse": _lambda_to_json(model.lambda_rmse[z]),
                "lambda_mae": _lambda_to_json(model.lambda_mae[z]),
            }
            for z in model.classes
        },
    }


def model_from_dict(doc: dict) -> ClassModel:
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise ValueError(f"unsupported model schema_version {doc.get('schema_version')!r}")
    c = doc["config"]
    aug = c.get("augment")
    config = ModelConfig(
        kind=c["kind"],
        order=c["order"],
        metric=c["metric"],
        convention=StreamConvention(
            mode=c["convention"]["mode"], basepoint=c["convention"]["basepoint"]
        ),
        image_size=tuple(c["image_size"]),
        channels=c["channels"],
        augment=None
        if aug is None
        else AugmentSpec(
            contrast=tuple(aug["contrast"]),
            brightness=tuple(aug["brightness"]),
            noise=aug["noise"],
            noise_level=aug["noise_level"],
            copies=aug["copies"],
            seed=aug["seed"],
        ),
    )
    classes = tuple(doc["classes"])
    stream_dim = int(doc["stream_dim"])
    reps, counts, lam_r, lam_m = {}, {}, {}, {}
    for z in classes:
        entry = doc["per_class"][z]
        reps[z] = SigFeatures(
            dim=stream_dim,
            order=config.order,
            values=np.asarray(entry["representative"], dtype=np.float64),
            kind=config.kind,
        )
        counts[z] = int(entry["train_count"])
        lam_r[z] = _lambda_from_json(entry["lambda_rmse"], z)
        lam_m[z] = _lambda_from_json(entry["lambda_mae"], z)
    return ClassModel(
        config=config,
        classes=classes,
        representatives=reps,
        train_counts=counts,
        lambda_rmse=lam_r,
        lambda_mae=lam_m,
    )


def save_model(model: ClassModel, path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(model_to_dict(model), fh, indent=2)
        fh.write("\n")


def load_model(path) -> ClassModel:
    with open(path, "r", encoding="utf-8") as fh:
        return model_from_dict(json.load(fh))


def report_to_dict(report: EvalReport) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "protocol": report.protocol,
        "classes": list(report.classes),
        "accuracy": report.accuracy,
        "per_class_accuracy": report.per_class_accuracy,
        "confusion": report.confusion.tolist(),
        "mean_margin": report.mean_margin,
        "total": report.total,
    }


def confusion_csv(report: EvalReport) -> str:
    """Confusion matrix as CSV text: rows = true class, columns = predicted."""
    lines = ["true\\predicted," + ",".join(report.classes)]
    for zi, label in enumerate(report.classes):
        lines.append(label + "," + ",".join(str(int(v)) for v in report.confusion[zi]))
    return "\n".join(lines) + "\n"

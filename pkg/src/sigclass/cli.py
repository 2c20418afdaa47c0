"""Command-line orchestration: gen-shapes, fit, eval, spectra, embed.

Every command is a pure function of (config file, input files, seed):
re-running with identical inputs produces byte-identical artifacts.  All
randomness flows from the single config seed through named sub-streams.
Errors are reported as one machine-readable JSON line on stderr with a
nonzero exit code.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass

import numpy as np

from .classifier import (
    ModelConfig,
    PROTOCOLS,
    calibrate,
    confusion_csv,
    evaluate,
    features_for_images,
    fit,
    load_model,
    ova_thresholds,
    report_to_dict,
    save_model,
)
from .data_io import (
    AugmentSpec,
    LabeledImage,
    ShapeJitter,
    ensure_channels,
    gen_four_shapes,
    load_cifar10,
    load_image_dir,
    load_mnist_idx,
    resize,
    write_pnm,
)
from .embedding import embedding_csv, pca_reduce, tsne_exact
from .path_signature import StreamConvention
from .signal_analysis import export_spectrum

SCHEMA_VERSION = 1

# Named sub-streams of the master seed; every consumer of randomness gets
# its own tag so no two stages share a stream.
STREAM_TAGS = {"split": 1, "shapes": 2, "augment": 3, "tsne": 4, "optimizer": 5}


def substream_seed(master: int, name: str) -> int:
    seq = np.random.SeedSequence([int(master), STREAM_TAGS[name]])
    return int(seq.generate_state(1, np.uint64)[0])


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------

_DEFAULT_SIZES = {"mnist": (28, 28), "cifar10": (32, 32)}


@dataclass
class RunConfig:
    seed: int = 0
    out_dir: str = "out"
    dataset: dict = None
    image_size: tuple[int, int] = (16, 16)
    channels: int | None = None
    convention: StreamConvention = StreamConvention()
    kind: str = "signature"
    order: int = 2
    metric: str = "rmse"
    budgets: dict = None
    calibration: dict = None
    protocol: str = "fixed"
    augment: AugmentSpec | None = None
    ova_slack: float = 1.1
    embed: dict = None
    spectra: dict = None

    def model_config(self) -> ModelConfig:
        return ModelConfig(
            kind=self.kind,
            order=self.order,
            metric=self.metric,
            convention=self.convention,
            image_size=self.image_size,
            channels=self.channels,
            augment=self.augment,
        )


def _augment_from_dict(doc) -> AugmentSpec | None:
    if doc is None:
        return None
    return AugmentSpec(
        contrast=tuple(doc.get("contrast", (1.0, 1.0))),
        brightness=tuple(doc.get("brightness", (0.0, 0.0))),
        noise=doc.get("noise", "none"),
        noise_level=doc.get("noise_level", 0.0),
        copies=doc.get("copies", 8),
        seed=doc.get("seed", 0),
    )


def config_from_dict(doc: dict) -> RunConfig:
    dataset = dict(doc.get("dataset") or {"kind": "four_shapes", "size": 16})
    kind = dataset.get("kind")
    if kind not in ("four_shapes", "mnist", "cifar10", "image_dir"):
        raise ValueError(f"unknown dataset kind {kind!r}")

    if "image_size" in doc and doc["image_size"] is not None:
        image_size = tuple(doc["image_size"])
    elif kind == "four_shapes":
        size = int(dataset.get("size", 16))
        image_size = (size, size)
    elif kind in _DEFAULT_SIZES:
        image_size = _DEFAULT_SIZES[kind]
    else:
        raise ValueError("image_size is required for dataset kind 'image_dir'")

    stream = doc.get("stream") or {}
    feature = doc.get("feature") or {}
    budgets = dict(doc.get("budgets") or {})
    budgets.setdefault("train", 10)
    budgets.setdefault("val", 100)
    budgets.setdefault("test", 200)
    for name, value in budgets.items():
        if value < 0:
            raise ValueError(f"budget {name!r} must be >= 0, got {value}")

    calibration = dict(doc.get("calibration") or {})
    calibration.setdefault("method", "closed_form")

    protocol = doc.get("protocol", "fixed")
    if protocol not in PROTOCOLS:
        raise ValueError(f"unknown protocol {protocol!r}")

    embed = dict(doc.get("embed") or {})
    embed.setdefault("samples", 300)
    embed.setdefault("perplexity", 30.0)
    embed.setdefault("iterations", 500)

    spectra = dict(doc.get("spectra") or {})
    spectra.setdefault("window", 5)
    spectra.setdefault("polyorder", 2)

    return RunConfig(
        seed=int(doc.get("seed", 0)),
        out_dir=str(doc.get("out_dir", "out")),
        dataset=dataset,
        image_size=image_size,
        channels=doc.get("channels"),
        convention=StreamConvention(
            mode=stream.get("mode", "pixels"),
            basepoint=bool(stream.get("basepoint", True)),
        ),
        kind=feature.get("kind", "signature"),
        order=int(feature.get("order", 2)),
        metric=doc.get("metric", "rmse"),
        budgets=budgets,
        calibration=calibration,
        protocol=protocol,
        augment=_augment_from_dict(doc.get("augment")),
        ova_slack=float(doc.get("ova_slack", 1.1)),
        embed=embed,
        spectra=spectra,
    )


def load_config(path, overrides: dict | None = None) -> RunConfig:
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    for key, value in (overrides or {}).items():
        if value is not None:
            doc[key] = value
    return config_from_dict(doc)


# ---------------------------------------------------------------------------
# Dataset loading and splitting
# ---------------------------------------------------------------------------


def _jitter_from_dict(doc) -> ShapeJitter:
    if not doc:
        return ShapeJitter()
    if "rotation_deg" in doc:
        rot = doc["rotation_deg"]
        rotation = None if rot is None else tuple(np.deg2rad(v) for v in rot)
    else:
        rotation = (0.0, 2.0 * np.pi)
    return ShapeJitter(
        center_frac=doc.get("center_frac", 0.1),
        scale_range=tuple(doc.get("scale_range", (0.6, 0.9))),
        rotation=rotation,
    )


def load_pools(config: RunConfig) -> tuple[list[LabeledImage], list[LabeledImage] | None]:
    """(train/validation pool, separate test pool or None)."""
    ds = config.dataset
    kind = ds["kind"]
    if kind == "four_shapes":
        per_class = ds.get("per_class")
        if per_class is None:
            b = config.budgets
            per_class = b["train"] + b["val"] + b["test"]
        return (
            gen_four_shapes(
                per_class=per_class,
                size=ds.get("size", config.image_size[0]),
                jitter=_jitter_from_dict(ds.get("jitter")),
                seed=substream_seed(config.seed, "shapes"),
            ),
            None,
        )
    if kind == "mnist":
        train = load_mnist_idx(ds["train_images"], ds["train_labels"])
        test = None
        if ds.get("test_images"):
            test = load_mnist_idx(ds["test_images"], ds["test_labels"])
        return train, test
    if kind == "cifar10":
        train = load_cifar10(ds["train_batches"])
        test = load_cifar10(ds["test_batches"]) if ds.get("test_batches") else None
        return train, test
    if kind == "image_dir":
        train = load_image_dir(ds["root"])
        test = load_image_dir(ds["test_root"]) if ds.get("test_root") else None
        return train, test
    raise ValueError(f"unknown dataset kind {kind!r}")


def _group_sorted(images) -> dict[str, list[LabeledImage]]:
    groups: dict[str, list[LabeledImage]] = {}
    for im in images:
        groups.setdefault(im.label, []).append(im)
    return {label: groups[label] for label in sorted(groups)}


def split_dataset(config: RunConfig, pool, test_pool=None):
    """Seeded per-class split into (train, val, test) lists.

    train and val come from `pool`; test comes from `test_pool` when given,
    otherwise from the unused remainder of `pool`.
    """
    budgets = config.budgets
    groups = _group_sorted(pool)
    train, val, test = [], [], []
    for ci, (label, items) in enumerate(groups.items()):
        rng = np.random.default_rng(
            np.random.SeedSequence([config.seed, STREAM_TAGS["split"], ci])
        )
        perm = rng.permutation(len(items))
        need = budgets["train"] + budgets["val"]
        pool_need = need + (budgets["test"] if test_pool is None else 0)
        if len(items) < pool_need:
            raise ValueError(
                f"class {label!r} has {len(items)} samples, needs {pool_need}"
            )
        train.extend(items[i] for i in perm[: budgets["train"]])
        val.extend(items[i] for i in perm[budgets["train"] : need])
        if test_pool is None:
            test.extend(items[i] for i in perm[need : need + budgets["test"]])
    if test_pool is not None:
        for ci, (label, items) in enumerate(_group_sorted(test_pool).items()):
            rng = np.random.default_rng(
                np.random.SeedSequence([config.seed, STREAM_TAGS["split"], 1000 + ci])
            )
            perm = rng.permutation(len(items))
            take = budgets["test"] if budgets["test"] > 0 else len(items)
            if len(items) < take:
                raise ValueError(
                    f"test class {label!r} has {len(items)} samples, needs {take}"
                )
            test.extend(items[i] for i in perm[:take])
    return train, val, test


def prepare_images(images, config: RunConfig) -> list[LabeledImage]:
    """Resize every image to the configured size (channels are handled by
    the model's feature extraction)."""
    h, w = config.image_size
    out = []
    for im in images:
        px = im.pixels
        if px.shape[0] != h or px.shape[1] != w:
            px = resize(px, h, w)
        out.append(LabeledImage(px, im.label, im.source_id))
    return out


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def cmd_gen_shapes(args) -> int:
    if args.config:
        config = load_config(args.config, {"seed": args.seed, "out_dir": args.out})
        ds = config.dataset
        per_class = args.per_class or ds.get("per_class", 10)
        size = args.size or ds.get("size", 16)
        jitter = _jitter_from_dict(ds.get("jitter"))
        seed = config.seed
        out_dir = config.out_dir
    else:
        per_class = args.per_class or 10
        size = args.size or 16
        jitter = ShapeJitter()
        seed = args.seed if args.seed is not None else 0
        out_dir = args.out or "out"

    images = gen_four_shapes(
        per_class=per_class,
        size=size,
        jitter=jitter,
        seed=substream_seed(seed, "shapes"),
    )
    os.makedirs(out_dir, exist_ok=True)
    manifest = {
        "schema_version": SCHEMA_VERSION,
        "seed": seed,
        "size": size,
        "per_class": per_class,
        "files": [],
    }
    counters: dict[str, int] = {}
    for im in images:
        idx = counters.get(im.label, 0)
        counters[im.label] = idx + 1
        class_dir = os.path.join(out_dir, im.label)
        os.makedirs(class_dir, exist_ok=True)
        rel = os.path.join(im.label, f"shape_{idx:04d}.ppm")
        write_pnm(os.path.join(out_dir, rel), ensure_channels(im.pixels, 3))
        manifest["files"].append({"path": rel, "label": im.label})
    with open(os.path.join(out_dir, "manifest.json"), "w", encoding="utf-8", newline="\n") as fh:
        json.dump(manifest, fh, indent=2)
        fh.write("\n")
    print(f"wrote {len(images)} images to {out_dir}")
    return 0


def cmd_fit(args) -> int:
    config = load_config(args.config, {"seed": args.seed, "out_dir": args.out})
    pool, test_pool = load_pools(config)
    train, val, _ = split_dataset(config, pool, test_pool)
    train = prepare_images(train, config)
    val = prepare_images(val, config)

    method = config.calibration["method"]
    if method not in ("none", "closed_form", "optimize"):
        raise ValueError(f"unknown calibration method {method!r}")
    if method != "none" and not val:
        raise ValueError(
            f"calibration method {method!r} requires a nonzero validation budget"
        )

    model = fit(train, config.model_config())
    if method == "closed_form":
        model = calibrate(
            model,
            val,
            method="closed_form",
            epsilon=config.calibration.get("epsilon", 1e-8),
            transposed=config.calibration.get("transposed", False),
        )
    elif method == "optimize":
        model = calibrate(
            model,
            val,
            method="optimize",
            gamma=config.calibration.get("gamma", 0.0),
            box=config.calibration.get("box", 1.0),
            iters=config.calibration.get("iters", 500),
            step0=config.calibration.get("step0", 0.1),
            epsilon=config.calibration.get("epsilon", 1e-8),
            batch_size=config.calibration.get("batch_size"),
            seed=substream_seed(config.seed, "optimizer"),
        )

    os.makedirs(config.out_dir, exist_ok=True)
    model_path = os.path.join(config.out_dir, "model.json")
    save_model(model, model_path)

    print(f"feature length: {model.feature_length}")
    for z in model.classes:
        lam = model.scale_factors(z).resolve(model.feature_length)
        lam = np.full(model.feature_length, lam) if np.isscalar(lam) else lam
        print(
            f"class {z}: train={model.train_counts[z]}"
            f" lambda min={lam.min():.6g} mean={lam.mean():.6g} max={lam.max():.6g}"
        )
    print(f"model written to {model_path}")
    return 0


def cmd_eval(args) -> int:
    config = load_config(args.config, {"seed": args.seed, "out_dir": args.out})
    model = load_model(args.model or os.path.join(config.out_dir, "model.json"))
    protocols = (args.protocol or config.protocol).split(",")
    for protocol in protocols:
        if protocol not in PROTOCOLS:
            raise ValueError(f"unknown protocol {protocol!r}")

    pool, test_pool = load_pools(config)
    _, val, test = split_dataset(config, pool, test_pool)
    test = prepare_images(test, config)
    if not test:
        raise ValueError("test budget is zero; nothing to evaluate")

    thresholds = None
    if "ova" in protocols:
        if not val:
            raise ValueError("protocol 'ova' requires a nonzero validation budget")
        thresholds = ova_thresholds(model, prepare_images(val, config), slack=config.ova_slack)

    os.makedirs(config.out_dir, exist_ok=True)
    eval_seed = substream_seed(config.seed, "augment")
    for protocol in protocols:
        report = evaluate(model, test, protocol, thresholds=thresholds, seed=eval_seed)
        report_path = os.path.join(config.out_dir, f"report_{protocol}.json")
        with open(report_path, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(report_to_dict(report), fh, indent=2)
            fh.write("\n")
        csv_path = os.path.join(config.out_dir, f"confusion_{protocol}.csv")
        with open(csv_path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(confusion_csv(report))
        print(f"{protocol}: accuracy={report.accuracy:.4f} -> {report_path}")
    return 0


def cmd_spectra(args) -> int:
    out_dir = args.out or "out"
    model = load_model(args.model)
    series = export_spectrum(model, args.window, args.polyorder, out_dir=out_dir)
    for s in series:
        print(f"class {s.label}: window={s.window} polyorder={s.polyorder}")
    print(f"wrote {len(series)} spectrum files to {out_dir}")
    return 0


def cmd_embed(args) -> int:
    config = load_config(args.config, {"seed": args.seed, "out_dir": args.out})
    samples = args.samples or config.embed["samples"]
    perplexity = args.perplexity or config.embed["perplexity"]
    iterations = args.iterations or config.embed["iterations"]

    pool, test_pool = load_pools(config)
    images = list(pool) + list(test_pool or [])
    if len(images) > samples:
        rng = np.random.default_rng(
            np.random.SeedSequence([config.seed, STREAM_TAGS["split"], 2000])
        )
        idx = rng.permutation(len(images))[:samples]
        images = [images[i] for i in sorted(idx)]
    images = prepare_images(images, config)

    feats = features_for_images(images, config.model_config())
    k = min(50, feats.shape[0] - 1, feats.shape[1])
    reduced = pca_reduce(feats, k)
    result = tsne_exact(
        reduced,
        perplexity=perplexity,
        iterations=iterations,
        seed=substream_seed(config.seed, "tsne"),
        labels=[im.label for im in images],
    )
    os.makedirs(config.out_dir, exist_ok=True)
    csv_path = os.path.join(config.out_dir, "embedding.csv")
    with open(csv_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(embedding_csv(result))
    print(
        f"embedded {len(images)} samples; KL {result.kl_trace[0]:.4f} ->"
        f" {result.kl_trace[-1]:.4f}; wrote {csv_path}"
    )
    return 0


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sigclass",
        description="Signature-feature few-shot classification pipeline",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--seed", type=int, default=None, help="override config seed")
        p.add_argument("--out", default=None, help="override output directory")

    p = sub.add_parser("gen-shapes", help="render the procedural four-shapes dataset")
    common(p)
    p.add_argument("--per-class", type=int, default=None)
    p.add_argument("--size", type=int, default=None)
    p.set_defaults(func=cmd_gen_shapes)

    p = sub.add_parser("fit", help="fit and calibrate a model")
    common(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("eval", help="evaluate a model under one or more protocols")
    common(p)
    p.add_argument("--model", default=None, help="model JSON (default: <out>/model.json)")
    p.add_argument(
        "--protocol",
        default=None,
        help="plain|fixed|ova|oracle, comma-separated for multiple reports",
    )
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("spectra", help="export smoothed per-class spectra as CSV")
    p.add_argument("--model", required=True)
    p.add_argument("--window", type=int, default=5)
    p.add_argument("--polyorder", type=int, default=2)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_spectra)

    p = sub.add_parser("embed", help="PCA + exact t-SNE 2-D embedding CSV")
    common(p)
    p.add_argument("--samples", type=int, default=None)
    p.add_argument("--perplexity", type=float, default=None)
    p.add_argument("--iterations", type=int, default=None)
    p.set_defaults(func=cmd_embed)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "config", None) is None and args.command in ("fit", "eval", "embed"):
        _fail(ValueError(f"command {args.command!r} requires --config"))
        return 1
    try:
        return args.func(args)
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        _fail(exc)
        return 1


def _fail(exc: Exception):
    print(
        json.dumps({"error": str(exc), "type": type(exc).__name__}),
        file=sys.stderr,
    )


if __name__ == "__main__":
    sys.exit(main())

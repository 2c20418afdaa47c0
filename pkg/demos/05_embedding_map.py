"""2-D map of signature features: PCA reduction, then exact t-SNE.

Embeds a few hundred shape signatures and writes an x,y,label CSV that any
plotting tool can render.  The KL trace printed at the end is the t-SNE
objective; it must decrease.
"""

import os

import numpy as np

from sigclass import ModelConfig, StreamConvention, features_for_images, pca_reduce, tsne_exact
from sigclass.data_io import ShapeJitter, gen_four_shapes
from sigclass.embedding import embedding_csv

jitter = ShapeJitter(center_frac=0.03, scale_range=(0.72, 0.82),
                     rotation=(np.deg2rad(7), np.deg2rad(13)))
images = gen_four_shapes(per_class=75, size=16, jitter=jitter, seed=3)
labels = [im.label for im in images]

config = ModelConfig(order=2, convention=StreamConvention("rows", True),
                     image_size=(16, 16))
print(f"computing signatures of {len(images)} images...")
feats = features_for_images(images, config)

k = min(50, feats.shape[0] - 1, feats.shape[1])
reduced = pca_reduce(feats, k)
print(f"PCA: {feats.shape[1]} -> {k} dimensions")

print("running exact t-SNE (perplexity 30, 500 iterations)...")
result = tsne_exact(reduced, perplexity=30.0, iterations=500, seed=0, labels=labels)

out_dir = os.path.join(os.path.dirname(__file__), "output")
os.makedirs(out_dir, exist_ok=True)
path = os.path.join(out_dir, "embedding.csv")
with open(path, "w", encoding="utf-8", newline="\n") as fh:
    fh.write(embedding_csv(result))

print("KL trace:", " -> ".join(f"{v:.3f}" for v in result.kl_trace[:: max(1, len(result.kl_trace) // 6)]))
print(f"final KL {result.kl_trace[-1]:.3f} < initial {result.kl_trace[0]:.3f}")

coords = result.coords
for label in sorted(set(labels)):
    pts = coords[[i for i, l in enumerate(labels) if l == label]]
    print(f"  {label:9s} cluster center ({pts[:, 0].mean():7.2f}, {pts[:, 1].mean():7.2f})")
print(f"\nwrote {path}; plot x,y colored by label to see the class structure.")

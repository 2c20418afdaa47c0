"""2-D visualization of feature sets: PCA reduction followed by exact t-SNE."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["EmbeddingResult", "pca_reduce", "tsne_exact", "embedding_csv"]


@dataclass(frozen=True)
class EmbeddingResult:
    coords: np.ndarray  # (n, 2)
    labels: tuple[str, ...] | None
    kl_trace: tuple[float, ...]


def _as_matrix(features) -> np.ndarray:
    if isinstance(features, np.ndarray):
        mat = np.asarray(features, dtype=np.float64)
    else:
        mat = np.stack([np.asarray(f.values, dtype=np.float64) for f in features])
    if mat.ndim != 2:
        raise ValueError(f"expected a 2-D sample matrix, got shape {mat.shape}")
    return mat


def pca_reduce(features, k: int) -> np.ndarray:
    """Project samples onto the top-k principal directions.

    Accepts a list of SigFeatures or an (n, length) array.  Directions are
    sign-fixed (largest-magnitude loading made positive) so the output is
    deterministic.
    """
    mat = _as_matrix(features)
    n, length = mat.shape
    if not 1 <= k <= min(n, length):
        raise ValueError(f"k must be in 1..min(n, length) = {min(n, length)}, got {k}")
    centered = mat - mat.mean(axis=0)
    _, _, vt = np.linalg.svd(centered, full_matrices=False)
    components = vt[:k].copy()
    for row in components:
        peak = np.argmax(np.abs(row))
        if row[peak] < 0:
            row *= -1.0
    return centered @ components.T


def _pairwise_sq_dists(x: np.ndarray) -> np.ndarray:
    sq = np.sum(x * x, axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (x @ x.T)
    np.fill_diagonal(d2, 0.0)
    return np.maximum(d2, 0.0)


def _conditional_probs(d2: np.ndarray, perplexity: float, tol: float = 1e-5, max_iter: int = 50):
    """Per-point Gaussian affinities with bandwidths bisected to the target
    perplexity (entropy tolerance tol, at most max_iter bisections)."""
    n = d2.shape[0]
    target = np.log(perplexity)
    p = np.zeros((n, n))
    for i in range(n):
        row = np.delete(d2[i], i)
        beta, beta_min, beta_max = 1.0, -np.inf, np.inf
        for _ in range(max_iter):
            w = np.exp(-row * beta)
            s = max(w.sum(), 1e-300)
            entropy = np.log(s) + beta * float((row * w).sum()) / s
            diff = entropy - target
            if abs(diff) <= tol:
                break
            if diff > 0:
                beta_min = beta
                beta = beta * 2.0 if beta_max == np.inf else (beta + beta_max) / 2.0
            else:
                beta_max = beta
                beta = beta / 2.0 if beta_min == -np.inf else (beta + beta_min) / 2.0
        w = np.exp(-row * beta)
        w /= max(w.sum(), 1e-300)
        p[i, np.arange(n) != i] = w
    return p


def _kl_divergence(p: np.ndarray, q: np.ndarray) -> float:
    mask = p > 0
    return float(np.sum(p[mask] * np.log(p[mask] / q[mask])))


def tsne_exact(
    points,
    perplexity: float = 30.0,
    iterations: int = 1000,
    seed: int = 0,
    labels=None,
    learning_rate: float = 200.0,
    record_every: int = 25,
) -> EmbeddingResult:
    """Exact O(n^2) t-SNE to 2-D.

    Standard schedule: early exaggeration x12 for the first 250 iterations,
    momentum 0.5 switching to 0.8 at iteration 250, adaptive per-component
    gains, seeded Gaussian initialization (sigma 1e-4).  kl_trace records
    the KL divergence against the un-exaggerated affinities; runs need
    iterations > 250 for the trace to settle (shorter runs never leave the
    exploration phase and the final KL may exceed the initial one).
    """
    x = _as_matrix(points)
    n = x.shape[0]
    if n < 5:
        raise ValueError(f"need at least 5 samples, got {n}")
    if not perplexity < n / 3:
        raise ValueError(f"perplexity must be < n/3 = {n / 3:.2f}, got {perplexity}")
    if labels is not None and len(labels) != n:
        raise ValueError("labels length does not match sample count")

    d2 = _pairwise_sq_dists(x)
    if d2.max() == 0.0:
        raise ValueError(
            "degenerate input: all samples identical, pairwise distances are zero"
        )

    p_cond = _conditional_probs(d2, perplexity)
    p = (p_cond + p_cond.T) / (2.0 * n)
    p = np.maximum(p, 1e-12)

    rng = np.random.default_rng(seed)
    y = rng.normal(0.0, 1e-4, size=(n, 2))
    velocity = np.zeros_like(y)
    gains = np.ones_like(y)

    kl_trace = []
    for t in range(iterations):
        num = 1.0 / (1.0 + _pairwise_sq_dists(y))
        np.fill_diagonal(num, 0.0)
        q = np.maximum(num / num.sum(), 1e-12)

        if t % record_every == 0:
            kl_trace.append(_kl_divergence(p, q))

        p_eff = p * 12.0 if t < 250 else p
        pq_num = (p_eff - q) * num
        grad = 4.0 * (np.diag(pq_num.sum(axis=1)) - pq_num) @ y

        momentum = 0.5 if t < 250 else 0.8
        same_sign = np.sign(grad) == np.sign(velocity)
        gains = np.where(same_sign, gains * 0.8, gains + 0.2)
        gains = np.maximum(gains, 0.01)
        velocity = momentum * velocity - learning_rate * gains * grad
        y = y + velocity
        y = y - y.mean(axis=0)

    num = 1.0 / (1.0 + _pairwise_sq_dists(y))
    np.fill_diagonal(num, 0.0)
    q = np.maximum(num / num.sum(), 1e-12)
    kl_trace.append(_kl_divergence(p, q))

    return EmbeddingResult(
        coords=y,
        labels=None if labels is None else tuple(labels),
        kl_trace=tuple(kl_trace),
    )


def embedding_csv(result: EmbeddingResult) -> str:
    """CSV text with header x,y,label, one row per sample."""
    lines = ["x,y,label"]
    labels = result.labels if result.labels is not None else [""] * len(result.coords)
    for (px, py), label in zip(result.coords, labels):
        lines.append(f"{float(px)!r},{float(py)!r},{label}")
    return "\n".join(lines) + "\n"

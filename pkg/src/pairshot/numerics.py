"""Small numeric helpers used across engines and backends."""

from __future__ import annotations

import numpy as np


def stable_softmax(scores: np.ndarray) -> np.ndarray:
    """Softmax computed with the max subtracted first.

    Shift invariance (softmax(s) == softmax(s + c)) holds to floating
    point accuracy, and large scores cannot overflow.
    """
    scores = np.asarray(scores, dtype=np.float64)
    shifted = scores - scores.max(axis=-1, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=-1, keepdims=True)


def argmax_lowest(scores: np.ndarray) -> int:
    """Index of the maximum score; exact ties resolve to the lowest index."""
    scores = np.asarray(scores)
    # np.argmax already returns the first maximal index, which is the
    # tie-break rule used everywhere in this package.
    return int(np.argmax(scores))


def safe_norm(vec: np.ndarray, eps: float = 1e-12) -> float:
    """Smooth, strictly positive norm sqrt(v.v + eps).

    Keeps cosine similarity differentiable at the origin so gradient
    checks hold everywhere, and never divides by zero.
    """
    vec = np.asarray(vec, dtype=np.float64)
    return float(np.sqrt(vec @ vec + eps))


def cosine_similarity(a: np.ndarray, b: np.ndarray, eps: float = 1e-12) -> float:
    """Cosine of the angle between a and b with epsilon-guarded norms."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    return float((a @ b) / (safe_norm(a, eps) * safe_norm(b, eps)))

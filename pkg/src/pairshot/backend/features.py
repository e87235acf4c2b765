"""Hashed character-and-word n-gram features for the toy backend.

Hashing uses crc32 with a per-family tag so a word unigram and a char
trigram with the same bytes land in different buckets.  crc32 is stable
across platforms and Python versions, which keeps feature extraction
deterministic everywhere.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass

import numpy as np

_CHAR_ORDERS = (3, 4)


def _bucket(tag: str, gram: str, buckets: int) -> int:
    return zlib.crc32(f"{tag}:{gram}".encode("utf-8")) % buckets


@dataclass(frozen=True)
class Featurizer:
    """Extracts sparse hashed n-gram counts from text.

    Word n-grams run from order 1 up to word_order; character n-grams
    use fixed orders 3 and 4 over the raw text.
    """

    buckets: int
    word_order: int = 2

    def bucket_ids(self, text: str) -> list[int]:
        """Bucket of every n-gram occurrence, in occurrence order."""
        out: list[int] = []
        words = text.split()
        for order in range(1, self.word_order + 1):
            for i in range(len(words) - order + 1):
                out.append(_bucket(f"w{order}", " ".join(words[i : i + order]), self.buckets))
        for order in _CHAR_ORDERS:
            for i in range(len(text) - order + 1):
                out.append(_bucket(f"c{order}", text[i : i + order], self.buckets))
        return out

    def sparse_counts(self, text: str, normalize: bool = True) -> tuple[np.ndarray, np.ndarray]:
        """Aggregated (bucket indices, counts), optionally L2-normalized."""
        counts: dict[int, float] = {}
        for b in self.bucket_ids(text):
            counts[b] = counts.get(b, 0.0) + 1.0
        if not counts:
            return np.empty(0, dtype=np.int64), np.empty(0, dtype=np.float64)
        idx = np.fromiter(sorted(counts), dtype=np.int64, count=len(counts))
        val = np.asarray([counts[int(i)] for i in idx], dtype=np.float64)
        if normalize:
            val = val / np.linalg.norm(val)
        return idx, val

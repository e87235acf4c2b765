"""A deterministic, trainable toy backend.

This is intentionally not a transformer.  The masked scorer and the
text classifier are linear models over hashed n-gram features trained
with softmax cross-entropy; the sentence encoder averages per-bucket
embedding rows and is trained with a cosine-similarity MSE loss.  The
point is to exercise every engine contract cheaply and reproducibly:
same seed, same machine, same results, with gradients simple enough to
verify against finite differences.

Step accounting: one step is one optimizer update on one minibatch.
Epoch-based callers convert via ceil(len(data) / batch) * epochs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from ..errors import NoDataError, NumericError, ShapeError, VocabularyError
from ..numerics import safe_norm, stable_softmax
from ..prompting import ClozeInput
from ..rng import Rng
from .features import Featurizer

_COSINE_EPS = 1e-12


@dataclass(frozen=True)
class BackendConfig:
    """Shape and hashing parameters for toy models.

    vocabulary must contain the mask and separator tokens; engines ask
    for verbalizer tokens, which must be present as well.  word_order
    controls the word n-gram span (character n-grams are fixed at
    orders 3 and 4).
    """

    vocabulary: tuple[str, ...]
    mask_token: str = "<mask>"
    separator_token: str = "||"
    embedding_dim: int = 32
    word_order: int = 2
    buckets: int = 32768
    seed: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "vocabulary", tuple(self.vocabulary))
        if len(set(self.vocabulary)) != len(self.vocabulary):
            raise ValueError("vocabulary tokens must be distinct")
        for required in (self.mask_token, self.separator_token):
            if required not in self.vocabulary:
                raise VocabularyError(f"vocabulary must contain {required!r}")
        if self.embedding_dim <= 0 or self.buckets <= 0 or self.word_order <= 0:
            raise ValueError("embedding_dim, buckets, and word_order must be positive")


def default_backend_config(extra_tokens: Iterable[str] = (), **overrides) -> BackendConfig:
    """A config whose vocabulary covers every built-in task verbalizer."""
    from ..prompting import builtin_label_set, builtin_pvps, builtin_task_ids, verbalizer_tokens

    tokens: list[str] = ["<mask>", "||"]
    for task_id in builtin_task_ids():
        labels = builtin_label_set(task_id)
        for pvp in builtin_pvps(task_id):
            for tok in verbalizer_tokens(pvp, labels):
                if tok not in tokens:
                    tokens.append(tok)
    for tok in extra_tokens:
        if tok not in tokens:
            tokens.append(tok)
    return BackendConfig(vocabulary=tuple(tokens), **overrides)


# ---------------------------------------------------------------------------
# Shared minibatch machinery


class _Schedule:
    """Deterministic resumable batch schedule.

    Pass p visits the data in Fisher-Yates order seeded by (seed, p);
    step s takes batch slot s mod ceil(n / batch) of pass s div that.
    """

    def __init__(self, n: int, batch: int, seed: int) -> None:
        if batch <= 0:
            raise ValueError("batch size must be positive")
        self.n = n
        self.batch = batch
        self.seed = seed
        self.per_pass = max(1, math.ceil(n / batch))
        self._pass = -1
        self._order: list[int] = []

    def batch_indices(self, step: int) -> list[int]:
        p, slot = divmod(step, self.per_pass)
        if p != self._pass:
            self._order = Rng(self.seed).derive("pass", p).shuffled(range(self.n))
            self._pass = p
        return self._order[slot * self.batch : (slot + 1) * self.batch]


def _train_softmax_ce(
    W: np.ndarray,
    examples: Sequence[tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]],
    steps: int,
    batch: int,
    lr: float,
    seed: int,
    sched_state: dict,
) -> None:
    """SGD on cross-entropy of a softmax over selected rows of W.

    Each example is (feature idx, feature values, candidate row ids,
    target distribution over those candidates).  Training resumes the
    step counter when called again with the same seed and data size, so
    two consecutive calls of s1 and s2 steps match one call of s1 + s2.
    """
    if steps < 0:
        raise ValueError("steps must be non-negative")
    n = len(examples)
    if sched_state.get("seed") == seed and sched_state.get("n") == n:
        start = sched_state["step"]
    else:
        start = 0
    schedule = _Schedule(n, batch, seed)
    for step in range(start, start + steps):
        rows = schedule.batch_indices(step)
        scale = lr / len(rows)
        for i in rows:
            idx, val, cands, target = examples[i]
            picked = W[np.ix_(cands, idx)]
            scores = picked @ val
            if not np.all(np.isfinite(scores)):
                raise NumericError("non-finite scores during training; lower the learning rate")
            probs = stable_softmax(scores)
            W[np.ix_(cands, idx)] = picked - np.outer((probs - target) * scale, val)
    sched_state.update(seed=seed, n=n, step=start + steps)


# ---------------------------------------------------------------------------
# Models


class ToyMaskedScorer:
    """Linear cloze scorer: score(token | text) = W[token] . features(text)."""

    def __init__(self, config: BackendConfig, seed: int = 0) -> None:
        self.config = config
        self.seed = seed
        self._featurizer = Featurizer(config.buckets, config.word_order)
        self._row: dict[str, int] = {tok: i for i, tok in enumerate(config.vocabulary)}
        # Zero init: an untrained scorer gives every candidate score 0.
        self.W = np.zeros((len(config.vocabulary), config.buckets), dtype=np.float64)
        self._sched: dict = {}
        self.row_access_log: list[int] | None = None

    def _rows_for(self, tokens: Sequence[str]) -> np.ndarray:
        missing = [t for t in tokens if t not in self._row]
        if missing:
            raise VocabularyError(f"tokens not in backend vocabulary: {missing}")
        rows = np.asarray([self._row[t] for t in tokens], dtype=np.int64)
        if self.row_access_log is not None:
            self.row_access_log.extend(int(r) for r in rows)
        return rows

    def score(self, cloze: ClozeInput, candidates: Sequence[str]) -> dict[str, float]:
        """Scores for each candidate token; only candidate rows are read."""
        if not candidates:
            raise VocabularyError("candidate token list is empty")
        rows = self._rows_for(candidates)
        idx, val = self._featurizer.sparse_counts(cloze.text)
        if len(idx):
            scores = self.W[np.ix_(rows, idx)] @ val
        else:
            scores = np.zeros(len(rows), dtype=np.float64)
        return {tok: float(s) for tok, s in zip(candidates, scores)}

    def train(
        self,
        rendered: Sequence[tuple[ClozeInput, str]],
        steps: int,
        batch: int,
        lr: float,
        seed: int,
        candidates: Sequence[str] | None = None,
    ) -> None:
        """Cross-entropy training restricted to the candidate token rows.

        candidates defaults to the distinct target tokens present in
        rendered, in vocabulary order.
        """
        if not rendered:
            raise NoDataError("train called with no rendered examples")
        targets = [target for _, target in rendered]
        if candidates is None:
            distinct = {t for t in targets}
            candidates = sorted(distinct, key=lambda t: self._row.get(t, -1))
        cand_rows = self._rows_for(candidates)
        position = {tok: k for k, tok in enumerate(candidates)}
        examples = []
        for cloze, target in rendered:
            if target not in position:
                raise VocabularyError(f"target token {target!r} outside candidate set")
            idx, val = self._featurizer.sparse_counts(cloze.text)
            onehot = np.zeros(len(candidates), dtype=np.float64)
            onehot[position[target]] = 1.0
            examples.append((idx, val, cand_rows, onehot))
        _train_softmax_ce(self.W, examples, steps, batch, lr, seed, self._sched)


class ToyTextClassifier:
    """Linear text classifier trained on soft target distributions."""

    def __init__(self, config: BackendConfig, labels: Sequence[str], seed: int = 0) -> None:
        if len(labels) < 2:
            raise ShapeError("a classifier needs at least two labels")
        self.config = config
        self.labels = tuple(labels)
        self.seed = seed
        self._featurizer = Featurizer(config.buckets, config.word_order)
        self.W = np.zeros((len(self.labels), config.buckets), dtype=np.float64)
        self._sched: dict = {}

    def predict(self, text: str) -> np.ndarray:
        """Raw score per label, in label order."""
        idx, val = self._featurizer.sparse_counts(text)
        if not len(idx):
            return np.zeros(len(self.labels), dtype=np.float64)
        return self.W[:, idx] @ val

    def train(
        self,
        rows: Sequence[tuple[str, Sequence[float]]],
        steps: int,
        batch: int,
        lr: float,
        seed: int,
    ) -> None:
        if not rows:
            raise NoDataError("train called with no rows")
        all_rows = np.arange(len(self.labels), dtype=np.int64)
        examples = []
        for text, dist in rows:
            target = np.asarray(list(dist), dtype=np.float64)
            if target.shape != (len(self.labels),):
                raise ShapeError(
                    f"target distribution has {target.shape[0] if target.ndim else 0} entries, "
                    f"expected {len(self.labels)}"
                )
            if (target < 0).any() or abs(float(target.sum()) - 1.0) > 1e-9:
                raise ShapeError("target distribution entries must be >= 0 and sum to 1")
            idx, val = self._featurizer.sparse_counts(text)
            examples.append((idx, val, all_rows, target))
        _train_softmax_ce(self.W, examples, steps, batch, lr, seed, self._sched)


class ToyEncoder:
    """Mean-of-bucket-embeddings encoder trained with cosine MSE.

    Bucket rows are created lazily and deterministically from the
    creation seed, so the untrained embedding of a text never depends
    on what was encoded before it.
    """

    def __init__(self, config: BackendConfig, seed: int = 0) -> None:
        self.config = config
        self.seed = seed
        self.dim = config.embedding_dim
        self._featurizer = Featurizer(config.buckets, config.word_order)
        self._table: dict[int, np.ndarray] = {}

    def _bucket_row(self, bucket: int) -> np.ndarray:
        row = self._table.get(bucket)
        if row is None:
            rng = Rng(self.config.seed).derive("encoder", self.seed, "bucket", bucket)
            row = np.asarray([rng.uniform(-0.5, 0.5) for _ in range(self.dim)])
            self._table[bucket] = row
        return row

    def _occurrences(self, text: str) -> dict[int, float]:
        counts: dict[int, float] = {}
        for b in self._featurizer.bucket_ids(text):
            counts[b] = counts.get(b, 0.0) + 1.0
        return counts

    def encode(self, text: str) -> np.ndarray:
        """Mean of bucket rows over n-gram occurrences; empty text -> zeros."""
        counts = self._occurrences(text)
        total = sum(counts.values())
        if total == 0:
            return np.zeros(self.dim, dtype=np.float64)
        out = np.zeros(self.dim, dtype=np.float64)
        for bucket, mult in counts.items():
            out += self._bucket_row(bucket) * mult
        return out / total

    def fit(
        self,
        triplets: Sequence[tuple[str, str, float]],
        epochs: int,
        batch: int,
        lr: float,
        seed: int,
    ) -> None:
        """Minimize mean (cos(e_a, e_b) - target)^2 by SGD on bucket rows."""
        if epochs < 0:
            raise ValueError("epochs must be non-negative")
        if not triplets:
            raise NoDataError("fit called with no triplets")
        occurrences = []
        for text_a, text_b, target in triplets:
            if not math.isfinite(target):
                raise ShapeError("similarity targets must be finite")
            occurrences.append((self._occurrences(text_a), self._occurrences(text_b), float(target)))
        steps = math.ceil(len(triplets) / batch) * epochs
        schedule = _Schedule(len(triplets), batch, seed)
        for step in range(steps):
            members = schedule.batch_indices(step)
            scale = lr / len(members)
            updates: dict[int, np.ndarray] = {}
            for i in members:
                counts_a, counts_b, target = occurrences[i]
                self._pair_gradient(counts_a, counts_b, target, updates)
            for bucket, grad in updates.items():
                self._table[bucket] = self._bucket_row(bucket) - scale * grad

    def _pair_gradient(
        self,
        counts_a: dict[int, float],
        counts_b: dict[int, float],
        target: float,
        updates: dict[int, np.ndarray],
    ) -> None:
        total_a = sum(counts_a.values())
        total_b = sum(counts_b.values())
        vec_a = np.zeros(self.dim) if total_a == 0 else sum(
            (self._bucket_row(b) * m for b, m in counts_a.items()), np.zeros(self.dim)
        ) / total_a
        vec_b = np.zeros(self.dim) if total_b == 0 else sum(
            (self._bucket_row(b) * m for b, m in counts_b.items()), np.zeros(self.dim)
        ) / total_b
        norm_a = safe_norm(vec_a, _COSINE_EPS)
        norm_b = safe_norm(vec_b, _COSINE_EPS)
        dot = float(vec_a @ vec_b)
        cos = dot / (norm_a * norm_b)
        if not math.isfinite(cos):
            raise NumericError("non-finite cosine during encoder training")
        dldc = 2.0 * (cos - target)
        grad_a = dldc * (vec_b / (norm_a * norm_b) - dot * vec_a / (norm_a**3 * norm_b))
        grad_b = dldc * (vec_a / (norm_a * norm_b) - dot * vec_b / (norm_b**3 * norm_a))
        if total_a:
            for bucket, mult in counts_a.items():
                contribution = grad_a * (mult / total_a)
                updates[bucket] = updates.get(bucket, 0) + contribution
        if total_b:
            for bucket, mult in counts_b.items():
                contribution = grad_b * (mult / total_b)
                updates[bucket] = updates.get(bucket, 0) + contribution

    def pair_loss(self, text_a: str, text_b: str, target: float) -> float:
        """(cos - target)^2 for one pair; used by gradient checks."""
        from ..numerics import cosine_similarity

        cos = cosine_similarity(self.encode(text_a), self.encode(text_b), _COSINE_EPS)
        return (cos - target) ** 2


class ToyBackend:
    """Factory satisfying the Backend protocol for the toy models."""

    def __init__(self, config: BackendConfig | None = None) -> None:
        self.config = config if config is not None else default_backend_config()

    @property
    def mask_token(self) -> str:
        return self.config.mask_token

    @property
    def separator_token(self) -> str:
        return self.config.separator_token

    @property
    def default_lr(self) -> float:
        # Appropriate for the linear toy models; transformer-scale
        # backends will want their own, far smaller default.
        return 0.1

    @property
    def length_fn(self) -> Callable[[str], int]:
        return _whitespace_length

    def create_scorer(self, seed: int = 0) -> ToyMaskedScorer:
        return ToyMaskedScorer(self.config, seed)

    def create_classifier(self, labels: Sequence[str], seed: int = 0) -> ToyTextClassifier:
        return ToyTextClassifier(self.config, labels, seed)

    def create_encoder(self, seed: int = 0) -> ToyEncoder:
        return ToyEncoder(self.config, seed)


def _whitespace_length(text: str) -> int:
    return len(text.split())

"""Plain supervised fine-tuning of a pair classifier.

Pairs are joined into one text with the backend separator and trained
against one-hot targets through the same soft-target contract the
distillation path uses, so the two coincide exactly when distillation
has no unlabeled data.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .backend.contracts import Backend, TextClassifier
from .data import Dataset, SentencePair, join_pair
from .errors import NoDataError
from .metrics import EvalReport, evaluate_predictions
from .numerics import argmax_lowest


@dataclass(frozen=True)
class FinetuneConfig:
    """Training length and shape; lr None means the backend default."""

    steps: int = 1000
    batch: int = 16
    lr: float | None = None
    max_len: int = 256

    def __post_init__(self) -> None:
        if self.steps < 0:
            raise ValueError("steps must be non-negative")
        if self.batch <= 0 or self.max_len <= 0:
            raise ValueError("batch and max_len must be positive")


def finetune(
    config: FinetuneConfig,
    train: Dataset,
    backend: Backend,
    seed: int = 0,
    classifier: TextClassifier | None = None,
) -> TextClassifier:
    """Train (or continue training) a classifier on one-hot targets.

    Passing an already trained classifier continues its schedule when
    the seed matches, so steps can be split across calls.
    """
    if not len(train):
        raise NoDataError("cannot fine-tune on an empty dataset")
    label_set = train.label_set
    if classifier is None:
        classifier = backend.create_classifier(label_set.labels, seed)
    rows = []
    for ex in train:
        target = [0.0] * len(label_set)
        target[label_set.index(ex.label)] = 1.0
        rows.append((join_pair(ex.pair, backend.separator_token), target))
    lr = backend.default_lr if config.lr is None else config.lr
    classifier.train(rows, config.steps, config.batch, lr, seed)
    return classifier


def finetune_predict(
    classifier: TextClassifier, pair: SentencePair, separator: str
) -> tuple[str, np.ndarray]:
    """Predicted label plus raw scores for one pair."""
    scores = classifier.predict(join_pair(pair, separator))
    return classifier.labels[argmax_lowest(scores)], scores


def run_finetune(
    config: FinetuneConfig,
    train: Dataset,
    test: Dataset,
    backend: Backend,
    seed: int = 0,
) -> tuple[TextClassifier, EvalReport]:
    """Train on train, evaluate on test."""
    classifier = finetune(config, train, backend, seed)
    golds = [ex.label for ex in test]
    preds = [
        finetune_predict(classifier, ex.pair, backend.separator_token)[0] for ex in test
    ]
    return classifier, evaluate_predictions(golds, preds, train.label_set.labels)

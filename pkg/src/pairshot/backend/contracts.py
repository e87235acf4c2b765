"""Protocols every model backend must satisfy.

Engines only talk to these interfaces.  The bundled toy backend and the
line-delimited JSON adapter both implement them; a transformer-scale
backend would plug in the same way.
"""

from __future__ import annotations

from typing import Callable, Protocol, Sequence, runtime_checkable

import numpy as np

from ..prompting import ClozeInput


@runtime_checkable
class MaskedScorer(Protocol):
    """Scores candidate tokens for the mask slot of a cloze input."""

    def score(self, cloze: ClozeInput, candidates: Sequence[str]) -> dict[str, float]:
        ...

    def train(
        self,
        rendered: Sequence[tuple[ClozeInput, str]],
        steps: int,
        batch: int,
        lr: float,
        seed: int,
        candidates: Sequence[str] | None = None,
    ) -> None:
        ...


@runtime_checkable
class TextClassifier(Protocol):
    """Maps raw text to a score vector over a fixed label order."""

    labels: tuple[str, ...]

    def predict(self, text: str) -> np.ndarray:
        ...

    def train(
        self,
        rows: Sequence[tuple[str, Sequence[float]]],
        steps: int,
        batch: int,
        lr: float,
        seed: int,
    ) -> None:
        ...


@runtime_checkable
class SentenceEncoder(Protocol):
    """Maps text to a fixed-dimension embedding."""

    dim: int

    def encode(self, text: str) -> np.ndarray:
        ...

    def fit(
        self,
        triplets: Sequence[tuple[str, str, float]],
        epochs: int,
        batch: int,
        lr: float,
        seed: int,
    ) -> None:
        ...


@runtime_checkable
class Backend(Protocol):
    """Factory plus the token/length conventions engines must respect."""

    @property
    def mask_token(self) -> str:
        ...

    @property
    def separator_token(self) -> str:
        ...

    @property
    def default_lr(self) -> float:
        ...

    @property
    def length_fn(self) -> Callable[[str], int]:
        ...

    def create_scorer(self, seed: int = 0) -> MaskedScorer:
        ...

    def create_classifier(self, labels: Sequence[str], seed: int = 0) -> TextClassifier:
        ...

    def create_encoder(self, seed: int = 0) -> SentenceEncoder:
        ...

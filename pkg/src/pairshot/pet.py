"""Prompt-ensemble training with distillation into a plain classifier.

The flow: render every labeled example through several pattern
verbalizer pairs, train one masked scorer per (pattern, seed)
combination, weight each scorer by its accuracy on the labeled data
measured before training, soft-label the unlabeled pool with the
weighted ensemble, then distill everything into a single classifier
trained on soft targets.

Ensemble scores combine as a weighted average,
    s(label | x) = sum_m w_m * s_m(label | x) / sum_m w_m,
and become probabilities through a temperature softmax, where the raw
scores are divided by the temperature before exponentiation.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .backend.contracts import Backend, MaskedScorer, TextClassifier
from .data import Dataset, LabelSet, SentencePair, SoftLabeledExample, join_pair
from .errors import EmptyEnsembleError, NoDataError, ShapeError
from .metrics import EvalReport, evaluate_predictions
from .numerics import argmax_lowest, stable_softmax
from .prompting import PVP, builtin_pvps, render, verbalizer_tokens
from .rng import Rng


@dataclass(frozen=True)
class PetConfig:
    """Knobs for the ensemble-and-distill pipeline.

    lr None means "use the backend default" (0.1 for the toy backend;
    transformer-scale backends would put 1e-5 here).
    """

    pvps: tuple[PVP, ...]
    seeds: tuple[int, ...] = (1, 2, 3)
    mlm_steps: int = 1000
    distill_steps: int = 5000
    batch: int = 16
    lr: float | None = None
    temperature: float = 2.0
    max_len: int = 256

    def __post_init__(self) -> None:
        object.__setattr__(self, "pvps", tuple(self.pvps))
        object.__setattr__(self, "seeds", tuple(self.seeds))
        if not self.pvps:
            raise ValueError("PetConfig needs at least one pattern verbalizer pair")
        if not self.seeds:
            raise ValueError("PetConfig needs at least one seed")
        if self.mlm_steps < 0 or self.distill_steps < 0:
            raise ValueError("step counts must be non-negative")
        if self.batch <= 0 or self.max_len <= 0:
            raise ValueError("batch and max_len must be positive")
        if self.temperature <= 0:
            raise ValueError("temperature must be positive")

    @staticmethod
    def for_task(task_id: str, **overrides) -> "PetConfig":
        """Config preloaded with the built-in patterns of a task."""
        return PetConfig(pvps=tuple(builtin_pvps(task_id)), **overrides)


@dataclass
class EnsembleMember:
    """One trained scorer: its pattern, its seed, and its fixed weight."""

    pvp: PVP
    seed: int
    model: MaskedScorer
    weight: float


def soften(scores: Sequence[float], temperature: float) -> np.ndarray:
    """Temperature softmax: softmax(scores / temperature).

    Stable under additive shifts of the scores and order-preserving for
    any positive temperature.
    """
    if temperature <= 0:
        raise ValueError("temperature must be positive")
    return stable_softmax(np.asarray(scores, dtype=np.float64) / temperature)


def aggregate_scores(weights: Sequence[float], score_rows: Sequence[Sequence[float]]) -> np.ndarray:
    """Weight-averaged label scores across ensemble members.

    All-zero weights fall back to a uniform average with a warning;
    zero-weight members never influence the result.
    """
    if len(weights) == 0:
        raise EmptyEnsembleError("cannot aggregate zero ensemble members")
    if len(weights) != len(score_rows):
        raise ShapeError(f"{len(weights)} weights vs {len(score_rows)} score rows")
    rows = np.asarray(score_rows, dtype=np.float64)
    if rows.ndim != 2:
        raise ShapeError("score rows must share one label dimension")
    w = np.asarray(weights, dtype=np.float64)
    if (w < 0).any():
        raise ValueError("member weights must be non-negative")
    total = w.sum()
    if total == 0:
        warnings.warn("all ensemble weights are zero; falling back to uniform weighting")
        w = np.ones_like(w)
        total = w.sum()
    return (w[:, None] * rows).sum(axis=0) / total


def member_label_scores(
    member_model: MaskedScorer,
    pvp: PVP,
    pair: SentencePair,
    label_set: LabelSet,
    config: PetConfig,
    backend: Backend,
) -> np.ndarray:
    """One member's verbalizer-token scores for a pair, in label order."""
    tokens = verbalizer_tokens(pvp, label_set)
    cloze = render(
        pvp, pair, config.max_len, backend.length_fn, backend.mask_token, backend.separator_token
    )
    scored = member_model.score(cloze, tokens)
    return np.asarray([scored[tok] for tok in tokens], dtype=np.float64)


def untrained_accuracy(
    model: MaskedScorer,
    pvp: PVP,
    train: Dataset,
    config: PetConfig,
    backend: Backend,
) -> float:
    """Accuracy of a scorer on the labeled data, used as its ensemble weight.

    Called before training; argmax ties resolve to the lowest label
    index, so an all-zero scorer predicts the first label everywhere.
    """
    if not len(train):
        raise NoDataError("cannot weight a member against an empty training set")
    hits = 0
    for ex in train:
        scores = member_label_scores(model, pvp, ex.pair, train.label_set, config, backend)
        if train.label_set.labels[argmax_lowest(scores)] == ex.label:
            hits += 1
    return hits / len(train)


def _resolve_lr(config_lr: float | None, backend: Backend) -> float:
    return backend.default_lr if config_lr is None else config_lr


def train_ensemble(
    config: PetConfig,
    train: Dataset,
    backend: Backend,
    seed: int = 0,
) -> list[EnsembleMember]:
    """Train one scorer per (pattern, config seed); weight before training.

    The member's effective training seed mixes the run seed with the
    configured seed so replicate runs decorrelate while the 3x3
    structure stays intact.
    """
    if not len(train):
        raise NoDataError("cannot train an ensemble on an empty dataset")
    lr = _resolve_lr(config.lr, backend)
    members: list[EnsembleMember] = []
    for pvp in config.pvps:
        tokens = verbalizer_tokens(pvp, train.label_set)
        for config_seed in config.seeds:
            member_seed = Rng(seed).derive("member", pvp.id, config_seed).next_u64()
            model = backend.create_scorer(member_seed)
            weight = untrained_accuracy(model, pvp, train, config, backend)
            rendered = [
                (
                    render(
                        pvp,
                        ex.pair,
                        config.max_len,
                        backend.length_fn,
                        backend.mask_token,
                        backend.separator_token,
                    ),
                    pvp.verbalizer[ex.label],
                )
                for ex in train
            ]
            model.train(rendered, config.mlm_steps, config.batch, lr, member_seed, tokens)
            members.append(EnsembleMember(pvp, config_seed, model, weight))
    return members


def ensemble_scores(
    members: Sequence[EnsembleMember],
    pair: SentencePair,
    label_set: LabelSet,
    config: PetConfig,
    backend: Backend,
) -> np.ndarray:
    """Aggregated label scores of the whole ensemble for one pair."""
    if not members:
        raise EmptyEnsembleError("cannot score with zero ensemble members")
    rows = [
        member_label_scores(m.model, m.pvp, pair, label_set, config, backend) for m in members
    ]
    return aggregate_scores([m.weight for m in members], rows)


def ensemble_predict(
    members: Sequence[EnsembleMember],
    pair: SentencePair,
    label_set: LabelSet,
    config: PetConfig,
    backend: Backend,
) -> str:
    """Ensemble argmax label for one pair (ties to the lowest index)."""
    scores = ensemble_scores(members, pair, label_set, config, backend)
    return label_set.labels[argmax_lowest(scores)]


def soft_label(
    members: Sequence[EnsembleMember],
    unlabeled: Dataset,
    label_set: LabelSet,
    config: PetConfig,
    backend: Backend,
) -> list[SoftLabeledExample]:
    """Temperature-softened ensemble distributions for an unlabeled pool."""
    out: list[SoftLabeledExample] = []
    for ex in unlabeled:
        scores = ensemble_scores(members, ex.pair, label_set, config, backend)
        dist = soften(scores, config.temperature)
        out.append(SoftLabeledExample(ex.pair, tuple(float(p) for p in dist)))
    return out


def _onehot(index: int, size: int) -> tuple[float, ...]:
    row = [0.0] * size
    row[index] = 1.0
    return tuple(row)


def _distill_rows(
    train: Dataset,
    softened: Sequence[SoftLabeledExample],
    separator: str,
) -> list[tuple[str, Sequence[float]]]:
    label_set = train.label_set
    rows: list[tuple[str, Sequence[float]]] = [
        (join_pair(ex.pair, separator), _onehot(label_set.index(ex.label), len(label_set)))
        for ex in train
    ]
    rows.extend((join_pair(s.pair, separator), s.distribution) for s in softened)
    return rows


def distill(
    members: Sequence[EnsembleMember],
    train: Dataset,
    unlabeled: Dataset | None,
    config: PetConfig,
    classifier: TextClassifier,
    backend: Backend,
    seed: int = 0,
) -> TextClassifier:
    """Train a classifier on labeled one-hots plus soft-labeled unlabeled data.

    Labeled rows keep exact one-hot targets (no temperature); only the
    unlabeled pool receives softened ensemble distributions.  The union
    is mixed uniformly by the trainer's per-pass shuffle, so with an
    empty unlabeled pool this reduces exactly to fine-tuning on the
    labeled data under the same seed and step count.
    """
    if not len(train):
        raise NoDataError("distillation needs labeled examples")
    softened = (
        soft_label(members, unlabeled, train.label_set, config, backend)
        if unlabeled is not None and len(unlabeled)
        else []
    )
    rows = _distill_rows(train, softened, backend.separator_token)
    lr = _resolve_lr(config.lr, backend)
    classifier.train(rows, config.distill_steps, config.batch, lr, seed)
    return classifier


@dataclass
class PetRunResult:
    """Everything a PET run produces: the model, reports, diagnostics."""

    classifier: TextClassifier
    report: EvalReport
    ensemble_report: EvalReport | None
    member_weights: list[dict]
    pvp_untrained_accuracy: dict[str, list[float]]
    soft_labeled: int
    metadata: dict


def classifier_predict_label(classifier: TextClassifier, pair: SentencePair, separator: str) -> str:
    scores = classifier.predict(join_pair(pair, separator))
    return classifier.labels[argmax_lowest(scores)]


def run_pet(
    config: PetConfig,
    train: Dataset,
    unlabeled: Dataset | None,
    test: Dataset,
    backend: Backend,
    seed: int = 0,
    evaluate_ensemble: bool = False,
    artifacts_dir: str | Path | None = None,
) -> PetRunResult:
    """Full pipeline: ensemble, soft-label, distill, evaluate.

    With artifacts_dir set, writes member weights, the soft-labeled
    pool, the distilled classifier state, and run metadata there.
    """
    members = train_ensemble(config, train, backend, seed)
    label_set = train.label_set
    classifier = backend.create_classifier(label_set.labels, Rng(seed).derive("distill").next_u64())
    distill_seed = Rng(seed).derive("distill-order").next_u64()
    softened = (
        soft_label(members, unlabeled, label_set, config, backend)
        if unlabeled is not None and len(unlabeled)
        else []
    )
    rows = _distill_rows(train, softened, backend.separator_token)
    lr = _resolve_lr(config.lr, backend)
    classifier.train(rows, config.distill_steps, config.batch, lr, distill_seed)

    golds = [ex.label for ex in test]
    preds = [classifier_predict_label(classifier, ex.pair, backend.separator_token) for ex in test]
    report_distilled = evaluate_predictions(golds, preds, label_set.labels)

    ensemble_report = None
    if evaluate_ensemble:
        ens_preds = [ensemble_predict(members, ex.pair, label_set, config, backend) for ex in test]
        ensemble_report = evaluate_predictions(golds, ens_preds, label_set.labels)

    member_weights = [
        {"pvp": m.pvp.id, "seed": m.seed, "weight": m.weight} for m in members
    ]
    pvp_untrained: dict[str, list[float]] = {}
    for m in members:
        pvp_untrained.setdefault(m.pvp.id, []).append(m.weight)
    metadata = {
        "temperature": config.temperature,
        "temperature_interpretation": "scores divided by temperature before softmax",
        "mlm_steps": config.mlm_steps,
        "distill_steps": config.distill_steps,
        "batch": config.batch,
        "lr": lr,
        "max_len": config.max_len,
        "seed": seed,
        "members": len(members),
        "labeled": len(train),
        "unlabeled": len(softened),
    }
    result = PetRunResult(
        classifier=classifier,
        report=report_distilled,
        ensemble_report=ensemble_report,
        member_weights=member_weights,
        pvp_untrained_accuracy=pvp_untrained,
        soft_labeled=len(softened),
        metadata=metadata,
    )
    if artifacts_dir is not None:
        _write_artifacts(result, softened, label_set, Path(artifacts_dir))
    return result


def _write_artifacts(
    result: PetRunResult,
    softened: list[SoftLabeledExample],
    label_set: LabelSet,
    out: Path,
) -> None:
    from .backend.state import model_to_payload

    out.mkdir(parents=True, exist_ok=True)
    (out / "member_weights.json").write_text(
        json.dumps(
            {
                "member_weights": result.member_weights,
                "pvp_untrained_accuracy": result.pvp_untrained_accuracy,
            },
            indent=2,
            sort_keys=True,
        ),
        encoding="utf-8",
    )
    with (out / "soft_labeled.jsonl").open("w", encoding="utf-8") as fh:
        for soft in softened:
            fh.write(
                json.dumps(
                    {
                        "u": soft.pair.u,
                        "v": soft.pair.v,
                        "distribution": {
                            lab: p for lab, p in zip(label_set.labels, soft.distribution)
                        },
                    },
                    ensure_ascii=False,
                )
                + "\n"
            )
    try:
        payload = model_to_payload(result.classifier)
    except TypeError:
        payload = {"note": "classifier backend does not support state export"}
    (out / "classifier.json").write_text(json.dumps(payload, sort_keys=True), encoding="utf-8")
    (out / "metadata.json").write_text(
        json.dumps(result.metadata, indent=2, sort_keys=True), encoding="utf-8"
    )

"""Few-shot sentence-pair classification with prompt ensembles,
contrastive encoder tuning, and plain fine-tuning, plus the data
plumbing (ingestion, leakage-free splits, metrics, sweeps) around them.
"""

from .data import (
    Dataset,
    LabeledExample,
    LabelSet,
    SentencePair,
    SoftLabeledExample,
    join_pair,
    load_dataset,
    normalize_sentence,
    sample_training_set,
    save_dataset,
    split_no_leakage,
    validate_dataset,
)
from .errors import (
    BudgetError,
    DataFormatError,
    DatasetSizeError,
    EmptyEnsembleError,
    EvalError,
    InfeasibleSplitError,
    InfeasibleTripletsError,
    IngestError,
    NoDataError,
    NumericError,
    PairshotError,
    ParseError,
    ShapeError,
    UnknownTaskError,
    VerbalizerError,
    VocabularyError,
)
from .finetune import FinetuneConfig, finetune, finetune_predict, run_finetune
from .harness import (
    ExperimentConfig,
    SweepResult,
    build_backend,
    emit_table,
    render_comparison,
    replicate_seed,
    run_sweep,
    save_sweep,
)
from .metrics import (
    ConfusionMatrix,
    EvalReport,
    ReplicateSummary,
    aggregate_replicates,
    confusion,
    evaluate_predictions,
    format_mean_std,
    report,
)
from .pet import (
    PetConfig,
    PetRunResult,
    aggregate_scores,
    distill,
    run_pet,
    soften,
    train_ensemble,
)
from .prompting import (
    PVP,
    ClozeInput,
    PatternTemplate,
    Segment,
    builtin_label_set,
    builtin_pvps,
    builtin_task_ids,
    render,
    verbalizer_tokens,
)
from .rng import Rng
from .setfit import (
    ContrastiveTriplet,
    SetFitConfig,
    SetFitModel,
    generate_contrastive,
    run_setfit,
    setfit_fit,
    setfit_predict,
)

__version__ = "0.1.0"

__all__ = [
    "BudgetError",
    "ClozeInput",
    "ConfusionMatrix",
    "ContrastiveTriplet",
    "DataFormatError",
    "Dataset",
    "DatasetSizeError",
    "EmptyEnsembleError",
    "EvalError",
    "EvalReport",
    "ExperimentConfig",
    "FinetuneConfig",
    "InfeasibleSplitError",
    "InfeasibleTripletsError",
    "IngestError",
    "LabelSet",
    "LabeledExample",
    "NoDataError",
    "NumericError",
    "PVP",
    "PairshotError",
    "ParseError",
    "PatternTemplate",
    "PetConfig",
    "PetRunResult",
    "ReplicateSummary",
    "Rng",
    "Segment",
    "SentencePair",
    "SetFitConfig",
    "SetFitModel",
    "ShapeError",
    "SoftLabeledExample",
    "SweepResult",
    "UnknownTaskError",
    "VerbalizerError",
    "VocabularyError",
    "aggregate_replicates",
    "aggregate_scores",
    "build_backend",
    "builtin_label_set",
    "builtin_pvps",
    "builtin_task_ids",
    "confusion",
    "distill",
    "emit_table",
    "evaluate_predictions",
    "finetune",
    "finetune_predict",
    "format_mean_std",
    "generate_contrastive",
    "join_pair",
    "load_dataset",
    "normalize_sentence",
    "render",
    "render_comparison",
    "replicate_seed",
    "report",
    "run_finetune",
    "run_pet",
    "run_setfit",
    "run_sweep",
    "sample_training_set",
    "save_dataset",
    "save_sweep",
    "setfit_fit",
    "setfit_predict",
    "soften",
    "split_no_leakage",
    "train_ensemble",
    "validate_dataset",
    "verbalizer_tokens",
]

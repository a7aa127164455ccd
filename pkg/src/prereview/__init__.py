"""prereview: forecast privacy concerns for upcoming app releases.

The pipeline learns feature-to-review associations from past releases,
simulates reviews for unreleased candidate features, summarises them into
short privacy issues, and compares the forecast against a post-release
baseline with cumulative overlap metrics.
"""

__version__ = "0.1.0"

from .classify import (
    ClassificationResult,
    ClassifierMetrics,
    KeywordClassifierBackend,
    TrainingRecipe,
    classify_batch,
    ensemble_decide,
    evaluate_classifier,
    train_backend,
)
from .corpus import (
    CorpusSplit,
    Feature,
    Month,
    ReleaseInstance,
    Review,
    align_reviews,
    build_release_instances,
    load_features,
    load_reviews,
    split_groups,
)
from .evaluate import (
    AgreementStats,
    IssueMatcher,
    OverlapSeries,
    agreement_stats,
    build_overlap_series,
    cohen_kappa,
    match_common,
    overlap_ratios,
    percent_agreement,
    temporal_overlap_ratios,
)
from .issues import (
    Issue,
    IssueAnnotation,
    IssueGenConfig,
    canonicalize_issue,
    finetune_issue_model,
    generate_issues,
    load_annotations,
)
from .ledgers import (
    METHOD_BASELINE,
    METHOD_PREDICTED,
    MethodIssueLedger,
    run_baseline,
    run_predicted,
)
from .mapping import (
    EmbeddingCache,
    FeatureReviewPair,
    HashEmbeddingBackend,
    build_training_pairs,
    cosine,
    embed_batch,
    map_feature,
    map_features,
)
from .pipeline import RunConfig, RunDirectory
from .simulate import (
    DecodeConfig,
    SimulatedReview,
    SimulatorConfig,
    finetune_simulator,
    simulate_reviews,
)

__all__ = [
    "__version__",
    "AgreementStats",
    "ClassificationResult",
    "ClassifierMetrics",
    "CorpusSplit",
    "DecodeConfig",
    "EmbeddingCache",
    "Feature",
    "FeatureReviewPair",
    "HashEmbeddingBackend",
    "Issue",
    "IssueAnnotation",
    "IssueGenConfig",
    "IssueMatcher",
    "KeywordClassifierBackend",
    "METHOD_BASELINE",
    "METHOD_PREDICTED",
    "MethodIssueLedger",
    "Month",
    "OverlapSeries",
    "ReleaseInstance",
    "Review",
    "RunConfig",
    "RunDirectory",
    "SimulatedReview",
    "SimulatorConfig",
    "TrainingRecipe",
    "agreement_stats",
    "align_reviews",
    "build_overlap_series",
    "build_release_instances",
    "build_training_pairs",
    "canonicalize_issue",
    "classify_batch",
    "cohen_kappa",
    "cosine",
    "embed_batch",
    "ensemble_decide",
    "evaluate_classifier",
    "finetune_issue_model",
    "finetune_simulator",
    "generate_issues",
    "load_annotations",
    "load_features",
    "load_reviews",
    "map_feature",
    "map_features",
    "match_common",
    "overlap_ratios",
    "percent_agreement",
    "run_baseline",
    "run_predicted",
    "simulate_reviews",
    "split_groups",
    "temporal_overlap_ratios",
    "train_backend",
]

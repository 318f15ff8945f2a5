"""gramscore: zero-shot grammar competency scoring.

Score unlabeled spoken or written responses on a five-point grammar rubric
without hand labels: a rubric-prompted language model produces noisy pseudo
scores, a regression model trains on them under adaptive small-loss sample
reweighting, agreement with expert-style ratings is measured with
QWK/PLCC/SRCC/RMSE, and robustness is stress-tested with controlled
grammatical error injection.

The ``demos/`` directory of the repository walks through each capability;
the ``gramscore`` CLI drives the same pipeline from the shell.
"""

__version__ = "0.1.0"

from .dataset import (
    Dataset,
    Provenance,
    Sample,
    check_split_integrity,
    load_dataset,
    save_dataset,
    score_histogram,
)
from .exceptions import (
    ConfigurationError,
    GramscoreError,
    OutOfRangeScore,
    ParseFailure,
    TrainingDivergenceError,
    UndefinedCorrelationError,
    ValidationError,
)
from .injection import (
    ALL_ERROR_TYPES,
    CorruptionRecord,
    CorruptionResult,
    Edit,
    ErrorSpec,
    ErrorType,
    apply_edits,
    build_synthetic_suite,
    inject,
    load_suite,
    robustness_report,
    save_suite,
)
from .metrics import (
    AgreementReport,
    agreement_report,
    evaluate,
    plcc,
    qwk,
    rmse,
    srcc,
)
from .model import (
    FeaturizerConfig,
    FeaturizerRegressor,
    RegressionModel,
    load_model,
    recommended_learning_rate,
    save_model,
)
from .pseudolabel import (
    LLMClient,
    LiveLLMClient,
    MockLLMClient,
    PseudoLabelCache,
    RubricPrompt,
    build_prompt,
    default_rubric_text,
    mock_client,
    parse_score,
    pseudo_label_dataset,
)
from .synthetic import corrupt_labels, generate_corpus, make_clean_text
from .textfeatures import (
    FEATURE_NAMES,
    error_marker_density,
    extract_features,
    marker_densities,
    rule_score,
)
from .trainer import (
    CleanSet,
    LossRecord,
    SampleWeights,
    TrainConfig,
    TrainHistory,
    init_weights,
    per_sample_losses,
    select_clean,
    train,
    update_weights,
)

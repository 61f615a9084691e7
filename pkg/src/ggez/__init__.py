"""gg-ez: regional adaptation around model training.

Filter a corpus down to high-quality regional examples, interpolate a
regionally fine-tuned checkpoint back into its global base, and pick the
interpolation weight that best balances global and regional quality.
"""

from .checkpoint import Checkpoint, TensorRecord, load_checkpoint, save_checkpoint
from .corpus import CorpusRecord, read_jsonl, write_jsonl
from .errors import (
    ConfigError,
    DataError,
    ExternalToolError,
    GgezError,
)
from .filtering import FilterConfig, build_filtered_set, regional_filter, score_rewards
from .harness import (
    AgreementReport,
    BreakdownReport,
    HumanItemScores,
    MetricRow,
    average_rank,
    build_breakdown,
    minmax_normalize,
    pairwise_agreement,
)
from .merge import (
    CommandEvaluator,
    LookupEvaluator,
    MergeReport,
    SweepResult,
    build_merge_report,
    merge_files,
    merge_linear,
    sweep_beta,
)
from .mixing import MixManifest, build_sft_mix
from .parity import (
    GlobalizationTable,
    GrpConfig,
    QualitySet,
    aggregate_quality,
    best_parity_select,
    compute_grp,
    derive_alpha,
)
from .regions import RegionPartition, sea_partition
from .translation import (
    TranslationPlan,
    execute_translations,
    plan_translations,
    translate_corpus,
)

__version__ = "0.1.0"

__all__ = [
    "AgreementReport",
    "BreakdownReport",
    "Checkpoint",
    "CommandEvaluator",
    "ConfigError",
    "CorpusRecord",
    "DataError",
    "ExternalToolError",
    "FilterConfig",
    "GgezError",
    "GlobalizationTable",
    "GrpConfig",
    "HumanItemScores",
    "LookupEvaluator",
    "MergeReport",
    "MetricRow",
    "MixManifest",
    "QualitySet",
    "RegionPartition",
    "SweepResult",
    "TensorRecord",
    "TranslationPlan",
    "aggregate_quality",
    "average_rank",
    "best_parity_select",
    "build_breakdown",
    "build_filtered_set",
    "build_merge_report",
    "build_sft_mix",
    "compute_grp",
    "derive_alpha",
    "execute_translations",
    "load_checkpoint",
    "merge_files",
    "merge_linear",
    "minmax_normalize",
    "pairwise_agreement",
    "plan_translations",
    "read_jsonl",
    "regional_filter",
    "save_checkpoint",
    "score_rewards",
    "sea_partition",
    "sweep_beta",
    "translate_corpus",
    "write_jsonl",
]

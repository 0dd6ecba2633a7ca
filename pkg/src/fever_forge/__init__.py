"""fever-forge: adversarial claim generation, scoring, and review tooling
for fact-verification datasets."""

__version__ = "0.1.0"

from .corpus import (
    EvidenceCombination,
    EvidenceSentenceId,
    Instance,
    Label,
    LabeledPrediction,
    Prediction,
    WikiSnapshot,
    load_dataset,
    load_predictions,
    load_wiki_snapshot,
)
from .errors import FeverForgeError
from .rule_engine import (
    DEFAULT_RULES_PATH,
    GeneratedInstance,
    Rule,
    RuleSet,
    TransformationClass,
    apply_rule,
    generate_adversarial_dataset,
    parse_ruleset,
)
from .scorer import (
    EvidenceReport,
    ScoreReport,
    evidence_correct,
    evidence_prf,
    fever_score,
    instance_correct,
)
from .tournament import (
    BreakerSubmission,
    SystemEntry,
    adjusted_potency,
    balance_classes,
    breaker_leaderboard,
    potency,
    resilience,
    stratified_sample,
    system_leaderboard,
)

__all__ = [
    "__version__",
    "FeverForgeError",
    "Label",
    "EvidenceSentenceId",
    "EvidenceCombination",
    "Instance",
    "Prediction",
    "LabeledPrediction",
    "WikiSnapshot",
    "load_dataset",
    "load_predictions",
    "load_wiki_snapshot",
    "DEFAULT_RULES_PATH",
    "Rule",
    "RuleSet",
    "TransformationClass",
    "GeneratedInstance",
    "parse_ruleset",
    "apply_rule",
    "generate_adversarial_dataset",
    "ScoreReport",
    "EvidenceReport",
    "evidence_correct",
    "instance_correct",
    "fever_score",
    "evidence_prf",
    "BreakerSubmission",
    "SystemEntry",
    "balance_classes",
    "stratified_sample",
    "potency",
    "adjusted_potency",
    "resilience",
    "breaker_leaderboard",
    "system_leaderboard",
]

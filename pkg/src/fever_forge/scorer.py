"""Scoring for fact-verification predictions.

An instance scores as correct when the predicted label matches the gold
label AND either the gold label is NOT_ENOUGH_INFO (exempt from the
evidence requirement) or at least one gold evidence combination is
contained in its entirety in the predicted evidence. The headline score is
the mean of that indicator; label accuracy is the mean of the bare
label-match indicator, so the headline score can never exceed it.

Predicted evidence is truncated to the first `max_evidence` sentences
(default 5) before the containment check. Sentence-level evidence
precision/recall are macro-averaged over instances whose gold label is not
NOT_ENOUGH_INFO and are computed on untruncated predictions.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence

from .corpus import EvidenceCombination, EvidenceSentenceId, Label, LabeledPrediction
from .errors import FeverForgeError
from .rule_engine import TransformationClass

DEFAULT_MAX_EVIDENCE = 5

#: Breakdown bucket for instances with no generation provenance.
ORIGINAL_BUCKET = "original"


class ScoringError(FeverForgeError):
    """Raised for unscoreable inputs (e.g. an empty prediction set)."""


@dataclass(frozen=True)
class ScoreReport:
    """Headline verification scores over one set of predictions."""

    fever_score: float
    label_accuracy: float
    n: int

    def __post_init__(self):
        if self.fever_score > self.label_accuracy + 1e-12:
            raise ScoringError(
                f"fever_score {self.fever_score} exceeds label_accuracy "
                f"{self.label_accuracy}; the evidence requirement can only "
                f"remove credit")

    def as_dict(self) -> dict:
        return {
            "fever_score": self.fever_score,
            "label_accuracy": self.label_accuracy,
            "n": self.n,
        }


@dataclass(frozen=True)
class EvidenceReport:
    """Sentence-level evidence retrieval quality (macro-averaged)."""

    precision: float
    recall: float
    f1: float
    true_positives: int
    predicted_sentences: int
    gold_sentences: int

    def as_dict(self) -> dict:
        return {
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "true_positives": self.true_positives,
            "predicted_sentences": self.predicted_sentences,
            "gold_sentences": self.gold_sentences,
        }


def evidence_correct(gold: Sequence[EvidenceCombination],
                     predicted: Iterable[EvidenceSentenceId]) -> bool:
    """True iff some gold combination is fully contained in `predicted`.

    Disjunction over combinations, conjunction within a combination; an
    empty gold list is an empty disjunction, hence False.
    """
    predicted_set = set(predicted)
    return any(combo.sentences <= predicted_set for combo in gold)


def _truncated(pred_evidence: Sequence[EvidenceSentenceId],
               max_evidence: Optional[int]) -> Sequence[EvidenceSentenceId]:
    if max_evidence is None:
        return pred_evidence
    return pred_evidence[:max_evidence]


def instance_correct(lp: LabeledPrediction,
                     max_evidence: Optional[int] = DEFAULT_MAX_EVIDENCE) -> bool:
    """Label match AND (NEI exemption OR a complete gold combination within
    the first `max_evidence` predicted sentences)."""
    if lp.gold.label is not lp.pred.predicted_label:
        return False
    if lp.gold.label is Label.NOT_ENOUGH_INFO:
        return True
    return evidence_correct(lp.gold.evidence,
                            _truncated(lp.pred.predicted_evidence, max_evidence))


def fever_score(preds: Sequence[LabeledPrediction],
                max_evidence: Optional[int] = DEFAULT_MAX_EVIDENCE) -> ScoreReport:
    """Mean instance-correct indicator plus bare label accuracy."""
    if not preds:
        raise ScoringError("cannot score an empty prediction set")
    correct = sum(1 for lp in preds if instance_correct(lp, max_evidence))
    label_hits = sum(1 for lp in preds
                     if lp.gold.label is lp.pred.predicted_label)
    n = len(preds)
    return ScoreReport(fever_score=correct / n, label_accuracy=label_hits / n, n=n)


def evidence_prf(preds: Sequence[LabeledPrediction]) -> EvidenceReport:
    """Macro-averaged sentence precision/recall over non-NEI instances.

    Per instance: a predicted sentence is a true positive iff it appears in
    any gold combination; precision = TP / predicted (0 when nothing is
    predicted, since non-NEI gold always requires evidence); recall =
    TP / |union of gold sentences|. F1 is computed from the macro P and R.
    """
    if not preds:
        raise ScoringError("cannot score an empty prediction set")
    precisions: list[float] = []
    recalls: list[float] = []
    tp_total = predicted_total = gold_total = 0
    for lp in preds:
        if lp.gold.label is Label.NOT_ENOUGH_INFO:
            continue
        gold_union = lp.gold.gold_sentence_union()
        predicted = set(lp.pred.predicted_evidence)
        tp = len(predicted & gold_union)
        tp_total += tp
        predicted_total += len(predicted)
        gold_total += len(gold_union)
        precisions.append(tp / len(predicted) if predicted else 0.0)
        recalls.append(tp / len(gold_union))
    if not precisions:
        return EvidenceReport(0.0, 0.0, 0.0, 0, 0, 0)
    precision = sum(precisions) / len(precisions)
    recall = sum(recalls) / len(recalls)
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return EvidenceReport(precision=precision, recall=recall, f1=f1,
                          true_positives=tp_total,
                          predicted_sentences=predicted_total,
                          gold_sentences=gold_total)


def breakdown_by_class(
    preds: Sequence[LabeledPrediction],
    provenance: Mapping[str, TransformationClass],
    max_evidence: Optional[int] = DEFAULT_MAX_EVIDENCE,
) -> dict[str, ScoreReport]:
    """Score slices keyed by transformation class (wire name).

    Instances with no provenance entry are grouped under ORIGINAL_BUCKET.
    Empty buckets are omitted.
    """
    buckets: dict[str, list[LabeledPrediction]] = {}
    for lp in preds:
        cls = provenance.get(lp.gold.id)
        key = cls.value if cls is not None else ORIGINAL_BUCKET
        buckets.setdefault(key, []).append(lp)
    return {key: fever_score(bucket, max_evidence)
            for key, bucket in sorted(buckets.items())}


def delta_report(before: ScoreReport, after: ScoreReport) -> dict:
    """Signed differences (after − before), the Before/After/Delta layout."""
    return {
        "fever_score": after.fever_score - before.fever_score,
        "label_accuracy": after.label_accuracy - before.label_accuracy,
    }

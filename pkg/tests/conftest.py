"""Shared fixtures: the demo corpus, its wiki snapshot, and the default ruleset."""

from __future__ import annotations

from pathlib import Path

import pytest

from fever_forge.corpus import (
    EvidenceCombination,
    EvidenceSentenceId,
    Instance,
    Label,
    LabeledPrediction,
    Prediction,
    WikiSnapshot,
    load_dataset,
    load_wiki_snapshot,
)
from fever_forge.rule_engine import DEFAULT_RULES_PATH, RuleSet, parse_ruleset

FIXTURES = Path(__file__).parent / "fixtures"
DEMO_DATASET = FIXTURES / "demo" / "dataset.jsonl"
DEMO_WIKI = FIXTURES / "demo" / "wiki.jsonl"


@pytest.fixture(scope="session")
def ruleset() -> RuleSet:
    return parse_ruleset(DEFAULT_RULES_PATH)


@pytest.fixture(scope="session")
def demo_dataset() -> list[Instance]:
    return list(load_dataset(DEMO_DATASET))


@pytest.fixture(scope="session")
def demo_wiki() -> WikiSnapshot:
    return load_wiki_snapshot(DEMO_WIKI)


def sid(page: str, line: int) -> EvidenceSentenceId:
    return EvidenceSentenceId(page=page, line=line)


def combo(*pairs: tuple[str, int]) -> EvidenceCombination:
    return EvidenceCombination(frozenset(sid(p, l) for p, l in pairs))


def make_instance(iid: str, label: Label, combos: list[list[tuple[str, int]]],
                  claim: str = "placeholder claim") -> Instance:
    return Instance(id=iid, claim=claim, label=label,
                    evidence=tuple(combo(*c) for c in combos))


def make_pred(iid: str, label: Label,
              evidence: list[tuple[str, int]] = ()) -> Prediction:
    return Prediction(instance_id=iid, predicted_label=label,
                      predicted_evidence=tuple(sid(p, l) for p, l in evidence))


def pair(gold: Instance, label: Label,
         evidence: list[tuple[str, int]] = ()) -> LabeledPrediction:
    return LabeledPrediction(gold=gold, pred=make_pred(gold.id, label, evidence))

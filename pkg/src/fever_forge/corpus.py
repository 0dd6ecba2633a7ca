"""Data model and JSON-lines ingestion for claims, predictions, and the
Wikipedia sentence snapshot.

This module is the single source of truth for instance identity and
evidence-sentence identity. Everything it loads is immutable afterward and
safe to share across threads.

File formats (one JSON object per line):

* dataset:     ``{"id", "claim", "label", "evidence": [[[page, line], ...], ...]}``
* predictions: ``{"id", "predicted_label", "predicted_evidence": [[page, line], ...]}``
* snapshot:    ``{"title", "lines": [sentence, ...]}``

Labels accept both FEVER spellings ("SUPPORTS"/"SUPPORTED", etc.) and are
normalized internally.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Iterator
from urllib.parse import unquote

from .errors import FeverForgeError

logger = logging.getLogger(__name__)


class DatasetError(FeverForgeError):
    """Malformed input; carries the offending path/line when known."""

    def __init__(self, message: str, path: str | Path | None = None,
                 line: int | None = None):
        prefix = ""
        if path is not None and line is not None:
            prefix = f"{path}:{line}: "
        elif path is not None:
            prefix = f"{path}: "
        elif line is not None:
            prefix = f"line {line}: "
        super().__init__(prefix + message)
        self.path = str(path) if path is not None else None
        self.line = line


class EvidenceLookupError(FeverForgeError, LookupError):
    """A (page, line) evidence id does not resolve in the snapshot."""


class Label(Enum):
    SUPPORTED = "SUPPORTED"
    REFUTED = "REFUTED"
    NOT_ENOUGH_INFO = "NOT_ENOUGH_INFO"


_LABEL_ALIASES = {
    "SUPPORTS": Label.SUPPORTED,
    "SUPPORTED": Label.SUPPORTED,
    "REFUTES": Label.REFUTED,
    "REFUTED": Label.REFUTED,
    "NOT ENOUGH INFO": Label.NOT_ENOUGH_INFO,
    "NOT_ENOUGH_INFO": Label.NOT_ENOUGH_INFO,
}


def parse_label(raw: object) -> Label:
    """Parse either spelling of the three verdict labels; anything else errors."""
    if isinstance(raw, Label):
        return raw
    if isinstance(raw, str) and raw.strip().upper() in _LABEL_ALIASES:
        return _LABEL_ALIASES[raw.strip().upper()]
    raise ValueError(f"unknown label {raw!r} (expected one of "
                     f"{sorted(set(_LABEL_ALIASES))})")


def canonical_title(title: str) -> str:
    """Canonical page key: percent-decode one level, then spaces become
    underscores. Case is preserved."""
    return unquote(title).replace(" ", "_")


@dataclass(frozen=True, order=True)
class EvidenceSentenceId:
    """Address of one evidence sentence: (canonical page title, line index)."""

    page: str
    line: int

    def __post_init__(self):
        page = canonical_title(self.page)
        if not page:
            raise ValueError("evidence page title must be non-empty")
        if not isinstance(self.line, int) or isinstance(self.line, bool) or self.line < 0:
            raise ValueError(f"evidence line index must be an integer >= 0, got {self.line!r}")
        object.__setattr__(self, "page", page)

    def as_pair(self) -> list:
        return [self.page, self.line]


@dataclass(frozen=True)
class EvidenceCombination:
    """A set of sentences that jointly supports or refutes a claim."""

    sentences: frozenset[EvidenceSentenceId]

    def __post_init__(self):
        sentences = frozenset(self.sentences)
        if not sentences:
            raise ValueError("evidence combination must contain at least one sentence")
        object.__setattr__(self, "sentences", sentences)

    def sorted_sentences(self) -> list[EvidenceSentenceId]:
        return sorted(self.sentences)

    def __len__(self) -> int:
        return len(self.sentences)


@dataclass(frozen=True)
class Instance:
    """A claim with its gold label and acceptable evidence combinations."""

    id: str
    claim: str
    label: Label
    evidence: tuple[EvidenceCombination, ...] = ()

    def __post_init__(self):
        if not self.id:
            raise ValueError("instance id must be non-empty")
        if not self.claim.strip():
            raise ValueError("claim must be non-empty after trimming")
        if self.label is not Label.NOT_ENOUGH_INFO and not self.evidence:
            raise ValueError(
                f"instance {self.id!r}: label {self.label.value} requires at "
                f"least one evidence combination")
        object.__setattr__(self, "evidence", tuple(self.evidence))

    def gold_sentence_union(self) -> frozenset[EvidenceSentenceId]:
        out: set[EvidenceSentenceId] = set()
        for combo in self.evidence:
            out.update(combo.sentences)
        return frozenset(out)


@dataclass(frozen=True)
class Prediction:
    """A system's predicted label and ordered predicted evidence for one claim."""

    instance_id: str
    predicted_label: Label
    predicted_evidence: tuple[EvidenceSentenceId, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "predicted_evidence", tuple(self.predicted_evidence))


@dataclass(frozen=True)
class LabeledPrediction:
    """A prediction joined to its gold instance."""

    gold: Instance
    pred: Prediction

    def __post_init__(self):
        if self.gold.id != self.pred.instance_id:
            raise ValueError(
                f"prediction for {self.pred.instance_id!r} joined to gold "
                f"instance {self.gold.id!r}")


class WikiSnapshot:
    """Read-only mapping from canonical page title to its ordered sentences."""

    def __init__(self, pages: dict[str, tuple[str, ...]]):
        self._pages = {canonical_title(t): tuple(lines) for t, lines in pages.items()}

    def __len__(self) -> int:
        return len(self._pages)

    def __contains__(self, title: str) -> bool:
        return canonical_title(title) in self._pages

    @property
    def page_titles(self) -> list[str]:
        return sorted(self._pages)

    def sentences(self, page: str) -> tuple[str, ...]:
        key = canonical_title(page)
        if key not in self._pages:
            raise EvidenceLookupError(f"page {page!r} not in snapshot")
        return self._pages[key]

    def sentence_count(self, page: str) -> int:
        return len(self.sentences(page))

    def lookup(self, page: str, line: int) -> str:
        lines = self.sentences(page)
        if not 0 <= line < len(lines):
            raise EvidenceLookupError(
                f"page {canonical_title(page)!r} has {len(lines)} sentences; "
                f"line {line} out of range")
        return lines[line]

    def has(self, page: str, line: int) -> bool:
        key = canonical_title(page)
        return key in self._pages and 0 <= line < len(self._pages[key])

    def resolve(self, sid: EvidenceSentenceId) -> str:
        return self.lookup(sid.page, sid.line)

    def missing(self, instances: Iterable[Instance]) -> list[EvidenceSentenceId]:
        """Gold evidence ids (across all combinations) that do not resolve."""
        missing = {
            sid
            for inst in instances
            for combo in inst.evidence
            for sid in combo.sentences
            if not self.has(sid.page, sid.line)
        }
        return sorted(missing)


# ---------------------------------------------------------------------------
# JSON-lines plumbing


def iter_jsonl(path: str | Path) -> Iterator[tuple[int, dict]]:
    """Yield (line_number, object) for every non-blank line of a JSONL file."""
    path = Path(path)
    with open(path, "r", encoding="utf-8") as handle:
        for lineno, raw in enumerate(handle, start=1):
            if not raw.strip():
                continue
            try:
                obj = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise DatasetError(f"invalid JSON ({exc.msg})", path, lineno) from exc
            if not isinstance(obj, dict):
                raise DatasetError("record must be a JSON object", path, lineno)
            yield lineno, obj


def dump_record(obj: dict) -> str:
    """Stable single-line JSON used for every file this package writes."""
    return json.dumps(obj, ensure_ascii=False, sort_keys=True, separators=(",", ":"))


def write_jsonl(path: str | Path, records: Iterable[dict]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as handle:
        for record in records:
            handle.write(dump_record(record) + "\n")


def _parse_evidence_pair(item: object) -> EvidenceSentenceId:
    if (not isinstance(item, (list, tuple)) or len(item) != 2
            or not isinstance(item[0], str)):
        raise ValueError(f"evidence entry must be a [page, line] pair, got {item!r}")
    return EvidenceSentenceId(page=item[0], line=item[1])


def parse_instance(obj: dict, path: str | Path | None = None,
                   line: int | None = None) -> Instance:
    """Build an Instance from one dataset record, deduplicating repeated
    evidence combinations with a warning."""
    try:
        if "id" not in obj:
            raise ValueError("missing field 'id'")
        if "claim" not in obj:
            raise ValueError("missing field 'claim'")
        instance_id = str(obj["id"])
        label = parse_label(obj.get("label"))
        raw_evidence = obj.get("evidence", [])
        if not isinstance(raw_evidence, list):
            raise ValueError("'evidence' must be an array of combinations")
        combos: list[EvidenceCombination] = []
        seen: set[frozenset[EvidenceSentenceId]] = set()
        for raw_combo in raw_evidence:
            if not isinstance(raw_combo, list):
                raise ValueError("each evidence combination must be an array of pairs")
            combo = EvidenceCombination(
                frozenset(_parse_evidence_pair(p) for p in raw_combo))
            if combo.sentences in seen:
                logger.warning("instance %s: duplicate evidence combination "
                               "dropped", instance_id)
                continue
            seen.add(combo.sentences)
            combos.append(combo)
        return Instance(id=instance_id, claim=obj["claim"], label=label,
                        evidence=tuple(combos))
    except ValueError as exc:
        raise DatasetError(str(exc), path, line) from exc


def serialize_instance(inst: Instance) -> dict:
    return {
        "id": inst.id,
        "claim": inst.claim,
        "label": inst.label.value,
        "evidence": [[sid.as_pair() for sid in combo.sorted_sentences()]
                     for combo in inst.evidence],
    }


def load_dataset(path: str | Path) -> list[Instance]:
    """Load a dataset file; ids must be unique, every record well-formed."""
    instances: list[Instance] = []
    seen_ids: set[str] = set()
    for lineno, obj in iter_jsonl(path):
        inst = parse_instance(obj, path, lineno)
        if inst.id in seen_ids:
            raise DatasetError(f"duplicate instance id {inst.id!r}", path, lineno)
        seen_ids.add(inst.id)
        instances.append(inst)
    return instances


def dump_dataset(instances: Iterable[Instance], path: str | Path) -> None:
    write_jsonl(path, (serialize_instance(i) for i in instances))


def parse_prediction(obj: dict, path: str | Path | None = None,
                     line: int | None = None) -> Prediction:
    try:
        if "id" not in obj:
            raise ValueError("missing field 'id'")
        raw_ev = obj.get("predicted_evidence", [])
        if not isinstance(raw_ev, list):
            raise ValueError("'predicted_evidence' must be an array of pairs")
        return Prediction(
            instance_id=str(obj["id"]),
            predicted_label=parse_label(obj.get("predicted_label")),
            predicted_evidence=tuple(_parse_evidence_pair(p) for p in raw_ev),
        )
    except ValueError as exc:
        raise DatasetError(str(exc), path, line) from exc


def serialize_prediction(pred: Prediction) -> dict:
    return {
        "id": pred.instance_id,
        "predicted_label": pred.predicted_label.value,
        "predicted_evidence": [sid.as_pair() for sid in pred.predicted_evidence],
    }


def load_predictions(path: str | Path,
                     dataset: Iterable[Instance]) -> list[LabeledPrediction]:
    """Load a predictions file and join each line to its gold instance."""
    by_id: dict[str, Instance] = {}
    for inst in dataset:
        if inst.id in by_id:
            raise DatasetError(f"dataset contains duplicate id {inst.id!r}")
        by_id[inst.id] = inst

    joined: list[LabeledPrediction] = []
    claimed: set[str] = set()
    for lineno, obj in iter_jsonl(path):
        pred = parse_prediction(obj, path, lineno)
        if pred.instance_id not in by_id:
            raise DatasetError(f"prediction for unknown instance id "
                               f"{pred.instance_id!r}", path, lineno)
        if pred.instance_id in claimed:
            raise DatasetError(f"multiple predictions for instance id "
                               f"{pred.instance_id!r}", path, lineno)
        claimed.add(pred.instance_id)
        joined.append(LabeledPrediction(gold=by_id[pred.instance_id], pred=pred))
    return joined


def load_wiki_snapshot(path: str | Path) -> WikiSnapshot:
    """Load a snapshot from one JSONL file or a directory of ``*.jsonl`` files."""
    path = Path(path)
    if path.is_dir():
        files = sorted(path.glob("*.jsonl"))
        if not files:
            raise DatasetError("no *.jsonl snapshot files in directory", path)
    else:
        files = [path]

    pages: dict[str, tuple[str, ...]] = {}
    for file in files:
        for lineno, obj in iter_jsonl(file):
            title = obj.get("title")
            lines = obj.get("lines")
            if not isinstance(title, str) or not title:
                raise DatasetError("snapshot record needs a non-empty 'title'",
                                   file, lineno)
            if (not isinstance(lines, list)
                    or any(not isinstance(s, str) for s in lines)):
                raise DatasetError("'lines' must be an array of strings",
                                   file, lineno)
            key = canonical_title(title)
            if key in pages:
                raise DatasetError(f"duplicate page title {key!r}", file, lineno)
            pages[key] = tuple(lines)
    return WikiSnapshot(pages)

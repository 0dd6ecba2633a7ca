"""A fully local reference verification pipeline.

Retrieval is hand-rolled TF-IDF (idf = ln((1+D)/(1+df)) + 1, raw term
frequency, L2-normalized vectors, cosine scoring) over the wiki snapshot at
either document or sentence granularity. The verdict stage is a transparent
lexical heuristic — NOT a model: token-overlap (Jaccard) against the best
evidence sentence decides whether there is enough information, and the
parity of negation cues between claim and evidence decides the direction.

Two evaluation modes:

* retrieved — top pages by document TF-IDF, top sentences within them,
  verdict from those sentences;
* oracle — gold evidence text feeds the verdict stage directly and the
  reported evidence is the first gold combination, so evidence is correct
  by construction; NOT_ENOUGH_INFO claims get sentences sampled from the
  TF-IDF-nearest page instead (they have no gold evidence).
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence

from .corpus import (
    EvidenceSentenceId,
    Instance,
    Label,
    LabeledPrediction,
    Prediction,
    WikiSnapshot,
)
from .errors import FeverForgeError
from .rng import substream

DEFAULT_OVERLAP_THRESHOLD = 0.4
DEFAULT_PAGES_K = 5
DEFAULT_SENTENCES_K = 5
DEFAULT_NEI_SENTENCES = 5

_TOKEN_RE = re.compile(r"[^\W_]+")
_CUE_TOKEN_RE = re.compile(r"[a-z']+")

#: Tokens that flip the entailment direction once (apostrophes preserved).
NEGATION_CUES = frozenset({"not", "never", "no", "outside", "wasn't", "isn't"})


class PipelineError(FeverForgeError):
    """The pipeline cannot produce a prediction for some instance."""


def tokenize(text: str) -> list[str]:
    """Lowercased maximal alphanumeric runs (underscores split tokens)."""
    return _TOKEN_RE.findall(text.lower())


def _cue_count(text: str) -> int:
    """Number of negation-cue tokens in `text` (apostrophes kept so
    contractions like \"wasn't\" stay single tokens)."""
    tokens = _CUE_TOKEN_RE.findall(text.lower())
    return sum(1 for t in tokens if t in NEGATION_CUES or t.endswith("n't"))


def token_overlap(a: str, b: str) -> float:
    """Jaccard similarity of the two texts' token sets."""
    ta, tb = set(tokenize(a)), set(tokenize(b))
    if not ta and not tb:
        return 0.0
    return len(ta & tb) / len(ta | tb)


# ---------------------------------------------------------------------------
# TF-IDF index


class TfidfIndex:
    """Sparse TF-IDF vectors over a fixed document collection.

    Document ids are page titles (document granularity) or (page, line)
    pairs (sentence granularity); any totally ordered id type works.
    """

    def __init__(self, documents: Mapping[object, str],
                 sentence_counts: Optional[Mapping[str, int]] = None):
        if not documents:
            raise PipelineError("cannot build an index over zero documents")
        self._n_docs = len(documents)
        self._sentence_counts = dict(sentence_counts) if sentence_counts else None
        df: dict[str, int] = {}
        raw_tf: dict[object, dict[str, int]] = {}
        for doc_id, text in documents.items():
            counts: dict[str, int] = {}
            for token in tokenize(text):
                counts[token] = counts.get(token, 0) + 1
            raw_tf[doc_id] = counts
            for token in counts:
                df[token] = df.get(token, 0) + 1
        self._df = df
        self._vectors = {doc_id: self._weigh(counts)
                         for doc_id, counts in raw_tf.items()}

    def idf(self, token: str) -> float:
        return math.log((1 + self._n_docs) / (1 + self._df.get(token, 0))) + 1.0

    def _weigh(self, counts: Mapping[str, int]) -> dict[str, float]:
        weights = {t: c * self.idf(t) for t, c in counts.items()}
        norm = math.sqrt(sum(w * w for w in weights.values()))
        if norm == 0.0:
            return {}
        return {t: w / norm for t, w in weights.items()}

    def __len__(self) -> int:
        return self._n_docs

    @property
    def doc_ids(self) -> list:
        return sorted(self._vectors)

    def page_sentence_count(self, page: str) -> int:
        """Sentence count of an indexed page (document granularity only)."""
        if self._sentence_counts is None or page not in self._sentence_counts:
            raise PipelineError(
                f"index carries no sentence count for page {page!r}; build "
                f"it at document granularity from a snapshot")
        return self._sentence_counts[page]

    def query_vector(self, text: str) -> dict[str, float]:
        counts: dict[str, int] = {}
        for token in tokenize(text):
            counts[token] = counts.get(token, 0) + 1
        return self._weigh(counts)

    def similarity(self, query: Mapping[str, float], doc_id: object) -> float:
        doc = self._vectors[doc_id]
        if len(doc) < len(query):
            query, doc = doc, query
        return sum(weight * doc.get(token, 0.0)
                   for token, weight in query.items())

    def retrieve(self, claim: str, k: int,
                 candidates: Optional[Iterable[object]] = None,
                 ) -> list[tuple[object, float]]:
        """Top-k documents by cosine similarity, ties by id ascending."""
        if k < 1:
            raise PipelineError("retrieval depth k must be >= 1")
        query = self.query_vector(claim)
        pool = self._vectors if candidates is None else list(candidates)
        scored = [(doc_id, self.similarity(query, doc_id)) for doc_id in pool]
        scored.sort(key=lambda item: (-item[1], item[0]))
        return scored[:k]


def build_index(snapshot: WikiSnapshot, granularity: str) -> TfidfIndex:
    """Index the snapshot at 'document' (page = concatenated sentences) or
    'sentence' ((page, line) per sentence) granularity."""
    if len(snapshot) == 0:
        raise PipelineError("cannot index an empty snapshot")
    if granularity == "document":
        return TfidfIndex(
            {page: " ".join(snapshot.sentences(page))
             for page in snapshot.page_titles},
            sentence_counts={page: snapshot.sentence_count(page)
                             for page in snapshot.page_titles})
    if granularity == "sentence":
        return TfidfIndex({(page, line): text
                           for page in snapshot.page_titles
                           for line, text in enumerate(snapshot.sentences(page))})
    raise PipelineError(f"unknown granularity {granularity!r} "
                        f"(expected 'document' or 'sentence')")


def nearest_page_nei_evidence(index: TfidfIndex, claim: str, m: int,
                              seed: int) -> list[EvidenceSentenceId]:
    """Evidence stand-in for claims with no gold evidence: find the single
    nearest page by TF-IDF, then sample min(m, page length) distinct
    sentence indices uniformly from a per-page substream of `seed`.

    Results are sorted by line index and reproducible: the substream label
    depends only on the page, so identical (snapshot, claim, m, seed) give
    identical evidence.
    """
    if m < 1:
        raise PipelineError("NEI evidence sentence count must be >= 1")
    (page, _score), = index.retrieve(claim, 1)
    if not isinstance(page, str):
        raise PipelineError("NEI evidence needs a document-granularity index")
    page_length = index.page_sentence_count(page)
    k = min(m, page_length)
    if k == page_length:
        lines = range(page_length)
    else:
        stream = substream(seed, f"nei-evidence:{page}")
        lines = sorted(stream.sample_indices(page_length, k))
    return [EvidenceSentenceId(page=page, line=line) for line in lines]


# ---------------------------------------------------------------------------
# Verdict heuristic


@dataclass(frozen=True)
class Verdict:
    label: Label
    confidence: float
    best_sentence: Optional[int] = None  # index into the evidence list


def heuristic_verdict(claim: str, evidence_sentences: Sequence[str],
                      threshold: float = DEFAULT_OVERLAP_THRESHOLD) -> Verdict:
    """Transparent lexical verdict.

    The best evidence sentence is the one with the highest token-overlap
    (Jaccard) with the claim; below `threshold` the verdict is
    NOT_ENOUGH_INFO. Otherwise the parity of negation cues across claim and
    best sentence decides: even parity SUPPORTED, odd parity REFUTED.
    Confidence is the overlap ratio.
    """
    if not evidence_sentences:
        return Verdict(Label.NOT_ENOUGH_INFO, 0.0)
    overlaps = [token_overlap(claim, sentence)
                for sentence in evidence_sentences]
    best = max(range(len(overlaps)), key=lambda i: (overlaps[i], -i))
    best_overlap = overlaps[best]
    if best_overlap < threshold:
        return Verdict(Label.NOT_ENOUGH_INFO, best_overlap, best)
    parity = (_cue_count(claim) + _cue_count(evidence_sentences[best])) % 2
    label = Label.SUPPORTED if parity == 0 else Label.REFUTED
    return Verdict(label, best_overlap, best)


# ---------------------------------------------------------------------------
# Prediction sources


class SystemAdapter:
    """A named prediction source: produces exactly one Prediction per
    requested instance."""

    name: str

    def predict(self, instances: Sequence[Instance]) -> list[Prediction]:
        raise NotImplementedError


class FileAdapter(SystemAdapter):
    """Serves predictions from a pre-loaded predictions file."""

    def __init__(self, name: str, predictions: Mapping[str, Prediction]):
        self.name = name
        self._by_id = dict(predictions)

    @classmethod
    def from_file(cls, name: str, path) -> "FileAdapter":
        from .corpus import iter_jsonl, parse_prediction

        by_id: dict[str, Prediction] = {}
        for lineno, obj in iter_jsonl(path):
            pred = parse_prediction(obj, path, lineno)
            if pred.instance_id in by_id:
                raise PipelineError(
                    f"{path}:{lineno}: multiple predictions for instance "
                    f"{pred.instance_id!r}")
            by_id[pred.instance_id] = pred
        return cls(name, by_id)

    def as_mapping(self) -> dict[str, Prediction]:
        return dict(self._by_id)

    def predict(self, instances: Sequence[Instance]) -> list[Prediction]:
        missing = [inst.id for inst in instances if inst.id not in self._by_id]
        if missing:
            raise PipelineError(
                f"prediction source {self.name!r} is missing {len(missing)} "
                f"instance(s) (first: {missing[0]!r})")
        return [self._by_id[inst.id] for inst in instances]


class BaselinePipeline(SystemAdapter):
    """The internal reference pipeline (retrieval + lexical verdict)."""

    def __init__(self, snapshot: WikiSnapshot, mode: str, seed: int = 0,
                 name: str = "baseline",
                 pages_k: int = DEFAULT_PAGES_K,
                 sentences_k: int = DEFAULT_SENTENCES_K,
                 nei_sentences: int = DEFAULT_NEI_SENTENCES,
                 threshold: float = DEFAULT_OVERLAP_THRESHOLD):
        if mode not in ("oracle", "retrieved"):
            raise PipelineError(f"unknown mode {mode!r} "
                                f"(expected 'oracle' or 'retrieved')")
        self.name = name
        self.mode = mode
        self.seed = seed
        self.pages_k = pages_k
        self.sentences_k = sentences_k
        self.nei_sentences = nei_sentences
        self.threshold = threshold
        self._snapshot = snapshot
        self._doc_index = build_index(snapshot, "document")
        self._sentence_index = (build_index(snapshot, "sentence")
                                if mode == "retrieved" else None)

    def predict(self, instances: Sequence[Instance]) -> list[Prediction]:
        if self.mode == "oracle":
            missing = self._snapshot.missing(instances)
            if missing:
                listed = ", ".join(f"{sid.page}:{sid.line}"
                                   for sid in missing[:10])
                raise PipelineError(
                    f"oracle mode requires resolvable gold evidence; "
                    f"{len(missing)} missing id(s): {listed}")
            return [self._predict_oracle(inst) for inst in instances]
        return [self._predict_retrieved(inst) for inst in instances]

    def _predict_oracle(self, inst: Instance) -> Prediction:
        if inst.label is Label.NOT_ENOUGH_INFO or not inst.evidence:
            evidence_ids = nearest_page_nei_evidence(
                self._doc_index, inst.claim, self.nei_sentences, self.seed)
        else:
            evidence_ids = inst.evidence[0].sorted_sentences()
        texts = [self._snapshot.resolve(sid) for sid in evidence_ids]
        verdict = heuristic_verdict(inst.claim, texts, self.threshold)
        return Prediction(instance_id=inst.id, predicted_label=verdict.label,
                          predicted_evidence=tuple(evidence_ids))

    def _predict_retrieved(self, inst: Instance) -> Prediction:
        assert self._sentence_index is not None
        pages = [page for page, _ in
                 self._doc_index.retrieve(inst.claim, self.pages_k)]
        candidates = [(page, line)
                      for page in pages
                      for line in range(self._snapshot.sentence_count(page))]
        ranked = (self._sentence_index.retrieve(
                      inst.claim, self.sentences_k, candidates=candidates)
                  if candidates else [])
        evidence_ids = [EvidenceSentenceId(page=page, line=line)
                        for (page, line), _ in ranked]
        texts = [self._snapshot.lookup(sid.page, sid.line)
                 for sid in evidence_ids]
        verdict = heuristic_verdict(inst.claim, texts, self.threshold)
        return Prediction(instance_id=inst.id, predicted_label=verdict.label,
                          predicted_evidence=tuple(evidence_ids))


def run_pipeline(adapter: SystemAdapter,
                 instances: Sequence[Instance]) -> list[LabeledPrediction]:
    """Drive a prediction source over instances and join gold to predicted."""
    predictions = adapter.predict(instances)
    if len(predictions) != len(instances):
        raise PipelineError(
            f"prediction source {adapter.name!r} returned "
            f"{len(predictions)} predictions for {len(instances)} instances")
    joined = []
    for inst, pred in zip(instances, predictions):
        if inst.id != pred.instance_id:
            raise PipelineError(
                f"prediction source {adapter.name!r} returned prediction "
                f"for {pred.instance_id!r} in place of {inst.id!r}")
        joined.append(LabeledPrediction(gold=inst, pred=pred))
    return joined

"""Break-it tournament bookkeeping.

Breakers submit manifests of generated instances; humans review them
(acceptance records); builder systems are scored on the accepted subset.

* potency(b)   — mean error rate (1 − headline score) the breaker induces
  across systems, over its accepted instances.
* adjusted potency — potency scaled by the acceptance rate; requires a
  fully reviewed submission.
* resilience(s) — a system's headline score pooled over ALL breakers'
  accepted instances (count-weighted concatenation, never a mean of
  per-breaker means).

Class balancing discards instances at random from majority labels down to
the minimum label count; stratified sampling allocates proportionally over
joint (label, transformation class) strata with largest-remainder rounding.
Both draw from named substreams of a single seed, so results are
reproducible and insensitive to unrelated strata.

Manifest wire format (JSON lines): a header record ``{"breaker_id": ...}``
followed by one record per generated instance — the instance fields plus
``source_id``, ``source_claim``, ``rule_id``, and ``class``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence

from .corpus import (
    Instance,
    LabeledPrediction,
    dump_record,
    iter_jsonl,
    parse_instance,
    serialize_instance,
)
from .errors import FeverForgeError
from .rng import substream
from .rule_engine import (
    GeneratedInstance,
    TransformationClass,
    parse_transformation_class,
)
from .scorer import DEFAULT_MAX_EVIDENCE, fever_score


class TournamentError(FeverForgeError):
    """Unscoreable tournament state (missing predictions, bad manifest...)."""


@dataclass(frozen=True)
class BreakerSubmission:
    """One breaker's submitted instances plus the human acceptance record."""

    breaker_id: str
    submitted: tuple[GeneratedInstance, ...]
    acceptance: Mapping[str, bool] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "submitted", tuple(self.submitted))
        object.__setattr__(self, "acceptance", dict(self.acceptance))
        ids = {g.id for g in self.submitted}
        if len(ids) != len(self.submitted):
            raise TournamentError(
                f"breaker {self.breaker_id!r}: duplicate instance ids in "
                f"submission")
        stray = set(self.acceptance) - ids
        if stray:
            raise TournamentError(
                f"breaker {self.breaker_id!r}: acceptance records for "
                f"unknown instance ids {sorted(stray)[:5]}")

    def __len__(self) -> int:
        return len(self.submitted)

    @property
    def accepted(self) -> tuple[GeneratedInstance, ...]:
        return tuple(g for g in self.submitted if self.acceptance.get(g.id) is True)

    @property
    def reviewed_count(self) -> int:
        return len(self.acceptance)

    @property
    def pending_count(self) -> int:
        return len(self.submitted) - len(self.acceptance)

    @property
    def fully_reviewed(self) -> bool:
        return self.pending_count == 0

    @property
    def acceptance_rate(self) -> Optional[float]:
        """|accepted| / |submitted|; defined only once review is complete."""
        if not self.fully_reviewed or not self.submitted:
            return None
        return len(self.accepted) / len(self.submitted)


@dataclass(frozen=True)
class SystemEntry:
    """A builder system's predictions, keyed by breaker id."""

    system_id: str
    predictions: Mapping[str, tuple[LabeledPrediction, ...]]

    def __post_init__(self):
        object.__setattr__(
            self, "predictions",
            {k: tuple(v) for k, v in dict(self.predictions).items()})

    def for_breaker(self, breaker: BreakerSubmission) -> list[LabeledPrediction]:
        """This system's predictions restricted to the breaker's accepted
        instances; every accepted instance must be covered."""
        available = {lp.gold.id: lp
                     for lp in self.predictions.get(breaker.breaker_id, ())}
        missing = [g.id for g in breaker.accepted if g.id not in available]
        if missing:
            raise TournamentError(
                f"system {self.system_id!r} has no predictions for "
                f"{len(missing)} accepted instance(s) of breaker "
                f"{breaker.breaker_id!r} (first missing: {missing[0]!r})")
        return [available[g.id] for g in breaker.accepted]


# ---------------------------------------------------------------------------
# Balancing and sampling


def balance_classes(instances: Sequence[GeneratedInstance],
                    seed: int) -> list[GeneratedInstance]:
    """Discard instances at random from majority labels so every label
    present ends up at the minimum label count.

    Discards are drawn from a per-label substream of `seed`; survivors keep
    their relative order, which makes the operation idempotent.
    """
    if not instances:
        return []
    by_label: dict[str, list[int]] = {}
    for pos, gen in enumerate(instances):
        by_label.setdefault(gen.label.value, []).append(pos)
    minimum = min(len(v) for v in by_label.values())
    keep: set[int] = set()
    for label_value in sorted(by_label):
        positions = by_label[label_value]
        excess = len(positions) - minimum
        if excess == 0:
            keep.update(positions)
            continue
        stream = substream(seed, f"balance:{label_value}")
        discard = {positions[i]
                   for i in stream.sample_indices(len(positions), excess)}
        keep.update(p for p in positions if p not in discard)
    return [instances[p] for p in sorted(keep)]


def _stratum_key(gen: GeneratedInstance) -> tuple[str, str]:
    return (gen.label.value, gen.transformation_class.value)


def allocate_largest_remainder(sizes: Mapping[tuple[str, str], int],
                               n: int) -> dict[tuple[str, str], int]:
    """Proportional integer allocation of `n` draws over strata.

    Exact integer arithmetic: base share floor(n·size/total), remaining
    draws to the strata with the largest remainders, ties broken by stratum
    key ascending.
    """
    total = sum(sizes.values())
    if n > total:
        raise TournamentError(f"cannot allocate {n} draws from {total} instances")
    allocation: dict[tuple[str, str], int] = {}
    remainders: list[tuple[int, tuple[str, str]]] = []
    assigned = 0
    for key in sorted(sizes):
        numerator = n * sizes[key]
        base, rem = divmod(numerator, total)
        allocation[key] = base
        assigned += base
        remainders.append((rem, key))
    extras = n - assigned
    remainders.sort(key=lambda item: (-item[0], item[1]))
    for _, key in remainders[:extras]:
        allocation[key] += 1
    return allocation


def stratified_sample(instances: Sequence[GeneratedInstance], n: int,
                      seed: int) -> list[GeneratedInstance]:
    """Sample exactly `n` instances, stratified jointly on (label,
    transformation class) with proportional allocation.

    Selection within each stratum draws from its own substream, so adding
    or removing an unrelated stratum never changes another stratum's picks.
    The output preserves input order.
    """
    if n < 0:
        raise TournamentError("sample size must be >= 0")
    if n > len(instances):
        raise TournamentError(
            f"sample size {n} exceeds available instances ({len(instances)})")
    strata: dict[tuple[str, str], list[int]] = {}
    for pos, gen in enumerate(instances):
        strata.setdefault(_stratum_key(gen), []).append(pos)
    allocation = allocate_largest_remainder(
        {k: len(v) for k, v in strata.items()}, n)
    chosen: list[int] = []
    for key in sorted(strata):
        want = allocation[key]
        positions = strata[key]
        if want == len(positions):
            chosen.extend(positions)
            continue
        if want == 0:
            continue
        stream = substream(seed, f"sample:{key[0]}:{key[1]}")
        picks = stream.sample_indices(len(positions), want)
        chosen.extend(positions[i] for i in picks)
    return [instances[p] for p in sorted(chosen)]


# ---------------------------------------------------------------------------
# Tournament metrics


def potency(systems: Sequence[SystemEntry], breaker: BreakerSubmission,
            max_evidence: Optional[int] = DEFAULT_MAX_EVIDENCE) -> float:
    """Mean over systems of (1 − headline score) on the breaker's accepted
    instances. An empty accepted set scores 0 (the breaker broke nothing)."""
    if not systems:
        raise TournamentError("potency requires at least one system")
    if not breaker.accepted:
        return 0.0
    total = 0.0
    for system in systems:
        preds = system.for_breaker(breaker)
        total += 1.0 - fever_score(preds, max_evidence).fever_score
    return total / len(systems)


def adjusted_potency(systems: Sequence[SystemEntry],
                     breaker: BreakerSubmission,
                     max_evidence: Optional[int] = DEFAULT_MAX_EVIDENCE) -> float:
    """Acceptance rate × potency; requires a fully reviewed submission."""
    rate = breaker.acceptance_rate
    if rate is None:
        raise TournamentError(
            f"breaker {breaker.breaker_id!r} has {breaker.pending_count} "
            f"unreviewed instance(s); adjusted potency is undefined")
    return rate * potency(systems, breaker, max_evidence)


def resilience(system: SystemEntry, breakers: Sequence[BreakerSubmission],
               max_evidence: Optional[int] = DEFAULT_MAX_EVIDENCE) -> float:
    """Headline score over the concatenation of the system's predictions on
    every breaker's accepted instances — count-weighted by construction."""
    pooled: list[LabeledPrediction] = []
    for breaker in breakers:
        pooled.extend(system.for_breaker(breaker))
    if not pooled:
        raise TournamentError(
            f"system {system.system_id!r}: no accepted instances to score")
    return fever_score(pooled, max_evidence).fever_score


# ---------------------------------------------------------------------------
# Leaderboards


@dataclass(frozen=True)
class BreakerRow:
    breaker_id: str
    potency: float
    acceptance_rate: Optional[float]
    adjusted_potency: Optional[float]
    pending: int = 0
    rank: Optional[int] = None

    @classmethod
    def from_components(cls, breaker_id: str, potency: float,
                        acceptance_rate: Optional[float],
                        pending: int = 0) -> "BreakerRow":
        adjusted = (None if acceptance_rate is None
                    else acceptance_rate * potency)
        return cls(breaker_id=breaker_id, potency=potency,
                   acceptance_rate=acceptance_rate,
                   adjusted_potency=adjusted, pending=pending)

    def as_dict(self) -> dict:
        return {
            "rank": self.rank,
            "breaker_id": self.breaker_id,
            "potency": self.potency,
            "acceptance_rate": self.acceptance_rate,
            "adjusted_potency": self.adjusted_potency,
            "pending": self.pending,
        }


@dataclass(frozen=True)
class SystemRow:
    system_id: str
    resilience: float
    rank: Optional[int] = None

    def as_dict(self) -> dict:
        return {
            "rank": self.rank,
            "system_id": self.system_id,
            "resilience": self.resilience,
        }


def rank_breaker_rows(rows: Iterable[BreakerRow]) -> list[BreakerRow]:
    """Sort by adjusted potency descending (rows pending review sort last,
    by potency), ties by breaker_id ascending; then assign 1-based ranks."""
    ordered = sorted(
        rows,
        key=lambda r: (r.adjusted_potency is None,
                       -(r.adjusted_potency if r.adjusted_potency is not None
                         else r.potency),
                       r.breaker_id))
    return [BreakerRow(rank=i, breaker_id=r.breaker_id, potency=r.potency,
                       acceptance_rate=r.acceptance_rate,
                       adjusted_potency=r.adjusted_potency, pending=r.pending)
            for i, r in enumerate(ordered, start=1)]


def breaker_leaderboard(
    systems: Sequence[SystemEntry],
    breakers: Sequence[BreakerSubmission],
    max_evidence: Optional[int] = DEFAULT_MAX_EVIDENCE,
) -> list[BreakerRow]:
    rows = []
    for breaker in breakers:
        rows.append(BreakerRow.from_components(
            breaker_id=breaker.breaker_id,
            potency=potency(systems, breaker, max_evidence),
            acceptance_rate=breaker.acceptance_rate,
            pending=breaker.pending_count))
    return rank_breaker_rows(rows)


def system_leaderboard(
    systems: Sequence[SystemEntry],
    breakers: Sequence[BreakerSubmission],
    max_evidence: Optional[int] = DEFAULT_MAX_EVIDENCE,
) -> list[SystemRow]:
    rows = [SystemRow(system_id=s.system_id,
                      resilience=resilience(s, breakers, max_evidence))
            for s in systems]
    ordered = sorted(rows, key=lambda r: (-r.resilience, r.system_id))
    return [SystemRow(rank=i, system_id=r.system_id, resilience=r.resilience)
            for i, r in enumerate(ordered, start=1)]


# ---------------------------------------------------------------------------
# Submission manifests


def serialize_generated(gen: GeneratedInstance) -> dict:
    record = serialize_instance(gen.instance)
    record.update({
        "source_id": gen.source_id,
        "source_claim": gen.source_claim,
        "rule_id": gen.rule_id,
        "class": gen.transformation_class.value,
    })
    return record


def parse_generated(obj: dict, path: str | Path | None = None,
                    line: int | None = None) -> GeneratedInstance:
    instance = parse_instance(obj, path, line)
    try:
        missing = {"source_id", "source_claim", "rule_id", "class"} - obj.keys()
        if missing:
            raise ValueError(f"missing field(s) {sorted(missing)}")
        return GeneratedInstance(
            instance=instance,
            source_id=str(obj["source_id"]),
            source_claim=obj["source_claim"],
            rule_id=str(obj["rule_id"]),
            transformation_class=parse_transformation_class(obj["class"]),
        )
    except ValueError as exc:
        where = f"{path}:{line}: " if path and line else ""
        raise TournamentError(f"{where}{exc}") from exc


def write_manifest(path: str | Path, breaker_id: str,
                   generated: Iterable[GeneratedInstance]) -> None:
    """Write a submission manifest: header record, then instance records."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(dump_record({"breaker_id": breaker_id}) + "\n")
        for gen in generated:
            handle.write(dump_record(serialize_generated(gen)) + "\n")


def read_manifest(path: str | Path) -> tuple[str, list[GeneratedInstance]]:
    path = Path(path)
    breaker_id: Optional[str] = None
    generated: list[GeneratedInstance] = []
    seen: set[str] = set()
    for lineno, obj in iter_jsonl(path):
        if breaker_id is None:
            if "breaker_id" not in obj:
                raise TournamentError(
                    f"{path}:{lineno}: manifest must start with a header "
                    f"record carrying 'breaker_id'")
            breaker_id = str(obj["breaker_id"])
            continue
        gen = parse_generated(obj, path, lineno)
        if gen.id in seen:
            raise TournamentError(
                f"{path}:{lineno}: duplicate instance id {gen.id!r}")
        seen.add(gen.id)
        generated.append(gen)
    if breaker_id is None:
        raise TournamentError(f"{path}: empty manifest")
    if not generated:
        raise TournamentError(f"{path}: manifest has a header but no instances")
    return breaker_id, generated


def provenance_map(generated: Iterable[GeneratedInstance],
                   ) -> dict[str, TransformationClass]:
    """instance id → transformation class, for per-class score breakdowns."""
    return {g.id: g.transformation_class for g in generated}

"""Rule-based adversarial claim generation.

A rule pairs a pattern over claim text with a capture template. Patterns use
a deliberately small, portable regular-expression dialect:

* capturing groups ``(...)`` (at most 9),
* non-capturing groups ``(?:...)``,
* alternation ``|``,
* ``.`` and the greedy quantifiers ``+`` ``*`` ``?``,
* literal text, with ``\\<punct>`` escaping any non-alphanumeric character.

Everything else — character classes, bounded repetition ``{m,n}``, anchors,
named groups, lookarounds, lazy quantifiers, alphanumeric escape sequences
like ``\\d`` — is rejected at parse time so that rule files behave
identically under any regex engine.

Patterns are implicitly anchored to the whole claim. A trailing run of
``.!?`` (terminal punctuation) is stripped from the claim before matching;
generated claims get exactly one terminal period back.

Transformation classes:

* ``ENTAILMENT_PRESERVING`` rewrites keep the gold label;
* ``SIMPLE_NEGATION`` and ``COMPLEX_NEGATION`` flip SUPPORTED<->REFUTED and
  never apply to NOT_ENOUGH_INFO sources.

Generated instances inherit the source's evidence unchanged and get the
composite id ``<source_id>#<rule_id>``.
"""

from __future__ import annotations

import json
import re
from collections import Counter
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from pathlib import Path
from typing import Iterable, Optional, Sequence

from .corpus import Instance, Label
from .errors import FeverForgeError

_MAX_GROUPS = 9

#: The ruleset shipped with the package (65 rules in three classes).
DEFAULT_RULES_PATH = Path(__file__).parent / "rules" / "default_rules.jsonl"


class RuleError(FeverForgeError):
    """A rule file or rule definition is invalid."""

    def __init__(self, message: str, path: str | Path | None = None,
                 line: int | None = None):
        prefix = ""
        if path is not None and line is not None:
            prefix = f"{path}:{line}: "
        elif path is not None:
            prefix = f"{path}: "
        super().__init__(prefix + message)
        self.path = str(path) if path is not None else None
        self.line = line


class TransformationClass(Enum):
    ENTAILMENT_PRESERVING = "preserving"
    SIMPLE_NEGATION = "simple_negation"
    COMPLEX_NEGATION = "complex_negation"

    @property
    def is_negation(self) -> bool:
        return self is not TransformationClass.ENTAILMENT_PRESERVING


def parse_transformation_class(raw: object) -> TransformationClass:
    if isinstance(raw, TransformationClass):
        return raw
    for cls in TransformationClass:
        if raw == cls.value:
            return cls
    raise ValueError(f"unknown transformation class {raw!r} (expected one of "
                     f"{[c.value for c in TransformationClass]})")


def label_map(cls: TransformationClass, label: Label) -> Optional[Label]:
    """Map a source label through a transformation class.

    Returns None when the class does not apply to the label (negations on
    NOT_ENOUGH_INFO sources).
    """
    if cls is TransformationClass.ENTAILMENT_PRESERVING:
        return label
    if label is Label.SUPPORTED:
        return Label.REFUTED
    if label is Label.REFUTED:
        return Label.SUPPORTED
    return None


def validate_pattern(pattern: str) -> int:
    """Check `pattern` against the restricted dialect; return its number of
    capturing groups. Raises RuleError on any construct outside the dialect."""
    if not pattern:
        raise RuleError("pattern must be non-empty")
    groups = 0
    depth = 0
    quantifiable = False  # does a quantifier have a preceding atom?
    i = 0
    n = len(pattern)
    while i < n:
        ch = pattern[i]
        if ch == "\\":
            if i + 1 >= n:
                raise RuleError("pattern ends with a dangling backslash")
            escaped = pattern[i + 1]
            if escaped.isalnum() or escaped == "_":
                raise RuleError(
                    f"escape sequence '\\{escaped}' is outside the supported "
                    f"dialect; only punctuation may be escaped")
            quantifiable = True
            i += 2
        elif ch == "(":
            if pattern.startswith("(?:", i):
                i += 3
            elif i + 1 < n and pattern[i + 1] == "?":
                raise RuleError(
                    "only plain capturing groups and '(?:...)' groups are "
                    "supported (no named groups or lookarounds)")
            else:
                groups += 1
                if groups > _MAX_GROUPS:
                    raise RuleError(
                        f"more than {_MAX_GROUPS} capturing groups")
                i += 1
            depth += 1
            quantifiable = False
        elif ch == ")":
            if depth == 0:
                raise RuleError("unbalanced ')'")
            depth -= 1
            quantifiable = True
            i += 1
        elif ch in "*+?":
            if not quantifiable:
                raise RuleError(f"quantifier {ch!r} has nothing to repeat "
                                f"(lazy/stacked quantifiers are unsupported)")
            quantifiable = False
            i += 1
        elif ch == "|":
            quantifiable = False
            i += 1
        elif ch in "[]{}^$":
            raise RuleError(
                f"unsupported construct {ch!r}; the dialect allows groups, "
                f"alternation, '.', '+', '*', '?', and literal text")
        else:
            quantifiable = True
            i += 1
    if depth:
        raise RuleError("unbalanced '('")
    return groups


_REFERENCE_RE = re.compile(r"\$([1-9])")


def template_references(template: str) -> set[int]:
    """Capture references ($1..$9) used by a template."""
    return {int(m) for m in _REFERENCE_RE.findall(template)}


@lru_cache(maxsize=None)
def _compiled(pattern: str) -> re.Pattern[str]:
    return re.compile(pattern)


@dataclass(frozen=True)
class Rule:
    """One transformation: pattern over claim text plus a capture template."""

    rule_id: str
    transformation_class: TransformationClass
    pattern: str
    template: str

    def __post_init__(self):
        if not self.rule_id:
            raise RuleError("rule_id must be non-empty")
        if not self.template:
            raise RuleError(f"rule {self.rule_id!r}: template must be non-empty")
        group_count = validate_pattern(self.pattern)
        try:
            _compiled(self.pattern)
        except re.error as exc:
            raise RuleError(f"rule {self.rule_id!r}: pattern does not "
                            f"compile: {exc}") from exc
        bad = {ref for ref in template_references(self.template)
               if ref > group_count}
        if bad:
            raise RuleError(
                f"rule {self.rule_id!r}: template references group(s) "
                f"{sorted(bad)} but the pattern has {group_count} capturing "
                f"group(s)")
        object.__setattr__(self, "_group_count", group_count)

    @property
    def group_count(self) -> int:
        return self._group_count  # type: ignore[attr-defined]


@dataclass(frozen=True)
class RuleSet:
    """Ordered collection of rules with unique ids."""

    rules: tuple[Rule, ...]

    def __post_init__(self):
        object.__setattr__(self, "rules", tuple(self.rules))
        seen: set[str] = set()
        for rule in self.rules:
            if rule.rule_id in seen:
                raise RuleError(f"duplicate rule_id {rule.rule_id!r}")
            seen.add(rule.rule_id)

    def __len__(self) -> int:
        return len(self.rules)

    def __iter__(self):
        return iter(self.rules)

    def by_id(self, rule_id: str) -> Rule:
        for rule in self.rules:
            if rule.rule_id == rule_id:
                return rule
        raise KeyError(rule_id)

    def class_counts(self) -> dict[TransformationClass, int]:
        counts = {cls: 0 for cls in TransformationClass}
        for rule in self.rules:
            counts[rule.transformation_class] += 1
        return counts


def parse_ruleset(path: str | Path) -> RuleSet:
    """Load a JSON-lines rule file; errors carry the offending line number."""
    path = Path(path)
    rules: list[Rule] = []
    seen: set[str] = set()
    with open(path, "r", encoding="utf-8") as handle:
        for lineno, raw in enumerate(handle, start=1):
            if not raw.strip():
                continue
            try:
                obj = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise RuleError(f"invalid JSON ({exc.msg})", path, lineno) from exc
            if not isinstance(obj, dict):
                raise RuleError("rule record must be a JSON object", path, lineno)
            missing = {"rule_id", "class", "pattern", "template"} - obj.keys()
            if missing:
                raise RuleError(f"missing field(s) {sorted(missing)}", path, lineno)
            try:
                rule = Rule(
                    rule_id=str(obj["rule_id"]),
                    transformation_class=parse_transformation_class(obj["class"]),
                    pattern=obj["pattern"],
                    template=obj["template"],
                )
            except (RuleError, ValueError) as exc:
                raise RuleError(str(exc), path, lineno) from exc
            if rule.rule_id in seen:
                raise RuleError(f"duplicate rule_id {rule.rule_id!r}", path, lineno)
            seen.add(rule.rule_id)
            rules.append(rule)
    if not rules:
        raise RuleError("no rules loaded", path)
    return RuleSet(tuple(rules))


def serialize_rule(rule: Rule) -> dict:
    return {
        "rule_id": rule.rule_id,
        "class": rule.transformation_class.value,
        "pattern": rule.pattern,
        "template": rule.template,
    }


_TERMINAL_PUNCT_RE = re.compile(r"[.!?]+\s*$")


def strip_terminal_punctuation(text: str) -> str:
    """Remove a trailing run of terminal punctuation and surrounding space."""
    return _TERMINAL_PUNCT_RE.sub("", text.strip()).rstrip()


def match_rule(rule: Rule, claim: str) -> Optional[tuple[Optional[str], ...]]:
    """Whole-claim anchored match after terminal-punctuation stripping.

    Returns the capture bindings (group 1 first) under leftmost-greedy
    semantics, or None when the claim does not match.
    """
    stripped = strip_terminal_punctuation(claim)
    match = _compiled(rule.pattern).fullmatch(stripped)
    if match is None:
        return None
    return match.groups()


def render_template(template: str, bindings: Sequence[Optional[str]]) -> str:
    """Instantiate a capture template into a surface claim.

    $k is replaced by the k-th binding (empty when the group did not
    participate), whitespace runs collapse to single spaces, the first
    character is uppercased, and exactly one terminal period is ensured.
    """
    def _sub(match: re.Match[str]) -> str:
        index = int(match.group(1))
        value = bindings[index - 1] if index <= len(bindings) else None
        return value if value is not None else ""

    text = _REFERENCE_RE.sub(_sub, template)
    text = " ".join(text.split())
    text = strip_terminal_punctuation(text)
    if not text:
        return ""
    return text[0].upper() + text[1:] + "."


@dataclass(frozen=True)
class GeneratedInstance:
    """An adversarial instance plus the provenance of its generation."""

    instance: Instance
    source_id: str
    source_claim: str
    rule_id: str
    transformation_class: TransformationClass

    @property
    def id(self) -> str:
        return self.instance.id

    @property
    def label(self) -> Label:
        return self.instance.label


def generated_id(source_id: str, rule_id: str) -> str:
    """Composite id making provenance recoverable from the id alone."""
    return f"{source_id}#{rule_id}"


def apply_rule(rule: Rule, source: Instance) -> Optional[GeneratedInstance]:
    """Apply one rule to one instance.

    Returns None when the pattern does not match or when a negation rule
    meets a NOT_ENOUGH_INFO source. Otherwise the new instance carries the
    rendered claim, the mapped label, and the source's evidence unchanged.
    """
    new_label = label_map(rule.transformation_class, source.label)
    if new_label is None:
        return None
    bindings = match_rule(rule, source.claim)
    if bindings is None:
        return None
    claim = render_template(rule.template, bindings)
    if not claim:
        return None
    instance = Instance(
        id=generated_id(source.id, rule.rule_id),
        claim=claim,
        label=new_label,
        evidence=source.evidence,
    )
    return GeneratedInstance(
        instance=instance,
        source_id=source.id,
        source_claim=source.claim,
        rule_id=rule.rule_id,
        transformation_class=rule.transformation_class,
    )


def generate_adversarial_dataset(
    rules: RuleSet, dataset: Sequence[Instance],
) -> tuple[list[Instance], list[GeneratedInstance]]:
    """Run every rule over every instance.

    Returns (matched, generated): `matched` holds each source instance for
    which at least one rule fired, in dataset order; `generated` holds one
    entry per applicable (source, rule) pair, ordered dataset-major and
    rule-minor. Pure function: identical inputs give identical outputs.
    """
    matched: list[Instance] = []
    generated: list[GeneratedInstance] = []
    for source in dataset:
        produced = False
        for rule in rules:
            result = apply_rule(rule, source)
            if result is not None:
                generated.append(result)
                produced = True
        if produced:
            matched.append(source)
    return matched, generated


class BigramTable:
    """Occurrence counts of adjacent lowercased token pairs."""

    def __init__(self, counts: Counter[tuple[str, str]]):
        self._counts = Counter(counts)

    @property
    def counts(self) -> dict[tuple[str, str], int]:
        return dict(self._counts)

    def __len__(self) -> int:
        return len(self._counts)

    def total(self) -> int:
        return sum(self._counts.values())

    def top(self, k: int) -> list[tuple[tuple[str, str], int]]:
        """Top-k bigrams by count descending, ties lexicographic ascending."""
        return sorted(self._counts.items(), key=lambda kv: (-kv[1], kv[0]))[:k]


def bigram_frequencies(claims: Iterable[str]) -> BigramTable:
    """Count adjacent token pairs across claims (lowercased, whitespace
    tokenization, terminal punctuation stripped)."""
    counts: Counter[tuple[str, str]] = Counter()
    for claim in claims:
        tokens = strip_terminal_punctuation(claim).lower().split()
        counts.update(zip(tokens, tokens[1:]))
    return BigramTable(counts)

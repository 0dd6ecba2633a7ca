"""Command-line entry point.

Subcommands:

* ``generate``        — run the ruleset over a dataset; write matched
  sources, generated instances, and a generation report.
* ``score``           — score prediction sets against a dataset; with
  ``--before``/``--after``, emit the Before/After/Delta comparison and a
  per-class breakdown.
* ``tournament``      — assemble both leaderboards from breaker manifests,
  decision logs, and system prediction sources.
* ``analyze-bigrams`` — rank adjacent token pairs across a dataset's claims.
* ``sample``          — balance classes, stratified-sample n instances, and
  write a submission manifest.
* ``serve``           — run the review API over a submission manifest.

A single ``--seed`` governs every stochastic step of a run (balancing,
sampling, NEI evidence); all outputs are deterministic given the same
inputs and seed. Prediction sources are ``name=path`` pairs; the pseudo
paths ``baseline:oracle`` and ``baseline:retrieved`` run the internal
pipeline instead of reading a file (they require ``--wiki``).

The default output directory is ``--out``, falling back to the
``FEVER_FORGE_OUT`` environment variable, then ``./out``.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import baseline, reporting, review, scorer, tournament
from .corpus import (
    Instance,
    LabeledPrediction,
    dump_dataset,
    iter_jsonl,
    load_dataset,
    load_predictions,
    load_wiki_snapshot,
    write_jsonl,
)
from .errors import FeverForgeError
from .rule_engine import (
    DEFAULT_RULES_PATH,
    TransformationClass,
    generate_adversarial_dataset,
    bigram_frequencies,
    parse_ruleset,
)

logger = logging.getLogger("fever_forge")

ENV_OUT = "FEVER_FORGE_OUT"


def _out_dir(args: argparse.Namespace) -> Path:
    out = args.out or os.environ.get(ENV_OUT) or "out"
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _write_json(path: Path, payload: object) -> None:
    path.write_text(json.dumps(payload, ensure_ascii=False, sort_keys=True,
                               indent=2) + "\n", encoding="utf-8")


def _write_text(path: Path, text: str) -> None:
    path.write_text(text + "\n", encoding="utf-8")


def _parse_named(pairs: Sequence[str], flag: str) -> dict[str, str]:
    named: dict[str, str] = {}
    for pair in pairs:
        name, sep, value = pair.partition("=")
        if not sep or not name or not value:
            raise FeverForgeError(
                f"{flag} expects name=path, got {pair!r}")
        if name in named:
            raise FeverForgeError(f"{flag}: duplicate name {name!r}")
        named[name] = value
    return named


def _provenance_from_file(path: str | Path) -> dict[str, TransformationClass]:
    """Transformation class per instance id, for records that carry one."""
    from .corpus import iter_jsonl
    from .rule_engine import parse_transformation_class

    provenance: dict[str, TransformationClass] = {}
    for _lineno, obj in iter_jsonl(path):
        if "class" in obj and "id" in obj:
            try:
                provenance[str(obj["id"])] = parse_transformation_class(
                    obj["class"])
            except ValueError:
                continue
    return provenance


def _source_adapter(spec: str, snapshot, seed: int,
                    name: str) -> baseline.SystemAdapter:
    """Adapter for a source spec: a predictions file path, or
    baseline:oracle / baseline:retrieved for the internal pipeline."""
    if spec.startswith("baseline:"):
        mode = spec.split(":", 1)[1]
        if snapshot is None:
            raise FeverForgeError(f"prediction source {spec!r} requires --wiki")
        return baseline.BaselinePipeline(snapshot, mode, seed=seed, name=name)
    return baseline.FileAdapter.from_file(name, spec)


def _score_source(spec: str, dataset: list[Instance],
                  snapshot, seed: int) -> list[LabeledPrediction]:
    """Score a source spec against a dataset. File sources are joined
    strictly (every file line must name a dataset instance); the internal
    baseline runs over every dataset instance."""
    if spec.startswith("baseline:"):
        pipeline = _source_adapter(spec, snapshot, seed, spec)
        return baseline.run_pipeline(pipeline, dataset)
    return load_predictions(spec, dataset)


# ---------------------------------------------------------------------------
# Subcommands


def cmd_generate(args: argparse.Namespace) -> int:
    out = _out_dir(args)
    ruleset = parse_ruleset(args.rules)
    dataset = load_dataset(args.dataset)
    matched, generated = generate_adversarial_dataset(ruleset, dataset)

    dump_dataset(matched, out / "matched.jsonl")
    write_jsonl(out / "generated.jsonl",
                (tournament.serialize_generated(g) for g in generated))

    per_rule = {rule.rule_id: 0 for rule in ruleset}
    per_class = {cls.value: 0 for cls in TransformationClass}
    for gen in generated:
        per_rule[gen.rule_id] += 1
        per_class[gen.transformation_class.value] += 1
    report = {
        "sources": len(dataset),
        "matched": len(matched),
        "generated": len(generated),
        "ruleset": {
            "total": len(ruleset),
            "classes": {cls.value: count
                        for cls, count in ruleset.class_counts().items()},
        },
        "per_rule": per_rule,
        "per_class": per_class,
    }
    _write_json(out / "generation_report.json", report)
    print(f"matched {len(matched)} of {len(dataset)} source instances; "
          f"generated {len(generated)} adversarial instances "
          f"({len(ruleset)} rules)")
    return 0


def cmd_score(args: argparse.Namespace) -> int:
    out = _out_dir(args)
    dataset = load_dataset(args.dataset)
    snapshot = load_wiki_snapshot(args.wiki) if args.wiki else None
    max_evidence = args.max_evidence
    provenance = _provenance_from_file(args.dataset)

    payload: dict = {"max_evidence": max_evidence}
    blocks: list[str] = []

    if args.before or args.after:
        if not (args.before and args.after):
            raise FeverForgeError("--before and --after must be given together")
        before = _score_source(args.before, dataset, snapshot, args.seed)
        after = _score_source(args.after, dataset, snapshot, args.seed)
        before_report = scorer.fever_score(before, max_evidence)
        after_report = scorer.fever_score(after, max_evidence)
        before_ev = scorer.evidence_prf(before)
        after_ev = scorer.evidence_prf(after)
        payload["before"] = {**before_report.as_dict(),
                             "evidence": before_ev.as_dict()}
        payload["after"] = {**after_report.as_dict(),
                            "evidence": after_ev.as_dict()}
        payload["delta"] = scorer.delta_report(before_report, after_report)
        blocks.append(reporting.format_score_comparison(
            before_report, after_report, before_ev, after_ev))
        if provenance:
            breakdown = scorer.breakdown_by_class(after, provenance,
                                                  max_evidence)
            payload["after_breakdown"] = {
                key: report.as_dict() for key, report in breakdown.items()}
            blocks.append(reporting.format_breakdown(breakdown))
    elif args.predictions:
        named = _parse_named(args.predictions, "--predictions")
        payload["systems"] = {}
        for name in sorted(named):
            preds = _score_source(named[name], dataset, snapshot, args.seed)
            report = scorer.fever_score(preds, max_evidence)
            evidence = scorer.evidence_prf(preds)
            entry = {**report.as_dict(), "evidence": evidence.as_dict()}
            if provenance:
                breakdown = scorer.breakdown_by_class(preds, provenance,
                                                      max_evidence)
                entry["breakdown"] = {key: rep.as_dict()
                                      for key, rep in breakdown.items()}
            payload["systems"][name] = entry
            blocks.append(f"[{name}]\n" + reporting.format_score_comparison(
                report, None, evidence, None))
    else:
        raise FeverForgeError(
            "score needs --before/--after or at least one --predictions")

    _write_json(out / "score_report.json", payload)
    text = "\n\n".join(blocks)
    _write_text(out / "score_report.txt", text)
    print(text)
    return 0


def _load_breaker(manifest_path: str,
                  decisions: dict[str, str]) -> tournament.BreakerSubmission:
    breaker_id, generated = tournament.read_manifest(manifest_path)
    acceptance: dict[str, bool] = {}
    log_path = decisions.get(breaker_id)
    if log_path:
        acceptance = review.read_decision_log(log_path)
        known = {g.id for g in generated}
        acceptance = {iid: flag for iid, flag in acceptance.items()
                      if iid in known}
    return tournament.BreakerSubmission(
        breaker_id=breaker_id, submitted=tuple(generated),
        acceptance=acceptance)


def cmd_tournament(args: argparse.Namespace) -> int:
    out = _out_dir(args)
    decisions = _parse_named(args.decisions or [], "--decisions")
    breakers = [_load_breaker(path, decisions) for path in args.manifest]
    if not breakers:
        raise FeverForgeError("tournament needs at least one --manifest")
    named_sources = _parse_named(args.predictions or [], "--predictions")
    if not named_sources:
        raise FeverForgeError("tournament needs at least one --predictions")
    snapshot = load_wiki_snapshot(args.wiki) if args.wiki else None

    systems: list[tournament.SystemEntry] = []
    for name in sorted(named_sources):
        adapter = _source_adapter(named_sources[name], snapshot, args.seed,
                                  name)
        per_breaker: dict[str, tuple[LabeledPrediction, ...]] = {}
        for breaker in breakers:
            accepted_instances = [g.instance for g in breaker.accepted]
            per_breaker[breaker.breaker_id] = tuple(baseline.run_pipeline(
                adapter, accepted_instances))
        systems.append(tournament.SystemEntry(system_id=name,
                                              predictions=per_breaker))

    pending_total = sum(b.pending_count for b in breakers)
    if pending_total:
        logger.warning(
            "%d instance(s) not yet reviewed; adjusted potency reported as "
            "pending", pending_total)

    breaker_rows = tournament.breaker_leaderboard(systems, breakers,
                                                  args.max_evidence)
    accepted_total = sum(len(b.accepted) for b in breakers)
    if accepted_total:
        system_rows = tournament.system_leaderboard(systems, breakers,
                                                    args.max_evidence)
        systems_payload = [row.as_dict() for row in system_rows]
        systems_text = reporting.format_system_table(system_rows)
    else:
        logger.warning("no accepted instances; resilience is undefined")
        systems_payload = [{"rank": None, "system_id": s.system_id,
                            "resilience": None} for s in systems]
        systems_text = "Resilience pending: no accepted instances."

    _write_json(out / "breakers.json",
                {"breakers": [row.as_dict() for row in breaker_rows]})
    _write_json(out / "systems.json", {"systems": systems_payload})
    breakers_text = reporting.format_breaker_table(breaker_rows)
    _write_text(out / "breakers.txt", breakers_text)
    _write_text(out / "systems.txt", systems_text)
    print(breakers_text)
    print()
    print(systems_text)
    return 0


def cmd_analyze_bigrams(args: argparse.Namespace) -> int:
    out = _out_dir(args)
    dataset = load_dataset(args.dataset)
    table = bigram_frequencies(inst.claim for inst in dataset)
    k = args.n if args.n is not None else 20
    top = table.top(k)
    payload = {
        "claims": len(dataset),
        "distinct_bigrams": len(table),
        "total_bigrams": table.total(),
        "top": [{"bigram": list(bigram), "count": count}
                for bigram, count in top],
    }
    _write_json(out / "bigrams.json", payload)
    text = reporting.format_bigram_table(top)
    _write_text(out / "bigrams.txt", text)
    print(text)
    return 0


def cmd_sample(args: argparse.Namespace) -> int:
    out = _out_dir(args)
    generated = [tournament.parse_generated(obj, args.dataset, lineno)
                 for lineno, obj in iter_jsonl(args.dataset)]
    balanced = tournament.balance_classes(generated, args.seed)
    n = args.n if args.n is not None else len(balanced)
    sample = tournament.stratified_sample(balanced, n, args.seed)
    tournament.write_manifest(out / "submission.jsonl", args.breaker_id,
                              sample)
    print(f"balanced {len(generated)} -> {len(balanced)}; sampled {len(sample)} "
          f"into submission manifest for breaker {args.breaker_id!r}")
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    out = _out_dir(args)
    breaker_id, generated = tournament.read_manifest(args.manifest)
    snapshot = load_wiki_snapshot(args.wiki) if args.wiki else None
    if snapshot is not None:
        missing = snapshot.missing(g.instance for g in generated)
        if missing:
            logger.warning("%d evidence id(s) do not resolve in the snapshot "
                           "(first: %s:%d)", len(missing), missing[0].page,
                           missing[0].line)

    store = review.ReviewStore(
        generated, out / "decisions.jsonl",
        review_fraction=args.review_fraction, seed=args.seed)

    prediction_sources: dict[str, dict] = {}
    manifest_ids = {g.id for g in generated}
    for name, spec in sorted(_parse_named(args.predictions or [],
                                          "--predictions").items()):
        adapter = _source_adapter(spec, snapshot, args.seed, name)
        if isinstance(adapter, baseline.FileAdapter):
            by_id = {iid: pred for iid, pred in adapter.as_mapping().items()
                     if iid in manifest_ids}
        else:
            instances = [g.instance for g in generated]
            by_id = {p.instance_id: p for p in adapter.predict(instances)}
        prediction_sources[name] = by_id

    app = review.create_app(store, breaker_id,
                            prediction_sources=prediction_sources,
                            snapshot=snapshot,
                            max_evidence=args.max_evidence)
    host, _, port = args.addr.partition(":")
    try:
        uvicorn.run(app, host=host or "127.0.0.1",
                    port=int(port) if port else 8000, log_level="warning")
    except OSError as exc:
        raise FeverForgeError(f"cannot bind {args.addr}: {exc}") from exc
    return 0


# ---------------------------------------------------------------------------
# Argument parsing


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fever-forge",
        description="Adversarial claim generation, scoring, and review "
                    "tooling for fact-verification datasets.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--out", help=f"output directory (default: "
                                     f"${ENV_OUT} or ./out)")
        p.add_argument("--seed", type=int, default=0,
                       help="seed for every stochastic step (default 0)")
        p.add_argument("--max-evidence", type=int, default=5,
                       help="predicted-evidence cap for scoring (default 5)")

    p = sub.add_parser("generate", help="apply rules to a dataset")
    p.add_argument("--dataset", required=True)
    p.add_argument("--rules", default=str(DEFAULT_RULES_PATH),
                   help="rule file (default: shipped ruleset)")
    common(p)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("score", help="score prediction sets")
    p.add_argument("--dataset", required=True)
    p.add_argument("--predictions", action="append", metavar="NAME=PATH",
                   help="named prediction source (repeatable); PATH may be "
                        "baseline:oracle or baseline:retrieved")
    p.add_argument("--before", help="prediction source for the original set")
    p.add_argument("--after", help="prediction source for the adversarial set")
    p.add_argument("--wiki", help="wiki snapshot (for baseline sources)")
    common(p)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("tournament", help="assemble both leaderboards")
    p.add_argument("--manifest", action="append", required=True,
                   help="breaker submission manifest (repeatable)")
    p.add_argument("--predictions", action="append", metavar="NAME=PATH",
                   required=True, help="system prediction source (repeatable)")
    p.add_argument("--decisions", action="append", metavar="BREAKER=PATH",
                   help="decision log per breaker id (repeatable)")
    p.add_argument("--wiki", help="wiki snapshot (for baseline sources)")
    common(p)
    p.set_defaults(func=cmd_tournament)

    p = sub.add_parser("analyze-bigrams", help="rank claim token bigrams")
    p.add_argument("--dataset", required=True)
    p.add_argument("--n", type=int, help="how many bigrams to report "
                                         "(default 20)")
    common(p)
    p.set_defaults(func=cmd_analyze_bigrams)

    p = sub.add_parser("sample", help="balance, sample, and write a "
                                      "submission manifest")
    p.add_argument("--dataset", required=True,
                   help="generated-instance records (from `generate`)")
    p.add_argument("--n", type=int, help="sample size (default: all after "
                                         "balancing)")
    p.add_argument("--breaker-id", default="breaker",
                   help="breaker id for the manifest header")
    common(p)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("serve", help="serve the review API")
    p.add_argument("--manifest", required=True,
                   help="submission manifest to review")
    p.add_argument("--addr", default="127.0.0.1:8000",
                   help="host:port to bind (default 127.0.0.1:8000)")
    p.add_argument("--wiki", help="wiki snapshot for evidence display")
    p.add_argument("--predictions", action="append", metavar="NAME=PATH",
                   help="system prediction source for the leaderboard "
                        "preview (repeatable)")
    p.add_argument("--review-fraction", type=float,
                   help="review only a seeded stratified fraction (0, 1]")
    common(p)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    logging.basicConfig(level=logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (FeverForgeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def entry() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    raise SystemExit(main())

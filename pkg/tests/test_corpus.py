"""Data model and JSONL ingestion: parsing, canonicalization, round-trips."""

from __future__ import annotations

import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fever_forge.corpus import (
    DatasetError,
    EvidenceCombination,
    EvidenceSentenceId,
    Instance,
    Label,
    LabeledPrediction,
    Prediction,
    WikiSnapshot,
    canonical_title,
    dump_dataset,
    dump_record,
    iter_jsonl,
    load_dataset,
    load_predictions,
    load_wiki_snapshot,
    parse_instance,
    parse_label,
    parse_prediction,
    serialize_instance,
    serialize_prediction,
    write_jsonl,
)

from conftest import combo, make_instance, sid


class TestParseLabel:
    @pytest.mark.parametrize("raw,expected", [
        ("SUPPORTED", Label.SUPPORTED),
        ("SUPPORTS", Label.SUPPORTED),
        ("supports", Label.SUPPORTED),
        ("REFUTED", Label.REFUTED),
        ("REFUTES", Label.REFUTED),
        ("NOT ENOUGH INFO", Label.NOT_ENOUGH_INFO),
        ("NOT_ENOUGH_INFO", Label.NOT_ENOUGH_INFO),
        ("  not_enough_info  ", Label.NOT_ENOUGH_INFO),
    ])
    def test_both_spellings_and_case(self, raw, expected):
        assert parse_label(raw) is expected

    def test_label_instances_pass_through(self):
        assert parse_label(Label.REFUTED) is Label.REFUTED

    @pytest.mark.parametrize("raw", ["MAYBE", "", None, 3, "SUPPORT"])
    def test_unknown_labels_raise(self, raw):
        with pytest.raises(ValueError):
            parse_label(raw)


class TestCanonicalTitle:
    def test_spaces_become_underscores(self):
        assert canonical_title("Harbor Lights") == "Harbor_Lights"

    def test_percent_decoding_happens_once(self):
        assert canonical_title("Knife_%28film%29") == "Knife_(film)"
        # An already-decoded title must not be decoded a second time.
        assert canonical_title("100%25_Wolf") == "100%_Wolf"

    def test_case_preserved(self):
        assert canonical_title("McCoy") == "McCoy"

    @given(st.text(alphabet=st.characters(blacklist_characters="%"),
                   min_size=1, max_size=30))
    @settings(max_examples=100)
    def test_idempotent_without_percent_sequences(self, title):
        once = canonical_title(title)
        assert canonical_title(once) == once


class TestEvidenceSentenceId:
    def test_page_is_canonicalized(self):
        assert sid("Harbor Lights", 0).page == "Harbor_Lights"

    def test_as_pair(self):
        assert sid("A", 3).as_pair() == ["A", 3]

    def test_orderable(self):
        assert sorted([sid("B", 0), sid("A", 2), sid("A", 1)]) == [
            sid("A", 1), sid("A", 2), sid("B", 0)]

    @pytest.mark.parametrize("line", [-1, True, 1.5, "0"])
    def test_bad_line_index_raises(self, line):
        with pytest.raises(ValueError):
            EvidenceSentenceId(page="A", line=line)

    def test_empty_page_raises(self):
        with pytest.raises(ValueError):
            EvidenceSentenceId(page="", line=0)


class TestInstanceModel:
    def test_non_nei_requires_evidence(self):
        with pytest.raises(ValueError):
            Instance(id="x", claim="c", label=Label.SUPPORTED, evidence=())

    def test_nei_may_be_evidence_free(self):
        inst = Instance(id="x", claim="c", label=Label.NOT_ENOUGH_INFO)
        assert inst.evidence == ()

    def test_empty_combination_rejected(self):
        with pytest.raises(ValueError):
            EvidenceCombination(frozenset())

    def test_gold_sentence_union(self):
        inst = make_instance("x", Label.SUPPORTED,
                             [[("A", 0)], [("A", 1), ("B", 2)]])
        assert inst.gold_sentence_union() == frozenset(
            {sid("A", 0), sid("A", 1), sid("B", 2)})

    def test_prediction_join_checks_ids(self):
        gold = make_instance("x", Label.NOT_ENOUGH_INFO, [])
        with pytest.raises(ValueError):
            LabeledPrediction(gold=gold, pred=Prediction(
                instance_id="y", predicted_label=Label.NOT_ENOUGH_INFO))


class TestParseInstance:
    def test_multi_combination_record(self):
        # Two acceptable combinations, the second needing two sentences.
        obj = {
            "id": "75397",
            "claim": "The Killers formed in Las Vegas.",
            "label": "SUPPORTS",
            "evidence": [
                [["The_Killers", 0]],
                [["The_Killers", 4], ["Las_Vegas", 1]],
            ],
        }
        inst = parse_instance(obj)
        assert inst.label is Label.SUPPORTED
        assert len(inst.evidence) == 2
        assert inst.evidence[1].sentences == frozenset(
            {sid("The_Killers", 4), sid("Las_Vegas", 1)})

    def test_duplicate_combinations_are_dropped_with_warning(self, caplog):
        obj = {"id": "x", "claim": "c", "label": "SUPPORTED",
               "evidence": [[["A", 0]], [["A", 0]]]}
        with caplog.at_level("WARNING"):
            inst = parse_instance(obj)
        assert len(inst.evidence) == 1
        assert "duplicate evidence combination" in caplog.text

    @pytest.mark.parametrize("obj,fragment", [
        ({"claim": "c", "label": "SUPPORTED"}, "id"),
        ({"id": "x", "label": "SUPPORTED"}, "claim"),
        ({"id": "x", "claim": "c", "label": "BOGUS"}, "label"),
        ({"id": "x", "claim": "c", "label": "SUPPORTED", "evidence": "no"},
         "evidence"),
        ({"id": "x", "claim": "c", "label": "SUPPORTED",
          "evidence": [[["A"]]]}, "pair"),
    ])
    def test_malformed_records_raise_dataset_error(self, obj, fragment):
        with pytest.raises(DatasetError, match=fragment):
            parse_instance(obj)

    def test_round_trip(self):
        inst = make_instance("x", Label.REFUTED,
                             [[("B", 1), ("A", 0)], [("C", 7)]], claim="The claim.")
        assert parse_instance(serialize_instance(inst)) == inst

    def test_serialized_combinations_are_sorted(self):
        inst = make_instance("x", Label.SUPPORTED, [[("B", 1), ("A", 0)]])
        assert serialize_instance(inst)["evidence"] == [[["A", 0], ["B", 1]]]


evidence_strategy = st.lists(
    st.lists(
        st.tuples(st.text(alphabet="ABCdef_", min_size=1, max_size=6),
                  st.integers(min_value=0, max_value=9)),
        min_size=1, max_size=3, unique=True,
    ),
    min_size=1, max_size=3,
)


class TestRoundTripProperties:
    @given(label=st.sampled_from([Label.SUPPORTED, Label.REFUTED]),
           evidence=evidence_strategy,
           claim=st.text(min_size=1, max_size=40).filter(str.strip))
    @settings(max_examples=100)
    def test_instance_serialization_round_trips(self, label, evidence, claim):
        # One parse pass canonicalizes (dedup + title normalization); after
        # that, serialize/parse must be the identity.
        canon = parse_instance(
            serialize_instance(make_instance("id-1", label, evidence, claim=claim)))
        again = parse_instance(json.loads(dump_record(serialize_instance(canon))))
        assert again == canon

    @given(label=st.sampled_from(list(Label)),
           evidence=st.lists(
               st.tuples(st.text(alphabet="ABC", min_size=1, max_size=3),
                         st.integers(min_value=0, max_value=9)),
               max_size=4))
    @settings(max_examples=100)
    def test_prediction_serialization_round_trips(self, label, evidence):
        pred = Prediction(
            instance_id="p", predicted_label=label,
            predicted_evidence=tuple(sid(p, l) for p, l in evidence))
        assert parse_prediction(serialize_prediction(pred)) == pred


class TestJsonlFiles:
    def test_iter_jsonl_reports_line_numbers(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        path.write_text('{"ok": 1}\n\nnot json\n', encoding="utf-8")
        with pytest.raises(DatasetError, match=r"bad\.jsonl:3"):
            list(iter_jsonl(path))

    def test_iter_jsonl_rejects_non_objects(self, tmp_path):
        path = tmp_path / "arr.jsonl"
        path.write_text("[1, 2]\n", encoding="utf-8")
        with pytest.raises(DatasetError, match="object"):
            list(iter_jsonl(path))

    def test_blank_lines_are_skipped(self, tmp_path):
        path = tmp_path / "sparse.jsonl"
        path.write_text('\n{"a": 1}\n\n{"b": 2}\n', encoding="utf-8")
        assert [obj for _, obj in iter_jsonl(path)] == [{"a": 1}, {"b": 2}]

    def test_load_dataset_rejects_duplicate_ids(self, tmp_path):
        path = tmp_path / "dup.jsonl"
        rec = {"id": "x", "claim": "c", "label": "NOT ENOUGH INFO"}
        write_jsonl(path, [rec, rec])
        with pytest.raises(DatasetError, match="duplicate instance id"):
            load_dataset(path)

    def test_dataset_file_round_trip(self, tmp_path, demo_dataset):
        path = tmp_path / "out.jsonl"
        dump_dataset(demo_dataset, path)
        assert load_dataset(path) == demo_dataset


class TestLoadPredictions:
    def _dataset(self, tmp_path):
        insts = [make_instance("a", Label.NOT_ENOUGH_INFO, []),
                 make_instance("b", Label.SUPPORTED, [[("P", 0)]])]
        return insts

    def test_join_attaches_gold(self, tmp_path):
        insts = self._dataset(tmp_path)
        path = tmp_path / "preds.jsonl"
        write_jsonl(path, [
            {"id": "a", "predicted_label": "NOT ENOUGH INFO"},
            {"id": "b", "predicted_label": "SUPPORTED",
             "predicted_evidence": [["P", 0]]},
        ])
        joined = load_predictions(path, insts)
        assert [lp.gold.id for lp in joined] == ["a", "b"]
        assert joined[1].pred.predicted_evidence == (sid("P", 0),)

    def test_unknown_id_raises(self, tmp_path):
        path = tmp_path / "preds.jsonl"
        write_jsonl(path, [{"id": "ghost", "predicted_label": "SUPPORTED"}])
        with pytest.raises(DatasetError, match="unknown instance id"):
            load_predictions(path, self._dataset(tmp_path))

    def test_duplicate_prediction_raises(self, tmp_path):
        path = tmp_path / "preds.jsonl"
        write_jsonl(path, [
            {"id": "a", "predicted_label": "SUPPORTED"},
            {"id": "a", "predicted_label": "REFUTED"},
        ])
        with pytest.raises(DatasetError, match="multiple predictions"):
            load_predictions(path, self._dataset(tmp_path))


class TestWikiSnapshot:
    def test_loads_single_file(self, demo_wiki):
        assert len(demo_wiki.page_titles) == 6
        assert demo_wiki.lookup("Harbor_Lights", 0).startswith("Harbor Lights")

    def test_loads_directory_of_files(self, tmp_path):
        (tmp_path / "a.jsonl").write_text(
            '{"title": "One", "lines": ["s0", "s1"]}\n', encoding="utf-8")
        (tmp_path / "b.jsonl").write_text(
            '{"title": "Two", "lines": ["t0"]}\n', encoding="utf-8")
        snap = load_wiki_snapshot(tmp_path)
        assert snap.page_titles == ["One", "Two"]
        assert snap.lookup("Two", 0) == "t0"

    def test_titles_are_canonicalized_on_load_and_lookup(self, tmp_path):
        path = tmp_path / "w.jsonl"
        path.write_text('{"title": "Harbor Lights", "lines": ["x"]}\n',
                        encoding="utf-8")
        snap = load_wiki_snapshot(path)
        assert snap.page_titles == ["Harbor_Lights"]
        assert snap.lookup("Harbor Lights", 0) == "x"

    def test_duplicate_titles_rejected(self, tmp_path):
        path = tmp_path / "w.jsonl"
        path.write_text('{"title": "A B", "lines": []}\n'
                        '{"title": "A_B", "lines": []}\n', encoding="utf-8")
        with pytest.raises(DatasetError, match="duplicate page title"):
            load_wiki_snapshot(path)

    def test_lookup_misses_raise_lookup_error(self, demo_wiki):
        with pytest.raises(LookupError):
            demo_wiki.lookup("Nowhere", 0)
        with pytest.raises(LookupError):
            demo_wiki.lookup("Gullhaven", 999)

    def test_missing_lists_unresolvable_gold_ids(self, demo_wiki):
        ok = make_instance("a", Label.SUPPORTED, [[("Gullhaven", 0)]])
        bad = make_instance("b", Label.SUPPORTED,
                            [[("Gullhaven", 99)], [("Atlantis", 0)]])
        assert demo_wiki.missing([ok]) == []
        assert demo_wiki.missing([ok, bad]) == [
            sid("Atlantis", 0), sid("Gullhaven", 99)]

    def test_resolve_round_trips_every_demo_gold_sentence(self, demo_dataset,
                                                          demo_wiki):
        for inst in demo_dataset:
            for sentence_id in inst.gold_sentence_union():
                assert demo_wiki.resolve(sentence_id)

import json

import numpy as np
import pytest

from kb import (
    STATUSES,
    KBFormatError,
    KBRecord,
    WikidataAPIClient,
    dump_snapshot,
    label_of,
    load_snapshot,
    parse_snapshot,
    record_from_api,
    write_snapshot,
)


def _claim(qid):
    return {"mainsnak": {"datavalue": {"value": {"id": qid}}}}


class TestRecord:
    def test_normal_record_needs_a_name(self):
        with pytest.raises(KBFormatError):
            KBRecord(qid="Q1")

    def test_deleted_record_may_be_nameless(self):
        assert KBRecord(qid="Q1", status="deleted").canonical_name() is None

    def test_malformed_qid(self):
        with pytest.raises(KBFormatError):
            KBRecord(qid="P31", names={"en": ("x",)})
        with pytest.raises(KBFormatError):
            KBRecord(qid="Q1", names={"en": ("x",)}, instance_of=("human",))

    def test_unknown_status(self):
        with pytest.raises(KBFormatError):
            KBRecord(qid="Q1", names={"en": ("x",)}, status="redirect")

    def test_unknown_field(self):
        with pytest.raises(KBFormatError):
            KBRecord.from_dict({"qid": "Q1", "names": {"en": ["x"]}, "extra": 1})


class TestSnapshot:
    def test_dump_then_load(self, tiny_store, tmp_path):
        path = tmp_path / "kb.jsonl"
        write_snapshot(path, tiny_store)
        loaded = load_snapshot(path)
        assert dict(loaded) == dict(tiny_store)

    def test_generated_snapshot_round_trip(self, tmp_path):
        rng = np.random.default_rng(2)
        alphabet = list('abcXYZ é"\\\n\t漢')

        def qids(n):
            return tuple(f"Q{int(q)}" for q in rng.integers(1, 1001, size=n))

        records = []
        for i in range(1, 1001):
            status = STATUSES[int(rng.integers(len(STATUSES)))]
            names = {
                lang: tuple(
                    "x" + "".join(rng.choice(alphabet, size=int(rng.integers(0, 8))))
                    for _ in range(int(rng.integers(1, 4)))
                )
                for lang in ("en", "de", "zh")
                if rng.random() < 0.6
            }
            if status == "normal" and not names:
                names = {"en": (f"entity {i}",)}

            records.append(
                KBRecord(
                    qid=f"Q{i}",
                    names=names,
                    description_en=None if rng.random() < 0.3 else f"thing {i}",
                    instance_of=qids(int(rng.integers(0, 3))),
                    subclass_of=qids(int(rng.integers(0, 2))),
                    occupation=qids(int(rng.integers(0, 2))),
                    summary_en=None if rng.random() < 0.5 else f"Thing {i} is\nhere.",
                    status=status,
                )
            )
        path = tmp_path / "kb.jsonl"
        write_snapshot(path, records)
        loaded = load_snapshot(path)
        assert len(loaded) == 1000
        assert list(loaded.values()) == records
        assert dump_snapshot(loaded) == path.read_text(encoding="utf-8")

    def test_duplicate_qid(self):
        line = json.dumps({"qid": "Q1", "names": {"en": ["x"]}})
        with pytest.raises(KBFormatError, match="Line 2"):
            parse_snapshot(line + "\n" + line + "\n")

    def test_invalid_json(self):
        with pytest.raises(KBFormatError, match="Line 1"):
            parse_snapshot("{not json\n")

    def test_absent_optionals_omitted(self):
        record = KBRecord(qid="Q1", names={"en": ("x",)})
        assert "summary_en" not in json.loads(dump_snapshot([record]))

    def test_label_of(self, tiny_store):
        assert label_of(tiny_store, "Q5") == "human"
        assert label_of(tiny_store, "Q999") == "Q999"
        assert label_of(tiny_store, "Q701", fallback="?") == "?"


class TestRecordFromAPI:
    def test_missing_entity_is_deleted(self):
        assert record_from_api("Q1", {"missing": ""}).status == "deleted"

    def test_normal_entity(self):
        entity = {
            "labels": {"en": {"value": "Paris"}},
            "aliases": {"en": [{"value": "City of Light"}]},
            "descriptions": {"en": {"value": "capital of France"}},
            "claims": {"P31": [_claim("Q515")], "P279": [], "P106": []},
        }
        record = record_from_api("Q90", entity, {"extract": "Paris is a city."})
        assert record.status == "normal"
        assert record.names["en"] == ("Paris", "City of Light")
        assert record.instance_of == ("Q515",)
        assert record.summary_en == "Paris is a city."

    def test_disambiguation_and_list(self):
        base = {"labels": {"en": {"value": "x"}}}
        disamb = dict(base, claims={"P31": [_claim(WikidataAPIClient.DISAMBIGUATION_QID)]})
        listing = dict(base, claims={"P31": [_claim(WikidataAPIClient.LIST_QID)]})
        assert record_from_api("Q2", disamb).status == "disambiguation"
        assert record_from_api("Q3", listing).status == "list"
        assert record_from_api("Q4", base, {"type": "disambiguation"}).status == "disambiguation"

    def test_empty_entity(self):
        assert record_from_api("Q5", {"labels": {"en": {"value": "x"}}}).status == "empty"

    def test_invalid_qid_skips_network(self):
        assert WikidataAPIClient().get_record("not-a-qid") is None

import numpy as np
import pytest

from corpus import read_corpus, spans_from_bio
from kb import load_snapshot
from pipeline import PipelineConfig
from synthetic import (
    SyntheticSpec,
    corrupt_token,
    generate_synthetic,
    type_name,
    write_synthetic,
)


def _mentions(dataset):
    return {
        " ".join(sentence.words[span.start : span.end])
        for sentence, tags in dataset
        for span in spans_from_bio(tags)
    }


class TestGenerator:
    def test_deterministic(self, small_spec, small_corpus):
        again = generate_synthetic(small_spec)
        assert again.train == small_corpus.train
        assert again.test == small_corpus.test
        assert dict(again.store) == dict(small_corpus.store)

    def test_split_sizes(self, small_corpus):
        sizes = [len(small_corpus.split(s)) for s in ("train", "dev", "test")]
        assert sizes == [36, 12, 12]

    def test_entity_pools_are_disjoint(self, small_corpus):
        train, dev, test = (_mentions(small_corpus.split(s)) for s in ("train", "dev", "test"))
        assert not train & dev
        assert not train & test
        assert not dev & test

    def test_every_mention_is_in_the_kb(self, small_corpus):
        names = {
            name
            for record in small_corpus.store.values()
            for name in record.names.get("en", ())
        }
        for split in ("train", "dev", "test"):
            assert _mentions(small_corpus.split(split)) <= names

    def test_records_spell_out_the_label(self, small_corpus):
        by_name = {
            record.names["en"][0]: record
            for record in small_corpus.store.values()
            if record.status == "normal" and record.summary_en
        }
        for sentence, tags in small_corpus.train:
            for span in spans_from_bio(tags):
                record = by_name[" ".join(sentence.words[span.start : span.end])]
                assert record.description_en == type_name(span.label)

    def test_decoys_share_names(self, small_corpus):
        decoys = [r for r in small_corpus.store.values() if r.status != "normal"]
        assert decoys
        assert all(r.status in ("disambiguation", "list", "deleted") for r in decoys)

    def test_context_only_cues(self, taxonomy):
        corpus = generate_synthetic(SyntheticSpec(n_entities=12, n_sentences=20, kb_fraction=0.0))
        for sentence, tags in corpus.train:
            (span,) = spans_from_bio(tags)
            assert type_name(span.label).split()[0] in [w.lower() for w in sentence.words]

    def test_noise_only_in_test(self):
        corpus = generate_synthetic(
            SyntheticSpec(n_entities=12, n_sentences=30, noise_rate=1.0, seed=1)
        )
        assert not any(s.noisy for s, _ in corpus.train + corpus.dev)
        assert all(s.noisy for s, _ in corpus.test)

    def test_invalid_spec(self):
        with pytest.raises(ValueError):
            SyntheticSpec(kb_fraction=1.5)
        with pytest.raises(ValueError):
            SyntheticSpec(noise_target="labels")
        with pytest.raises(ValueError):
            SyntheticSpec(n_entities=3)
        with pytest.raises(ValueError):
            generate_synthetic(SyntheticSpec(labels=("Galaxy",)))


class TestHelpers:
    def test_type_name(self):
        assert type_name("HumanSettlement") == "human settlement"
        assert type_name("MusicalGRP") == "musical grp"

    def test_corrupt_token_edits_once(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            corrupted = corrupt_token("Kalomir", rng)
            assert abs(len(corrupted) - len("Kalomir")) <= 1
            assert corrupted


class TestWrite:
    def test_files_and_config(self, small_corpus, tmp_path):
        paths = write_synthetic(tmp_path, small_corpus)
        config = PipelineConfig.from_file(paths["config"])
        assert config.train_path == str(tmp_path / "train.conll")
        assert read_corpus(config.test_path) == small_corpus.test
        assert dict(load_snapshot(config.kb_path)) == dict(small_corpus.store)

import numpy as np
import pytest

from corpus import (
    BIOError,
    CorpusFormatError,
    EntitySpan,
    Sentence,
    TagSequence,
    Taxonomy,
    TaxonomyError,
    bio_from_spans,
    bio_violation,
    collapse_to_boundary,
    gold_spans,
    mark_span,
    mention_of,
    parse_corpus,
    read_corpus,
    repair_bio,
    serialize_corpus,
    spans_from_bio,
    write_corpus,
)


class TestTaxonomy:
    def test_bundled_shape(self, taxonomy):
        assert len(taxonomy.fine_labels) == 36
        assert len(taxonomy.coarse_labels) == 6
        assert taxonomy.coarse("HumanSettlement") == "Location"

    def test_bio_alphabet(self, taxonomy):
        tags = taxonomy.bio_tags()
        assert len(tags) == 73
        assert tags[0] == "O"

    def test_coarse_map_must_be_total(self):
        with pytest.raises(TaxonomyError):
            Taxonomy(fine_labels=("A", "B"), coarse_of={"A": "X"}, coarse_labels=("X",))

    def test_duplicate_fine_label(self):
        with pytest.raises(TaxonomyError):
            Taxonomy.from_text("A\tX\nA\tY\n")


class TestSentence:
    def test_empty_sentence_rejected(self):
        with pytest.raises(ValueError):
            Sentence.from_words("s", [])

    def test_whitespace_token_rejected(self):
        with pytest.raises(ValueError):
            Sentence.from_words("s", ["New York"])

    def test_id_must_be_a_single_word(self):
        for bad_id in ["doc 1", "", "a\tb"]:
            with pytest.raises(ValueError):
                Sentence.from_words(bad_id, ["a"])
        with pytest.raises(ValueError):
            Sentence.from_words("s", ["a"], language="e n")

    def test_text(self):
        assert Sentence.from_words("s", ["a", "b"]).text == "a b"


class TestBIO:
    def test_orphan_inside(self):
        assert bio_violation(["O", "I-X"]) == (1, "follows O")
        assert bio_violation(["I-X"])[0] == 0
        assert bio_violation(["B-X", "I-Y"])[0] == 1
        assert bio_violation(["B-X", "I-X", "O"]) is None

    def test_tag_sequence_validates(self):
        with pytest.raises(BIOError):
            TagSequence(("O", "I-Artist"))

    def test_repair_promotes_orphans(self):
        assert repair_bio(["O", "I-X", "I-X", "I-Y"]) == ["O", "B-X", "I-X", "B-Y"]

    def test_spans_round_trip(self):
        tags = ("B-A", "I-A", "O", "B-B", "B-A")
        spans = spans_from_bio(tags)
        assert spans == [EntitySpan(0, 2, "A"), EntitySpan(3, 4, "B"), EntitySpan(4, 5, "A")]
        assert bio_from_spans(spans, 5).tags == tags

    def test_generated_sequences_round_trip_and_collapse(self):
        rng = np.random.default_rng(0)
        for _ in range(500):
            n = int(rng.integers(1, 13))
            tags = []
            for i in range(n):
                choices = ["O", "B"] if i == 0 or tags[-1] == "O" else ["O", "B", "I"]
                prefix = choices[int(rng.integers(len(choices)))]
                if prefix == "O":
                    tags.append("O")
                elif prefix == "B":
                    tags.append(f"B-{'XY'[int(rng.integers(2))]}")
                else:
                    tags.append("I-" + tags[-1].split("-", 1)[1])
            tags = tuple(tags)

            spans = spans_from_bio(tags)
            assert bio_from_spans(spans, n).tags == tags
            collapsed = collapse_to_boundary(tags)
            assert [(s.start, s.end) for s in spans_from_bio(collapsed)] == [
                (s.start, s.end) for s in spans
            ]
            assert collapsed == bio_from_spans([s.with_label(None) for s in spans], n)

    def test_overlapping_spans_rejected(self):
        with pytest.raises(BIOError):
            bio_from_spans([EntitySpan(0, 2), EntitySpan(1, 3)], 4)

    def test_collapse(self):
        collapsed = collapse_to_boundary(("B-A", "I-A", "O", "B-B"))
        assert collapsed.tags == ("B-ENTITY", "I-ENTITY", "O", "B-ENTITY")

    def test_mark_span(self):
        marked = mark_span(["John", "smiled"], EntitySpan(0, 1))
        assert marked == "<e> John </e> smiled"
        assert mention_of(marked) == "John"

    def test_mark_span_out_of_range(self):
        with pytest.raises(ValueError):
            mark_span(["John"], EntitySpan(0, 2))


class TestCorpusIO:
    def test_parse(self, tiny_dataset):
        assert len(tiny_dataset) == 3
        sentence, tags = tiny_dataset[0]
        assert sentence.id == "s1"
        assert sentence.words[:2] == ["John", "Lennon"]
        assert tags[0] == "B-Artist"
        assert tiny_dataset[2][0].noisy
        assert not tiny_dataset[0][0].noisy

    def test_unknown_label_rejected(self, taxonomy):
        with pytest.raises(CorpusFormatError, match="taxonomy"):
            parse_corpus("x\tB-Nope\n", taxonomy=taxonomy)

    def test_orphan_rejected_with_line(self):
        with pytest.raises(CorpusFormatError, match="line 2"):
            parse_corpus("a\tO\nb\tI-Artist\n")

    def test_orphan_repaired(self):
        ((_, tags),) = parse_corpus("a\tO\nb\tI-Artist\n", repair=True)
        assert tags.tags == ("O", "B-Artist")

    def test_duplicate_id(self):
        with pytest.raises(CorpusFormatError, match="Duplicate"):
            parse_corpus("# id a\nx\tO\n\n# id a\ny\tO\n")

    def test_auto_ids_skip_explicit_ones(self):
        dataset = parse_corpus("A\tO\n\n# id s1\nB\tO\n\nC\tO\n")
        assert [sentence.id for sentence, _ in dataset] == ["s1.1", "s1", "s3"]

    def test_malformed_headers_rejected(self):
        for text in ["# id doc 1\nx\tO\n", "# lang en us\nx\tO\n", "# noisy yes\nx\tO\n"]:
            with pytest.raises(CorpusFormatError, match="Line 1"):
                parse_corpus(text)

    def test_other_comments_are_skipped(self):
        ((sentence, _),) = parse_corpus("# source wiki\n# identity\nx\tO\n")
        assert sentence.id == "s1"

    def test_generated_corpus_round_trip(self):
        rng = np.random.default_rng(5)
        characters = list("abcXYZé#-_.,0")
        dataset = []
        for i in range(50):
            n = int(rng.integers(1, 10))
            words = [
                "".join(rng.choice(characters, size=int(rng.integers(1, 6)))) for _ in range(n)
            ]
            sentence = Sentence.from_words(
                f"doc-{i}_{'ü' if i % 3 else 'x'}",
                words,
                language=["en", "de", "zh"][i % 3],
                noisy=bool(rng.random() < 0.3),
            )
            tags = bio_from_spans(
                [EntitySpan(0, 1, "Artist")] if rng.random() < 0.5 else [], n
            )
            dataset.append((sentence, tags))
        dataset = tuple(dataset)
        assert parse_corpus(serialize_corpus(dataset)) == dataset

    def test_untagged_input(self):
        ((sentence, tags),) = parse_corpus("hello\nworld\n", require_tags=False)
        assert sentence.words == ["hello", "world"]
        assert tags.tags == ("O", "O")

    def test_untagged_rejected_by_default(self):
        with pytest.raises(CorpusFormatError):
            parse_corpus("hello\n")

    def test_serialize_then_parse(self, tiny_dataset, tmp_path):
        path = tmp_path / "c.conll"
        write_corpus(path, tiny_dataset)
        assert read_corpus(path) == tiny_dataset
        assert parse_corpus(serialize_corpus(tiny_dataset)) == tiny_dataset

    def test_gold_spans(self, tiny_dataset):
        spans = gold_spans(tiny_dataset)
        assert spans["s2"] == [EntitySpan(0, 1, "HumanSettlement")]

import math

import numpy as np
import pytest

from corpus import mark_span, spans_from_bio
from kb import KBRecord, KBStore
from linker import (
    AliasTrie,
    Linker,
    allowed_next,
    build_trie,
    constrained_beam_search,
    entry_string,
    marginalize,
    score_entry,
    scorer_pairs_from_kb,
    split_entry,
    train_scorer,
)
from models.generation import END, UNK, GenerationScorer, NGramCopyScorer
from synthetic import SyntheticSpec, generate_synthetic


class TableScorer(GenerationScorer):
    """First symbol from a fixed table, then the only continuation with p=1"""

    def __init__(self, first, entries):
        self.first = first
        self.entries = entries
        self.alphabet = tuple(sorted({c for e in entries for c in e})) + (END, UNK)

    def score_next(self, context, prefix):
        if not prefix:
            scores = {s: math.log(p) for s, p in self.first.items()}
            scores[UNK] = math.log(1e-6)
            return scores
        (entry,) = [e for e in self.entries if e.startswith(prefix)]
        symbol = entry[len(prefix)] if len(entry) > len(prefix) else END
        return {symbol: 0.0, UNK: math.log(1e-6)}

    def to_dict(self):
        return {}

    @classmethod
    def from_dict(cls, payload):
        raise NotImplementedError

    @classmethod
    def train(cls, pairs, **params):
        raise NotImplementedError

    @classmethod
    def get_display_name(cls):
        return "table"

    @classmethod
    def get_description(cls):
        return "table"


class RandomTableScorer(TableScorer):
    """A fixed random next-symbol distribution for every prefix of the entries"""

    def __init__(self, entries, rng):
        self.alphabet = tuple(sorted({c for e in entries for c in e})) + (END, UNK)
        self.table = {}
        for entry in entries:
            for i in range(len(entry) + 1):
                if entry[:i] not in self.table:
                    probs = rng.dirichlet(np.ones(len(self.alphabet)))
                    self.table[entry[:i]] = {
                        s: math.log(p) for s, p in zip(self.alphabet, probs)
                    }

    def score_next(self, context, prefix):
        return self.table[prefix]


def _random_items(rng):
    """Up to 50 short entries over a small alphabet, some shared by several qids"""
    items = []
    for _ in range(int(rng.integers(1, 51))):
        name = "".join(rng.choice(list("abc"), size=int(rng.integers(1, 5))))
        items.append((entry_string(name, "en"), f"Q{int(rng.integers(1, 11))}"))
    return items


def _trie(items):
    trie = AliasTrie()
    for sequence, qid in items:
        trie.insert(sequence, qid)
    return trie.freeze()


def _oracle(scorer, trie, marked, k):
    """Score every entry exhaustively, then fan out and merge"""
    finished = [(entry, score_entry(scorer, marked, entry)) for entry, _ in trie.entries()]
    return marginalize(trie, finished, k)


class TestTrie:
    def test_entries_and_payload(self, tiny_store):
        trie = build_trie(tiny_store, ["en"])
        assert len(trie) == 8
        assert trie.payload(entry_string("Paris", "en")) == {"Q90", "Q830149"}
        assert entry_string("Lennon", "en") in trie
        assert entry_string("Lenn", "en") not in trie
        assert trie.frozen

    def test_frozen_trie_rejects_inserts(self, tiny_store):
        trie = build_trie(tiny_store, ["en"])
        with pytest.raises(RuntimeError):
            trie.insert("x >> en", "Q1")

    def test_unselected_language_is_skipped(self, tiny_store):
        assert len(build_trie(tiny_store, ["de"])) == 0

    def test_allowed_next(self):
        trie = _trie([("ab", "Q1"), ("a", "Q2")])
        assert allowed_next(trie, "") == {"a"}
        assert allowed_next(trie, "a") == {"b", END}
        assert allowed_next(trie, "ab") == {END}
        assert allowed_next(trie, "x") == frozenset()

    def test_membership_of_generated_names(self):
        rng = np.random.default_rng(3)
        expected = {}
        for i in range(1000):
            name = "".join(rng.choice(list("abcdé "), size=int(rng.integers(1, 8))))
            expected.setdefault(entry_string(name, "en"), set()).add(f"Q{i % 37}")
        trie = _trie([(entry, qid) for entry, qids in expected.items() for qid in qids])

        assert len(trie) == len(expected)
        for entry, qids in expected.items():
            assert entry in trie
            assert trie.payload(entry) == qids
        for _ in range(200):
            name = "".join(rng.choice(list("abcdé "), size=int(rng.integers(1, 8))))
            entry = entry_string(name, "en")
            assert (entry in trie) == (entry in expected)
            assert entry + "x" not in trie

    def test_walking_allowed_symbols_enumerates_the_entries(self):
        rng = np.random.default_rng(4)
        items = _random_items(rng) + _random_items(rng)
        trie = _trie(items)
        found, stack = set(), [""]
        while stack:
            prefix = stack.pop()
            for symbol in allowed_next(trie, prefix):
                if symbol == END:
                    found.add(prefix)
                else:
                    stack.append(prefix + symbol)
        assert found == {entry for entry, _ in items}
        assert found == {entry for entry, _ in trie.entries()}

    def test_entry_string_round_trip(self):
        assert split_entry(entry_string("A >> B", "en")) == ("A >> B", "en")


class TestBeamSearch:
    def test_marginalizes_surfaces_of_one_entity(self):
        entries = ["a >> en", "b >> en", "c >> en"]
        trie = _trie([("a >> en", "Q7"), ("b >> en", "Q7"), ("c >> en", "Q8")])
        scorer = TableScorer({"a": 0.3, "b": 0.2, "c": 0.1}, entries)
        candidates = constrained_beam_search(scorer, trie, "<e> x </e>", beam=4, k=5)
        assert [c.qid for c in candidates] == ["Q7", "Q8"]
        assert math.exp(candidates[0].score) == pytest.approx(0.5, abs=1e-9)
        assert math.exp(candidates[1].score) == pytest.approx(0.1, abs=1e-9)
        assert candidates[0].surface == "a >> en"
        assert candidates[0].language == "en"

    def test_homonyms_split_the_mass(self):
        trie = _trie([("a >> en", "Q2"), ("a >> en", "Q1")])
        scorer = TableScorer({"a": 0.6}, ["a >> en"])
        candidates = constrained_beam_search(scorer, trie, "<e> a </e>")
        assert [c.qid for c in candidates] == ["Q1", "Q2"]
        for candidate in candidates:
            assert math.exp(candidate.score) == pytest.approx(0.3)

    def test_matches_exhaustive_search_with_wide_beam(self, tiny_store):
        trie = build_trie(tiny_store, ["en"])
        scorer = train_scorer(scorer_pairs_from_kb(tiny_store, ["en"]))
        for marked in ["<e> Paris </e> is big", "<e> Jon Lenon </e> sang", "<e> xyz </e>"]:
            found = constrained_beam_search(scorer, trie, marked, beam=10_000, k=10)
            expected = _oracle(scorer, trie, marked, k=10)
            assert [c.qid for c in found] == [c.qid for c in expected]
            np.testing.assert_allclose(
                [c.score for c in found], [c.score for c in expected], atol=1e-9
            )

    def test_wide_beam_reproduces_exhaustive_ranking_on_random_tries(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            items = _random_items(rng)
            trie = _trie(items)
            scorer = RandomTableScorer([entry for entry, _ in items], rng)
            found = constrained_beam_search(scorer, trie, "<e> a </e>", beam=len(items), k=50)
            expected = _oracle(scorer, trie, "<e> a </e>", k=50)
            assert [c.qid for c in found] == [c.qid for c in expected]
            np.testing.assert_allclose(
                [c.score for c in found], [c.score for c in expected], atol=1e-9
            )

    def test_default_beam_output_on_random_tries(self):
        rng = np.random.default_rng(1)
        for _ in range(50):
            items = _random_items(rng)
            trie = _trie(items)
            scorer = RandomTableScorer([entry for entry, _ in items], rng)
            candidates = constrained_beam_search(scorer, trie, "<e> a </e>", beam=12, k=50)
            assert candidates
            for candidate in candidates:
                assert candidate.surface in trie
                assert candidate.qid in trie.payload(candidate.surface)
            scores = [c.score for c in candidates]
            assert all(a >= b for a, b in zip(scores, scores[1:]))

    def test_results_are_valid_and_sorted(self, tiny_store):
        trie = build_trie(tiny_store, ["en"])
        scorer = train_scorer(scorer_pairs_from_kb(tiny_store, ["en"]))
        candidates = constrained_beam_search(scorer, trie, "<e> Liverpool </e>", beam=3, k=5)
        assert 0 < len(candidates) <= 5
        assert len({c.qid for c in candidates}) == len(candidates)
        for candidate in candidates:
            assert candidate.qid in trie.payload(candidate.surface)
            assert np.isfinite(candidate.score)
        keys = [(-c.score, c.qid) for c in candidates]
        assert keys == sorted(keys)
        assert candidates[0].qid == "Q24826"

    def test_homonym_candidates_tie(self, tiny_store):
        linker = Linker(
            train_scorer(scorer_pairs_from_kb(tiny_store, ["en"])),
            build_trie(tiny_store, ["en"]),
        )
        by_qid = {c.qid: c.score for c in linker.link("<e> Paris </e> is big")}
        assert by_qid["Q90"] == pytest.approx(by_qid["Q830149"])

    def test_empty_trie(self, tiny_store):
        scorer = train_scorer(scorer_pairs_from_kb(tiny_store, ["en"]))
        assert constrained_beam_search(scorer, AliasTrie().freeze(), "<e> a </e>") == []

    def test_invalid_widths(self, tiny_store):
        scorer = train_scorer(scorer_pairs_from_kb(tiny_store, ["en"]))
        trie = build_trie(tiny_store, ["en"])
        with pytest.raises(ValueError):
            constrained_beam_search(scorer, trie, "<e> a </e>", beam=0)
        with pytest.raises(ValueError):
            constrained_beam_search(scorer, trie, "<e> a </e>", k=0)


class TestScorer:
    @pytest.fixture
    def pairs(self, tiny_store):
        return scorer_pairs_from_kb(tiny_store, ["en"])

    def test_distribution_is_normalized(self, pairs):
        scorer = NGramCopyScorer.train(pairs, order=3, copy_weight=0.5)
        for prefix in ["", "P", "Par", "zz"]:
            total = sum(scorer.distribution("<e> Paris </e>", prefix).values())
            assert total == pytest.approx(1.0)

    def test_no_copy_weight_is_the_ngram_model(self, pairs):
        scorer = NGramCopyScorer.train(pairs, copy_weight=0.0)
        assert scorer.distribution("<e> Paris </e>", "Pa") == scorer.ngram_distribution("Pa")

    def test_copy_favours_the_mention(self, pairs):
        plain = NGramCopyScorer.train(pairs, copy_weight=0.0)
        copying = NGramCopyScorer.train(pairs, copy_weight=0.5)
        context = "<e> Liverpool </e> won"
        assert score_entry(copying, context, "Liverpool >> en") > score_entry(
            plain, context, "Liverpool >> en"
        )

    def test_scores_are_finite(self, pairs):
        scorer = NGramCopyScorer.train(pairs)
        scores = scorer.score_next("<e> ü </e>", "Paris")
        assert all(np.isfinite(v) for v in scores.values())
        assert np.isfinite(scorer.symbol_logprob(scores, "ü"))

    def test_copy_weight_range(self, pairs):
        with pytest.raises(ValueError):
            NGramCopyScorer.train(pairs, copy_weight=1.0)

    def test_dict_round_trip(self, pairs):
        scorer = NGramCopyScorer.train(pairs, order=2)
        restored = NGramCopyScorer.from_dict(scorer.to_dict())
        assert restored.score_next("<e> a </e>", "Li") == scorer.score_next("<e> a </e>", "Li")

    def test_unknown_scorer(self, pairs):
        with pytest.raises(ValueError):
            train_scorer(pairs, scorer="Transformer")
    def test_copy_follows_the_mention_casing(self, pairs):
        scorer = NGramCopyScorer.train(pairs + [("Zebra", "Zebra >> en")])
        copy = scorer.copy_distribution("Zallosa", "")
        assert copy["Z"] == pytest.approx(1.0)
        copy = scorer.copy_distribution("Zallosa", "z")
        assert copy["a"] == pytest.approx(1.0)

    def test_copy_continues_to_the_separator(self, pairs):
        scorer = NGramCopyScorer.train(pairs)
        assert scorer.copy_distribution("Paris", "Paris")[" "] == pytest.approx(1.0)
        assert scorer.copy_distribution("Paris", "Paris ")[">"] == pytest.approx(1.0)
        assert scorer.copy_distribution("Paris", "Paris >> ") == scorer.ngram_distribution(
            "Paris >> "
        )

    def test_exact_entry_beats_short_and_suffix_entries(self):
        store = KBStore(
            [
                KBRecord(qid="Q1", names={"en": ("Zallosa Ultis",)}),
                KBRecord(qid="Q2", names={"en": ("Motis",)}),
                KBRecord(qid="Q3", names={"en": ("Ultis",)}),
                KBRecord(qid="Q4", names={"en": ("Zallosa",)}),
            ]
        )
        pairs = scorer_pairs_from_kb(store, ["en"])
        scorer = train_scorer(pairs)
        context = "They met <e> Zallosa Ultis </e> ."
        exact = score_entry(scorer, context, "Zallosa Ultis >> en")
        for other in ["Motis >> en", "Ultis >> en", "Zallosa >> en"]:
            assert exact > score_entry(scorer, context, other)
        linker = Linker(scorer, build_trie(store, ["en"]))
        assert linker.link(context)[0].qid == "Q1"


    def test_continues_a_case_folded_prefix(self):
        scorer = train_scorer([("paris", "Paris >> en")])
        scores = scorer.score_next("<e> paris </e>", "Pari")
        assert max(scores, key=scores.get) == "s"

class TestSyntheticLinking:
    def test_exact_mentions_link_to_their_own_name(self):
        corpus = generate_synthetic(
            SyntheticSpec(n_entities=150, n_sentences=500, kb_fraction=0.7, seed=0)
        )
        names = {name for qid in corpus.store for name in corpus.store[qid].names.get("en", ())}
        linker = Linker(
            train_scorer(scorer_pairs_from_kb(corpus.store, ["en"])),
            build_trie(corpus.store, ["en"]),
        )
        hits = total = 0
        for sentence, tags in corpus.dev:
            for span in spans_from_bio(tags):
                mention = " ".join(sentence.words[span.start : span.end])
                if mention not in names:
                    continue
                candidates = linker.link(mark_span(sentence.words, span))
                total += 1
                hits += bool(candidates) and split_entry(candidates[0].surface)[0] == mention
        assert total >= 90
        assert hits / total >= 0.95

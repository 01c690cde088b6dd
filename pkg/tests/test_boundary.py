import itertools

import numpy as np
import pytest

from boundary import (
    BOUNDARY_TAGS,
    BoundaryEnsemble,
    BoundaryModel,
    ensemble_predict,
    extract_features,
    load_ensemble,
    save_ensemble,
    to_boundary,
    train_boundary,
    viterbi_decode,
    vote_tags,
)
from corpus import Sentence, TagSequence, bio_violation, spans_from_bio
from models.sequence_tagging import AveragedPerceptronTagger, span_f1
from models.serialization import ModelFormatError, load_model


def _zero_model():
    tagger = AveragedPerceptronTagger(
        BOUNDARY_TAGS, {}, np.zeros((0, 3)), np.zeros((3, 3))
    )
    return BoundaryModel(tagger)


def _capitalized_dataset(n, seed):
    """Capitalized tokens are entities; separable by the shape features"""
    rng = np.random.default_rng(seed)
    lower = ["the", "a", "went", "to", "saw", "with", "and", "near", "of", "met"]
    upper = ["Kalo", "Mirte", "Zanu", "Pelo", "Varka", "Osti", "Ruma", "Teld"]
    dataset = []
    for k in range(n):
        words, tags = [], []
        for _ in range(int(rng.integers(3, 9))):
            if rng.random() < 0.3:
                length = int(rng.integers(1, 3))
                for j in range(length):
                    words.append(str(rng.choice(upper)))
                    tags.append("B-ENTITY" if j == 0 else "I-ENTITY")
                words.append(str(rng.choice(lower)))
                tags.append("O")
            else:
                words.append(str(rng.choice(lower)))
                tags.append("O")
        dataset.append((Sentence.from_words(f"c{seed}-{k}", words), TagSequence(tuple(tags))))
    return tuple(dataset)


class TestFeatures:
    def test_out_of_range(self):
        sentence = Sentence.from_words("s", ["a"])
        with pytest.raises(IndexError):
            extract_features(sentence, 1)

    def test_bounded_template_count(self):
        sentence = Sentence.from_words("s", ["Paris", "is", "big"])
        for i in range(3):
            features = extract_features(sentence, i)
            assert 0 < len(features) <= 19
            assert "bias" in features


class TestBoundaryModel:
    def test_rejects_typed_tag_set(self):
        tagger = AveragedPerceptronTagger(
            ("O", "B-A", "I-A"), {}, np.zeros((0, 3)), np.zeros((3, 3))
        )
        with pytest.raises(ValueError):
            BoundaryModel(tagger)

    def test_all_zero_weights_tag_outside(self):
        sentence = Sentence.from_words("s", ["John", "Smith", "smiled"])
        assert _zero_model().decode(sentence).tags == ("O", "O", "O")

    def test_to_boundary_collapses_types(self, tiny_dataset):
        collapsed = to_boundary(tiny_dataset)
        assert collapsed[0][1].tags[:2] == ("B-ENTITY", "I-ENTITY")


class TestTraining:
    def test_separable_data_is_learned(self):
        train = _capitalized_dataset(200, seed=1)
        dev = _capitalized_dataset(50, seed=2)
        model = train_boundary(train, dev, epochs=8, seed=0)
        assert model.metadata["dev_score"] == pytest.approx(1.0)
        predicted = [list(model.decode(s)) for s, _ in dev]
        assert span_f1([list(t) for _, t in dev], predicted) == pytest.approx(1.0)

    def test_decoded_tags_are_valid_bio(self):
        train = _capitalized_dataset(60, seed=3)
        model = train_boundary(train, train, epochs=2, seed=0)
        for sentence, _ in _capitalized_dataset(20, seed=4):
            tags = viterbi_decode(model, sentence)
            assert len(tags) == len(sentence)
            assert bio_violation(list(tags)) is None

    def test_same_seed_same_model(self, tiny_dataset):
        first = train_boundary(tiny_dataset, tiny_dataset, epochs=3, seed=7)
        second = train_boundary(tiny_dataset, tiny_dataset, epochs=3, seed=7)
        assert first.to_dict() == second.to_dict()

    def test_checkpoint_metadata(self, tiny_dataset):
        model = train_boundary(tiny_dataset, tiny_dataset, epochs=3, seed=1)
        assert 1 <= model.metadata["epochs_trained"] <= 3
        assert 0.0 <= model.metadata["dev_score"] <= 1.0

    def test_empty_training_set(self, tiny_dataset):
        with pytest.raises(ValueError):
            train_boundary((), tiny_dataset)


class TestVote:
    def test_entity_majority_picks_begin(self):
        assert vote_tags([["B-ENTITY"], ["B-ENTITY"], ["I-ENTITY"], ["O"], ["O"]]) == [
            "B-ENTITY"
        ]

    def test_outside_majority(self):
        votes = [["I-ENTITY"], ["I-ENTITY"], ["O"], ["O"], ["O"]]
        assert vote_tags(votes) == ["O"]

    def test_entity_tie_prefers_begin(self):
        votes = [["B-ENTITY"], ["B-ENTITY"], ["I-ENTITY"], ["I-ENTITY"], ["O"]]
        assert vote_tags(votes) == ["B-ENTITY"]

    def test_inside_plurality_among_entity_votes(self):
        votes = [["B-ENTITY"], ["I-ENTITY"], ["I-ENTITY"], ["O"], ["O"]]
        assert vote_tags(votes) == ["I-ENTITY"]

    def test_outside_wins_entity_tie(self):
        votes = [["B-ENTITY"], ["I-ENTITY"], ["O"], ["O"]]
        assert vote_tags(votes) == ["O"]

    def test_every_five_member_pattern(self):
        tags = ["O", "B-ENTITY", "I-ENTITY"]
        for pattern in itertools.product(tags, repeat=5):
            n_out = pattern.count("O")
            n_begin = pattern.count("B-ENTITY")
            n_inside = pattern.count("I-ENTITY")
            if n_out >= n_begin + n_inside:
                expected = "O"
            elif n_begin >= n_inside:
                expected = "B-ENTITY"
            else:
                expected = "I-ENTITY"
            assert vote_tags([[tag] for tag in pattern]) == [expected]

    def test_unanimous(self):
        assert vote_tags([["O", "B-ENTITY"]] * 5) == ["O", "B-ENTITY"]

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            vote_tags([["O"], ["O", "O"]])

    def test_nothing_to_vote_on(self):
        with pytest.raises(ValueError):
            vote_tags([])


class TestEnsemble:
    def test_needs_five_members(self):
        with pytest.raises(ValueError):
            BoundaryEnsemble((_zero_model(),) * 4)

    def test_identical_members_equal_single_model(self, tiny_dataset):
        model = train_boundary(tiny_dataset, tiny_dataset, epochs=3, seed=3)
        ensemble = BoundaryEnsemble((model,) * 5)
        for sentence, _ in tiny_dataset:
            assert ensemble_predict(ensemble, sentence) == model.decode(sentence)

    def test_voted_output_is_valid_bio(self, tiny_dataset):
        members = tuple(
            train_boundary(tiny_dataset, tiny_dataset, epochs=2, seed=s)
            for s in range(1, 6)
        )
        ensemble = BoundaryEnsemble(members)
        for sentence, _ in tiny_dataset:
            tags = ensemble_predict(ensemble, sentence)
            assert bio_violation(tags.tags) is None
            assert all(span.label == "ENTITY" for span in spans_from_bio(tags))

    def test_save_and_load(self, tmp_path):
        ensemble = BoundaryEnsemble((_zero_model(),) * 5)
        path = tmp_path / "boundary.json"
        save_ensemble(path, ensemble)
        loaded = load_ensemble(path)
        assert [m.to_dict() for m in loaded.members] == [
            m.to_dict() for m in ensemble.members
        ]
        with pytest.raises(ModelFormatError):
            load_model(path, "classifier")

import logging
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
from tqdm import tqdm

from models.sequence_tagging.core import SequenceTagger, TaggedSentences, span_f1
from models.sequence_tagging.features import token_features
from models.sequence_tagging.viterbi import transition_constraints, viterbi

LOGGER = logging.getLogger(__name__)


class AveragedPerceptronTagger(SequenceTagger):
    """
    Linear-chain tagger trained as an averaged structured perceptron.

    Emission weights are a ``(features, tags)`` matrix over a feature
    vocabulary fixed from the training data; transition weights are a
    ``(tags, tags)`` matrix. Decoding is exact Viterbi under BIO constraints.
    """

    def __init__(
        self,
        tag_set: Sequence[str],
        feature_index: Dict[str, int],
        emission: np.ndarray,
        transitions: np.ndarray,
        metadata: Optional[Dict[str, Any]] = None,
    ):
        self.tag_set = tuple(tag_set)
        self.feature_index = dict(feature_index)
        self.emission = np.asarray(emission, dtype=np.float64)
        self.transitions = np.asarray(transitions, dtype=np.float64)
        self.metadata = dict(metadata or {})

        n_tags = len(self.tag_set)
        if self.emission.shape != (len(self.feature_index), n_tags):
            raise ValueError(
                f"Emission matrix shape {self.emission.shape} does not match "
                f"{len(self.feature_index)} features x {n_tags} tags"
            )
        if self.transitions.shape != (n_tags, n_tags):
            raise ValueError(
                f"Transition matrix shape {self.transitions.shape} does not "
                f"match {n_tags} tags"
            )
        if not (
            np.all(np.isfinite(self.emission))
            and np.all(np.isfinite(self.transitions))
        ):
            raise ValueError("Tagger weights must be finite")
        self._allowed, self._allowed_start = transition_constraints(self.tag_set)

    @classmethod
    def get_display_name(cls) -> str:
        return "Averaged structured perceptron"

    @classmethod
    def get_description(cls) -> str:
        return (
            "Linear-chain model over sparse token features (word, shape, "
            "affixes, +-2 window), trained with the averaged structured "
            "perceptron and decoded with constrained Viterbi"
        )

    # ------------------------------------------------------------------
    # Decoding
    # ------------------------------------------------------------------
    def feature_ids(self, words: Sequence[str]) -> List[np.ndarray]:
        """Known feature ids per token, in sorted feature-name order"""
        ids = []
        for i in range(len(words)):
            names = sorted(token_features(words, i))
            ids.append(
                np.array(
                    [self.feature_index[f] for f in names if f in self.feature_index],
                    dtype=np.int64,
                )
            )
        return ids

    def emission_scores(self, words: Sequence[str]) -> np.ndarray:
        return self._emissions(self.emission, self.feature_ids(words))

    def _emissions(self, weights: np.ndarray, ids: List[np.ndarray]) -> np.ndarray:
        scores = np.zeros((len(ids), len(self.tag_set)))
        for i, token_ids in enumerate(ids):
            if len(token_ids):
                scores[i] = weights[token_ids].sum(axis=0)
        return scores

    def decode(self, words: Sequence[str]) -> List[str]:
        path = viterbi(
            self.emission_scores(words),
            self.transitions,
            self._allowed,
            self._allowed_start,
        )
        return [self.tag_set[t] for t in path]

    # ------------------------------------------------------------------
    # Training
    # ------------------------------------------------------------------
    @classmethod
    def train(
        cls,
        train: TaggedSentences,
        dev: TaggedSentences,
        tag_set: Sequence[str],
        epochs: int = 8,
        seed: int = 0,
        progress: bool = False,
    ) -> "AveragedPerceptronTagger":
        if not train:
            raise ValueError("Cannot train a tagger on an empty training set")
        if not dev:
            raise ValueError("Cannot select a checkpoint on an empty dev set")
        if epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {epochs}")

        tag_set = tuple(tag_set)
        tag_index = {tag: i for i, tag in enumerate(tag_set)}
        for words, tags in train:
            unknown = set(tags) - set(tag_index)
            if unknown:
                raise ValueError(f"Tags outside the tag set: {sorted(unknown)}")

        # Feature space is fixed from the training data
        feature_index: Dict[str, int] = {}
        for words, _ in train:
            for i in range(len(words)):
                for name in sorted(token_features(words, i)):
                    if name not in feature_index:
                        feature_index[name] = len(feature_index)

        n_features, n_tags = len(feature_index), len(tag_set)
        skeleton = cls(
            tag_set,
            feature_index,
            np.zeros((n_features, n_tags)),
            np.zeros((n_tags, n_tags)),
        )
        examples = [
            (skeleton.feature_ids(words), np.array([tag_index[t] for t in tags]))
            for words, tags in train
        ]

        # Averaging: avg = w - u / c, where u accumulates c * update
        weights = np.zeros((n_features, n_tags))
        weights_acc = np.zeros((n_features, n_tags))
        trans = np.zeros((n_tags, n_tags))
        trans_acc = np.zeros((n_tags, n_tags))
        counter = 1

        rng = np.random.default_rng(seed)
        best: Optional[AveragedPerceptronTagger] = None
        best_score = -1.0
        gold_dev = [list(tags) for _, tags in dev]

        for epoch in tqdm(
            range(1, epochs + 1),
            desc=f"tagger seed={seed}",
            disable=not progress,
            leave=False,
        ):
            for idx in rng.permutation(len(examples)):
                ids, gold = examples[idx]
                predicted = np.array(
                    viterbi(
                        skeleton._emissions(weights, ids),
                        trans,
                        skeleton._allowed,
                        skeleton._allowed_start,
                    )
                )
                if not np.array_equal(predicted, gold):
                    for i in np.flatnonzero(predicted != gold):
                        weights[ids[i], gold[i]] += 1.0
                        weights[ids[i], predicted[i]] -= 1.0
                        weights_acc[ids[i], gold[i]] += counter
                        weights_acc[ids[i], predicted[i]] -= counter
                    for i in range(1, len(gold)):
                        gold_pair = (gold[i - 1], gold[i])
                        pred_pair = (predicted[i - 1], predicted[i])
                        if gold_pair != pred_pair:
                            trans[gold_pair] += 1.0
                            trans[pred_pair] -= 1.0
                            trans_acc[gold_pair] += counter
                            trans_acc[pred_pair] -= counter
                counter += 1

            candidate = cls(
                tag_set,
                feature_index,
                weights - weights_acc / counter,
                trans - trans_acc / counter,
                metadata={"seed": seed, "epochs_trained": epoch},
            )
            score = span_f1(gold_dev, [candidate.decode(words) for words, _ in dev])
            LOGGER.debug("seed=%s epoch=%s dev span F1=%.4f", seed, epoch, score)
            if score > best_score:
                best, best_score = candidate, score

        best.metadata["dev_score"] = best_score
        LOGGER.info(
            "Tagger seed=%s: best epoch %s, dev span F1 %.4f",
            seed,
            best.metadata["epochs_trained"],
            best_score,
        )
        return best

    # ------------------------------------------------------------------
    # Serialization
    # ------------------------------------------------------------------
    def to_dict(self) -> Dict[str, Any]:
        rows, cols = np.nonzero(self.emission)
        features = sorted(self.feature_index, key=self.feature_index.get)
        return {
            "tagger": "AveragedPerceptron",
            "tag_set": list(self.tag_set),
            "features": features,
            "emission": [
                [int(r), int(c), float(self.emission[r, c])]
                for r, c in zip(rows, cols)
            ],
            "transitions": self.transitions.tolist(),
            "metadata": self.metadata,
        }

    @classmethod
    def from_dict(cls, payload: Dict[str, Any]) -> "AveragedPerceptronTagger":
        tag_set = payload["tag_set"]
        features = payload["features"]
        emission = np.zeros((len(features), len(tag_set)))
        for row, col, value in payload["emission"]:
            emission[row, col] = value
        return cls(
            tag_set=tag_set,
            feature_index={name: i for i, name in enumerate(features)},
            emission=emission,
            transitions=np.array(payload["transitions"], dtype=np.float64),
            metadata=payload.get("metadata", {}),
        )

import logging
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
from tqdm import tqdm

from models.text_classification.core import LabeledTexts, TextClassifier, accuracy
from models.text_classification.features import text_features

LOGGER = logging.getLogger(__name__)


class AveragedPerceptronClassifier(TextClassifier):
    """Multiclass averaged perceptron over sparse text features"""

    def __init__(
        self,
        labels: Sequence[str],
        feature_index: Dict[str, int],
        weights: np.ndarray,
        metadata: Optional[Dict[str, Any]] = None,
    ):
        self.labels = tuple(labels)
        self.feature_index = dict(feature_index)
        self.weights = np.asarray(weights, dtype=np.float64)
        self.metadata = dict(metadata or {})
        if self.weights.shape != (len(self.feature_index), len(self.labels)):
            raise ValueError(
                f"Weight matrix shape {self.weights.shape} does not match "
                f"{len(self.feature_index)} features x {len(self.labels)} labels"
            )

    @classmethod
    def get_display_name(cls) -> str:
        return "Averaged multiclass perceptron"

    @classmethod
    def get_description(cls) -> str:
        return (
            "Word uni/bigrams of the rendered input plus character 3-5-grams "
            "of the marked mention, trained with the averaged perceptron"
        )

    def feature_ids(self, text: str) -> np.ndarray:
        return np.array(
            [
                self.feature_index[f]
                for f in sorted(text_features(text))
                if f in self.feature_index
            ],
            dtype=np.int64,
        )

    def scores(self, text: str) -> np.ndarray:
        ids = self.feature_ids(text)
        if not len(ids):
            return np.zeros(len(self.labels))
        return self.weights[ids].sum(axis=0)

    @classmethod
    def train(
        cls,
        train: LabeledTexts,
        dev: LabeledTexts,
        labels: Sequence[str],
        epochs: int = 8,
        seed: int = 0,
        progress: bool = False,
    ) -> "AveragedPerceptronClassifier":
        if not train:
            raise ValueError("Cannot train a classifier on an empty training set")
        if not dev:
            raise ValueError("Cannot select a checkpoint on an empty dev set")
        labels = tuple(labels)
        label_index = {label: i for i, label in enumerate(labels)}
        for _, label in list(train) + list(dev):
            if label not in label_index:
                raise ValueError(f"Label {label!r} is not in the label set")

        feature_index: Dict[str, int] = {}
        for text, _ in train:
            for name in sorted(text_features(text)):
                if name not in feature_index:
                    feature_index[name] = len(feature_index)

        n_features, n_labels = len(feature_index), len(labels)
        skeleton = cls(labels, feature_index, np.zeros((n_features, n_labels)))
        examples: List = [
            (skeleton.feature_ids(text), label_index[label]) for text, label in train
        ]
        weights = np.zeros((n_features, n_labels))
        weights_acc = np.zeros((n_features, n_labels))
        counter = 1

        rng = np.random.default_rng(seed)
        best: Optional[AveragedPerceptronClassifier] = None
        best_score = -1.0
        gold_dev = [label for _, label in dev]

        for epoch in tqdm(
            range(1, epochs + 1),
            desc=f"classifier seed={seed}",
            disable=not progress,
            leave=False,
        ):
            for idx in rng.permutation(len(examples)):
                ids, gold = examples[idx]
                predicted = int(np.argmax(weights[ids].sum(axis=0)))
                if predicted != gold:
                    weights[ids, gold] += 1.0
                    weights[ids, predicted] -= 1.0
                    weights_acc[ids, gold] += counter
                    weights_acc[ids, predicted] -= counter
                counter += 1

            candidate = cls(
                labels,
                feature_index,
                weights - weights_acc / counter,
                metadata={"seed": seed, "epochs_trained": epoch},
            )
            score = accuracy(gold_dev, [candidate.predict(text) for text, _ in dev])
            LOGGER.debug("seed=%s epoch=%s dev accuracy=%.4f", seed, epoch, score)
            if score > best_score:
                best, best_score = candidate, score

        best.metadata["dev_score"] = best_score
        LOGGER.info(
            "Classifier seed=%s: best epoch %s, dev accuracy %.4f",
            seed,
            best.metadata["epochs_trained"],
            best_score,
        )
        return best

    def to_dict(self) -> Dict[str, Any]:
        rows, cols = np.nonzero(self.weights)
        return {
            "classifier": "AveragedPerceptron",
            "labels": list(self.labels),
            "features": sorted(self.feature_index, key=self.feature_index.get),
            "weights": [
                [int(r), int(c), float(self.weights[r, c])] for r, c in zip(rows, cols)
            ],
            "metadata": self.metadata,
        }

    @classmethod
    def from_dict(cls, payload: Dict[str, Any]) -> "AveragedPerceptronClassifier":
        features = payload["features"]
        weights = np.zeros((len(features), len(payload["labels"])))
        for row, col, value in payload["weights"]:
            weights[row, col] = value
        return cls(
            labels=payload["labels"],
            feature_index={name: i for i, name in enumerate(features)},
            weights=weights,
            metadata=payload.get("metadata", {}),
        )

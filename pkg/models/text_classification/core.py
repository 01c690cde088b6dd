from abc import ABC, abstractmethod
from typing import Any, Dict, Sequence, Tuple

import numpy as np

# (rendered input, label) pairs
LabeledTexts = Sequence[Tuple[str, str]]


class TextClassifier(ABC):
    """Abstract base class for single-label text classifiers"""

    labels: Tuple[str, ...]
    metadata: Dict[str, Any]

    @abstractmethod
    def scores(self, text: str) -> np.ndarray:
        """Score per label, aligned with ``labels``"""
        pass

    def predict(self, text: str) -> str:
        """Argmax label; ties go to the earlier label"""
        return self.labels[int(np.argmax(self.scores(text)))]

    @abstractmethod
    def to_dict(self) -> Dict[str, Any]:
        pass

    @classmethod
    @abstractmethod
    def from_dict(cls, payload: Dict[str, Any]) -> "TextClassifier":
        pass

    @classmethod
    @abstractmethod
    def train(
        cls,
        train: LabeledTexts,
        dev: LabeledTexts,
        labels: Sequence[str],
        epochs: int,
        seed: int,
    ) -> "TextClassifier":
        """Train and return the checkpoint with the best dev accuracy"""
        pass

    @classmethod
    @abstractmethod
    def get_display_name(cls) -> str:
        """Get the display name for UI"""
        pass

    @classmethod
    @abstractmethod
    def get_description(cls) -> str:
        """Get a brief description of the classifier"""
        pass


def accuracy(gold: Sequence[str], pred: Sequence[str]) -> float:
    if not gold:
        return 0.0
    return sum(g == p for g, p in zip(gold, pred)) / len(gold)

from abc import ABC, abstractmethod
from typing import Any, Dict, List, Sequence, Tuple

from corpus import spans_from_bio

# (words, tags) pairs, the unit every tagger trains on
TaggedSentences = Sequence[Tuple[Sequence[str], Sequence[str]]]


class SequenceTagger(ABC):
    """Abstract base class for sequence taggers (train / decode)"""

    tag_set: Tuple[str, ...]
    metadata: Dict[str, Any]

    @abstractmethod
    def decode(self, words: Sequence[str]) -> List[str]:
        """Best valid tag sequence for one sentence"""
        pass

    @abstractmethod
    def to_dict(self) -> Dict[str, Any]:
        """Serializable payload (see models.serialization)"""
        pass

    @classmethod
    @abstractmethod
    def from_dict(cls, payload: Dict[str, Any]) -> "SequenceTagger":
        pass

    @classmethod
    @abstractmethod
    def train(
        cls,
        train: TaggedSentences,
        dev: TaggedSentences,
        tag_set: Sequence[str],
        epochs: int,
        seed: int,
    ) -> "SequenceTagger":
        """
        Train on ``train`` and return the checkpoint scoring best on ``dev``.

        Parameters
        ----------
        train, dev : TaggedSentences
            Non-empty lists of ``(words, tags)``
        tag_set : Sequence[str]
            Tag alphabet; its order is the decoding tie-break order
        epochs : int
            Number of passes over ``train``
        seed : int
            Seed of the shuffling order

        Returns
        -------
        SequenceTagger
            Trained tagger with ``metadata`` (seed, epochs_trained, dev_score)
        """
        pass

    @classmethod
    @abstractmethod
    def get_display_name(cls) -> str:
        """Get the display name for UI"""
        pass

    @classmethod
    @abstractmethod
    def get_description(cls) -> str:
        """Get a brief description of the tagger"""
        pass


def span_f1(gold: Sequence[Sequence[str]], pred: Sequence[Sequence[str]]) -> float:
    """Micro span F1 (exact start, end and type) over parallel tag lists"""
    true_positives = n_gold = n_pred = 0
    for gold_tags, pred_tags in zip(gold, pred):
        gold_spans = set(spans_from_bio(gold_tags))
        pred_spans = set(spans_from_bio(pred_tags))
        true_positives += len(gold_spans & pred_spans)
        n_gold += len(gold_spans)
        n_pred += len(pred_spans)
    if true_positives == 0:
        return 1.0 if n_gold == n_pred == 0 else 0.0
    precision = true_positives / n_pred
    recall = true_positives / n_gold
    return 2 * precision * recall / (precision + recall)

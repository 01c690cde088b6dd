from abc import ABC, abstractmethod
from typing import Any, Dict, Sequence, Tuple

END = "</s>"
UNK = "<unk>"
# Between the name and the language code of an entry string
ENTRY_SEPARATOR = " >> "


class GenerationScorer(ABC):
    """
    Abstract base class for autoregressive entity-name scorers.

    A scorer gives, for a marked sentence and a generated prefix, the
    log-probability of every next symbol of its alphabet (which includes
    ``END`` and ``UNK``). Scorers are deterministic and immutable.
    """

    alphabet: Tuple[str, ...]

    @abstractmethod
    def score_next(self, context: str, prefix: str) -> Dict[str, float]:
        """Log-probability of each alphabet symbol after ``prefix``"""
        pass

    def symbol_logprob(self, scores: Dict[str, float], symbol: str) -> float:
        """Score of ``symbol``, falling back to ``UNK`` for unseen symbols"""
        if symbol in scores:
            return scores[symbol]
        return scores[UNK]

    @abstractmethod
    def to_dict(self) -> Dict[str, Any]:
        pass

    @classmethod
    @abstractmethod
    def from_dict(cls, payload: Dict[str, Any]) -> "GenerationScorer":
        pass

    @classmethod
    @abstractmethod
    def train(
        cls, pairs: Sequence[Tuple[str, str]], **params
    ) -> "GenerationScorer":
        """Fit on ``(mention text, canonical entry string)`` pairs"""
        pass

    @classmethod
    @abstractmethod
    def get_display_name(cls) -> str:
        """Get the display name for UI"""
        pass

    @classmethod
    @abstractmethod
    def get_description(cls) -> str:
        """Get a brief description of the scorer"""
        pass

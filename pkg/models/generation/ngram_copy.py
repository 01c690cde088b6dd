import math
from collections import Counter, defaultdict
from typing import Any, Dict, Sequence, Tuple

from corpus import mention_of
from models.generation.core import END, ENTRY_SEPARATOR, UNK, GenerationScorer

START = "<s>"


class NGramCopyScorer(GenerationScorer):
    """
    Character n-gram model over entry strings interpolated with a copy model.

    ``p(c | prefix) = (1 - copy_weight) * p_ngram(c | last order-1 chars)
    + copy_weight * p_copy(c | prefix, mention)``

    The n-gram part uses add-one smoothing over the full alphabet. The copy
    part spells the marked mention in its own casing followed by the entry
    separator, copies from the longest matching suffix once the prefix has
    diverged, and defers to the n-gram part inside the language code.
    """

    def __init__(
        self,
        counts: Dict[Tuple[str, ...], Dict[str, int]],
        alphabet: Sequence[str],
        order: int = 3,
        copy_weight: float = 0.9,
    ):
        if order < 1:
            raise ValueError(f"order must be >= 1, got {order}")
        if not 0.0 <= copy_weight < 1.0:
            raise ValueError(f"copy_weight must be in [0, 1), got {copy_weight}")
        self.order = order
        self.copy_weight = copy_weight
        self.alphabet = tuple(alphabet)
        if END not in self.alphabet or UNK not in self.alphabet:
            raise ValueError("Alphabet must contain the END and UNK symbols")
        self.counts = {
            tuple(history): dict(nexts) for history, nexts in counts.items()
        }
        self._totals = {h: sum(n.values()) for h, n in self.counts.items()}
        self._characters = tuple(s for s in self.alphabet if s not in (END, UNK))

    @classmethod
    def get_display_name(cls) -> str:
        return "Character n-gram + copy"

    @classmethod
    def get_description(cls) -> str:
        return (
            "Add-one smoothed character n-gram over entity entries, "
            "interpolated with a model copying the marked mention"
        )

    @classmethod
    def train(
        cls,
        pairs: Sequence[Tuple[str, str]],
        order: int = 3,
        copy_weight: float = 0.9,
    ) -> "NGramCopyScorer":
        if not pairs:
            raise ValueError("Cannot train a scorer on an empty set of pairs")
        counts: Dict[Tuple[str, ...], Counter] = defaultdict(Counter)
        characters = set()
        for _, entry in pairs:
            characters.update(entry)
            symbols = [START] * (order - 1) + list(entry) + [END]
            for i in range(order - 1, len(symbols)):
                history = tuple(symbols[i - order + 1 : i])
                counts[history][symbols[i]] += 1
        alphabet = sorted(characters) + [END, UNK]
        return cls(counts, alphabet, order=order, copy_weight=copy_weight)

    def _history(self, prefix: str) -> Tuple[str, ...]:
        if self.order == 1:
            return ()
        padded = [START] * (self.order - 1) + list(prefix)
        return tuple(padded[-(self.order - 1) :])

    def ngram_distribution(self, prefix: str) -> Dict[str, float]:
        history = self._history(prefix)
        nexts = self.counts.get(history, {})
        denominator = self._totals.get(history, 0) + len(self.alphabet)
        return {s: (nexts.get(s, 0) + 1) / denominator for s in self.alphabet}

    def copy_distribution(self, mention: str, prefix: str) -> Dict[str, float]:
        """
        Copy probabilities of the next symbol given the mention.

        While the name part of ``prefix`` spells the mention (ignoring case)
        all mass goes to the next mention character in the mention's own
        casing, then to the separator. A diverged prefix copies from the
        longest suffix found in the mention. Past the separator the copy
        model defers to the n-gram model.
        """
        if ENTRY_SEPARATOR in prefix:
            return self.ngram_distribution(prefix)
        if not mention:
            return self._uniform()
        target = mention + ENTRY_SEPARATOR
        n = len(prefix)
        if n < len(target) and prefix.lower() == target[:n].lower():
            continuations = Counter(target[n])
        else:
            continuations = _suffix_continuations(target, prefix)

        mass = {s: c for s, c in continuations.items() if s in self._characters}
        total = sum(mass.values())
        if total == 0:
            return self._uniform()
        return {s: mass.get(s, 0) / total for s in self.alphabet}

    def _uniform(self) -> Dict[str, float]:
        return {s: 1.0 / len(self.alphabet) for s in self.alphabet}

    def distribution(self, context: str, prefix: str) -> Dict[str, float]:
        """Interpolated next-symbol probabilities (sums to 1)"""
        ngram = self.ngram_distribution(prefix)
        if self.copy_weight == 0.0:
            return ngram
        copy = self.copy_distribution(mention_of(context), prefix)
        return {
            s: (1.0 - self.copy_weight) * ngram[s] + self.copy_weight * copy[s]
            for s in self.alphabet
        }

    def score_next(self, context: str, prefix: str) -> Dict[str, float]:
        return {s: math.log(p) for s, p in self.distribution(context, prefix).items()}

    def to_dict(self) -> Dict[str, Any]:
        return {
            "scorer": "NGramCopy",
            "order": self.order,
            "copy_weight": self.copy_weight,
            "alphabet": list(self.alphabet),
            "counts": [
                [list(history), symbol, count]
                for history in sorted(self.counts)
                for symbol, count in sorted(self.counts[history].items())
            ],
        }

    @classmethod
    def from_dict(cls, payload: Dict[str, Any]) -> "NGramCopyScorer":
        counts: Dict[Tuple[str, ...], Dict[str, int]] = defaultdict(dict)
        for history, symbol, count in payload["counts"]:
            counts[tuple(history)][symbol] = count
        return cls(
            counts,
            payload["alphabet"],
            order=payload["order"],
            copy_weight=payload["copy_weight"],
        )


def _suffix_continuations(target: str, prefix: str) -> Counter:
    """
    Characters following the longest suffix of ``prefix`` found in ``target``.

    Exact-case matches are preferred over case-folded ones at each length;
    the continuation keeps the casing of ``target``.
    """
    folded_target = target.lower()
    for length in range(min(len(prefix), len(target)), 0, -1):
        suffix = prefix[-length:]
        for haystack, needle in ((target, suffix), (folded_target, suffix.lower())):
            continuations: Counter = Counter()
            start = haystack.find(needle)
            while start >= 0:
                if start + length < len(target):
                    continuations[target[start + length]] += 1
                start = haystack.find(needle, start + 1)
            if continuations:
                return continuations
    return Counter()

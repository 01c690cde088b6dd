"""Entity linking by constrained generation over a prefix trie of entity names.

Every KB name ``n`` in a selected language ``l`` becomes the entry string
``"n >> l"``. Generation proceeds character by character; at each step only
the continuations present in the trie (plus the end marker at complete
entries) may be expanded, so every finished hypothesis is a valid entry.
"""

import logging
import math
from dataclasses import dataclass
from typing import Dict, FrozenSet, Iterable, Iterator, List, Optional, Sequence, Set, Tuple

import numpy as np

from kb import KBStore
from models.generation import END, ENTRY_SEPARATOR, SCORER_REGISTRY, GenerationScorer

LOGGER = logging.getLogger(__name__)

DEFAULT_BEAM = 12
DEFAULT_K = 5


def entry_string(name: str, language: str) -> str:
    return f"{name}{ENTRY_SEPARATOR}{language}"


def split_entry(entry: str) -> Tuple[str, str]:
    name, _, language = entry.rpartition(ENTRY_SEPARATOR)
    return name, language


# ==============================================================================
# Prefix trie
# ==============================================================================
class _TrieNode:
    __slots__ = ("children", "qids")

    def __init__(self):
        self.children: Dict[str, "_TrieNode"] = {}
        self.qids: Set[str] = set()


class AliasTrie:
    """Character trie of entry strings with the qids ending at each entry"""

    def __init__(self):
        self._root = _TrieNode()
        self._frozen = False
        self._size = 0

    def insert(self, sequence: str, qid: str) -> None:
        if self._frozen:
            raise RuntimeError("Cannot insert into a frozen trie")
        if not sequence:
            raise ValueError("Cannot insert an empty sequence")
        node = self._root
        for symbol in sequence:
            node = node.children.setdefault(symbol, _TrieNode())
        if not node.qids:
            self._size += 1
        node.qids.add(qid)

    def freeze(self) -> "AliasTrie":
        self._frozen = True
        return self

    @property
    def frozen(self) -> bool:
        return self._frozen

    def _node(self, prefix: str) -> Optional[_TrieNode]:
        node = self._root
        for symbol in prefix:
            node = node.children.get(symbol)
            if node is None:
                return None
        return node

    def payload(self, sequence: str) -> FrozenSet[str]:
        """Qids attached to a complete entry (empty if not an entry)"""
        node = self._node(sequence)
        return frozenset(node.qids) if node is not None else frozenset()

    def __contains__(self, sequence: str) -> bool:
        return bool(self.payload(sequence))

    def __len__(self) -> int:
        return self._size

    def entries(self) -> Iterator[Tuple[str, FrozenSet[str]]]:
        """All complete entries with their payloads, in lexicographic order"""
        stack: List[Tuple[str, _TrieNode]] = [("", self._root)]
        found = []
        while stack:
            prefix, node = stack.pop()
            if node.qids:
                found.append((prefix, frozenset(node.qids)))
            for symbol, child in node.children.items():
                stack.append((prefix + symbol, child))
        return iter(sorted(found))


@dataclass(frozen=True)
class LinkCandidate:
    qid: str
    language: str
    surface: str
    score: float


def build_trie(store: KBStore, languages: Iterable[str]) -> AliasTrie:
    """
    Insert ``"name >> lang"`` for every name of every record in the
    selected languages. Records of every status are inserted; page
    conditions are handled after prediction by the retrieval fallback.
    """
    languages = tuple(languages)
    trie = AliasTrie()
    for qid in sorted(store):
        record = store[qid]
        for language in languages:
            for name in record.names.get(language, ()):
                trie.insert(entry_string(name, language), qid)
    LOGGER.info("Built trie with %s entries over %s", len(trie), ", ".join(languages))
    return trie.freeze()


def allowed_next(trie: AliasTrie, prefix: str) -> FrozenSet[str]:
    """Child symbols of the prefix node, plus ``END`` if it is a full entry"""
    node = trie._node(prefix)
    if node is None:
        return frozenset()
    allowed = set(node.children)
    if node.qids:
        allowed.add(END)
    return frozenset(allowed)


# ==============================================================================
# Decoding
# ==============================================================================
def score_entry(scorer: GenerationScorer, context: str, entry: str) -> float:
    """Log-probability of generating ``entry`` and then ``END``"""
    total = 0.0
    for i, symbol in enumerate(list(entry) + [END]):
        scores = scorer.score_next(context, entry[:i])
        total += scorer.symbol_logprob(scores, symbol)
    return total


def marginalize(
    trie: AliasTrie, finished: Sequence[Tuple[str, float]], k: int
) -> List[LinkCandidate]:
    """
    Fan finished entries out to their qids and merge per qid.

    An entry with ``m`` qids gives each ``score - log(m)``; scores of the
    same qid reached through different entries are combined with
    log-sum-exp. The kept surface is the one contributing most.
    """
    merged: Dict[str, List] = {}
    for surface, score in finished:
        qids = sorted(trie.payload(surface))
        if not qids:
            continue
        share = score - math.log(len(qids))
        for qid in qids:
            if qid not in merged:
                merged[qid] = [share, share, surface]
                continue
            total, best_share, best_surface = merged[qid]
            total = float(np.logaddexp(total, share))
            if share > best_share or (share == best_share and surface < best_surface):
                best_share, best_surface = share, surface
            merged[qid] = [total, best_share, best_surface]

    candidates = [
        LinkCandidate(
            qid=qid, language=split_entry(surface)[1], surface=surface, score=total
        )
        for qid, (total, _, surface) in merged.items()
    ]
    candidates.sort(key=lambda c: (-c.score, c.qid))
    return candidates[:k]


def constrained_beam_search(
    scorer: GenerationScorer,
    trie: AliasTrie,
    marked_sentence: str,
    beam: int = DEFAULT_BEAM,
    k: int = DEFAULT_K,
) -> List[LinkCandidate]:
    """
    Top-``k`` qids for the marked mention.

    Parameters
    ----------
    scorer : GenerationScorer
        Next-symbol scorer conditioned on the marked sentence
    trie : AliasTrie
        Valid entry strings
    marked_sentence : str
        Sentence with the mention wrapped in ``<e>`` ... ``</e>``
    beam : int
        Number of expansions kept per step (finished ones included)
    k : int
        Number of candidates returned

    Returns
    -------
    List[LinkCandidate]
        Sorted by descending score, ties by qid; empty if nothing finished
    """
    if beam < 1 or k < 1:
        raise ValueError(f"beam and k must be >= 1, got beam={beam}, k={k}")

    live: List[Tuple[str, float]] = [("", 0.0)]
    finished: List[Tuple[str, float]] = []
    while live:
        expansions = []
        for prefix, score in live:
            symbols = allowed_next(trie, prefix)
            if not symbols:
                continue
            scores = scorer.score_next(marked_sentence, prefix)
            for symbol in symbols:
                expansions.append(
                    (score + scorer.symbol_logprob(scores, symbol), prefix, symbol)
                )
        expansions.sort(key=lambda e: (-e[0], e[1], e[2]))

        live = []
        for score, prefix, symbol in expansions[:beam]:
            if symbol == END:
                finished.append((prefix, score))
            else:
                live.append((prefix + symbol, score))

    candidates = marginalize(trie, finished, k)
    LOGGER.debug(
        "Linked %r -> %s",
        marked_sentence,
        [(c.qid, round(c.score, 4)) for c in candidates],
    )
    return candidates


# ==============================================================================
# Scorer training
# ==============================================================================
def scorer_pairs_from_kb(
    store: KBStore, languages: Iterable[str]
) -> List[Tuple[str, str]]:
    """``(name, entry)`` for every name the trie holds"""
    languages = tuple(languages)
    pairs = []
    for qid in sorted(store):
        record = store[qid]
        for language in languages:
            for name in record.names.get(language, ()):
                pairs.append((name, entry_string(name, language)))
    return pairs


def train_scorer(
    pairs: Sequence[Tuple[str, str]],
    scorer: str = "NGramCopy",
    **params,
) -> GenerationScorer:
    """
    Fit the entity-name scorer on ``(mention text, canonical entry)`` pairs.

    The default is an order-3 add-one character n-gram over the entries,
    interpolated (``copy_weight``, default 0.9) with the mention copy model.
    """
    if not pairs:
        raise ValueError("Cannot train a scorer on an empty set of pairs")
    if scorer not in SCORER_REGISTRY:
        raise ValueError(f"Unknown scorer {scorer!r}")
    model = SCORER_REGISTRY[scorer].train(pairs, **params)
    LOGGER.info("Trained %s scorer on %s pairs", scorer, len(pairs))
    return model


@dataclass(frozen=True)
class Linker:
    """A trained scorer and the trie it decodes over"""

    scorer: GenerationScorer
    trie: AliasTrie
    beam: int = DEFAULT_BEAM
    k: int = DEFAULT_K

    def link(self, marked_sentence: str) -> List[LinkCandidate]:
        return constrained_beam_search(
            self.scorer, self.trie, marked_sentence, beam=self.beam, k=self.k
        )

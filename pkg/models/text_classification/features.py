"""Bag-of-words and mention character n-gram features of a rendered input."""

from typing import FrozenSet

from corpus import CLOSE_MARK, OPEN_MARK, mention_of

CHAR_NGRAM_ORDERS = (3, 4, 5)


def text_features(rendered: str) -> FrozenSet[str]:
    """
    Feature ids of a rendered classifier input.

    Word unigrams and bigrams over the whole lowercased text (markup and
    ``__SEP__`` included as words), character 3-5-grams of the marked
    mention padded with ``#``, and a bias feature so empty input still
    scores.
    """
    words = rendered.lower().split()
    features = {"bias"}
    features.update(f"w={w}" for w in words)
    features.update(f"b={a}_{b}" for a, b in zip(words, words[1:]))

    if OPEN_MARK in rendered and CLOSE_MARK in rendered:
        mention = f"#{mention_of(rendered).lower()}#"
        for order in CHAR_NGRAM_ORDERS:
            for i in range(len(mention) - order + 1):
                features.add(f"c{order}={mention[i:i + order]}")
    return frozenset(features)

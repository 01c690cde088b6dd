"""Token feature templates for the linear-chain taggers."""

from typing import FrozenSet, Sequence

AFFIX_LENGTHS = (1, 2, 3)
WINDOW = ((-2, "prev2"), (-1, "prev"), (1, "next"), (2, "next2"))
SENTENCE_START = "<s>"
SENTENCE_END = "</s>"


def word_shape(word: str) -> str:
    """Map letters to X/x and digits to d, keeping other characters"""
    shape = []
    for ch in word:
        if ch.isupper():
            shape.append("X")
        elif ch.islower():
            shape.append("x")
        elif ch.isdigit():
            shape.append("d")
        else:
            shape.append(ch)
    return "".join(shape)


def short_shape(word: str) -> str:
    """Word shape with repeated characters collapsed (Xxxxx -> Xx)"""
    collapsed = []
    for ch in word_shape(word):
        if not collapsed or collapsed[-1] != ch:
            collapsed.append(ch)
    return "".join(collapsed)


def token_features(words: Sequence[str], i: int) -> FrozenSet[str]:
    """
    Feature ids of token ``i``.

    At most 19 templates fire per token: bias, word, shape, short shape,
    three prefixes, three suffixes, four window words, title/upper/digit
    flags and the first/last position markers.
    """
    word = words[i]
    lower = word.lower()
    features = {
        "bias",
        f"w={lower}",
        f"shape={word_shape(word)}",
        f"sshape={short_shape(word)}",
    }
    for k in AFFIX_LENGTHS:
        features.add(f"pre{k}={lower[:k]}")
        features.add(f"suf{k}={lower[-k:]}")
    for offset, name in WINDOW:
        j = i + offset
        if j < 0:
            neighbour = SENTENCE_START
        elif j >= len(words):
            neighbour = SENTENCE_END
        else:
            neighbour = words[j].lower()
        features.add(f"{name}={neighbour}")
    if word.istitle():
        features.add("is_title")
    if word.isupper():
        features.add("is_upper")
    if any(ch.isdigit() for ch in word):
        features.add("has_digit")
    if i == 0:
        features.add("first")
    if i == len(words) - 1:
        features.add("last")
    return frozenset(features)

"""Exact first-order Viterbi decoding under hard BIO constraints."""

from typing import List, Sequence, Tuple

import numpy as np

from corpus import split_tag


def transition_constraints(
    tag_set: Sequence[str],
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Build the hard BIO constraints for a tag alphabet.

    Returns
    -------
    tuple[np.ndarray, np.ndarray]
        ``allowed[prev, cur]`` and ``allowed_start[cur]`` boolean masks;
        ``I-X`` is only reachable from ``B-X`` or ``I-X``.
    """
    parsed = [split_tag(tag) for tag in tag_set]
    n_tags = len(tag_set)
    allowed = np.ones((n_tags, n_tags), dtype=bool)
    allowed_start = np.ones(n_tags, dtype=bool)
    for cur, (cur_prefix, cur_type) in enumerate(parsed):
        if cur_prefix != "I":
            continue
        allowed_start[cur] = False
        for prev, (prev_prefix, prev_type) in enumerate(parsed):
            allowed[prev, cur] = prev_prefix != "O" and prev_type == cur_type
    return allowed, allowed_start


def viterbi(
    emissions: np.ndarray,
    transitions: np.ndarray,
    allowed: np.ndarray,
    allowed_start: np.ndarray,
) -> List[int]:
    """
    Highest-scoring valid tag path.

    Ties are broken towards the lower tag index, both at every backpointer
    and for the final tag (``np.argmax`` returns the first maximum).

    Parameters
    ----------
    emissions : np.ndarray
        ``(n, T)`` per-token tag scores
    transitions : np.ndarray
        ``(T, T)`` scores for ``prev -> cur``
    allowed, allowed_start : np.ndarray
        Masks from :func:`transition_constraints`
    """
    n, n_tags = emissions.shape
    masked = np.where(allowed, transitions, -np.inf)
    score = np.where(allowed_start, emissions[0], -np.inf)
    backpointers = np.zeros((n, n_tags), dtype=np.int64)
    columns = np.arange(n_tags)
    for i in range(1, n):
        candidates = score[:, None] + masked
        backpointers[i] = np.argmax(candidates, axis=0)
        score = candidates[backpointers[i], columns] + emissions[i]

    path = [int(np.argmax(score))]
    for i in range(n - 1, 0, -1):
        path.append(int(backpointers[i, path[-1]]))
    path.reverse()
    return path


"""Step 1 of the cascade: entity boundaries from an ensemble of taggers.

Each member is a linear-chain tagger over ``O / B-ENTITY / I-ENTITY``; the
ensemble votes per token and repairs the voted sequence into valid BIO.
"""

import logging
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, FrozenSet, List, Sequence, Tuple, Union

from tqdm import tqdm

from corpus import (
    BOUNDARY_TYPE,
    OUTSIDE,
    Dataset,
    Sentence,
    TagSequence,
    collapse_to_boundary,
    repair_bio,
    split_tag,
)
from models.sequence_tagging import TAGGER_REGISTRY, SequenceTagger
from models.sequence_tagging.features import token_features
from models.serialization import ModelFormatError, load_model, save_model

LOGGER = logging.getLogger(__name__)

BOUNDARY_TAGS = (OUTSIDE, f"B-{BOUNDARY_TYPE}", f"I-{BOUNDARY_TYPE}")
ENSEMBLE_SIZE = 5
DEFAULT_EPOCHS = 8
DEFAULT_TAGGER = "AveragedPerceptron"

# Entity tag tie-break: lower rank wins
_PREFIX_RANK = {"B": 1, "I": 2}


# ==============================================================================
# Models
# ==============================================================================
@dataclass(frozen=True)
class TaggingModel:
    """A trained sequence tagger applied to corpus sentences"""

    tagger: SequenceTagger

    @property
    def tag_set(self) -> Tuple[str, ...]:
        return tuple(self.tagger.tag_set)

    @property
    def metadata(self) -> Dict[str, Any]:
        return self.tagger.metadata

    def decode(self, sentence: Sentence) -> TagSequence:
        return TagSequence(tuple(self.tagger.decode(sentence.words)))

    def to_dict(self) -> Dict[str, Any]:
        return self.tagger.to_dict()

    @classmethod
    def from_dict(cls, payload: Dict[str, Any]):
        key = payload.get("tagger")
        if key not in TAGGER_REGISTRY:
            raise ModelFormatError(f"Unknown tagger {key!r}")
        return cls(TAGGER_REGISTRY[key].from_dict(payload))


@dataclass(frozen=True)
class BoundaryModel(TaggingModel):
    def __post_init__(self):
        if self.tag_set != BOUNDARY_TAGS:
            raise ValueError(
                f"A boundary model needs the tags {BOUNDARY_TAGS}, got {self.tag_set}"
            )


@dataclass(frozen=True)
class BoundaryEnsemble:
    members: Tuple[BoundaryModel, ...]

    def __post_init__(self):
        object.__setattr__(self, "members", tuple(self.members))
        if len(self.members) != ENSEMBLE_SIZE:
            raise ValueError(
                f"A boundary ensemble has exactly {ENSEMBLE_SIZE} members, "
                f"got {len(self.members)}"
            )

    @property
    def dev_scores(self) -> List[float]:
        return [m.metadata.get("dev_score") for m in self.members]


def extract_features(sentence: Sentence, i: int) -> FrozenSet[str]:
    if not 0 <= i < len(sentence):
        raise IndexError(f"Token index {i} out of range for length {len(sentence)}")
    return token_features(sentence.words, i)


# ==============================================================================
# Training
# ==============================================================================
def train_tagger(
    train: Dataset,
    dev: Dataset,
    tag_set: Sequence[str],
    epochs: int = DEFAULT_EPOCHS,
    seed: int = 0,
    tagger: str = DEFAULT_TAGGER,
    progress: bool = False,
) -> SequenceTagger:
    if not train or not dev:
        raise ValueError("Training and dev sets must be non-empty")
    if tagger not in TAGGER_REGISTRY:
        raise ValueError(f"Unknown tagger {tagger!r}")
    return TAGGER_REGISTRY[tagger].train(
        [(s.words, list(tags)) for s, tags in train],
        [(s.words, list(tags)) for s, tags in dev],
        tag_set,
        epochs=epochs,
        seed=seed,
        progress=progress,
    )


def to_boundary(dataset: Dataset) -> Dataset:
    return tuple((s, collapse_to_boundary(tags)) for s, tags in dataset)


def train_boundary(
    train: Dataset,
    dev: Dataset,
    epochs: int = DEFAULT_EPOCHS,
    seed: int = 0,
    tagger: str = DEFAULT_TAGGER,
    progress: bool = False,
) -> BoundaryModel:
    """
    Train one boundary tagger; gold fine tags are collapsed to ``ENTITY``.

    The returned checkpoint is the epoch with the best dev boundary span F1.
    """
    model = train_tagger(
        to_boundary(train),
        to_boundary(dev),
        BOUNDARY_TAGS,
        epochs=epochs,
        seed=seed,
        tagger=tagger,
        progress=progress,
    )
    return BoundaryModel(model)


def _train_member(args) -> BoundaryModel:
    train, dev, epochs, seed, tagger, progress = args
    return train_boundary(train, dev, epochs=epochs, seed=seed, tagger=tagger, progress=progress)


def train_ensemble(
    train: Dataset,
    dev: Dataset,
    seeds: Sequence[int],
    epochs: int = DEFAULT_EPOCHS,
    tagger: str = DEFAULT_TAGGER,
    workers: int = 1,
    progress: bool = False,
) -> BoundaryEnsemble:
    """Train one member per seed, in parallel when ``workers > 1``"""
    if len(seeds) != ENSEMBLE_SIZE:
        raise ValueError(f"Expected {ENSEMBLE_SIZE} seeds, got {len(seeds)}")
    LOGGER.info("Training boundary ensemble (seeds %s)", list(seeds))
    jobs = [(train, dev, epochs, seed, tagger, False) for seed in seeds]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            members = list(pool.map(_train_member, jobs))
    else:
        members = [
            _train_member(job)
            for job in tqdm(jobs, desc="boundary members", disable=not progress)
        ]
    return BoundaryEnsemble(tuple(members))


# ==============================================================================
# Inference
# ==============================================================================
def viterbi_decode(model: TaggingModel, sentence: Sentence) -> TagSequence:
    return model.decode(sentence)


def vote_tags(sequences: Sequence[Sequence[str]]) -> List[str]:
    """
    Per-token vote over equally long tag sequences.

    Each token is first voted entity-or-not: ``O`` wins unless strictly more
    members put the token inside an entity. An entity token then takes the
    plurality entity tag, ties going to B-* before I-* and then to the
    lexicographically smaller tag. The result may contain orphan ``I`` tags.
    """
    if not sequences:
        raise ValueError("Nothing to vote on")
    lengths = {len(s) for s in sequences}
    if len(lengths) != 1:
        raise ValueError(f"Sequences of different lengths: {sorted(lengths)}")

    voted = []
    for column in zip(*sequences):
        counts = Counter(column)
        outside = counts.pop(OUTSIDE, 0)
        if outside >= sum(counts.values()):
            voted.append(OUTSIDE)
            continue
        voted.append(
            min(
                counts,
                key=lambda tag: (-counts[tag], _PREFIX_RANK[split_tag(tag)[0]], tag),
            )
        )
    return voted


def ensemble_predict(ensemble: BoundaryEnsemble, sentence: Sentence) -> TagSequence:
    outputs = [list(viterbi_decode(m, sentence)) for m in ensemble.members]
    return TagSequence(tuple(repair_bio(vote_tags(outputs))))


# ==============================================================================
# Persistence
# ==============================================================================
def save_ensemble(path: Union[str, Path], ensemble: BoundaryEnsemble) -> None:
    save_model(path, "boundary", {"members": [m.to_dict() for m in ensemble.members]})
    LOGGER.info("Wrote boundary ensemble to %s", path)


def load_ensemble(path: Union[str, Path]) -> BoundaryEnsemble:
    payload = load_model(path, "boundary")
    return BoundaryEnsemble(
        tuple(BoundaryModel.from_dict(member) for member in payload["members"])
    )

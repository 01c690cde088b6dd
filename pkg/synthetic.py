"""Synthetic corpus and KB snapshot generator for desk-scale experiments.

Entity names are random syllable strings and labels are drawn independently
of them, so a label can only be recovered from the sentence context or from
the entity's KB record. For the KB-determined fraction of sentences the
context is label-neutral; for the rest it names the entity type.
"""

import json
import logging
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

import numpy as np

from corpus import (
    OUTSIDE,
    Dataset,
    Sentence,
    TagSequence,
    Taxonomy,
    load_taxonomy,
    write_corpus,
)
from kb import KBRecord, KBStore, write_snapshot

LOGGER = logging.getLogger(__name__)

NOISE_TARGETS = ("entity", "context", "both")
SPLITS = ("train", "dev", "test")
DEFAULT_LABELS = (
    "Scientist",
    "Artist",
    "Athlete",
    "Politician",
    "HumanSettlement",
    "Facility",
    "WrittenWork",
    "MusicalGRP",
)

SYLLABLES = (
    "ka", "lo", "mir", "ten", "sa", "vor", "eli", "dan", "ru", "bel", "tis",
    "ora", "gun", "pe", "zal", "min", "ko", "rha", "wen", "ast", "ul", "fen",
    "dri", "mo", "cal", "ix", "ne", "bra", "sol", "yu",
)

NEUTRAL_TEMPLATES = (
    "yesterday {E} was mentioned in the report .",
    "{E} appeared in the news again .",
    "people talked about {E} all week .",
    "we read something new about {E} .",
    "the article about {E} was shared widely .",
    "everyone was asking about {E} today .",
)

CUE_TEMPLATES = (
    "the {T} {E} was discussed today .",
    "{E} , a well known {T} , drew attention .",
    "as a {T} , {E} is often cited .",
    "critics praised {E} as a remarkable {T} .",
)

DECOY_STATUSES = ("disambiguation", "list", "deleted")


@dataclass(frozen=True)
class SyntheticSpec:
    n_entities: int = 120
    n_sentences: int = 500
    kb_fraction: float = 0.5
    noise_rate: float = 0.0
    seed: int = 0
    noise_target: str = "entity"
    labels: Tuple[str, ...] = DEFAULT_LABELS
    dev_fraction: float = 0.2
    test_fraction: float = 0.2
    decoy_rate: float = 0.1

    def __post_init__(self):
        object.__setattr__(self, "labels", tuple(self.labels))
        for name in ("kb_fraction", "noise_rate", "dev_fraction", "test_fraction", "decoy_rate"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {value}")
        if self.dev_fraction + self.test_fraction >= 1.0:
            raise ValueError("dev_fraction + test_fraction must be below 1")
        if self.noise_target not in NOISE_TARGETS:
            raise ValueError(
                f"noise_target must be one of {NOISE_TARGETS}, got {self.noise_target!r}"
            )
        if not self.labels:
            raise ValueError("At least one label is required")
        if self.n_entities < 3 * len(SPLITS):
            raise ValueError(f"n_entities must be >= {3 * len(SPLITS)}")
        if self.n_sentences < len(SPLITS):
            raise ValueError(f"n_sentences must be >= {len(SPLITS)}")


@dataclass(frozen=True)
class SyntheticCorpus:
    train: Dataset
    dev: Dataset
    test: Dataset
    store: KBStore

    def split(self, name: str) -> Dataset:
        return getattr(self, name)


@dataclass(frozen=True)
class _Entity:
    qid: str
    name: str
    label: str


def type_name(label: str) -> str:
    """Readable English name of a fine label (``HumanSettlement`` -> ``human settlement``)"""
    words = re.sub(r"(?<=[a-z])(?=[A-Z])|(?<=[A-Z])(?=[A-Z][a-z])", " ", label)
    return words.replace("/", " or ").lower()


# ==============================================================================
# Corruption
# ==============================================================================
def corrupt_token(token: str, rng: np.random.Generator) -> str:
    """Apply one random character edit (swap, substitute, delete, duplicate)"""
    operations = ["substitute", "duplicate"]
    if len(token) > 1:
        operations += ["swap", "delete"]
    operation = operations[int(rng.integers(len(operations)))]
    i = int(rng.integers(len(token)))
    if operation == "swap":
        i = min(i, len(token) - 2)
        return token[:i] + token[i + 1] + token[i] + token[i + 2 :]
    if operation == "delete":
        return token[:i] + token[i + 1 :]
    if operation == "duplicate":
        return token[: i + 1] + token[i:]
    letters = "abcdefghijklmnopqrstuvwxyz"
    replacement = letters[int(rng.integers(len(letters)))]
    if token[i].isupper():
        replacement = replacement.upper()
    return token[:i] + replacement + token[i + 1 :]


# ==============================================================================
# Generation
# ==============================================================================
def _random_name(rng: np.random.Generator) -> str:
    n_words = 1 if rng.random() < 0.5 else int(rng.integers(2, 4))
    words = []
    for _ in range(n_words):
        n_syllables = int(rng.integers(2, 4))
        word = "".join(SYLLABLES[int(rng.integers(len(SYLLABLES)))] for _ in range(n_syllables))
        words.append(word.capitalize())
    return " ".join(words)


def _make_sentence(
    sentence_id: str,
    entity: _Entity,
    template: str,
    rng: np.random.Generator,
    corrupt: Optional[str],
) -> Tuple[Sentence, TagSequence]:
    words: List[str] = []
    tags: List[str] = []
    for piece in template.split():
        if piece == "{E}":
            for j, part in enumerate(entity.name.split()):
                words.append(part)
                tags.append(f"{'B' if j == 0 else 'I'}-{entity.label}")
        elif piece == "{T}":
            for part in type_name(entity.label).split():
                words.append(part)
                tags.append(OUTSIDE)
        else:
            words.append(piece)
            tags.append(OUTSIDE)
    words[0] = words[0][0].upper() + words[0][1:]

    if corrupt is not None:
        for i, tag in enumerate(tags):
            is_entity = tag != OUTSIDE
            if words[i].isalpha() and (
                corrupt == "both" or (corrupt == "entity") == is_entity
            ):
                words[i] = corrupt_token(words[i], rng)

    sentence = Sentence.from_words(sentence_id, words, noisy=corrupt is not None)
    return sentence, TagSequence(tuple(tags))


def generate_synthetic(
    spec: SyntheticSpec = SyntheticSpec(), taxonomy: Optional[Taxonomy] = None
) -> SyntheticCorpus:
    """
    Build a train/dev/test corpus and the matching KB snapshot.

    Each split draws its entities from its own pool. Every entity's KB
    record points (``instance_of``, plus ``occupation`` for people) to a
    type record whose English name spells out the fine label, and carries
    a description and summary naming it too. A share of entity names also
    belong to decoy records (disambiguation pages, lists, deleted items).
    Only test sentences are corrupted.
    """
    taxonomy = taxonomy or load_taxonomy()
    unknown = [label for label in spec.labels if label not in taxonomy]
    if unknown:
        raise ValueError(f"Labels outside the taxonomy: {unknown}")
    rng = np.random.default_rng(spec.seed)

    records: List[KBRecord] = []
    next_qid = 1

    def new_qid() -> str:
        nonlocal next_qid
        qid = f"Q{next_qid}"
        next_qid += 1
        return qid

    human_qid = new_qid()
    records.append(
        KBRecord(
            qid=human_qid,
            names={"en": ("human",)},
            description_en="common name of Homo sapiens",
        )
    )
    type_qids: Dict[str, str] = {}
    for label in spec.labels:
        qid = new_qid()
        type_qids[label] = qid
        records.append(
            KBRecord(qid=qid, names={"en": (type_name(label),)}, description_en="category")
        )

    used_names = set()
    entities: List[_Entity] = []
    while len(entities) < spec.n_entities:
        name = _random_name(rng)
        if name in used_names:
            continue
        used_names.add(name)
        label = spec.labels[int(rng.integers(len(spec.labels)))]
        entity = _Entity(new_qid(), name, label)
        entities.append(entity)
        kind = type_name(label)
        is_person = taxonomy.coarse(label) == "Person"
        records.append(
            KBRecord(
                qid=entity.qid,
                names={"en": (name,)},
                description_en=kind,
                instance_of=(human_qid,) if is_person else (type_qids[label],),
                occupation=(type_qids[label],) if is_person else (),
                summary_en=f"{name} is a {kind}.",
            )
        )
        if rng.random() < spec.decoy_rate:
            status = DECOY_STATUSES[int(rng.integers(len(DECOY_STATUSES)))]
            records.append(
                KBRecord(
                    qid=new_qid(),
                    names={"en": (name,)},
                    description_en="Wikimedia disambiguation page"
                    if status == "disambiguation"
                    else None,
                    status=status,
                )
            )

    # Disjoint entity pools per split
    n_dev = max(1, round(len(entities) * spec.dev_fraction))
    n_test = max(1, round(len(entities) * spec.test_fraction))
    pools = {
        "test": entities[:n_test],
        "dev": entities[n_test : n_test + n_dev],
        "train": entities[n_test + n_dev :],
    }
    sizes = {
        "dev": max(1, round(spec.n_sentences * spec.dev_fraction)),
        "test": max(1, round(spec.n_sentences * spec.test_fraction)),
    }
    sizes["train"] = max(1, spec.n_sentences - sizes["dev"] - sizes["test"])

    splits: Dict[str, Dataset] = {}
    for split in SPLITS:
        pool = pools[split]
        dataset = []
        for i in range(sizes[split]):
            entity = pool[int(rng.integers(len(pool)))]
            if rng.random() < spec.kb_fraction:
                template = NEUTRAL_TEMPLATES[int(rng.integers(len(NEUTRAL_TEMPLATES)))]
            else:
                template = CUE_TEMPLATES[int(rng.integers(len(CUE_TEMPLATES)))]
            corrupt = None
            if split == "test" and rng.random() < spec.noise_rate:
                corrupt = spec.noise_target
            dataset.append(
                _make_sentence(f"{split}-{i + 1:05d}", entity, template, rng, corrupt)
            )
        splits[split] = tuple(dataset)

    store = KBStore(records)
    LOGGER.info(
        "Generated %s entities, %s KB records, %s/%s/%s sentences",
        len(entities),
        len(store),
        len(splits["train"]),
        len(splits["dev"]),
        len(splits["test"]),
    )
    return SyntheticCorpus(splits["train"], splits["dev"], splits["test"], store)


def write_synthetic(
    out_dir: Union[str, Path], corpus: SyntheticCorpus, model_dir: str = "model"
) -> Dict[str, Path]:
    """
    Write ``train.conll``, ``dev.conll``, ``test.conll``, ``kb.jsonl`` and a
    ``config.json`` pointing at them.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {split: out_dir / f"{split}.conll" for split in SPLITS}
    for split, path in paths.items():
        write_corpus(path, corpus.split(split))
    paths["kb"] = out_dir / "kb.jsonl"
    write_snapshot(paths["kb"], corpus.store.values())
    paths["config"] = out_dir / "config.json"
    config = {
        "train_path": "train.conll",
        "dev_path": "dev.conll",
        "test_path": "test.conll",
        "kb_path": "kb.jsonl",
        "model_dir": model_dir,
    }
    paths["config"].write_text(json.dumps(config, indent=2) + "\n", encoding="utf-8")
    return paths

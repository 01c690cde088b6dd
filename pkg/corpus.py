"""Corpus data model, column-format file I/O and BIO helpers.

The corpus format is CoNLL-like: one ``token<TAB>tag`` row per line, a blank
line between sentences and optional comment headers before the first row of
each sentence::

    # id s1
    # lang en
    # noisy
    Paris	B-HumanSettlement
    is	O

"""

import functools
import logging
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

LOGGER = logging.getLogger(__name__)

OUTSIDE = "O"
BOUNDARY_TYPE = "ENTITY"
OPEN_MARK = "<e>"
CLOSE_MARK = "</e>"

DEFAULT_TAXONOMY_PATH = (
    Path(__file__).resolve().parent / "assets" / "multiconer2_taxonomy.tsv"
)
BUNDLED_FINE_COUNT = 36
BUNDLED_COARSE_COUNT = 6

_HEADER_KEY_RE = re.compile(r"^# (id|lang|noisy)(?:\s|$)")
_HEADER_RE = re.compile(r"^# (id|lang|noisy)(?:\s+(\S+))?\s*$")
_WHITESPACE_RE = re.compile(r"\s")


class CorpusFormatError(ValueError):
    """Malformed corpus file; the message carries the offending line number"""


class BIOError(ValueError):
    """Tag sequence violating the BIO scheme"""


class TaxonomyError(ValueError):
    """Taxonomy that is not a total fine -> coarse map"""


# ==============================================================================
# Data model
# ==============================================================================
@dataclass(frozen=True)
class Token:
    text: str
    index: int

    def __post_init__(self):
        if not self.text:
            raise ValueError(f"Token {self.index} is empty")
        if _WHITESPACE_RE.search(self.text):
            raise ValueError(
                f"Token {self.index} contains whitespace: {self.text!r}"
            )


@dataclass(frozen=True)
class Sentence:
    id: str
    tokens: Tuple[Token, ...]
    language: str = "en"
    noisy: bool = False

    def __post_init__(self):
        object.__setattr__(self, "tokens", tuple(self.tokens))
        for name, value in (("id", self.id), ("language", self.language)):
            if not value or _WHITESPACE_RE.search(value):
                raise ValueError(
                    f"Sentence {name} must be non-empty without whitespace: {value!r}"
                )
        if not self.tokens:
            raise ValueError(f"Sentence {self.id!r} has no tokens")
        for position, token in enumerate(self.tokens):
            if token.index != position:
                raise ValueError(
                    f"Sentence {self.id!r}: token indices are not contiguous "
                    f"(expected {position}, got {token.index})"
                )

    @classmethod
    def from_words(
        cls,
        id: str,
        words: Iterable[str],
        language: str = "en",
        noisy: bool = False,
    ) -> "Sentence":
        tokens = tuple(Token(text=w, index=i) for i, w in enumerate(words))
        return cls(id=id, tokens=tokens, language=language, noisy=noisy)

    @property
    def words(self) -> List[str]:
        return [token.text for token in self.tokens]

    @property
    def text(self) -> str:
        return " ".join(self.words)

    def __len__(self) -> int:
        return len(self.tokens)


@dataclass(frozen=True, order=True)
class EntitySpan:
    """Token span ``[start, end)`` with an optional fine label"""

    start: int
    end: int
    label: Optional[str] = None

    def __post_init__(self):
        if not 0 <= self.start < self.end:
            raise ValueError(f"Invalid span ({self.start}, {self.end})")

    def fits(self, n: int) -> bool:
        return self.end <= n

    def with_label(self, label: Optional[str]) -> "EntitySpan":
        return EntitySpan(self.start, self.end, label)


@dataclass(frozen=True)
class TagSequence:
    """Per-token tags in the ``O`` / ``B-X`` / ``I-X`` scheme"""

    tags: Tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "tags", tuple(self.tags))
        validate_bio(self.tags)

    def __len__(self) -> int:
        return len(self.tags)

    def __iter__(self):
        return iter(self.tags)

    def __getitem__(self, i):
        return self.tags[i]


Dataset = Tuple[Tuple[Sentence, TagSequence], ...]


# ==============================================================================
# Taxonomy
# ==============================================================================
@dataclass(frozen=True)
class Taxonomy:
    fine_labels: Tuple[str, ...]
    coarse_of: Dict[str, str]
    coarse_labels: Tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "fine_labels", tuple(self.fine_labels))
        object.__setattr__(self, "coarse_labels", tuple(self.coarse_labels))
        object.__setattr__(self, "coarse_of", dict(self.coarse_of))

        if len(set(self.fine_labels)) != len(self.fine_labels):
            raise TaxonomyError("Duplicate fine labels")
        if len(set(self.coarse_labels)) != len(self.coarse_labels):
            raise TaxonomyError("Duplicate coarse labels")
        if set(self.coarse_of) != set(self.fine_labels):
            missing = sorted(set(self.fine_labels) - set(self.coarse_of))
            extra = sorted(set(self.coarse_of) - set(self.fine_labels))
            raise TaxonomyError(
                f"coarse_of is not total: missing={missing} extra={extra}"
            )
        unknown = set(self.coarse_of.values()) - set(self.coarse_labels)
        if unknown:
            raise TaxonomyError(f"Unknown coarse labels: {sorted(unknown)}")
        for label in self.fine_labels:
            if _WHITESPACE_RE.search(label) or label == OUTSIDE:
                raise TaxonomyError(f"Invalid fine label {label!r}")

    @classmethod
    def from_text(cls, text: str) -> "Taxonomy":
        fine: List[str] = []
        coarse_of: Dict[str, str] = {}
        coarse: List[str] = []
        for line_num, line in enumerate(text.splitlines(), start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise TaxonomyError(
                    f"Line {line_num}: expected 'fine<TAB>coarse', got {line!r}"
                )
            fine_label, coarse_label = parts
            if fine_label in coarse_of:
                raise TaxonomyError(
                    f"Line {line_num}: duplicate fine label {fine_label!r}"
                )
            fine.append(fine_label)
            coarse_of[fine_label] = coarse_label
            if coarse_label not in coarse:
                coarse.append(coarse_label)
        return cls(fine_labels=fine, coarse_of=coarse_of, coarse_labels=coarse)

    def coarse(self, label: str) -> str:
        return self.coarse_of[label]

    def __contains__(self, label: str) -> bool:
        return label in self.coarse_of

    def bio_tags(self) -> List[str]:
        """Full tagging alphabet: O, then every B-X, then every I-X"""
        return (
            [OUTSIDE]
            + [f"B-{label}" for label in self.fine_labels]
            + [f"I-{label}" for label in self.fine_labels]
        )


@functools.lru_cache(maxsize=None)
def load_taxonomy(path: Optional[str] = None) -> Taxonomy:
    """
    Load a taxonomy asset (``fine<TAB>coarse`` per line).

    The bundled asset is additionally checked for its 36 -> 6 shape.
    """
    asset = Path(path) if path else DEFAULT_TAXONOMY_PATH
    taxonomy = Taxonomy.from_text(asset.read_text(encoding="utf-8"))
    if path is None and (
        len(taxonomy.fine_labels) != BUNDLED_FINE_COUNT
        or len(taxonomy.coarse_labels) != BUNDLED_COARSE_COUNT
    ):
        raise TaxonomyError(
            f"Bundled taxonomy must have {BUNDLED_FINE_COUNT} fine and "
            f"{BUNDLED_COARSE_COUNT} coarse labels, got "
            f"{len(taxonomy.fine_labels)}/{len(taxonomy.coarse_labels)}"
        )
    return taxonomy


# ==============================================================================
# BIO helpers
# ==============================================================================
def split_tag(tag: str) -> Tuple[str, Optional[str]]:
    """Split ``B-X`` into ``("B", "X")``; ``O`` gives ``("O", None)``"""
    if tag == OUTSIDE:
        return OUTSIDE, None
    if len(tag) > 2 and tag[1] == "-" and tag[0] in "BI":
        return tag[0], tag[2:]
    raise BIOError(f"Malformed tag {tag!r}")


def bio_violation(tags: Sequence[str]) -> Optional[Tuple[int, str]]:
    """Return ``(position, reason)`` of the first BIO violation, or None"""
    previous = None
    for position, tag in enumerate(tags):
        prefix, entity_type = split_tag(tag)
        if prefix == "I":
            if previous is None:
                return position, "follows sentence start"
            prev_prefix, prev_type = split_tag(previous)
            if prev_prefix == OUTSIDE:
                return position, "follows O"
            if prev_type != entity_type:
                return position, f"follows {previous}"
        previous = tag
    return None


def validate_bio(tags: Sequence[str]) -> None:
    violation = bio_violation(tags)
    if violation is not None:
        position, reason = violation
        raise BIOError(f"{tags[position]} at position {position} {reason}")


def repair_bio(tags: Sequence[str]) -> List[str]:
    """Promote every orphan ``I-X`` to ``B-X``"""
    repaired: List[str] = []
    for tag in tags:
        prefix, entity_type = split_tag(tag)
        if prefix == "I":
            prev_type = split_tag(repaired[-1])[1] if repaired else None
            if prev_type != entity_type:
                tag = f"B-{entity_type}"
        repaired.append(tag)
    return repaired


def spans_from_bio(tags: Union[TagSequence, Sequence[str]]) -> List[EntitySpan]:
    """One span per maximal ``B-X I-X ... I-X`` run, ordered by start"""
    spans: List[EntitySpan] = []
    start = None
    current = None
    for position, tag in enumerate(tags):
        prefix, entity_type = split_tag(tag)
        if prefix != "I" and start is not None:
            spans.append(EntitySpan(start, position, current))
            start = current = None
        if prefix == "B":
            start, current = position, entity_type
    if start is not None:
        spans.append(EntitySpan(start, len(tags), current))
    return spans


def bio_from_spans(spans: Iterable[EntitySpan], n: int) -> TagSequence:
    """Inverse of :func:`spans_from_bio`; unlabeled spans become ``ENTITY``"""
    tags = [OUTSIDE] * n
    for span in sorted(spans):
        if not span.fits(n):
            raise BIOError(f"Span ({span.start}, {span.end}) exceeds length {n}")
        if any(tags[i] != OUTSIDE for i in range(span.start, span.end)):
            raise BIOError(f"Span ({span.start}, {span.end}) overlaps another span")
        label = span.label or BOUNDARY_TYPE
        tags[span.start] = f"B-{label}"
        for i in range(span.start + 1, span.end):
            tags[i] = f"I-{label}"
    return TagSequence(tuple(tags))


def collapse_to_boundary(tags: Union[TagSequence, Sequence[str]]) -> TagSequence:
    """Map every fine type to ``ENTITY``, keeping the span structure"""
    collapsed = []
    for tag in tags:
        prefix, _ = split_tag(tag)
        collapsed.append(tag if prefix == OUTSIDE else f"{prefix}-{BOUNDARY_TYPE}")
    return TagSequence(tuple(collapsed))


def mark_span(words: Sequence[str], span: EntitySpan) -> str:
    """Join tokens with single spaces, wrapping the span in ``<e>`` ... ``</e>``"""
    if not span.fits(len(words)):
        raise ValueError(
            f"Span ({span.start}, {span.end}) exceeds sentence length {len(words)}"
        )
    return " ".join(
        list(words[: span.start])
        + [OPEN_MARK]
        + list(words[span.start : span.end])
        + [CLOSE_MARK]
        + list(words[span.end :])
    )


def mention_of(marked: str) -> str:
    """Text between the ``<e>`` / ``</e>`` marks of a marked sentence"""
    left = marked.find(OPEN_MARK)
    right = marked.find(CLOSE_MARK, left + 1)
    if left < 0 or right < 0:
        return marked.strip()
    return marked[left + len(OPEN_MARK) : right].strip()


# ==============================================================================
# File I/O
# ==============================================================================
def parse_corpus(
    text: str,
    taxonomy: Optional[Taxonomy] = None,
    repair: bool = False,
    require_tags: bool = True,
) -> Dataset:
    """
    Parse the column format into ``(Sentence, TagSequence)`` pairs.

    Parameters
    ----------
    text : str
        File content
    taxonomy : Taxonomy, optional
        When given, every entity type must be a fine label (or ``ENTITY``)
    repair : bool
        Promote orphan ``I-X`` to ``B-X`` instead of rejecting the file
    require_tags : bool
        When False, single-column rows are accepted and tagged ``O``

    Returns
    -------
    Dataset
        Tuple of ``(Sentence, TagSequence)`` pairs in file order
    """
    parsed: List[Tuple[Optional[str], List[str], str, bool, TagSequence]] = []
    seen_ids: Dict[str, int] = {}
    header: Dict[str, object] = {}
    rows: List[Tuple[str, str, int]] = []

    def flush():
        if not rows:
            header.clear()
            return
        first_line = rows[0][2]
        sentence_id = header.get("id")
        if sentence_id in seen_ids:
            raise CorpusFormatError(
                f"Duplicate sentence id {sentence_id!r} at line {first_line} "
                f"(first used at line {seen_ids[sentence_id]})"
            )
        if sentence_id is not None:
            seen_ids[sentence_id] = first_line

        tags = [tag for _, tag, _ in rows]
        violation = bio_violation(tags)
        while violation is not None:
            position, reason = violation
            line_num = rows[position][2]
            if not repair:
                raise CorpusFormatError(
                    f"{tags[position]} at line {line_num} {reason}"
                )
            LOGGER.warning(
                "Repaired %s at line %s (%s)", tags[position], line_num, reason
            )
            tags = repair_bio(tags)
            violation = bio_violation(tags)

        parsed.append(
            (
                sentence_id,
                [token for token, _, _ in rows],
                str(header.get("lang", "en")),
                bool(header.get("noisy", False)),
                TagSequence(tuple(tags)),
            )
        )
        rows.clear()
        header.clear()

    for line_num, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.rstrip("\r\n")
        if not line.strip():
            flush()
            continue

        if _HEADER_KEY_RE.match(line) and not rows:
            match = _HEADER_RE.match(line)
            if match is None:
                raise CorpusFormatError(
                    f"Line {line_num}: malformed header {line!r} (one value without spaces)"
                )
            key, value = match.groups()
            if key == "noisy":
                if value is not None:
                    raise CorpusFormatError(f"Line {line_num}: '# noisy' takes no value")
                header["noisy"] = True
            elif value is None:
                raise CorpusFormatError(f"Line {line_num}: '# {key}' needs a value")
            else:
                header[key] = value
            continue
        if line.startswith("# ") and not rows:
            continue

        parts = line.split("\t")
        if len(parts) == 1 and not require_tags:
            parts = [parts[0], OUTSIDE]
        if len(parts) != 2:
            raise CorpusFormatError(
                f"Line {line_num}: expected 2 tab-separated columns, got {len(parts)}"
            )
        token, tag = parts[0], parts[1].strip()
        if not token or _WHITESPACE_RE.search(token):
            raise CorpusFormatError(f"Line {line_num}: invalid token {token!r}")
        try:
            _, entity_type = split_tag(tag)
        except BIOError as e:
            raise CorpusFormatError(f"Line {line_num}: {e}") from None
        if (
            taxonomy is not None
            and entity_type is not None
            and entity_type != BOUNDARY_TYPE
            and entity_type not in taxonomy
        ):
            raise CorpusFormatError(
                f"Line {line_num}: label {entity_type!r} is not in the taxonomy"
            )
        rows.append((token, tag, line_num))

    flush()

    # Auto ids skip every explicit id of the file
    dataset = []
    for position, (sentence_id, words, language, noisy, tags) in enumerate(parsed, start=1):
        if sentence_id is None:
            sentence_id, suffix = f"s{position}", 1
            while sentence_id in seen_ids:
                sentence_id, suffix = f"s{position}.{suffix}", suffix + 1
            seen_ids[sentence_id] = 0
        sentence = Sentence.from_words(sentence_id, words, language=language, noisy=noisy)
        dataset.append((sentence, tags))
    return tuple(dataset)


def serialize_corpus(dataset: Iterable[Tuple[Sentence, TagSequence]]) -> str:
    chunks = []
    for sentence, tags in dataset:
        if len(tags) != len(sentence):
            raise ValueError(
                f"Sentence {sentence.id!r}: {len(tags)} tags for {len(sentence)} tokens"
            )
        lines = [f"# id {sentence.id}", f"# lang {sentence.language}"]
        if sentence.noisy:
            lines.append("# noisy")
        lines.extend(f"{tok.text}\t{tag}" for tok, tag in zip(sentence.tokens, tags))
        chunks.append("\n".join(lines) + "\n\n")
    return "".join(chunks)


def read_corpus(path: Union[str, Path], **kwargs) -> Dataset:
    text = Path(path).read_text(encoding="utf-8")
    dataset = parse_corpus(text, **kwargs)
    LOGGER.info("Read %s sentences from %s", len(dataset), path)
    return dataset


def write_corpus(path: Union[str, Path], dataset: Dataset) -> None:
    Path(path).write_text(serialize_corpus(dataset), encoding="utf-8")
    LOGGER.info("Wrote %s sentences to %s", len(dataset), path)


def gold_spans(dataset: Dataset) -> Dict[str, List[EntitySpan]]:
    """Sentence id -> labeled gold spans"""
    return {sentence.id: spans_from_bio(tags) for sentence, tags in dataset}

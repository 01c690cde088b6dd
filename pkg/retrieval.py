"""Candidate fallback and assembly of the knowledge context of a mention."""

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

from corpus import EntitySpan, Sentence, mark_span
from kb import KBClient, KBRecord, label_of
from linker import LinkCandidate, Linker

LOGGER = logging.getLogger(__name__)

SKIPPED_STATUSES = ("deleted", "empty", "disambiguation", "list")


@dataclass(frozen=True)
class RetrievalConfig:
    include_subclass_of: bool = False
    language: str = "en"

    def __post_init__(self):
        if not isinstance(self.language, str) or not self.language.isalpha():
            raise ValueError(f"Invalid language code {self.language!r}")

    @property
    def relations(self) -> Tuple[str, ...]:
        if self.include_subclass_of:
            return ("instance_of", "occupation", "subclass_of")
        return ("instance_of", "occupation")

    def to_dict(self):
        return {
            "include_subclass_of": self.include_subclass_of,
            "language": self.language,
        }


@dataclass(frozen=True)
class KnowledgeContext:
    found: bool = False
    source_qid: Optional[str] = None
    description: Optional[str] = None
    arguments: Tuple[Tuple[str, Tuple[str, ...]], ...] = ()
    summary: Optional[str] = None

    def __post_init__(self):
        if not self.found and (
            self.source_qid or self.description or self.arguments or self.summary
        ):
            raise ValueError("A not-found context cannot carry knowledge")

    @classmethod
    def not_found(cls) -> "KnowledgeContext":
        return cls(found=False)

    def to_dict(self):
        return {
            "found": self.found,
            "source_qid": self.source_qid,
            "description": self.description,
            "arguments": [[rel, list(values)] for rel, values in self.arguments],
            "summary": self.summary,
        }


def select_entity(
    candidates: Sequence[LinkCandidate], store: KBClient
) -> Optional[Tuple[str, KBRecord]]:
    """First candidate with a record of status ``normal``, in the given order"""
    for candidate in candidates:
        record = store.get_record(candidate.qid)
        if record is None:
            LOGGER.debug("Skipping %s: not in the knowledge base", candidate.qid)
            continue
        if record.status in SKIPPED_STATUSES:
            LOGGER.debug("Skipping %s: status %s", candidate.qid, record.status)
            continue
        return candidate.qid, record
    return None


def assemble_context(
    record: KBRecord, store: KBClient, cfg: RetrievalConfig = RetrievalConfig()
) -> KnowledgeContext:
    """
    Description, resolved relation labels and summary of a record.

    Relations come in the order instance_of, occupation, then subclass_of
    when enabled. Each target qid is resolved to its label in
    ``cfg.language`` and falls back to the qid itself; relations without
    targets are left out.
    """
    arguments = []
    for relation in cfg.relations:
        targets = record.relation(relation)
        if targets:
            labels = tuple(
                label_of(store, qid, language=cfg.language) for qid in targets
            )
            arguments.append((relation, labels))
    return KnowledgeContext(
        found=True,
        source_qid=record.qid,
        description=record.description_en,
        arguments=tuple(arguments),
        summary=record.summary_en,
    )


@dataclass(frozen=True)
class RetrievalResult:
    context: KnowledgeContext
    candidates: List[LinkCandidate] = field(default_factory=list)
    marked: str = ""


def retrieve(
    sentence: Sentence,
    span: EntitySpan,
    linker: Linker,
    store: KBClient,
    cfg: RetrievalConfig = RetrievalConfig(),
) -> RetrievalResult:
    """Link the span and assemble its context, keeping the candidates"""
    marked = mark_span(sentence.words, span)
    candidates = linker.link(marked)
    selected = select_entity(candidates, store)
    if selected is None:
        LOGGER.warning(
            "No usable entity for %r in sentence %s (%s candidates)",
            " ".join(sentence.words[span.start : span.end]),
            sentence.id,
            len(candidates),
        )
        return RetrievalResult(KnowledgeContext.not_found(), candidates, marked)
    _, record = selected
    return RetrievalResult(assemble_context(record, store, cfg), candidates, marked)


def link_and_retrieve(
    sentence: Sentence,
    span: EntitySpan,
    linker: Linker,
    store: KBClient,
    cfg: RetrievalConfig = RetrievalConfig(),
) -> KnowledgeContext:
    return retrieve(sentence, span, linker, store, cfg).context

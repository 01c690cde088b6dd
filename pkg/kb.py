"""Knowledge-base records, the offline snapshot store and KB clients.

A snapshot is UTF-8 JSON Lines, one :class:`KBRecord` per line with the
field names pinned by ``assets/kb_snapshot_schema.json``::

    {"qid": "Q42", "names": {"en": ["Douglas Adams"]}, "description_en": "English writer",
     "instance_of": ["Q5"], "subclass_of": [], "occupation": ["Q36180"], "status": "normal"}
"""

import json
import logging
import re
from abc import ABC, abstractmethod
from collections.abc import Mapping
from dataclasses import dataclass, field
from pathlib import Path
from types import MappingProxyType
from typing import Any, Dict, Iterable, Iterator, List, Optional, Sequence, Tuple, Union

import requests

LOGGER = logging.getLogger(__name__)

QID_RE = re.compile(r"^Q[0-9]+$")
STATUSES = ("normal", "deleted", "empty", "disambiguation", "list")
RELATIONS = ("instance_of", "occupation", "subclass_of")
RECORD_FIELDS = (
    "qid",
    "names",
    "description_en",
    "instance_of",
    "subclass_of",
    "occupation",
    "summary_en",
    "status",
)


class KBFormatError(ValueError):
    """Malformed snapshot line or invalid record"""


# ==============================================================================
# Records
# ==============================================================================
@dataclass(frozen=True)
class KBRecord:
    qid: str
    names: Dict[str, Tuple[str, ...]] = field(default_factory=dict)
    description_en: Optional[str] = None
    instance_of: Tuple[str, ...] = ()
    subclass_of: Tuple[str, ...] = ()
    occupation: Tuple[str, ...] = ()
    summary_en: Optional[str] = None
    status: str = "normal"

    def __post_init__(self):
        names = {lang: tuple(values) for lang, values in self.names.items()}
        object.__setattr__(self, "names", names)
        for relation in RELATIONS:
            object.__setattr__(self, relation, tuple(getattr(self, relation)))

        if not isinstance(self.qid, str) or not QID_RE.match(self.qid):
            raise KBFormatError(f"Malformed qid {self.qid!r}")
        if self.status not in STATUSES:
            raise KBFormatError(f"{self.qid}: unknown status {self.status!r}")
        if self.status == "normal" and not any(names.values()):
            raise KBFormatError(f"{self.qid}: a normal record needs at least one name")
        for lang, values in names.items():
            if any(not isinstance(v, str) or not v.strip() for v in values):
                raise KBFormatError(f"{self.qid}: empty name in language {lang!r}")
        for relation in RELATIONS:
            for target in getattr(self, relation):
                if not isinstance(target, str) or not QID_RE.match(target):
                    raise KBFormatError(
                        f"{self.qid}: malformed qid {target!r} in {relation}"
                    )

    def canonical_name(self, language: str = "en") -> Optional[str]:
        values = self.names.get(language)
        return values[0] if values else None

    def relation(self, name: str) -> Tuple[str, ...]:
        if name not in RELATIONS:
            raise KeyError(name)
        return getattr(self, name)

    def to_dict(self) -> Dict[str, Any]:
        """Snapshot representation; absent optionals are omitted"""
        record: Dict[str, Any] = {
            "qid": self.qid,
            "names": {lang: list(values) for lang, values in self.names.items()},
        }
        if self.description_en is not None:
            record["description_en"] = self.description_en
        record["instance_of"] = list(self.instance_of)
        record["subclass_of"] = list(self.subclass_of)
        record["occupation"] = list(self.occupation)
        if self.summary_en is not None:
            record["summary_en"] = self.summary_en
        record["status"] = self.status
        return record

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "KBRecord":
        if not isinstance(data, dict):
            raise KBFormatError("Record must be a JSON object")
        unknown = set(data) - set(RECORD_FIELDS)
        if unknown:
            raise KBFormatError(f"Unknown record fields: {sorted(unknown)}")
        if "qid" not in data:
            raise KBFormatError("Record without qid")
        names = data.get("names", {})
        if not isinstance(names, dict) or not all(
            isinstance(v, list) for v in names.values()
        ):
            raise KBFormatError(f"{data['qid']}: names must map language -> list")
        for relation in RELATIONS:
            if not isinstance(data.get(relation, []), list):
                raise KBFormatError(f"{data['qid']}: {relation} must be a list")
        return cls(
            qid=data["qid"],
            names=names,
            description_en=data.get("description_en"),
            instance_of=data.get("instance_of", []),
            subclass_of=data.get("subclass_of", []),
            occupation=data.get("occupation", []),
            summary_en=data.get("summary_en"),
            status=data.get("status", "normal"),
        )


# ==============================================================================
# Clients
# ==============================================================================
class KBClient(ABC):
    """Abstract base class for knowledge-base access by qid"""

    @abstractmethod
    def get_record(self, qid: str) -> Optional[KBRecord]:
        """Exact-match lookup; ``None`` when the qid is unknown"""
        pass

    @classmethod
    @abstractmethod
    def get_display_name(cls) -> str:
        """Get the display name for UI"""
        pass

    @classmethod
    @abstractmethod
    def get_description(cls) -> str:
        """Get a brief description of the client"""
        pass


class KBStore(KBClient, Mapping):
    """Immutable qid -> record map loaded from a snapshot"""

    def __init__(self, records: Iterable[KBRecord] = ()):
        by_qid: Dict[str, KBRecord] = {}
        for record in records:
            if record.qid in by_qid:
                raise KBFormatError(f"Duplicate qid {record.qid}")
            by_qid[record.qid] = record
        self._records = MappingProxyType(by_qid)

    @classmethod
    def get_display_name(cls) -> str:
        return "Offline snapshot"

    @classmethod
    def get_description(cls) -> str:
        return "JSON Lines snapshot of Wikidata-like records, loaded in memory"

    def get_record(self, qid: str) -> Optional[KBRecord]:
        return self._records.get(qid)

    def __getitem__(self, qid: str) -> KBRecord:
        return self._records[qid]

    def __iter__(self) -> Iterator[str]:
        return iter(self._records)

    def __len__(self) -> int:
        return len(self._records)

    def __repr__(self) -> str:
        return f"KBStore({len(self)} records)"


class WikidataAPIClient(KBClient):
    """
    Live client for the Wikidata API and the English Wikipedia summary.

    Page conditions are mapped to record statuses: missing entity ->
    ``deleted``; instance of Wikimedia disambiguation page (Q4167410) or a
    disambiguation summary -> ``disambiguation``; instance of Wikimedia list
    article (Q13406463) -> ``list``; no labels, description nor claims ->
    ``empty``. Holds one ``requests.Session``: use one client per thread.
    """

    WIKIDATA_API_URL = "https://www.wikidata.org/w/api.php"
    SUMMARY_URL = "https://en.wikipedia.org/api/rest_v1/page/summary/{title}"
    USER_AGENT = "ner-cascade/1.0 (knowledge-enriched NER)"
    DISAMBIGUATION_QID = "Q4167410"
    LIST_QID = "Q13406463"
    PROPERTY_OF = {"P31": "instance_of", "P106": "occupation", "P279": "subclass_of"}

    def __init__(
        self,
        languages: Sequence[str] = ("en",),
        timeout: float = 10.0,
        session: Optional[requests.Session] = None,
    ):
        self.languages = tuple(languages)
        self.timeout = timeout
        self.session = session or requests.Session()
        self.session.headers.setdefault("User-Agent", self.USER_AGENT)

    @classmethod
    def get_display_name(cls) -> str:
        return "Live Wikidata / Wikipedia"

    @classmethod
    def get_description(cls) -> str:
        return (
            "Queries wbgetentities and the English Wikipedia REST summary; "
            "needs network access"
        )

    def get_record(self, qid: str) -> Optional[KBRecord]:
        if not QID_RE.match(qid):
            return None
        try:
            response = self.session.get(
                self.WIKIDATA_API_URL,
                params={
                    "action": "wbgetentities",
                    "ids": qid,
                    "format": "json",
                    "props": "labels|aliases|descriptions|claims|sitelinks",
                    "languages": "|".join(sorted(set(self.languages) | {"en"})),
                },
                timeout=self.timeout,
            )
            response.raise_for_status()
            entity = response.json().get("entities", {}).get(qid, {"missing": ""})
        except (requests.RequestException, ValueError) as e:
            LOGGER.warning("Wikidata request for %s failed: %s", qid, e)
            return None

        summary = None
        title = entity.get("sitelinks", {}).get("enwiki", {}).get("title")
        if title:
            summary = self._fetch_summary(title)
        return record_from_api(qid, entity, summary, self.languages)

    def _fetch_summary(self, title: str) -> Optional[Dict[str, Any]]:
        try:
            response = self.session.get(
                self.SUMMARY_URL.format(title=requests.utils.quote(title, safe="")),
                timeout=self.timeout,
            )
            if response.status_code == 404:
                return None
            response.raise_for_status()
            return response.json()
        except (requests.RequestException, ValueError) as e:
            LOGGER.warning("Wikipedia summary request for %r failed: %s", title, e)
            return None


def _claim_targets(entity: Dict[str, Any], prop: str) -> List[str]:
    targets = []
    for claim in entity.get("claims", {}).get(prop, []):
        value = claim.get("mainsnak", {}).get("datavalue", {}).get("value")
        if isinstance(value, dict) and QID_RE.match(str(value.get("id", ""))):
            targets.append(value["id"])
    return targets


def record_from_api(
    qid: str,
    entity: Dict[str, Any],
    summary: Optional[Dict[str, Any]] = None,
    languages: Sequence[str] = ("en",),
) -> KBRecord:
    """Build a record from a ``wbgetentities`` entity and a REST summary"""
    if "missing" in entity:
        return KBRecord(qid=qid, status="deleted")

    names: Dict[str, List[str]] = {}
    for lang in languages:
        values = []
        label = entity.get("labels", {}).get(lang, {}).get("value")
        if label:
            values.append(label)
        for alias in entity.get("aliases", {}).get(lang, []):
            if alias.get("value") and alias["value"] not in values:
                values.append(alias["value"])
        if values:
            names[lang] = values

    relations = {
        name: _claim_targets(entity, prop)
        for prop, name in WikidataAPIClient.PROPERTY_OF.items()
    }
    description = entity.get("descriptions", {}).get("en", {}).get("value")
    extract = (summary or {}).get("extract") or None

    if WikidataAPIClient.DISAMBIGUATION_QID in relations["instance_of"] or (
        summary or {}
    ).get("type") == "disambiguation":
        status = "disambiguation"
    elif WikidataAPIClient.LIST_QID in relations["instance_of"]:
        status = "list"
    elif not names or not (description or extract or any(relations.values())):
        status = "empty"
    else:
        status = "normal"

    return KBRecord(
        qid=qid,
        names=names,
        description_en=description,
        summary_en=extract,
        status=status,
        **relations,
    )


KB_CLIENT_REGISTRY = {
    "Snapshot": KBStore,
    "WikidataAPI": WikidataAPIClient,
}


# ==============================================================================
# Snapshot I/O and lookups
# ==============================================================================
def parse_snapshot(text: str) -> KBStore:
    records: List[KBRecord] = []
    first_line: Dict[str, int] = {}
    for line_num, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            record = KBRecord.from_dict(json.loads(line))
        except json.JSONDecodeError as e:
            raise KBFormatError(f"Line {line_num}: invalid JSON ({e.msg})") from None
        except KBFormatError as e:
            raise KBFormatError(f"Line {line_num}: {e}") from None
        if record.qid in first_line:
            raise KBFormatError(
                f"Line {line_num}: duplicate qid {record.qid} "
                f"(first seen at line {first_line[record.qid]})"
            )
        first_line[record.qid] = line_num
        records.append(record)
    return KBStore(records)


def load_snapshot(path: Union[str, Path]) -> KBStore:
    store = parse_snapshot(Path(path).read_text(encoding="utf-8"))
    LOGGER.info("Loaded %s KB records from %s", len(store), path)
    return store


def dump_snapshot(store: Iterable) -> str:
    records = store.values() if isinstance(store, Mapping) else store
    return "".join(
        json.dumps(record.to_dict(), ensure_ascii=False) + "\n" for record in records
    )


def write_snapshot(path: Union[str, Path], store: Iterable) -> None:
    Path(path).write_text(dump_snapshot(store), encoding="utf-8")


def get_record(store: KBClient, qid: str) -> Optional[KBRecord]:
    return store.get_record(qid)


def label_of(
    store: KBClient,
    qid: str,
    fallback: Optional[str] = None,
    language: str = "en",
) -> str:
    """Canonical name in ``language``, else ``fallback`` (default: the qid)"""
    record = store.get_record(qid)
    name = record.canonical_name(language) if record is not None else None
    if name is not None:
        return name
    return qid if fallback is None else fallback


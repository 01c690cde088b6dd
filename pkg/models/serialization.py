"""Versioned model file format shared by every trained component.

A model file is one JSON document::

    {"format": "ner-cascade-model", "format_version": 1,
     "section": "boundary", "payload": {...}}

The ``section`` tag names the component (``boundary``, ``baseline``,
``classifier``, ``scorer``); loading checks both the version and the tag.
"""

import json
import logging
from pathlib import Path
from typing import Any, Dict, Union

LOGGER = logging.getLogger(__name__)

FORMAT_NAME = "ner-cascade-model"
FORMAT_VERSION = 1
SECTIONS = ("boundary", "baseline", "classifier", "scorer")


class ModelFormatError(ValueError):
    """Model file with an unexpected format, version or section"""


def dump_model(section: str, payload: Dict[str, Any]) -> str:
    if section not in SECTIONS:
        raise ModelFormatError(f"Unknown model section {section!r}")
    document = {
        "format": FORMAT_NAME,
        "format_version": FORMAT_VERSION,
        "section": section,
        "payload": payload,
    }
    return json.dumps(document, sort_keys=True, ensure_ascii=False)


def parse_model(text: str, section: str) -> Dict[str, Any]:
    try:
        document = json.loads(text)
    except json.JSONDecodeError as e:
        raise ModelFormatError(f"Model file is not valid JSON: {e}") from None
    if not isinstance(document, dict) or document.get("format") != FORMAT_NAME:
        raise ModelFormatError("Not a model file")
    version = document.get("format_version")
    if version != FORMAT_VERSION:
        raise ModelFormatError(
            f"Model format version {version} is not supported "
            f"(expected {FORMAT_VERSION})"
        )
    if document.get("section") != section:
        raise ModelFormatError(
            f"Expected a {section!r} model, found {document.get('section')!r}"
        )
    return document["payload"]


def save_model(path: Union[str, Path], section: str, payload: Dict[str, Any]):
    Path(path).write_text(dump_model(section, payload), encoding="utf-8")
    LOGGER.debug("Saved %s model to %s", section, path)


def load_model(path: Union[str, Path], section: str) -> Dict[str, Any]:
    return parse_model(Path(path).read_text(encoding="utf-8"), section)

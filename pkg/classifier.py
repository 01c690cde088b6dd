"""Step 3 of the cascade: fine-grained classification of a span.

The classifier reads one text per span: the sentence with the mention
marked, followed by the enabled knowledge sections, each introduced by
``__SEP__``.
"""

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
from tqdm import tqdm

from corpus import (
    Dataset,
    EntitySpan,
    Sentence,
    Taxonomy,
    TaxonomyError,
    load_taxonomy,
    mark_span,
    spans_from_bio,
)
from models.serialization import ModelFormatError, load_model, save_model
from models.text_classification import CLASSIFIER_REGISTRY, TextClassifier
from retrieval import KnowledgeContext

LOGGER = logging.getLogger(__name__)

SEP = "__SEP__"
NOT_FOUND_TEXT = "No Wikidata/Wikipedia summary found"
ENSEMBLE_SIZE = 5
DEFAULT_EPOCHS = 8
DEFAULT_CLASSIFIER = "AveragedPerceptron"

# (sentence id, start, end)
SpanKey = Tuple[str, int, int]


# ==============================================================================
# Knowledge ablation
# ==============================================================================
@dataclass(frozen=True)
class AblationConfig:
    use_description: bool = True
    use_arguments: bool = True
    use_summary: bool = True

    def to_dict(self) -> Dict[str, bool]:
        return {
            "use_description": self.use_description,
            "use_arguments": self.use_arguments,
            "use_summary": self.use_summary,
        }


ABLATION_PRESETS: Dict[str, AblationConfig] = {
    "ctx": AblationConfig(False, False, False),
    "ctx+desc": AblationConfig(True, False, False),
    "ctx+args": AblationConfig(False, True, False),
    "ctx+summary": AblationConfig(False, False, True),
    "ctx+desc+args": AblationConfig(True, True, False),
    "all": AblationConfig(True, True, True),
}

PRESET_DESCRIPTIONS = {
    "ctx": "Context only",
    "ctx+desc": "Context + description",
    "ctx+args": "Context + arguments",
    "ctx+summary": "Context + summary",
    "ctx+desc+args": "Context + description + arguments",
    "all": "Context + description + arguments + summary",
}


def resolve_ablation(value: Union[str, AblationConfig, Mapping[str, bool]]) -> AblationConfig:
    """Preset name, explicit flags or an :class:`AblationConfig`"""
    if isinstance(value, AblationConfig):
        return value
    if isinstance(value, str):
        if value not in ABLATION_PRESETS:
            raise ValueError(
                f"Unknown ablation preset {value!r}; "
                f"choose one of {', '.join(ABLATION_PRESETS)}"
            )
        return ABLATION_PRESETS[value]
    return AblationConfig(**value)


def preset_name(cfg: AblationConfig) -> Optional[str]:
    for name, preset in ABLATION_PRESETS.items():
        if preset == cfg:
            return name
    return None


# ==============================================================================
# Rendering
# ==============================================================================
def render_arguments(arguments: Sequence[Tuple[str, Sequence[str]]]) -> str:
    return "; ".join(f"{relation}: {', '.join(values)}" for relation, values in arguments)


def render_input(
    sentence: Sentence,
    span: EntitySpan,
    context: KnowledgeContext,
    cfg: AblationConfig,
) -> str:
    """
    Classifier input for one span.

    Examples
    --------
    >>> render_input(Sentence.from_words("s1", ["John", "smiled"]), EntitySpan(0, 1),
    ...              KnowledgeContext.not_found(), ABLATION_PRESETS["ctx"])
    '<e> John </e> smiled'
    """
    sections = [mark_span(sentence.words, span)]
    if cfg.use_description:
        sections.append(context.description if context.found and context.description else NOT_FOUND_TEXT)
    if cfg.use_arguments:
        sections.append(
            render_arguments(context.arguments)
            if context.found and context.arguments
            else NOT_FOUND_TEXT
        )
    if cfg.use_summary:
        sections.append(context.summary if context.found and context.summary else NOT_FOUND_TEXT)
    return f" {SEP} ".join(sections)


def build_instances(
    dataset: Dataset,
    contexts: Mapping[SpanKey, KnowledgeContext],
    cfg: AblationConfig,
) -> List[Tuple[str, str]]:
    """``(rendered input, gold label)`` for every gold span of ``dataset``"""
    instances = []
    for sentence, tags in dataset:
        for span in spans_from_bio(tags):
            context = contexts.get(
                (sentence.id, span.start, span.end), KnowledgeContext.not_found()
            )
            instances.append((render_input(sentence, span, context, cfg), span.label))
    return instances


# ==============================================================================
# Models
# ==============================================================================
@dataclass(frozen=True)
class ClassifierModel:
    classifier: TextClassifier

    @property
    def labels(self) -> Tuple[str, ...]:
        return tuple(self.classifier.labels)

    @property
    def metadata(self) -> Dict[str, Any]:
        return self.classifier.metadata

    def scores(self, rendered: str) -> np.ndarray:
        return self.classifier.scores(rendered)

    def predict(self, rendered: str) -> str:
        return self.classifier.predict(rendered)

    def to_dict(self) -> Dict[str, Any]:
        return self.classifier.to_dict()

    @classmethod
    def from_dict(cls, payload: Dict[str, Any]) -> "ClassifierModel":
        key = payload.get("classifier")
        if key not in CLASSIFIER_REGISTRY:
            raise ModelFormatError(f"Unknown classifier {key!r}")
        return cls(CLASSIFIER_REGISTRY[key].from_dict(payload))


@dataclass(frozen=True)
class ClassifierEnsemble:
    members: Tuple[ClassifierModel, ...]
    ablation: AblationConfig = AblationConfig()

    def __post_init__(self):
        object.__setattr__(self, "members", tuple(self.members))
        if len(self.members) != ENSEMBLE_SIZE:
            raise ValueError(
                f"A classifier ensemble has exactly {ENSEMBLE_SIZE} members, "
                f"got {len(self.members)}"
            )
        if len({m.labels for m in self.members}) != 1:
            raise ValueError("Ensemble members disagree on the label set")

    @property
    def labels(self) -> Tuple[str, ...]:
        return self.members[0].labels

    @property
    def dev_scores(self) -> List[float]:
        return [m.metadata.get("dev_score") for m in self.members]


# ==============================================================================
# Training
# ==============================================================================
def _check_labels(instances: Sequence[Tuple[str, str]], taxonomy: Taxonomy) -> None:
    for _, label in instances:
        if label not in taxonomy:
            raise TaxonomyError(f"Label {label!r} is not in the taxonomy")


def train_classifier(
    train: Sequence[Tuple[str, str]],
    dev: Sequence[Tuple[str, str]],
    taxonomy: Optional[Taxonomy] = None,
    epochs: int = DEFAULT_EPOCHS,
    seed: int = 0,
    classifier: str = DEFAULT_CLASSIFIER,
    progress: bool = False,
) -> ClassifierModel:
    """
    Train one classifier over rendered gold-span instances.

    Parameters
    ----------
    train, dev : Sequence[Tuple[str, str]]
        ``(rendered input, fine label)`` pairs, see :func:`build_instances`
    taxonomy : Taxonomy, optional
        Label set (default: the bundled taxonomy)
    epochs, seed : int
        Passes over ``train`` and the shuffling seed

    Returns
    -------
    ClassifierModel
        Checkpoint with the best dev accuracy
    """
    taxonomy = taxonomy or load_taxonomy()
    if not train or not dev:
        raise ValueError("Training and dev instances must be non-empty")
    _check_labels(list(train) + list(dev), taxonomy)
    if classifier not in CLASSIFIER_REGISTRY:
        raise ValueError(f"Unknown classifier {classifier!r}")
    model = CLASSIFIER_REGISTRY[classifier].train(
        train, dev, taxonomy.fine_labels, epochs=epochs, seed=seed, progress=progress
    )
    return ClassifierModel(model)


def _train_member(args) -> ClassifierModel:
    train, dev, taxonomy, epochs, seed, classifier = args
    return train_classifier(train, dev, taxonomy, epochs=epochs, seed=seed, classifier=classifier)


def train_classifier_ensemble(
    train: Sequence[Tuple[str, str]],
    dev: Sequence[Tuple[str, str]],
    seeds: Sequence[int],
    ablation: AblationConfig = AblationConfig(),
    taxonomy: Optional[Taxonomy] = None,
    epochs: int = DEFAULT_EPOCHS,
    classifier: str = DEFAULT_CLASSIFIER,
    workers: int = 1,
    progress: bool = False,
) -> ClassifierEnsemble:
    if len(seeds) != ENSEMBLE_SIZE:
        raise ValueError(f"Expected {ENSEMBLE_SIZE} seeds, got {len(seeds)}")
    taxonomy = taxonomy or load_taxonomy()
    LOGGER.info(
        "Training classifier ensemble on %s instances (seeds %s)", len(train), list(seeds)
    )
    jobs = [(train, dev, taxonomy, epochs, seed, classifier) for seed in seeds]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            members = list(pool.map(_train_member, jobs))
    else:
        members = [
            _train_member(job)
            for job in tqdm(jobs, desc="classifier members", disable=not progress)
        ]
    return ClassifierEnsemble(tuple(members), ablation)


# ==============================================================================
# Inference
# ==============================================================================
def predict_class(ensemble: ClassifierEnsemble, rendered: str) -> str:
    """
    Plurality vote over the members' argmax labels.

    Ties go to the label with the highest score summed over all members,
    then to the lexicographically smallest label.
    """
    labels = ensemble.labels
    index = {label: i for i, label in enumerate(labels)}
    member_scores = [m.scores(rendered) for m in ensemble.members]
    votes: Dict[str, int] = {}
    for scores in member_scores:
        label = labels[int(np.argmax(scores))]
        votes[label] = votes.get(label, 0) + 1
    summed = np.sum(member_scores, axis=0)
    return min(votes, key=lambda label: (-votes[label], -summed[index[label]], label))


# ==============================================================================
# Persistence
# ==============================================================================
def save_classifier(path: Union[str, Path], ensemble: ClassifierEnsemble) -> None:
    save_model(
        path,
        "classifier",
        {
            "ablation": ensemble.ablation.to_dict(),
            "members": [m.to_dict() for m in ensemble.members],
        },
    )
    LOGGER.info("Wrote classifier ensemble to %s", path)


def load_classifier(path: Union[str, Path]) -> ClassifierEnsemble:
    payload = load_model(path, "classifier")
    return ClassifierEnsemble(
        tuple(ClassifierModel.from_dict(m) for m in payload["members"]),
        AblationConfig(**payload["ablation"]),
    )

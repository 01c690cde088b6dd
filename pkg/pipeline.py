"""End-to-end orchestration: configuration, training, prediction, ablation."""

import hashlib
import json
import logging
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import pandas as pd
from tqdm import tqdm

from boundary import (
    ENSEMBLE_SIZE,
    BoundaryEnsemble,
    ensemble_predict,
    load_ensemble,
    save_ensemble,
    train_ensemble,
)
from classifier import (
    ABLATION_PRESETS,
    PRESET_DESCRIPTIONS,
    AblationConfig,
    ClassifierEnsemble,
    SpanKey,
    build_instances,
    load_classifier,
    predict_class,
    render_input,
    resolve_ablation,
    save_classifier,
    train_classifier_ensemble,
)
from corpus import (
    Dataset,
    EntitySpan,
    Sentence,
    TagSequence,
    Taxonomy,
    bio_from_spans,
    load_taxonomy,
    read_corpus,
    spans_from_bio,
)
from evaluation import (
    BaselineModel,
    EvalReport,
    evaluate_boundary,
    predictions_of,
    save_baseline,
    score,
    train_baseline,
)
from kb import KBClient, KBStore, load_snapshot
from linker import Linker, build_trie, scorer_pairs_from_kb, train_scorer
from models.generation import SCORER_REGISTRY, GenerationScorer
from models.sequence_tagging import TAGGER_REGISTRY
from models.serialization import ModelFormatError, load_model, save_model
from models.text_classification import CLASSIFIER_REGISTRY
from retrieval import KnowledgeContext, RetrievalConfig, retrieve

LOGGER = logging.getLogger(__name__)

BOUNDARY_FILE = "boundary.json"
SCORER_FILE = "scorer.json"
CLASSIFIER_FILE = "classifier.json"
BASELINE_FILE = "baseline.json"
MANIFEST_FILE = "manifest.json"
PREDICTIONS_FILE = "predictions.conll"

# Transformer hyperparameters that have no effect on the linear models
NOT_APPLICABLE = {"batch_size": 16, "learning_rate": 2e-5, "max_sequence_length": 256}
PATH_FIELDS = (
    "train_path",
    "dev_path",
    "test_path",
    "kb_path",
    "model_dir",
    "taxonomy_path",
)


class ConfigError(ValueError):
    """Invalid pipeline configuration"""


# ==============================================================================
# Configuration
# ==============================================================================
@dataclass(frozen=True)
class PipelineConfig:
    """
    Settings of one cascade run.

    Paths may be relative; :meth:`from_file` resolves them against the
    directory of the config file.
    """

    train_path: Optional[str] = None
    dev_path: Optional[str] = None
    test_path: Optional[str] = None
    kb_path: Optional[str] = None
    model_dir: str = "model"
    taxonomy_path: Optional[str] = None
    ensemble_size: int = ENSEMBLE_SIZE
    k_candidates: int = 5
    beam: int = 12
    epochs: int = 8
    seeds: Tuple[int, ...] = (1, 2, 3, 4, 5)
    retrieval: RetrievalConfig = field(default_factory=RetrievalConfig)
    ablation: Union[str, AblationConfig] = "all"
    languages: Tuple[str, ...] = ("en",)
    copy_weight: float = 0.9
    ngram_order: int = 3
    repair: bool = False
    workers: int = 1
    tagger: str = "AveragedPerceptron"
    scorer: str = "NGramCopy"
    text_classifier: str = "AveragedPerceptron"
    not_applicable: Dict[str, Any] = field(default_factory=lambda: dict(NOT_APPLICABLE))

    def __post_init__(self):
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))
        object.__setattr__(self, "languages", tuple(self.languages))
        if isinstance(self.retrieval, dict):
            object.__setattr__(self, "retrieval", RetrievalConfig(**self.retrieval))
        if isinstance(self.ablation, dict):
            object.__setattr__(self, "ablation", AblationConfig(**self.ablation))
        self.validate()

    def validate(self) -> None:
        if self.ensemble_size != ENSEMBLE_SIZE:
            raise ConfigError(
                f"ensemble_size must be {ENSEMBLE_SIZE}, got {self.ensemble_size}"
            )
        if len(self.seeds) != self.ensemble_size:
            raise ConfigError(
                f"{len(self.seeds)} seeds given for an ensemble of {self.ensemble_size}"
            )
        if self.k_candidates < 1:
            raise ConfigError(f"k_candidates must be >= 1, got {self.k_candidates}")
        if self.beam < 1:
            raise ConfigError(f"beam must be >= 1, got {self.beam}")
        if self.epochs < 1:
            raise ConfigError(f"epochs must be >= 1, got {self.epochs}")
        if self.workers < 1:
            raise ConfigError(f"workers must be >= 1, got {self.workers}")
        if not 0.0 <= self.copy_weight < 1.0:
            raise ConfigError(f"copy_weight must be in [0, 1), got {self.copy_weight}")
        if self.ngram_order < 1:
            raise ConfigError(f"ngram_order must be >= 1, got {self.ngram_order}")
        if not self.languages:
            raise ConfigError("At least one trie language is required")
        if isinstance(self.ablation, str) and self.ablation not in ABLATION_PRESETS:
            raise ConfigError(
                f"Unknown ablation preset {self.ablation!r}; "
                f"choose one of {', '.join(ABLATION_PRESETS)}"
            )
        for key, registry, kind in (
            (self.tagger, TAGGER_REGISTRY, "tagger"),
            (self.scorer, SCORER_REGISTRY, "scorer"),
            (self.text_classifier, CLASSIFIER_REGISTRY, "text classifier"),
        ):
            if key not in registry:
                raise ConfigError(f"Unknown {kind} {key!r}")

    @property
    def ablation_config(self) -> AblationConfig:
        return resolve_ablation(self.ablation)

    def to_dict(self) -> Dict[str, Any]:
        data = {f.name: getattr(self, f.name) for f in fields(self)}
        data["seeds"] = list(self.seeds)
        data["languages"] = list(self.languages)
        data["retrieval"] = self.retrieval.to_dict()
        if isinstance(self.ablation, AblationConfig):
            data["ablation"] = self.ablation.to_dict()
        return data

    def config_hash(self) -> str:
        canonical = json.dumps(self.to_dict(), sort_keys=True)
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "PipelineConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"Unknown config fields: {sorted(unknown)}")
        try:
            return cls(**data)
        except TypeError as e:
            raise ConfigError(str(e)) from None

    @classmethod
    def from_file(cls, path: Union[str, Path]) -> "PipelineConfig":
        path = Path(path)
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as e:
            raise ConfigError(f"{path}: invalid JSON ({e})") from None
        base = path.parent
        for key in PATH_FIELDS:
            value = data.get(key)
            if value and not Path(value).is_absolute():
                data[key] = str(base / value)
        return cls.from_dict(data)

    def with_overrides(self, **overrides) -> "PipelineConfig":
        """Copy with every non-None override applied"""
        changes = {k: v for k, v in overrides.items() if v is not None}
        try:
            return replace(self, **changes)
        except TypeError as e:
            raise ConfigError(str(e)) from None

    def taxonomy(self) -> Taxonomy:
        return load_taxonomy(self.taxonomy_path)


def _require(path: Optional[str], name: str) -> Path:
    if not path:
        raise ConfigError(f"No {name} configured")
    if not Path(path).exists():
        raise FileNotFoundError(f"{name} not found: {path}")
    return Path(path)


def load_split(config: PipelineConfig, name: str) -> Dataset:
    path = _require(getattr(config, f"{name}_path"), f"{name} corpus")
    return read_corpus(path, taxonomy=config.taxonomy(), repair=config.repair)


# ==============================================================================
# Trained cascade
# ==============================================================================
@dataclass(frozen=True)
class Cascade:
    """Everything prediction needs, immutable once loaded"""

    boundary: Optional[BoundaryEnsemble]
    linker: Linker
    classifier: ClassifierEnsemble
    store: KBClient
    retrieval: RetrievalConfig = RetrievalConfig()


def build_linker(
    config: PipelineConfig,
    store: KBStore,
    scorer: Optional[GenerationScorer] = None,
) -> Linker:
    if scorer is None:
        scorer = train_scorer(
            scorer_pairs_from_kb(store, config.languages),
            scorer=config.scorer,
            order=config.ngram_order,
            copy_weight=config.copy_weight,
        )
    return Linker(scorer, build_trie(store, config.languages), config.beam, config.k_candidates)


def span_contexts(
    dataset: Dataset,
    linker: Linker,
    store: KBClient,
    cfg: RetrievalConfig,
    progress: bool = False,
) -> Dict[SpanKey, KnowledgeContext]:
    """Knowledge context of every gold span"""
    contexts = {}
    for sentence, tags in tqdm(dataset, desc="linking", disable=not progress):
        for span in spans_from_bio(tags):
            contexts[(sentence.id, span.start, span.end)] = _safe_retrieve(
                sentence, span, linker, store, cfg
            )[0]
    return contexts


def _safe_retrieve(sentence, span, linker, store, cfg):
    try:
        result = retrieve(sentence, span, linker, store, cfg)
        return result.context, result.candidates
    except Exception as e:
        LOGGER.warning(
            "Linking failed for span (%s, %s) of %s: %s", span.start, span.end, sentence.id, e
        )
        return KnowledgeContext.not_found(), []


def load_cascade(config: PipelineConfig, client: Optional[KBClient] = None) -> Cascade:
    """
    Load the trained models of ``config.model_dir``.

    The trie is always built from the snapshot; ``client`` (for example a
    live Wikidata client) replaces it for retrieval only.
    """
    model_dir = Path(config.model_dir)
    for name in (BOUNDARY_FILE, SCORER_FILE, CLASSIFIER_FILE):
        _require(str(model_dir / name), f"model file {name}")
    store = load_snapshot(_require(config.kb_path, "KB snapshot"))
    payload = load_model(model_dir / SCORER_FILE, "scorer")
    if payload.get("scorer") not in SCORER_REGISTRY:
        raise ModelFormatError(f"Unknown scorer {payload.get('scorer')!r}")
    scorer = SCORER_REGISTRY[payload["scorer"]].from_dict(payload)
    return Cascade(
        boundary=load_ensemble(model_dir / BOUNDARY_FILE),
        linker=build_linker(config, store, scorer),
        classifier=load_classifier(model_dir / CLASSIFIER_FILE),
        store=client if client is not None else store,
        retrieval=config.retrieval,
    )


# ==============================================================================
# Train
# ==============================================================================
def run_train(config: PipelineConfig, progress: bool = False) -> Dict[str, Any]:
    """
    Train the boundary ensemble, the scorer and the classifier ensemble.

    Writes the three model files and ``manifest.json`` to ``model_dir``.
    The manifest holds the config hash and dev scores only, so identical
    inputs give an identical manifest.
    """
    train = load_split(config, "train")
    dev = load_split(config, "dev")
    store = load_snapshot(_require(config.kb_path, "KB snapshot"))
    taxonomy = config.taxonomy()
    model_dir = Path(config.model_dir)
    model_dir.mkdir(parents=True, exist_ok=True)
    LOGGER.info("Training cascade (config %s)", config.config_hash()[:12])

    boundary = train_ensemble(
        train,
        dev,
        config.seeds,
        epochs=config.epochs,
        tagger=config.tagger,
        workers=config.workers,
        progress=progress,
    )
    save_ensemble(model_dir / BOUNDARY_FILE, boundary)

    linker = build_linker(config, store)
    save_model(model_dir / SCORER_FILE, "scorer", linker.scorer.to_dict())

    ablation = config.ablation_config
    train_contexts = span_contexts(train, linker, store, config.retrieval, progress)
    dev_contexts = span_contexts(dev, linker, store, config.retrieval, progress)
    classifier = train_classifier_ensemble(
        build_instances(train, train_contexts, ablation),
        build_instances(dev, dev_contexts, ablation),
        config.seeds,
        ablation=ablation,
        taxonomy=taxonomy,
        epochs=config.epochs,
        classifier=config.text_classifier,
        workers=config.workers,
        progress=progress,
    )
    save_classifier(model_dir / CLASSIFIER_FILE, classifier)

    manifest = {
        "config_hash": config.config_hash(),
        "seeds": list(config.seeds),
        "boundary_dev_scores": boundary.dev_scores,
        "boundary_dev_f1": evaluate_boundary(boundary, dev),
        "classifier_dev_scores": classifier.dev_scores,
        "linked_dev_spans": sum(1 for c in dev_contexts.values() if c.found),
        "dev_spans": len(dev_contexts),
        "files": [BOUNDARY_FILE, SCORER_FILE, CLASSIFIER_FILE],
    }
    (model_dir / MANIFEST_FILE).write_text(
        json.dumps(manifest, indent=2, sort_keys=True), encoding="utf-8"
    )
    LOGGER.info("Wrote manifest %s", model_dir / MANIFEST_FILE)
    return manifest


# ==============================================================================
# Predict
# ==============================================================================
def predict_sentence(
    cascade: Cascade, sentence: Sentence
) -> Tuple[TagSequence, List[Dict[str, Any]]]:
    """Tags with fine labels for one sentence and one trace record per span"""
    boundary_tags = ensemble_predict(cascade.boundary, sentence)
    labeled = []
    trace = []
    for span in spans_from_bio(boundary_tags):
        context, candidates = _safe_retrieve(
            sentence, span, cascade.linker, cascade.store, cascade.retrieval
        )
        rendered = render_input(sentence, span, context, cascade.classifier.ablation)
        label = predict_class(cascade.classifier, rendered)
        labeled.append(EntitySpan(span.start, span.end, label))
        trace.append(
            {
                "sentence_id": sentence.id,
                "start": span.start,
                "end": span.end,
                "mention": " ".join(sentence.words[span.start : span.end]),
                "candidates": [[c.qid, c.language, c.score] for c in candidates],
                "linked_qid": context.source_qid,
                "context": context.to_dict(),
                "label": label,
                "rendered_input": rendered,
            }
        )
    return bio_from_spans(labeled, len(sentence)), trace


def run_predict(
    config: PipelineConfig,
    dataset: Dataset,
    cascade: Optional[Cascade] = None,
    progress: bool = False,
) -> Tuple[Dataset, List[Dict[str, Any]]]:
    """
    Run the cascade over every sentence of ``dataset`` (gold tags ignored).

    Returns the predicted corpus and the trace records of all spans.
    """
    if not dataset:
        return (), []
    cascade = cascade or load_cascade(config)
    predicted = []
    trace: List[Dict[str, Any]] = []
    for sentence, _ in tqdm(dataset, desc="predicting", disable=not progress):
        tags, records = predict_sentence(cascade, sentence)
        predicted.append((sentence, tags))
        trace.extend(records)
    LOGGER.info("Predicted %s spans in %s sentences", len(trace), len(predicted))
    return tuple(predicted), trace


def write_trace(path: Union[str, Path], trace: Sequence[Dict[str, Any]]) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for record in trace:
            f.write(json.dumps(record, sort_keys=True, ensure_ascii=False) + "\n")


# ==============================================================================
# Evaluate
# ==============================================================================
def classify_gold_spans(
    cascade: Cascade,
    dataset: Dataset,
    contexts: Optional[Dict[SpanKey, KnowledgeContext]] = None,
    classifier: Optional[ClassifierEnsemble] = None,
) -> Dict[str, List[EntitySpan]]:
    """Classifier labels for the gold spans (no boundary step)"""
    classifier = classifier or cascade.classifier
    if contexts is None:
        contexts = span_contexts(dataset, cascade.linker, cascade.store, cascade.retrieval)
    predictions = {}
    for sentence, tags in dataset:
        spans = []
        for span in spans_from_bio(tags):
            context = contexts.get(
                (sentence.id, span.start, span.end), KnowledgeContext.not_found()
            )
            rendered = render_input(sentence, span, context, classifier.ablation)
            spans.append(span.with_label(predict_class(classifier, rendered)))
        predictions[sentence.id] = spans
    return predictions


def run_evaluate(
    config: PipelineConfig,
    gold: Dataset,
    predicted: Optional[Dataset] = None,
    gold_spans: bool = False,
    cascade: Optional[Cascade] = None,
) -> EvalReport:
    """
    Score a prediction corpus, or the trained classifier on gold spans.

    With ``gold_spans`` the boundary step is skipped and the report's
    confusion matrix is the classification-only one.
    """
    taxonomy = config.taxonomy()
    if gold_spans:
        cascade = cascade or load_cascade(config)
        predictions = classify_gold_spans(cascade, gold)
    else:
        if predicted is None:
            predicted, _ = run_predict(config, gold, cascade)
        predictions = predictions_of(predicted)
    report = score(gold, predictions, taxonomy)
    LOGGER.info(
        "Macro F1 %.4f, boundary F1 %.4f", report.macro_f1, report.boundary_f1
    )
    return report


# ==============================================================================
# Ablation
# ==============================================================================
@dataclass(frozen=True)
class AblationResult:
    table: pd.DataFrame
    reports: Dict[str, EvalReport]


def run_ablation(
    config: PipelineConfig,
    presets: Sequence[str] = tuple(ABLATION_PRESETS),
    progress: bool = False,
) -> AblationResult:
    """
    One classifier ensemble per knowledge preset, scored with gold spans.

    Trains on the train split and evaluates on the test split (dev when
    no test split is configured). Linking runs once; the presets only
    change what is rendered from the same contexts.
    """
    train = load_split(config, "train")
    dev = load_split(config, "dev")
    evaluation = load_split(config, "test") if config.test_path else dev
    store = load_snapshot(_require(config.kb_path, "KB snapshot"))
    taxonomy = config.taxonomy()
    linker = build_linker(config, store)

    contexts = {}
    for dataset in (train, dev, evaluation):
        contexts.update(span_contexts(dataset, linker, store, config.retrieval, progress))

    rows = []
    reports = {}
    for name in presets:
        ablation = resolve_ablation(name)
        ensemble = train_classifier_ensemble(
            build_instances(train, contexts, ablation),
            build_instances(dev, contexts, ablation),
            config.seeds,
            ablation=ablation,
            taxonomy=taxonomy,
            epochs=config.epochs,
            classifier=config.text_classifier,
            workers=config.workers,
        )
        cascade = Cascade(
            boundary=None,
            linker=linker,
            classifier=ensemble,
            store=store,
            retrieval=config.retrieval,
        )
        report = score(evaluation, classify_gold_spans(cascade, evaluation, contexts), taxonomy)
        reports[name] = report
        rows.append(
            {
                "preset": name,
                "knowledge": PRESET_DESCRIPTIONS.get(name, name),
                "macro_f1": report.macro_f1,
                "micro_f1": report.micro_f1,
                "coarse_macro_f1": report.coarse_macro_f1,
            }
        )
        LOGGER.info("Ablation %s: macro F1 %.4f", name, report.macro_f1)
    return AblationResult(pd.DataFrame(rows).set_index("preset"), reports)


# ==============================================================================
# Baseline
# ==============================================================================
def run_baseline(
    config: PipelineConfig, progress: bool = False
) -> Tuple[BaselineModel, EvalReport]:
    """Direct fine-grained tagger trained with the first seed, scored on test (else dev)"""
    train = load_split(config, "train")
    dev = load_split(config, "dev")
    evaluation = load_split(config, "test") if config.test_path else dev
    taxonomy = config.taxonomy()
    model = train_baseline(
        train,
        dev,
        taxonomy,
        epochs=config.epochs,
        seed=config.seeds[0],
        tagger=config.tagger,
        progress=progress,
    )
    model_dir = Path(config.model_dir)
    model_dir.mkdir(parents=True, exist_ok=True)
    save_baseline(model_dir / BASELINE_FILE, model)
    report = score(evaluation, model.predict(evaluation), taxonomy)
    LOGGER.info("Baseline macro F1 %.4f", report.macro_f1)
    return model, report

"""Entity-level scoring, clean/noisy reporting and the direct-tagging baseline."""

import io
import json
import logging
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Set, Tuple, Union

import pandas as pd

from boundary import (
    DEFAULT_EPOCHS,
    DEFAULT_TAGGER,
    BoundaryEnsemble,
    TaggingModel,
    ensemble_predict,
    train_tagger,
)
from corpus import (
    Dataset,
    EntitySpan,
    Taxonomy,
    collapse_to_boundary,
    load_taxonomy,
    spans_from_bio,
)
from models.sequence_tagging import span_f1
from models.serialization import load_model, save_model

LOGGER = logging.getLogger(__name__)

MISS = "<MISS>"
SPURIOUS = "<SPURIOUS>"

Predictions = Mapping[str, Sequence[EntitySpan]]
# (sentence id, start, end, label)
_Match = Tuple[str, int, int, str]


class EvaluationError(ValueError):
    """Predictions that cannot be scored against the gold data"""


# ==============================================================================
# Report
# ==============================================================================
@dataclass(frozen=True)
class ClassScores:
    precision: float
    recall: float
    f1: float
    gold_count: int
    pred_count: int


@dataclass(frozen=True)
class EvalReport:
    per_class: Dict[str, ClassScores]
    macro_f1: float
    micro_f1: float
    boundary_f1: float
    coarse_macro_f1: float
    confusion: Dict[Tuple[str, str], int] = field(default_factory=dict)
    clean_macro_f1: Optional[float] = None
    noisy_macro_f1: Optional[float] = None

    def to_dict(self) -> Dict:
        return {
            "macro_f1": self.macro_f1,
            "micro_f1": self.micro_f1,
            "boundary_f1": self.boundary_f1,
            "coarse_macro_f1": self.coarse_macro_f1,
            "clean_macro_f1": self.clean_macro_f1,
            "noisy_macro_f1": self.noisy_macro_f1,
            "per_class": {
                label: asdict(scores) for label, scores in sorted(self.per_class.items())
            },
            "confusion": [
                [gold, pred, count]
                for (gold, pred), count in sorted(self.confusion.items())
            ],
        }

    def per_class_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame(
            [
                {
                    "label": label,
                    "precision": s.precision,
                    "recall": s.recall,
                    "f1": s.f1,
                    "gold": s.gold_count,
                    "pred": s.pred_count,
                }
                for label, s in sorted(self.per_class.items())
            ],
            columns=["label", "precision", "recall", "f1", "gold", "pred"],
        )
        return frame.set_index("label")

    def confusion_frame(self) -> pd.DataFrame:
        """Gold labels as rows (plus SPURIOUS), predictions as columns (plus MISS)"""
        gold_labels = sorted({g for g, _ in self.confusion if g != SPURIOUS})
        pred_labels = sorted({p for _, p in self.confusion if p != MISS})
        rows = gold_labels + [SPURIOUS]
        columns = pred_labels + [MISS]
        frame = pd.DataFrame(0, index=rows, columns=columns, dtype=int)
        for (gold, pred), count in self.confusion.items():
            frame.loc[gold, pred] = count
        frame.index.name = "gold"
        return frame


def format_table(report: EvalReport) -> str:
    """Aligned human-readable report"""
    lines = [
        report.per_class_frame().to_string(float_format=lambda v: f"{v:.4f}"),
        "",
        f"macro F1         {report.macro_f1:.4f}",
        f"micro F1         {report.micro_f1:.4f}",
        f"boundary F1      {report.boundary_f1:.4f}",
        f"coarse macro F1  {report.coarse_macro_f1:.4f}",
    ]
    for name, value in (("clean", report.clean_macro_f1), ("noisy", report.noisy_macro_f1)):
        shown = "n/a" if value is None else f"{value:.4f}"
        lines.append(f"{name} macro F1   {shown}")
    return "\n".join(lines)


def write_report_json(path: Union[str, Path], report: EvalReport) -> None:
    Path(path).write_text(json.dumps(report.to_dict(), indent=2), encoding="utf-8")


def write_confusion_csv(path: Union[str, Path], report: EvalReport) -> None:
    report.confusion_frame().to_csv(path)


def report_to_xlsx(report: EvalReport) -> bytes:
    buffer = io.BytesIO()
    with pd.ExcelWriter(buffer, engine="openpyxl") as writer:
        report.per_class_frame().to_excel(writer, sheet_name="per_class")
        report.confusion_frame().to_excel(writer, sheet_name="confusion")
        pd.Series(
            {
                k: v
                for k, v in report.to_dict().items()
                if k not in ("per_class", "confusion")
            },
            name="value",
        ).to_frame().to_excel(writer, sheet_name="summary")
    return buffer.getvalue()


def write_report_xlsx(path: Union[str, Path], report: EvalReport) -> None:
    Path(path).write_bytes(report_to_xlsx(report))


# ==============================================================================
# Scoring
# ==============================================================================
def _class_scores(gold: Set[_Match], pred: Set[_Match]) -> Dict[str, ClassScores]:
    labels = {m[3] for m in gold} | {m[3] for m in pred}
    matched = gold & pred
    table = {}
    for label in labels:
        tp = sum(1 for m in matched if m[3] == label)
        n_gold = sum(1 for m in gold if m[3] == label)
        n_pred = sum(1 for m in pred if m[3] == label)
        precision = tp / n_pred if n_pred else 0.0
        recall = tp / n_gold if n_gold else 0.0
        f1 = (
            2 * precision * recall / (precision + recall)
            if precision + recall
            else 0.0
        )
        table[label] = ClassScores(precision, recall, f1, n_gold, n_pred)
    return table


def _macro(table: Mapping[str, ClassScores]) -> float:
    # Classes absent from both gold and predictions never enter the table
    if not table:
        return 1.0
    return sum(s.f1 for s in table.values()) / len(table)


def _f1(gold: Set, pred: Set) -> float:
    if not gold and not pred:
        return 1.0
    tp = len(gold & pred)
    if tp == 0:
        return 0.0
    precision, recall = tp / len(pred), tp / len(gold)
    return 2 * precision * recall / (precision + recall)


def _validate(
    gold: Dataset, pred: Predictions, taxonomy: Taxonomy
) -> Tuple[Set[_Match], Set[_Match]]:
    lengths = {sentence.id: len(sentence) for sentence, _ in gold}
    gold_set: Set[_Match] = set()
    for sentence, tags in gold:
        for span in spans_from_bio(tags):
            if span.label not in taxonomy:
                raise EvaluationError(
                    f"Gold label {span.label!r} in {sentence.id} is not in the taxonomy"
                )
            gold_set.add((sentence.id, span.start, span.end, span.label))

    pred_set: Set[_Match] = set()
    for sentence_id, spans in pred.items():
        if sentence_id not in lengths:
            raise EvaluationError(f"Unknown sentence id {sentence_id!r}")
        seen = set()
        for span in spans:
            if not span.fits(lengths[sentence_id]):
                raise EvaluationError(
                    f"{sentence_id}: span ({span.start}, {span.end}) exceeds "
                    f"sentence length {lengths[sentence_id]}"
                )
            if span.label not in taxonomy:
                raise EvaluationError(
                    f"{sentence_id}: predicted label {span.label!r} is not in the taxonomy"
                )
            if (span.start, span.end) in seen:
                raise EvaluationError(
                    f"{sentence_id}: duplicate prediction for span ({span.start}, {span.end})"
                )
            seen.add((span.start, span.end))
            pred_set.add((sentence_id, span.start, span.end, span.label))
    return gold_set, pred_set


def _confusion(gold: Set[_Match], pred: Set[_Match]) -> Dict[Tuple[str, str], int]:
    gold_at = {m[:3]: m[3] for m in gold}
    pred_at = {m[:3]: m[3] for m in pred}
    confusion: Dict[Tuple[str, str], int] = {}
    for position, label in gold_at.items():
        key = (label, pred_at.get(position, MISS))
        confusion[key] = confusion.get(key, 0) + 1
    for position, label in pred_at.items():
        if position not in gold_at:
            key = (SPURIOUS, label)
            confusion[key] = confusion.get(key, 0) + 1
    return confusion


def score(
    gold: Dataset,
    pred: Predictions,
    taxonomy: Optional[Taxonomy] = None,
    split_noisy: bool = True,
) -> EvalReport:
    """
    Entity-level report of ``pred`` against ``gold``.

    An entity matches when sentence id, start, end and fine label are all
    equal. The macro average runs over every class seen in gold or in the
    predictions. Sentences missing from ``pred`` count as predicting
    nothing.

    Parameters
    ----------
    gold : Dataset
        Gold corpus with fine labels
    pred : Predictions
        Sentence id -> predicted labeled spans
    taxonomy : Taxonomy, optional
        Label set and coarse mapping (default: the bundled taxonomy)
    split_noisy : bool
        Also fill the clean/noisy macro F1 fields

    Returns
    -------
    EvalReport
    """
    taxonomy = taxonomy or load_taxonomy()
    gold_set, pred_set = _validate(gold, pred, taxonomy)

    per_class = _class_scores(gold_set, pred_set)
    coarse = _class_scores(
        {m[:3] + (taxonomy.coarse(m[3]),) for m in gold_set},
        {m[:3] + (taxonomy.coarse(m[3]),) for m in pred_set},
    )
    report = EvalReport(
        per_class=per_class,
        macro_f1=_macro(per_class),
        micro_f1=_f1(gold_set, pred_set),
        boundary_f1=_f1({m[:3] for m in gold_set}, {m[:3] for m in pred_set}),
        coarse_macro_f1=_macro(coarse),
        confusion=_confusion(gold_set, pred_set),
    )
    if split_noisy:
        clean, noisy = clean_noisy_report(gold, pred, taxonomy)
        report = replace(report, clean_macro_f1=clean, noisy_macro_f1=noisy)
    return report


def clean_noisy_report(
    gold: Dataset, pred: Predictions, taxonomy: Optional[Taxonomy] = None
) -> Tuple[Optional[float], Optional[float]]:
    """Macro F1 on the clean and on the noisy sentences; None for an empty side"""
    results = []
    for noisy in (False, True):
        part = tuple((s, t) for s, t in gold if s.noisy == noisy)
        if not part:
            results.append(None)
            continue
        ids = {s.id for s, _ in part}
        part_pred = {sid: spans for sid, spans in pred.items() if sid in ids}
        results.append(score(part, part_pred, taxonomy, split_noisy=False).macro_f1)
    return results[0], results[1]


def predictions_of(dataset: Dataset) -> Dict[str, List[EntitySpan]]:
    """Predicted spans of a tagged (prediction) corpus"""
    return {sentence.id: spans_from_bio(tags) for sentence, tags in dataset}


# ==============================================================================
# Boundary-only evaluation
# ==============================================================================
def evaluate_boundary(ensemble: BoundaryEnsemble, dataset: Dataset) -> float:
    """Span F1 of the voted boundaries against the collapsed gold tags"""
    gold = [list(collapse_to_boundary(tags)) for _, tags in dataset]
    pred = [list(ensemble_predict(ensemble, sentence)) for sentence, _ in dataset]
    value = span_f1(gold, pred)
    LOGGER.info("Boundary F1 on %s sentences: %.4f", len(dataset), value)
    return value


# ==============================================================================
# Baseline
# ==============================================================================
@dataclass(frozen=True)
class BaselineModel(TaggingModel):
    """Tagger predicting fine labels directly (O + B-X + I-X)"""

    def predict(self, dataset: Iterable) -> Dict[str, List[EntitySpan]]:
        return {
            sentence.id: spans_from_bio(self.decode(sentence)) for sentence, _ in dataset
        }


def train_baseline(
    train: Dataset,
    dev: Dataset,
    taxonomy: Optional[Taxonomy] = None,
    epochs: int = DEFAULT_EPOCHS,
    seed: int = 0,
    tagger: str = DEFAULT_TAGGER,
    progress: bool = False,
) -> BaselineModel:
    taxonomy = taxonomy or load_taxonomy()
    tag_set = taxonomy.bio_tags()
    LOGGER.info("Training baseline over %s tags", len(tag_set))
    model = train_tagger(
        train, dev, tag_set, epochs=epochs, seed=seed, tagger=tagger, progress=progress
    )
    return BaselineModel(model)


def save_baseline(path: Union[str, Path], model: BaselineModel) -> None:
    save_model(path, "baseline", model.to_dict())


def load_baseline(path: Union[str, Path]) -> BaselineModel:
    return BaselineModel.from_dict(load_model(path, "baseline"))

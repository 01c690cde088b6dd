"""Command-line interface of the NER cascade.

Verbs: ``train``, ``predict``, ``evaluate``, ``ablate``, ``synth``, ``baseline``.
Every verb except ``synth`` reads a JSON pipeline config (``--config``);
the override flags replace single config fields.
"""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import List, Optional

from corpus import read_corpus, write_corpus
from evaluation import (
    format_table,
    predictions_of,
    score,
    write_confusion_csv,
    write_report_json,
    write_report_xlsx,
)
from pipeline import (
    PREDICTIONS_FILE,
    ConfigError,
    PipelineConfig,
    run_ablation,
    run_baseline,
    run_evaluate,
    run_predict,
    run_train,
    write_trace,
)
from synthetic import NOISE_TARGETS, SyntheticSpec, generate_synthetic, write_synthetic

LOGGER = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s - %(levelname)s - [%(name)s] %(message)s"


def _seeds(value: str) -> List[int]:
    try:
        return [int(s) for s in value.split(",") if s.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"seeds must be comma-separated integers: {value!r}")


def _add_config_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", required=True, help="Pipeline config (JSON).")
    parser.add_argument("--epochs", type=int, help="Training epochs per model.")
    parser.add_argument("--seeds", type=_seeds, help="Comma-separated ensemble seeds (5).")
    parser.add_argument("--beam", type=int, help="Linker beam width.")
    parser.add_argument("--k", type=int, help="Linker candidates per mention.")
    parser.add_argument("--model-dir", help="Directory of the trained models.")
    parser.add_argument("--ablation", help="Knowledge preset of the classifier input.")
    parser.add_argument(
        "--repair",
        action="store_true",
        default=None,
        help="Promote orphan I- tags to B- when reading corpora.",
    )
    parser.add_argument("--workers", type=int, help="Processes for ensemble training.")


def load_config(args: argparse.Namespace) -> PipelineConfig:
    config = PipelineConfig.from_file(args.config)
    return config.with_overrides(
        epochs=args.epochs,
        seeds=args.seeds,
        beam=args.beam,
        k_candidates=args.k,
        model_dir=args.model_dir,
        ablation=args.ablation,
        repair=args.repair,
        workers=args.workers,
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ner-cascade",
        description="Fine-grained NER cascade: boundaries, linking, knowledge-based typing.",
    )
    parser.add_argument(
        "--log-level",
        default="INFO",
        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
        help="Logging level.",
    )
    verbs = parser.add_subparsers(dest="verb", required=True)

    train = verbs.add_parser("train", help="Train the boundary, scorer and classifier models.")
    _add_config_arguments(train)
    train.add_argument("--baseline", action="store_true", help="Also train the baseline.")

    predict = verbs.add_parser("predict", help="Tag a corpus with the trained cascade.")
    _add_config_arguments(predict)
    predict.add_argument("--input", required=True, help="Corpus to tag (tags optional).")
    predict.add_argument("--output", help=f"Predicted corpus (default: <model-dir>/{PREDICTIONS_FILE}).")
    predict.add_argument("--trace", help="Write one JSON record per predicted span here.")

    evaluate = verbs.add_parser("evaluate", help="Score predictions against gold.")
    _add_config_arguments(evaluate)
    evaluate.add_argument("--gold", required=True, help="Gold corpus.")
    evaluate.add_argument("--pred", help="Predicted corpus (default: run the cascade).")
    evaluate.add_argument(
        "--gold-spans",
        action="store_true",
        help="Classify the gold spans only (no boundary step).",
    )
    _add_report_arguments(evaluate)

    ablate = verbs.add_parser("ablate", help="Knowledge ablation with gold spans.")
    _add_config_arguments(ablate)
    ablate.add_argument("--output", help="Write the ablation table as CSV.")
    ablate.add_argument("--confusion", help="Write the 'all' preset confusion matrix as CSV.")

    baseline = verbs.add_parser("baseline", help="Train and score the direct fine-grained tagger.")
    _add_config_arguments(baseline)
    _add_report_arguments(baseline)

    synth = verbs.add_parser("synth", help="Generate a synthetic corpus and KB snapshot.")
    synth.add_argument("--out-dir", required=True, help="Output directory.")
    synth.add_argument("--n-entities", type=int, default=SyntheticSpec.n_entities)
    synth.add_argument("--n-sentences", type=int, default=SyntheticSpec.n_sentences)
    synth.add_argument(
        "--kb-fraction",
        type=float,
        default=SyntheticSpec.kb_fraction,
        help="Share of sentences whose context does not reveal the label.",
    )
    synth.add_argument("--noise-rate", type=float, default=SyntheticSpec.noise_rate)
    synth.add_argument(
        "--noise-target", choices=NOISE_TARGETS, default=SyntheticSpec.noise_target
    )
    synth.add_argument("--seed", type=int, default=SyntheticSpec.seed)
    return parser


def _add_report_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--json", help="Write the report as JSON.")
    parser.add_argument("--csv", help="Write the confusion matrix as CSV.")
    parser.add_argument("--xlsx", help="Write the report as an Excel workbook.")


def _write_reports(args: argparse.Namespace, report) -> None:
    print(format_table(report))
    if args.json:
        write_report_json(args.json, report)
    if args.csv:
        write_confusion_csv(args.csv, report)
    if args.xlsx:
        write_report_xlsx(args.xlsx, report)


# ==============================================================================
# Verbs
# ==============================================================================
def cmd_train(args, progress: bool) -> None:
    config = load_config(args)
    manifest = run_train(config, progress=progress)
    print(json.dumps(manifest, indent=2, sort_keys=True))
    if args.baseline:
        _, report = run_baseline(config, progress=progress)
        print(format_table(report))


def cmd_predict(args, progress: bool) -> None:
    config = load_config(args)
    dataset = read_corpus(args.input, require_tags=False, repair=config.repair)
    predicted, trace = run_predict(config, dataset, progress=progress)
    output = args.output or str(Path(config.model_dir) / PREDICTIONS_FILE)
    write_corpus(output, predicted)
    if args.trace:
        write_trace(args.trace, trace)
        LOGGER.info("Wrote %s trace records to %s", len(trace), args.trace)


def cmd_evaluate(args, progress: bool) -> None:
    config = load_config(args)
    taxonomy = config.taxonomy()
    gold = read_corpus(args.gold, taxonomy=taxonomy, repair=config.repair)
    if args.pred and not args.gold_spans:
        predicted = read_corpus(args.pred, taxonomy=taxonomy, repair=config.repair)
        report = score(gold, predictions_of(predicted), taxonomy)
    else:
        report = run_evaluate(config, gold, gold_spans=args.gold_spans)
    _write_reports(args, report)


def cmd_ablate(args, progress: bool) -> None:
    config = load_config(args)
    result = run_ablation(config, progress=progress)
    print(result.table.to_string(float_format=lambda v: f"{v:.4f}"))
    if args.output:
        result.table.to_csv(args.output)
    if args.confusion and "all" in result.reports:
        write_confusion_csv(args.confusion, result.reports["all"])


def cmd_baseline(args, progress: bool) -> None:
    config = load_config(args)
    _, report = run_baseline(config, progress=progress)
    _write_reports(args, report)


def cmd_synth(args, progress: bool) -> None:
    spec = SyntheticSpec(
        n_entities=args.n_entities,
        n_sentences=args.n_sentences,
        kb_fraction=args.kb_fraction,
        noise_rate=args.noise_rate,
        noise_target=args.noise_target,
        seed=args.seed,
    )
    paths = write_synthetic(args.out_dir, generate_synthetic(spec))
    for name, path in paths.items():
        print(f"{name}\t{path}")


COMMANDS = {
    "train": cmd_train,
    "predict": cmd_predict,
    "evaluate": cmd_evaluate,
    "ablate": cmd_ablate,
    "baseline": cmd_baseline,
    "synth": cmd_synth,
}


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=getattr(logging, args.log_level), format=LOG_FORMAT)
    progress = sys.stderr.isatty()
    try:
        COMMANDS[args.verb](args, progress)
    except (ConfigError, FileNotFoundError, ValueError) as e:
        LOGGER.error("%s", e)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())

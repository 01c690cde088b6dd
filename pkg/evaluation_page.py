import streamlit as st

from evaluation import predictions_of, score
from pipeline import classify_gold_spans, run_predict
from ui_components import (
    display_confusion_heatmap,
    display_per_class_table,
    display_report_metrics,
    parse_corpus_input,
    report_download_buttons,
    upload_text,
)


def show_evaluation_page():
    """Score predictions against a gold corpus"""
    st.title("Evaluation")
    st.markdown("Entity-level macro F1 with per-class, boundary and clean/noisy breakdowns")
    st.markdown("---")

    session = st.session_state.cascade_config
    config = session.pipeline
    taxonomy = config.taxonomy()

    st.header("1. Gold Corpus")
    gold_text = upload_text("Gold corpus", key="gold_upload")
    if gold_text is None:
        st.info("ℹ️ Upload a gold corpus to start")
        return
    gold = parse_corpus_input(gold_text, taxonomy=taxonomy, repair=config.repair)
    if gold is None:
        return

    st.markdown("---")
    st.header("2. Predictions")
    source = st.radio(
        "Prediction source",
        [
            "Upload a prediction corpus",
            "Run the loaded cascade",
            "Classify gold spans with the loaded cascade",
        ],
        help="The last option skips the boundary step",
    )
    pred_text = None
    if source == "Upload a prediction corpus":
        pred_text = upload_text("Prediction corpus", key="pred_upload")

    if st.button("📊 Evaluate", type="primary"):
        with st.spinner("Scoring..."):
            try:
                if source == "Upload a prediction corpus":
                    if pred_text is None:
                        st.warning("⚠️ Upload a prediction corpus first")
                        return
                    predicted = parse_corpus_input(pred_text, taxonomy=taxonomy)
                    if predicted is None:
                        return
                    predictions = predictions_of(predicted)
                else:
                    if not session.is_loaded():
                        st.warning(
                            "⚠️ Please train or load the models first in the "
                            "'Pipeline Configuration' page"
                        )
                        return
                    if source == "Run the loaded cascade":
                        predicted, _ = run_predict(config, gold, session.cascade)
                        predictions = predictions_of(predicted)
                    else:
                        predictions = classify_gold_spans(session.cascade, gold)
                st.session_state.eval_report = score(gold, predictions, taxonomy)
                st.success("✅ Evaluation completed!")
            except Exception as e:
                st.error(f"Evaluation failed: {str(e)}")

    if "eval_report" in st.session_state:
        report = st.session_state.eval_report
        st.markdown("---")
        st.header("Results")
        display_report_metrics(report)
        display_per_class_table(report)
        display_confusion_heatmap(report)
        report_download_buttons(report, "eval")

from typing import List, Optional, Sequence

import pandas as pd
import plotly.graph_objects as go
import streamlit as st

from corpus import (
    CorpusFormatError,
    Dataset,
    Sentence,
    TagSequence,
    Taxonomy,
    parse_corpus,
    spans_from_bio,
)
from evaluation import EvalReport, report_to_xlsx


def upload_text(label: str, key: str, types: Sequence[str] = ("conll", "txt", "tsv")) -> Optional[str]:
    """
    File uploader returning the decoded file content.

    Parameters
    ----------
    label : str
        Widget label
    key : str
        Widget key
    types : Sequence[str]
        Accepted file extensions

    Returns
    -------
    Optional[str]
        UTF-8 content, or None when nothing (or an undecodable file) is uploaded
    """
    uploaded = st.file_uploader(label, type=list(types), key=key)
    if uploaded is None:
        return None
    try:
        return uploaded.getvalue().decode("utf-8")
    except UnicodeDecodeError as e:
        st.error(f"❌ {uploaded.name} is not valid UTF-8: {e}")
        return None


def parse_corpus_input(
    text: str,
    taxonomy: Optional[Taxonomy] = None,
    repair: bool = False,
    require_tags: bool = True,
) -> Optional[Dataset]:
    """Parse corpus text, reporting format errors in the page"""
    try:
        dataset = parse_corpus(
            text, taxonomy=taxonomy, repair=repair, require_tags=require_tags
        )
    except (CorpusFormatError, ValueError) as e:
        st.error(f"❌ Invalid corpus: {e}")
        return None
    st.success(f"✅ Loaded {len(dataset)} sentences")
    return dataset


def display_tagged_sentence(sentence: Sentence, tags: TagSequence):
    """Show a sentence with its entity spans highlighted and labeled"""
    words = list(sentence.words)
    pieces: List[str] = []
    position = 0
    for span in spans_from_bio(tags):
        pieces.extend(words[position : span.start])
        mention = " ".join(words[span.start : span.end])
        pieces.append(f"**:blue-background[{mention}]** `{span.label}`")
        position = span.end
    pieces.extend(words[position:])
    st.markdown(" ".join(pieces))


def display_report_metrics(report: EvalReport):
    """Headline scores of a report as metric tiles"""
    cols = st.columns(4)
    cols[0].metric("Macro F1", f"{report.macro_f1:.4f}")
    cols[1].metric("Micro F1", f"{report.micro_f1:.4f}")
    cols[2].metric("Boundary F1", f"{report.boundary_f1:.4f}")
    cols[3].metric("Coarse macro F1", f"{report.coarse_macro_f1:.4f}")

    if report.clean_macro_f1 is not None or report.noisy_macro_f1 is not None:
        cols = st.columns(2)
        for col, name, value in (
            (cols[0], "Clean macro F1", report.clean_macro_f1),
            (cols[1], "Noisy macro F1", report.noisy_macro_f1),
        ):
            col.metric(name, "n/a" if value is None else f"{value:.4f}")


def display_per_class_table(report: EvalReport):
    df = report.per_class_frame()
    st.dataframe(
        df.style.format(
            {"precision": "{:.4f}", "recall": "{:.4f}", "f1": "{:.4f}"}
        ).background_gradient(subset=["f1"], cmap="RdYlGn", vmin=0.0, vmax=1.0),
        use_container_width=True,
    )


def display_confusion_heatmap(report: EvalReport, title: str = "Confusion matrix"):
    """Gold (rows) x predicted (columns) counts, with MISS / SPURIOUS margins"""
    df = report.confusion_frame()
    fig = go.Figure(
        data=go.Heatmap(
            z=df.values,
            x=list(df.columns),
            y=list(df.index),
            colorscale="Blues",
            text=df.values,
            texttemplate="%{text}",
            hovertemplate="gold=%{y}<br>pred=%{x}<br>count=%{z}<extra></extra>",
        )
    )
    fig.update_layout(
        title=title,
        xaxis_title="Predicted label",
        yaxis_title="Gold label",
        yaxis_autorange="reversed",
        template="plotly_white",
        height=max(400, 28 * len(df.index)),
    )
    st.plotly_chart(fig, use_container_width=True)


def report_download_buttons(report: EvalReport, key_prefix: str):
    col1, col2 = st.columns(2)
    with col1:
        st.download_button(
            label="📥 Download confusion matrix (CSV)",
            data=report.confusion_frame().to_csv(),
            file_name="confusion.csv",
            mime="text/csv",
            key=f"{key_prefix}_csv",
        )
    with col2:
        st.download_button(
            label="📥 Download report (XLSX)",
            data=report_to_xlsx(report),
            file_name="report.xlsx",
            mime="application/vnd.openxmlformats-officedocument.spreadsheetml.sheet",
            key=f"{key_prefix}_xlsx",
        )


def candidates_frame(candidates: Sequence[Sequence]) -> pd.DataFrame:
    return pd.DataFrame(candidates, columns=["qid", "language", "score"])

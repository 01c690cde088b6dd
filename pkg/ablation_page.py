import plotly.express as px
import streamlit as st

from classifier import ABLATION_PRESETS, PRESET_DESCRIPTIONS
from pipeline import run_ablation
from ui_components import display_confusion_heatmap, report_download_buttons


def show_ablation_page():
    """Macro F1 of the classifier for each amount of external knowledge"""
    st.title("Knowledge Ablation")
    st.markdown(
        "Train one classifier ensemble per knowledge preset and score it on gold spans"
    )
    st.markdown("---")

    config = st.session_state.cascade_config.pipeline
    if not (config.train_path and config.dev_path and config.kb_path):
        st.warning(
            "⚠️ Please set the train/dev corpora and the KB snapshot in the "
            "'Pipeline Configuration' page"
        )
        return

    st.header("Presets")
    presets = st.multiselect(
        "Knowledge presets",
        list(ABLATION_PRESETS),
        default=list(ABLATION_PRESETS),
        format_func=lambda x: PRESET_DESCRIPTIONS[x],
    )
    st.caption(
        f"Evaluated on {'the test' if config.test_path else 'the dev'} split, "
        f"{len(presets)} x 5 classifiers"
    )

    if st.button("🧪 Run ablation", type="primary", disabled=not presets):
        with st.spinner("Linking spans and training classifiers..."):
            try:
                st.session_state.ablation_result = run_ablation(config, presets)
                st.success("✅ Ablation completed!")
            except Exception as e:
                st.error(f"Ablation failed: {str(e)}")

    if "ablation_result" not in st.session_state:
        return

    result = st.session_state.ablation_result
    st.markdown("---")
    st.header("Results")
    st.dataframe(
        result.table.style.format(
            {"macro_f1": "{:.4f}", "micro_f1": "{:.4f}", "coarse_macro_f1": "{:.4f}"}
        ),
        use_container_width=True,
    )
    fig = px.bar(
        result.table.reset_index(),
        x="knowledge",
        y="macro_f1",
        range_y=[0, 1],
        template="plotly_white",
        title="Macro F1 per knowledge preset",
    )
    st.plotly_chart(fig, use_container_width=True)
    st.download_button(
        "📥 Download table (CSV)",
        data=result.table.to_csv(),
        file_name="ablation.csv",
        mime="text/csv",
    )

    chosen = st.selectbox(
        "Confusion matrix of preset",
        list(result.reports),
        index=len(result.reports) - 1,
        format_func=lambda x: PRESET_DESCRIPTIONS[x],
    )
    display_confusion_heatmap(result.reports[chosen], title="Gold-span confusion matrix")
    report_download_buttons(result.reports[chosen], f"ablation_{chosen}")

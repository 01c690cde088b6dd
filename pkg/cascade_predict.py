import streamlit as st

from corpus import Sentence
from pipeline import predict_sentence
from ui_components import candidates_frame, display_tagged_sentence


def show_cascade_prediction():
    """Tag one sentence and show what every step of the cascade did"""
    st.title("Cascade Prediction")
    st.markdown("Tag a sentence and inspect boundaries, linked entities and knowledge")
    st.markdown("---")

    session = st.session_state.cascade_config
    if not session.is_loaded():
        st.warning(
            "⚠️ Please train or load the models first in the 'Pipeline Configuration' page"
        )
        return

    text = st.text_input(
        "Sentence (tokens separated by spaces)",
        value="yesterday Kalomir was mentioned in the report .",
    )
    if st.button("🏷️ Tag sentence", type="primary"):
        words = text.split()
        if not words:
            st.warning("⚠️ Enter at least one token")
            return
        try:
            sentence = Sentence.from_words("input", words)
            tags, trace = predict_sentence(session.cascade, sentence)
            st.session_state.prediction_result = (sentence, tags, trace)
        except Exception as e:
            st.error(f"Prediction failed: {str(e)}")

    if "prediction_result" not in st.session_state:
        return

    sentence, tags, trace = st.session_state.prediction_result
    st.markdown("---")
    st.header("Result")
    display_tagged_sentence(sentence, tags)
    st.code(" ".join(f"{w}/{t}" for w, t in zip(sentence.words, tags)), language=None)

    if not trace:
        st.info("ℹ️ No entity boundaries were predicted")
        return

    st.header("Per-span trace")
    for record in trace:
        with st.expander(
            f"{record['mention']} → {record['label']} "
            f"(tokens {record['start']}-{record['end']})",
            expanded=True,
        ):
            col1, col2 = st.columns(2)
            with col1:
                st.subheader("Linking")
                if record["candidates"]:
                    st.dataframe(candidates_frame(record["candidates"]), use_container_width=True)
                else:
                    st.warning("⚠️ The linker produced no candidates")
                if record["linked_qid"]:
                    st.success(f"✅ Linked to {record['linked_qid']}")
                else:
                    st.warning("⚠️ No usable entity; classified from context only")
            with col2:
                st.subheader("Knowledge")
                st.json(record["context"])
            st.subheader("Classifier input")
            st.code(record["rendered_input"], language=None)

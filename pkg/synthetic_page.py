import io
import zipfile

import streamlit as st

from corpus import load_taxonomy, serialize_corpus
from kb import dump_snapshot
from pipeline import PipelineConfig
from synthetic import (
    DEFAULT_LABELS,
    NOISE_TARGETS,
    SyntheticSpec,
    generate_synthetic,
    write_synthetic,
)


def show_synthetic_page():
    """Generate a corpus whose labels are partly recoverable only from the KB"""
    st.title("Synthetic Corpus")
    st.markdown(
        "Generate train/dev/test corpora and a matching KB snapshot for quick experiments"
    )
    st.markdown("---")

    st.header("Generator Settings")
    col1, col2 = st.columns(2)
    with col1:
        n_entities = st.number_input("Entities", min_value=9, value=120, step=10)
        n_sentences = st.number_input("Sentences", min_value=3, value=500, step=50)
        kb_fraction = st.slider(
            "KB-determined fraction",
            0.0,
            1.0,
            0.5,
            help="Share of sentences whose context does not reveal the label",
        )
        seed = st.number_input("Seed", min_value=0, value=0, step=1)
    with col2:
        noise_rate = st.slider("Noise rate (test split)", 0.0, 1.0, 0.0)
        noise_target = st.selectbox("Corrupted tokens", NOISE_TARGETS)
        labels = st.multiselect(
            "Fine labels", list(load_taxonomy().fine_labels), default=list(DEFAULT_LABELS)
        )

    if st.button("🎲 Generate", type="primary"):
        try:
            spec = SyntheticSpec(
                n_entities=int(n_entities),
                n_sentences=int(n_sentences),
                kb_fraction=kb_fraction,
                noise_rate=noise_rate,
                seed=int(seed),
                noise_target=noise_target,
                labels=tuple(labels),
            )
            st.session_state.synthetic_corpus = generate_synthetic(spec)
            st.success("✅ Corpus generated!")
        except ValueError as e:
            st.error(f"❌ {e}")

    if "synthetic_corpus" not in st.session_state:
        return

    corpus = st.session_state.synthetic_corpus
    st.markdown("---")
    st.header("Preview")
    cols = st.columns(4)
    cols[0].metric("Train sentences", len(corpus.train))
    cols[1].metric("Dev sentences", len(corpus.dev))
    cols[2].metric("Test sentences", len(corpus.test))
    cols[3].metric("KB records", len(corpus.store))
    st.code(serialize_corpus(corpus.train[:3]), language=None)

    buffer = io.BytesIO()
    with zipfile.ZipFile(buffer, "w") as archive:
        for split in ("train", "dev", "test"):
            archive.writestr(f"{split}.conll", serialize_corpus(corpus.split(split)))
        archive.writestr("kb.jsonl", dump_snapshot(corpus.store))
    st.download_button(
        "📥 Download corpus + snapshot (ZIP)",
        data=buffer.getvalue(),
        file_name="synthetic.zip",
        mime="application/zip",
    )

    st.subheader("Use in this session")
    out_dir = st.text_input("Write to directory", value="synthetic")
    if st.button("💾 Write files and configure the pipeline"):
        try:
            paths = write_synthetic(out_dir, corpus)
            st.session_state.cascade_config.set_pipeline(PipelineConfig.from_file(paths["config"]))
            st.success(f"✅ Files written to {out_dir}; the configuration now points to them")
        except Exception as e:
            st.error(f"Writing failed: {str(e)}")

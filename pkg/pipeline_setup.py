import json

import streamlit as st

from classifier import ABLATION_PRESETS, PRESET_DESCRIPTIONS
from kb import KB_CLIENT_REGISTRY, WikidataAPIClient
from models import ModelType
from models.generation import SCORER_REGISTRY
from models.sequence_tagging import TAGGER_REGISTRY
from models.text_classification import CLASSIFIER_REGISTRY
from pipeline import ConfigError, PipelineConfig, load_cascade, run_train
from retrieval import RetrievalConfig


def _registry_select(label: str, registry: dict, current: str, key: str) -> str:
    options = {key_: cls.get_display_name() for key_, cls in registry.items()}
    keys = list(options)
    choice = st.selectbox(
        label,
        keys,
        index=keys.index(current) if current in keys else 0,
        format_func=lambda x: options[x],
        key=key,
    )
    st.caption(registry[choice].get_description())
    return choice


def show_pipeline_configuration():
    """Pipeline configuration page"""
    st.title("Pipeline Configuration")
    st.markdown("Configure the data, the models of each step, and train or load them")
    st.markdown("---")

    session = st.session_state.cascade_config
    current = session.pipeline

    # =========================================================================
    # STEP 1: Load an existing config file
    # =========================================================================
    st.header("1. Load Configuration")
    uploaded = st.file_uploader("Pipeline config (JSON)", type=["json"], key="config_upload")
    config_path = st.text_input(
        "...or path to a config file",
        help="Relative paths inside the file are resolved against its directory",
    )
    if st.button("📂 Load configuration"):
        try:
            if uploaded is not None:
                session.set_pipeline(
                    PipelineConfig.from_dict(json.loads(uploaded.getvalue()))
                )
            elif config_path:
                session.set_pipeline(PipelineConfig.from_file(config_path))
            else:
                st.warning("⚠️ Upload a file or enter a path first")
            current = session.pipeline
            st.success("✅ Configuration loaded")
        except (ConfigError, ValueError, FileNotFoundError) as e:
            st.error(f"❌ {e}")

    st.markdown("---")

    # =========================================================================
    # STEP 2: Data
    # =========================================================================
    st.header("2. Data")
    col1, col2 = st.columns(2)
    with col1:
        train_path = st.text_input("Train corpus", value=current.train_path or "")
        dev_path = st.text_input("Dev corpus", value=current.dev_path or "")
        test_path = st.text_input("Test corpus", value=current.test_path or "")
    with col2:
        kb_path = st.text_input("KB snapshot", value=current.kb_path or "")
        model_dir = st.text_input("Model directory", value=current.model_dir)
        repair = st.checkbox(
            "Repair orphan I- tags when reading corpora", value=current.repair
        )

    st.markdown("---")

    # =========================================================================
    # STEP 3: Models
    # =========================================================================
    st.header("3. Models")
    col1, col2, col3 = st.columns(3)
    with col1:
        st.subheader(ModelType.BOUNDARY)
        tagger = _registry_select("Tagger", TAGGER_REGISTRY, current.tagger, "tagger")
        epochs = st.number_input("Epochs", min_value=1, value=current.epochs, step=1)
        seeds_text = st.text_input(
            "Seeds (5, comma-separated)", value=", ".join(str(s) for s in current.seeds)
        )
    with col2:
        st.subheader(ModelType.SCORER)
        scorer = _registry_select("Scorer", SCORER_REGISTRY, current.scorer, "scorer")
        ngram_order = st.number_input(
            "Character n-gram order", min_value=1, value=current.ngram_order, step=1
        )
        copy_weight = st.slider(
            "Copy weight", min_value=0.0, max_value=0.95, value=float(current.copy_weight)
        )
        beam = st.number_input("Beam width", min_value=1, value=current.beam, step=1)
        k_candidates = st.number_input(
            "Candidates per mention", min_value=1, value=current.k_candidates, step=1
        )
        languages = st.text_input(
            "Trie languages (comma-separated)", value=", ".join(current.languages)
        )
    with col3:
        st.subheader(ModelType.CLASSIFIER)
        text_classifier = _registry_select(
            "Text classifier",
            CLASSIFIER_REGISTRY,
            current.text_classifier,
            "text_classifier",
        )
        presets = list(ABLATION_PRESETS)
        ablation = st.selectbox(
            "Knowledge in the classifier input",
            presets,
            index=presets.index(current.ablation)
            if isinstance(current.ablation, str)
            else presets.index("all"),
            format_func=lambda x: PRESET_DESCRIPTIONS[x],
        )
        include_subclass_of = st.checkbox(
            "Retrieve subclass_of", value=current.retrieval.include_subclass_of
        )

    kb_client = _registry_select(
        "Knowledge base used for retrieval",
        KB_CLIENT_REGISTRY,
        session.kb_client,
        "kb_client",
    )
    workers = st.number_input(
        "Training processes", min_value=1, value=current.workers, step=1
    )

    try:
        pipeline = PipelineConfig(
            train_path=train_path or None,
            dev_path=dev_path or None,
            test_path=test_path or None,
            kb_path=kb_path or None,
            model_dir=model_dir,
            taxonomy_path=current.taxonomy_path,
            k_candidates=int(k_candidates),
            beam=int(beam),
            epochs=int(epochs),
            seeds=[int(s) for s in seeds_text.split(",") if s.strip()],
            retrieval=RetrievalConfig(include_subclass_of=include_subclass_of),
            ablation=ablation,
            languages=[lang.strip() for lang in languages.split(",") if lang.strip()],
            copy_weight=float(copy_weight),
            ngram_order=int(ngram_order),
            repair=repair,
            workers=int(workers),
            tagger=tagger,
            scorer=scorer,
            text_classifier=text_classifier,
        )
    except (ConfigError, ValueError) as e:
        st.error(f"❌ {e}")
        return

    if pipeline.to_dict() != current.to_dict():
        session.set_pipeline(pipeline)
    session.kb_client = kb_client

    with st.expander("Current configuration (JSON)"):
        st.json(session.to_dict())
        st.download_button(
            "📥 Download config",
            data=json.dumps(pipeline.to_dict(), indent=2),
            file_name="config.json",
            mime="application/json",
        )

    st.markdown("---")

    # =========================================================================
    # STEP 4: Train or load
    # =========================================================================
    st.header("4. Train or Load")
    col1, col2 = st.columns(2)
    with col1:
        if st.button("🏋️ Train cascade", type="primary"):
            with st.spinner("Training 5 boundary taggers, the scorer and 5 classifiers..."):
                try:
                    manifest = run_train(pipeline)
                    st.success("✅ Training completed!")
                    st.json(manifest)
                except Exception as e:
                    st.error(f"Training failed: {str(e)}")
    with col2:
        if st.button("📦 Load trained models"):
            with st.spinner("Loading models and building the trie..."):
                try:
                    client = None
                    if kb_client == "WikidataAPI":
                        client = WikidataAPIClient(languages=pipeline.languages)
                    session.cascade = load_cascade(pipeline, client)
                    st.success("✅ Models loaded")
                except Exception as e:
                    st.error(f"Loading failed: {str(e)}")

    if session.is_loaded():
        st.info("ℹ️ A trained cascade is loaded for this session")

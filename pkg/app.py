from typing import Any, Dict, Optional

import streamlit as st

from ablation_page import show_ablation_page
from cascade_predict import show_cascade_prediction
from evaluation_page import show_evaluation_page
from home import show_home_page
from pipeline import Cascade, PipelineConfig
from pipeline_setup import show_pipeline_configuration
from synthetic_page import show_synthetic_page


# ==============================================================================
# Pipeline Configuration Manager
# ==============================================================================
class CascadeSessionConfig:
    """Pipeline configuration and loaded models of one browser session"""

    def __init__(self):
        self.pipeline: PipelineConfig = PipelineConfig()
        self.kb_client: str = "Snapshot"  # key of KB_CLIENT_REGISTRY
        self.cascade: Optional[Cascade] = None

    def set_pipeline(self, pipeline: PipelineConfig):
        self.pipeline = pipeline
        self.cascade = None  # models no longer match the config

    def is_loaded(self) -> bool:
        return self.cascade is not None

    def to_dict(self) -> Dict[str, Any]:
        """Export configuration to dictionary"""
        return {
            "pipeline": self.pipeline.to_dict(),
            "kb_client": self.kb_client,
            "models_loaded": self.is_loaded(),
        }


# ==============================================================================
# Streamlit App Pages
# ==============================================================================
def main():
    st.set_page_config(
        page_title="NER Cascade",
        layout="wide",
        page_icon="🏷️",
        initial_sidebar_state="expanded",
    )
    # Initialize session state
    if "cascade_config" not in st.session_state:
        st.session_state.cascade_config = CascadeSessionConfig()

    # Sidebar navigation
    st.sidebar.title("🏷️ NER Cascade")
    st.sidebar.markdown("*Knowledge-enriched fine-grained NER*")

    page = st.sidebar.radio(
        "Navigation",
        [
            "Home",
            "Pipeline Configuration",
            "Cascade Prediction",
            "Evaluation",
            "Knowledge Ablation",
            "Synthetic Corpus",
        ],
    )

    if page == "Home":
        show_home_page()
    elif page == "Pipeline Configuration":
        show_pipeline_configuration()
    elif page == "Cascade Prediction":
        show_cascade_prediction()
    elif page == "Evaluation":
        show_evaluation_page()
    elif page == "Knowledge Ablation":
        show_ablation_page()
    elif page == "Synthetic Corpus":
        show_synthetic_page()


if __name__ == "__main__":
    main()

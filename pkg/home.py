import streamlit as st

from corpus import load_taxonomy


def show_home_page():
    """Display home page with general information"""
    st.title("Welcome to the NER Cascade")
    st.markdown("---")

    col1, col2 = st.columns([2, 1])

    with col1:
        st.header("What does it do?")
        st.markdown(
            """
        The cascade finds named entities in a sentence and assigns each one of
        36 fine-grained categories, using an external knowledge base to
        disambiguate the cases the sentence alone cannot settle:

        - **Step 1, boundaries:** five linear-chain taggers predict
          `O / B-ENTITY / I-ENTITY`; their outputs are combined by a
          per-token majority vote
        - **Step 2, linking and retrieval:** each span is linked to a KB entry by
          generating its name character by character inside a prefix trie of
          all known names; the best usable entry contributes its description,
          `instance_of` / `occupation` arguments and summary
        - **Step 3, classification:** five text classifiers read the marked
          sentence plus the retrieved knowledge and vote on the fine label
        """
        )

        st.header("Knowledge sources")
        st.markdown(
            """
        - **Snapshot:** a JSON-lines file with one record per entity (names per
          language, English description, relations, summary, page status)
        - **Live Wikidata / Wikipedia:** the same fields fetched on demand
          (retrieval only; the trie is always built from the snapshot)
        """
        )

    with col2:
        st.header("Quick Start")
        st.info(
            """
        **Step 1:** Generate a corpus in "Synthetic Corpus" or point the
        configuration to your own corpora and KB snapshot

        **Step 2:** Train or load the models in "Pipeline Configuration"

        **Step 3:** Tag sentences, evaluate, or run the knowledge ablation
        """
        )

        st.warning(
            """
        ⚠️ **Important:**
        - Every ensemble has exactly 5 members (one seed each)
        - The ablation trains 6 classifier ensembles and may take a while
        """
        )

    st.markdown("---")
    st.header("Taxonomy")

    taxonomy = load_taxonomy()
    cols = st.columns(len(taxonomy.coarse_labels))
    for col, coarse in zip(cols, taxonomy.coarse_labels):
        with col:
            st.subheader(coarse)
            st.markdown(
                "\n".join(
                    f"- {label}"
                    for label in taxonomy.fine_labels
                    if taxonomy.coarse(label) == coarse
                )
            )

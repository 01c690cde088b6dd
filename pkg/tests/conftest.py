import pytest

from corpus import load_taxonomy, parse_corpus
from kb import KBRecord, KBStore
from pipeline import PipelineConfig
from synthetic import SyntheticSpec, generate_synthetic, write_synthetic


TINY_CORPUS = """\
# id s1
John\tB-Artist
Lennon\tI-Artist
sang\tO
in\tO
Liverpool\tB-HumanSettlement
.\tO

# id s2
Paris\tB-HumanSettlement
is\tO
big\tO

# id s3
# noisy
Jon\tB-Artist
Lenon\tI-Artist
visited\tO
Pariss\tB-HumanSettlement

"""


@pytest.fixture
def taxonomy():
    return load_taxonomy()


@pytest.fixture
def tiny_dataset(taxonomy):
    return parse_corpus(TINY_CORPUS, taxonomy=taxonomy)


@pytest.fixture
def tiny_store():
    """Two homonymous Parises, a musician and a couple of broken pages"""
    return KBStore(
        [
            KBRecord(qid="Q5", names={"en": ("human",)}),
            KBRecord(qid="Q515", names={"en": ("city",)}),
            KBRecord(qid="Q177220", names={"en": ("singer",)}),
            KBRecord(
                qid="Q1",
                names={"en": ("John Lennon", "Lennon")},
                description_en="English musician",
                instance_of=("Q5",),
                occupation=("Q177220",),
                summary_en="John Lennon was an English singer.",
            ),
            KBRecord(
                qid="Q90",
                names={"en": ("Paris",)},
                description_en="capital of France",
                instance_of=("Q515",),
                summary_en="Paris is the capital of France.",
            ),
            KBRecord(
                qid="Q830149",
                names={"en": ("Paris",)},
                description_en="city in Texas",
                instance_of=("Q515",),
            ),
            KBRecord(
                qid="Q24826",
                names={"en": ("Liverpool",)},
                description_en="city in England",
                instance_of=("Q515",),
                subclass_of=("Q515",),
            ),
            KBRecord(qid="Q700", names={"en": ("Paris (disambiguation)",)}, status="disambiguation"),
            KBRecord(qid="Q701", status="deleted"),
        ]
    )


@pytest.fixture(scope="session")
def small_spec():
    return SyntheticSpec(n_entities=30, n_sentences=60, seed=3, decoy_rate=0.5)


@pytest.fixture(scope="session")
def small_corpus(small_spec):
    return generate_synthetic(small_spec)


@pytest.fixture(scope="session")
def small_config(small_corpus, tmp_path_factory):
    """Config over the small synthetic corpus, two epochs per model"""
    paths = write_synthetic(tmp_path_factory.mktemp("synthetic"), small_corpus)
    return PipelineConfig.from_file(paths["config"]).with_overrides(epochs=2)

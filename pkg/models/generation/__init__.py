from models.generation.core import END, ENTRY_SEPARATOR, UNK, GenerationScorer
from models.generation.ngram_copy import NGramCopyScorer

SCORER_REGISTRY = {
    "NGramCopy": NGramCopyScorer,
}

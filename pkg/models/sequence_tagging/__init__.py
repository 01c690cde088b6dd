from models.sequence_tagging.core import SequenceTagger, span_f1
from models.sequence_tagging.perceptron import AveragedPerceptronTagger

TAGGER_REGISTRY = {
    "AveragedPerceptron": AveragedPerceptronTagger,
}

from models.text_classification.core import TextClassifier, accuracy
from models.text_classification.perceptron import AveragedPerceptronClassifier

CLASSIFIER_REGISTRY = {
    "AveragedPerceptron": AveragedPerceptronClassifier,
}

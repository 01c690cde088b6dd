# ==============================================================================
# Model Type Enumeration
# ==============================================================================
class ModelType:
    """Enumeration for the model roles of the cascade"""

    BOUNDARY = "Boundary tagger (step 1)"
    SCORER = "Entity-name scorer (step 2)"
    CLASSIFIER = "Fine-grained classifier (step 3)"

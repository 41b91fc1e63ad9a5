"""Explainable fault detection and classification.

Detectors (PCA, autoencoder) and classifiers (MLP) with analytic input
gradients, adversarial fault reconstruction, gradient-path attributions, the
classical CP/RBC diagnosis baselines they generalize, and quantitative
evaluation metrics.
"""

__version__ = "0.1.0"

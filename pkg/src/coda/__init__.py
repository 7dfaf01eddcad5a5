"""Difference-guided adversarial example generation for code classifiers."""

__version__ = "0.1.0"

"""TB-CNN - topic-based convolutional text classification with LDA topic vectors."""

__version__ = "0.1.0"

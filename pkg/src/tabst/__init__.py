"""Self-training for tabular data with likelihood-regularized pseudo-labeling."""

__version__ = "0.1.0"

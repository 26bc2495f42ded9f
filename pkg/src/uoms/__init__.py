"""Unsupervised outlier model selection benchmark toolkit."""

__version__ = "0.1.0"

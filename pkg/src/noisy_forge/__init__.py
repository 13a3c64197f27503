"""Noisy parallel-corpus augmentation and evaluation toolkit."""

__version__ = "0.1.0"

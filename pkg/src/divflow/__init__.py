"""Diversity post-processing of collaborative-filtering recommendations via min-cost flow."""

__version__ = "0.1.0"

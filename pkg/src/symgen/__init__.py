"""Procedural symmetric point-cloud datasets with exact symmetry ground truth."""

__version__ = "0.1.0"

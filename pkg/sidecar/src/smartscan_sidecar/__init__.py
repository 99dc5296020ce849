"""Inference sidecar: segmentation wire protocol plus grid prompt generation
around externally trained checkpoints, with fixture modes for testing."""

__version__ = "0.1.0"

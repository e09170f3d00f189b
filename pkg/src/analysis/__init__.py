"""Evaluation metrics, feature extraction and rate-distortion plots."""

"""Batch evaluation metrics and text report."""

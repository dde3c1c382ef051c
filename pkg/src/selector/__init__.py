"""Baseline and consistency-matrix mode selection."""

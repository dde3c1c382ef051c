"""Synthetic urban-canyon scenarios and Monte Carlo batches."""

"""Satellite-pseudorange consistency planes, range-offset intervals and mixtures."""

"""Single-reflection propagation paths and pseudorange corrections."""

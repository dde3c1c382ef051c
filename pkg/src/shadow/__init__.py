"""GNSS shadows on the receiver plane and visibility-constrained modes."""

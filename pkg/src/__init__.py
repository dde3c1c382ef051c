"""Set-based GNSS position ambiguity reduction toolkit."""

__version__ = "0.1.0"

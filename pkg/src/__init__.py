"""Search-based test generation for quantum programs."""

__version__ = "0.1.0"

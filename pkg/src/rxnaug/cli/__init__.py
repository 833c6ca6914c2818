"""Command line pipeline."""

from .main import EXIT_DATA, EXIT_NUMERIC, EXIT_OK, EXIT_USAGE, main

__all__ = ["EXIT_DATA", "EXIT_NUMERIC", "EXIT_OK", "EXIT_USAGE", "main"]

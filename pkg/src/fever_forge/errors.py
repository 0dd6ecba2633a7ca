"""Shared exception base so the CLI can catch toolkit errors uniformly."""


class FeverForgeError(Exception):
    """Base class for all errors raised by this package."""

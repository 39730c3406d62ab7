"""Lexicon-based scoring of texts against rated category wordlists."""

__version__ = "0.1.0"

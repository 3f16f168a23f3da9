"""Proof-pattern search: term and proof-patch feature extraction, recurrent
clustering, and automaton-shaped cluster explanations."""

__version__ = "0.1.0"

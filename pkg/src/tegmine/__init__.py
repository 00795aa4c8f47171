"""Typed event graph mining and lexical entailment evaluation toolkit."""

__version__ = "0.1.0"

"""Contextual-vector exporter for the depgraph parsing toolkit."""

from .conllu import read_token_forms
from .export import export
from .vecfile import read_vector_file, write_vector_file

__version__ = "0.1.0"

__all__ = ["export", "read_token_forms", "read_vector_file",
           "write_vector_file"]

"""Dataset construction, generation harness and evaluation for aspect-oriented
search-result explanations."""

__version__ = "0.1.0"

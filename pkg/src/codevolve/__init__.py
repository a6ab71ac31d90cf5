"""LLM-guided evolution of code blocks against automated evaluators."""

__version__ = "0.1.0"

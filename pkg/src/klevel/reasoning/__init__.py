"""Prompt construction and the reasoning pipelines that drive a backend."""
from .context import DEFAULT_CATALOG, Catalog, PromptContext, estimate_tokens, player_name
from .methods import DISPLAY_NAMES, METHODS, MethodAgent, call_count, parse_prediction

__all__ = [
    "DEFAULT_CATALOG", "Catalog", "PromptContext", "estimate_tokens", "player_name",
    "DISPLAY_NAMES", "METHODS", "MethodAgent", "call_count", "parse_prediction",
]

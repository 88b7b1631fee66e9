"""Subspace gap geometry: gaps, Fredholm indices, relative dimensions and Morse indices."""

__all__ = [
    "config",
    "errors",
    "normed",
    "metrics",
    "verdict",
    "tetrad",
    "splitting",
    "reldim",
    "morse",
    "family",
    "generate",
    "storage",
]

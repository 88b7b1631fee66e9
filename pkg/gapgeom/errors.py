"""Exceptions raised by gapgeom.

Every class carries the process exit code the CLI maps it to:
- 3 for malformed input or violated preconditions
- 1 for a hypothesis gate that could not be certified
- 2 for a conclusion that failed while its hypotheses were certified
"""
from typing import Optional

import numpy as np


class GapsError(Exception):
    exit_code = 3


class InputError(GapsError):
    """Malformed file, non-finite entries or out-of-range parameter."""


class ShapeError(InputError):
    """Arrays or subspaces that do not live in the same ambient space."""


class ContainmentError(GapsError):
    """A required inclusion A ⊆ B fails; `direction` is a vector of A far from B."""

    def __init__(self, message: str, direction: Optional[np.ndarray] = None):
        super().__init__(message)
        self.direction = direction


class DecompositionError(GapsError):
    pass


class SignatureError(GapsError):
    pass


class IsotropyError(GapsError):
    def __init__(self, message: str, witness: Optional[np.ndarray] = None):
        super().__init__(message)
        self.witness = witness


class PathError(GapsError):
    def __init__(self, message: str, t: Optional[float] = None):
        super().__init__(message)
        self.t = t


class GateError(GapsError):
    exit_code = 1

    def __init__(self, name: str, value: float, threshold: float, message: str = ""):
        text = message or f"gate {name} not certified: {value:.6g} vs threshold {threshold:.6g}"
        super().__init__(text)
        self.name = name
        self.value = value
        self.threshold = threshold


class TheoremViolation(GapsError):
    exit_code = 2

    def __init__(self, message: str, verdict=None):
        super().__init__(message)
        self.verdict = verdict

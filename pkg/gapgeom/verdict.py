"""Stability verdicts.

A verdict collects named hypothesis constants (certified enclosures), the
gates evaluated on them and the conclusions checked afterwards. Gates are
decided on the pessimistic side of each enclosure; a gate that would pass on
the optimistic side only is reported as indeterminate.
"""
import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Union

import numpy as np

from .config import CONCLUSION_SLACK
from .normed import DistInterval

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Enclosure:
    """[lo, hi] for a derived constant; either end may be infinite."""

    lo: float
    hi: float

    def to_dict(self) -> dict:
        return {"lo": _json_float(self.lo), "hi": _json_float(self.hi)}


Bounded = Union[Enclosure, DistInterval]


def _json_float(x: float):
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return float(x)


def point(x: float) -> Enclosure:
    return Enclosure(float(x), float(x))


def corner_range(fn: Callable[..., float], **boxes: Bounded) -> Enclosure:
    """Range of `fn` over the corners of the input boxes.

    Valid when `fn` is monotone in each argument on the box, which holds for
    the closed-form constants used by the checkers. Non-finite or NaN corner
    values widen the result to +inf.
    """
    names = list(boxes)
    values = []
    for corner in itertools.product(*[(boxes[n].lo, boxes[n].hi) for n in names]):
        try:
            v = fn(**dict(zip(names, corner)))
        except (ZeroDivisionError, ValueError, OverflowError):
            v = math.inf
        if v is None or math.isnan(v):
            v = math.inf
        values.append(float(v))
    return Enclosure(min(values), max(values))


@dataclass
class StabilityVerdict:
    name: str
    hypothesis_values: Dict[str, Bounded] = field(default_factory=dict)
    hypothesis_ok: bool = False
    conclusion_ok: Optional[bool] = None
    conclusion_values: Dict[str, object] = field(default_factory=dict)
    notes: List[str] = field(default_factory=list)
    witnesses: Dict[str, list] = field(default_factory=dict)

    @property
    def status(self) -> str:
        if not self.hypothesis_ok:
            return "gate-failed"
        return "passed" if self.conclusion_ok else "contradiction"

    @property
    def exit_code(self) -> int:
        return {"passed": 0, "gate-failed": 1, "contradiction": 2}[self.status]

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "status": self.status,
            "hypothesis_ok": self.hypothesis_ok,
            "conclusion_ok": self.conclusion_ok,
            "hypothesis_values": {k: v.to_dict() for k, v in self.hypothesis_values.items()},
            "conclusion_values": {k: _plain(v) for k, v in self.conclusion_values.items()},
            "notes": list(self.notes),
            "witnesses": {k: _plain(v) for k, v in self.witnesses.items()},
        }


def _plain(v):
    if hasattr(v, "to_dict"):
        return v.to_dict()
    if isinstance(v, np.ndarray):
        if np.iscomplexobj(v):
            return [[float(z.real), float(z.imag)] for z in v.ravel()]
        return [float(z) for z in v.ravel()]
    if isinstance(v, np.bool_):
        return bool(v)
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, (float, np.floating)):
        return _json_float(float(v))
    if isinstance(v, (complex, np.complexfloating)):
        return [_json_float(v.real), _json_float(v.imag)]
    if isinstance(v, (list, tuple)):
        return [_plain(x) for x in v]
    if isinstance(v, dict):
        return {k: _plain(x) for k, x in v.items()}
    return v


def combine_exit_codes(verdicts) -> int:
    codes = [v.exit_code for v in verdicts]
    if 2 in codes:
        return 2
    if 1 in codes:
        return 1
    return 0


class VerdictBuilder:
    """Accumulates gates and conclusions, then emits a StabilityVerdict."""

    def __init__(self, name: str, slack: float = CONCLUSION_SLACK):
        self.verdict = StabilityVerdict(name=name)
        self.slack = slack
        self._gates_ok = True
        self._conclusions: List[bool] = []

    def record(self, name: str, value: Bounded) -> Bounded:
        self.verdict.hypothesis_values[name] = value
        return value

    def note(self, text: str):
        self.verdict.notes.append(text)

    def fail(self, reason: str):
        self._gates_ok = False
        self.note(reason)

    def gate_lt(self, name: str, value: Bounded, threshold: float) -> bool:
        """Gate `value < threshold`, certified on value.hi."""
        self.record(name, value)
        if value.hi < threshold:
            return True
        self._gates_ok = False
        if value.lo < threshold:
            self.note(f"{name}: indeterminate, enclosure [{value.lo:.6g}, {value.hi:.6g}] straddles {threshold:.6g}; widen budget")
            logger.warning("%s: gate %s indeterminate", self.verdict.name, name)
        else:
            self.note(f"{name}: gate failed, {value.lo:.6g} >= {threshold:.6g}")
        return False

    def gate_gt(self, name: str, value: Bounded, threshold: float) -> bool:
        """Gate `value > threshold`, certified on value.lo."""
        self.record(name, value)
        if value.lo > threshold:
            return True
        self._gates_ok = False
        if value.hi > threshold:
            self.note(f"{name}: indeterminate, enclosure [{value.lo:.6g}, {value.hi:.6g}] straddles {threshold:.6g}; widen budget")
            logger.warning("%s: gate %s indeterminate", self.verdict.name, name)
        else:
            self.note(f"{name}: gate failed, {value.hi:.6g} <= {threshold:.6g}")
        return False

    def require(self, name: str, ok: bool, detail: str = ""):
        """Exact (integer or structural) hypothesis."""
        self.verdict.conclusion_values.setdefault("preconditions", {})[name] = bool(ok)
        if not ok:
            self.fail(f"{name}: precondition not met" + (f" ({detail})" if detail else ""))
        return ok

    def conclude(self, name: str, ok: bool, value=None):
        if value is not None:
            self.verdict.conclusion_values[name] = value
        self._conclusions.append(bool(ok))
        if not ok:
            self.note(f"{name}: conclusion does not hold")
        return ok

    def conclude_le(self, name: str, value: Union[Bounded, int, float], bound: float) -> bool:
        """`value ≤ bound`, failing only when value.lo exceeds bound + slack."""
        lo = value.lo if hasattr(value, "lo") else float(value)
        ok = lo <= bound + (self.slack if hasattr(value, "lo") else 0.0)
        return self.conclude(name, ok, {"value": value, "bound": bound})

    def conclude_ge(self, name: str, value: Union[Bounded, int, float], bound: float) -> bool:
        hi = value.hi if hasattr(value, "hi") else float(value)
        ok = hi >= bound - (self.slack if hasattr(value, "hi") else 0.0)
        return self.conclude(name, ok, {"value": value, "bound": bound})

    def witness(self, name: str, vector):
        self.verdict.witnesses[name] = vector

    @property
    def gates_ok(self) -> bool:
        return self._gates_ok

    def finish(self) -> StabilityVerdict:
        v = self.verdict
        v.hypothesis_ok = self._gates_ok
        if self._gates_ok:
            v.conclusion_ok = all(self._conclusions)
            if not v.conclusion_ok:
                logger.error("%s: conclusion failed with certified hypotheses", v.name)
        else:
            v.conclusion_ok = None
        return v

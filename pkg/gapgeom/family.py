"""One-parameter families and the constancy of their integer invariants.

A PathSpec moves a base configuration by invertible maps G(t), t in a
sub-interval of [0, 1]. Tetrads map to G(t)T; a perturbation pair (M, N, K)
maps to (G M, G N, G(I+K)G⁻¹ − I), which keeps (I+K(t))M(t) ⊆ N(t).

walk_family evaluates the invariant on a uniform grid together with the
per-step increments δ̂(M(t_i), M(t_{i+1})). A change of value between two
grid points is bisected down to BISECTION_FLOOR and then re-evaluated at
rank tolerances ×10 and ÷10; only a change that survives both is reported.
"""
import logging
import math
from dataclasses import dataclass, replace
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np
from scipy import linalg

from .config import BISECTION_FLOOR, DEFAULT_RANK_TOL, SamplingPlan
from .errors import ContainmentError, InputError, PathError
from .metrics import gap_hat
from .normed import NormedSpace, Subspace
from .reldim import relative_dim, semi_compact_witness
from .storage import decode_array, encode_array, parse_space, space_to_json
from .tetrad import Tetrad
from .verdict import Enclosure, StabilityVerdict, VerdictBuilder

logger = logging.getLogger(__name__)

KINDS = ("tetrad-index", "relative-dim")
GENERATOR_TYPES = ("rotation", "shear")
TOL_SWEEP = (10.0, 0.1)
# max-increment ratio window for the step-halving check
HALVING_FACTOR = 2.5
FROZEN_INCREMENT = 1e-10


@dataclass(frozen=True)
class Generator:
    """Rotation by angle rate·t in the (i, j) plane, or the shear I + rate·t·E_ij."""

    type: str
    axes: Tuple[int, int]
    rate: float

    def validate(self, dim: int):
        if self.type not in GENERATOR_TYPES:
            raise InputError(f"unknown generator {self.type!r}; expected one of {GENERATOR_TYPES}")
        i, j = self.axes
        if not (0 <= i < dim and 0 <= j < dim) or i == j:
            raise InputError(f"generator axes {self.axes} must be two distinct coordinates below {dim}")
        if not math.isfinite(self.rate):
            raise InputError("generator rate must be finite")

    def matrix(self, dim: int, t: float) -> np.ndarray:
        i, j = self.axes
        G = np.eye(dim)
        s = self.rate * t
        if self.type == "rotation":
            c, sn = math.cos(s), math.sin(s)
            G[i, i] = c
            G[j, j] = c
            G[i, j] = -sn
            G[j, i] = sn
        else:
            G[i, j] = s
        return G

    def to_json(self) -> dict:
        key = "plane" if self.type == "rotation" else "direction"
        return {"type": self.type, key: list(self.axes), "rate": self.rate}

    @classmethod
    def from_json(cls, data: dict) -> "Generator":
        if not isinstance(data, dict) or "type" not in data:
            raise InputError("each generator needs a 'type'")
        axes = data.get("plane", data.get("direction"))
        if axes is None or len(axes) != 2:
            raise InputError(f"{data['type']} generator needs a pair of axes")
        try:
            return cls(str(data["type"]), (int(axes[0]), int(axes[1])), float(data.get("rate", 1.0)))
        except (TypeError, ValueError):
            raise InputError(f"malformed generator {data!r}")


@dataclass(frozen=True, eq=False)
class PathSpec:
    space: NormedSpace
    generators: Tuple[Generator, ...]
    steps: int
    base: Dict[str, Subspace]
    t_range: Tuple[float, float] = (0.0, 1.0)
    K: Optional[np.ndarray] = None
    rank_tol: float = DEFAULT_RANK_TOL

    def __post_init__(self):
        if int(self.steps) < 2:
            raise InputError(f"a path needs at least 2 steps, got {self.steps}")
        t0, t1 = self.t_range
        if not (0.0 <= t0 < t1 <= 1.0):
            raise InputError(f"t_range {self.t_range} must satisfy 0 <= t0 < t1 <= 1")
        for g in self.generators:
            g.validate(self.space.dim)

    @property
    def has_tetrad(self) -> bool:
        return all(k in self.base for k in ("Y1", "M", "N", "Y2"))

    @property
    def has_pair(self) -> bool:
        return "M" in self.base and "N" in self.base

    def G(self, t: float) -> np.ndarray:
        """Composite map; generators act in list order."""
        out = np.eye(self.space.dim)
        for g in self.generators:
            out = g.matrix(self.space.dim, t) @ out
        return out.astype(self.space.dtype)

    def grid(self) -> np.ndarray:
        return np.linspace(self.t_range[0], self.t_range[1], int(self.steps) + 1)

    def with_tol(self, rank_tol: float) -> "PathSpec":
        return replace(self, base={k: v.with_tol(rank_tol) for k, v in self.base.items()}, rank_tol=rank_tol)

    def tetrad_at(self, t: float) -> Tetrad:
        b = self.base
        return Tetrad.build(b["Y1"], b["M"], b["N"], b["Y2"]).image(self.G(t))

    def pair_at(self, t: float) -> Tuple[Subspace, Subspace, np.ndarray]:
        G = self.G(t)
        M, N = self.base["M"].image(G), self.base["N"].image(G)
        K = self.K if self.K is not None else semi_compact_witness(self.base["M"], self.base["N"]).K
        I = np.eye(self.space.dim, dtype=self.space.dtype)
        Kt = G @ (I + K) @ linalg.inv(G) - I
        return M, N, Kt

    def to_json(self) -> dict:
        out = {
            "space": space_to_json(self.space, self.base),
            "generator": [g.to_json() for g in self.generators],
            "steps": int(self.steps),
            "t_range": list(self.t_range),
        }
        if self.has_tetrad:
            out["base"] = {"tetrad": ["Y1", "M", "N", "Y2"]}
        else:
            out["base"] = {"pair": ["M", "N"]}
        if self.K is not None:
            out["base"]["K"] = encode_array(self.K)
        return out

    @classmethod
    def from_json(cls, data: dict, rank_tol: float = DEFAULT_RANK_TOL) -> "PathSpec":
        """Path file: {"space": <space file>, "generator": [...], "steps", "t_range", "base"}.

        "base" names the role subspaces, {"tetrad": [Y1, M, N, Y2]} or
        {"pair": [M, N], "K": matrix}. A missing K defaults to P_N − I.
        """
        for key in ("space", "generator", "steps", "base"):
            if key not in data:
                raise InputError(f"path file has no {key!r}")
        sf = parse_space(data["space"], rank_tol)
        gens = data["generator"]
        if isinstance(gens, dict):
            gens = gens.get("composite", [gens])
        generators = tuple(Generator.from_json(g) for g in gens)

        base_spec = data["base"]
        base: Dict[str, Subspace] = {}
        if not isinstance(base_spec, dict):
            raise InputError("base must be an object")
        if "tetrad" in base_spec:
            if len(base_spec["tetrad"]) != 4:
                raise InputError("a tetrad base names exactly four subspaces")
            for role, name in zip(("Y1", "M", "N", "Y2"), base_spec["tetrad"]):
                base[role] = sf.get(name)
        elif "pair" in base_spec:
            if len(base_spec["pair"]) != 2:
                raise InputError("a pair base names exactly two subspaces")
            base["M"], base["N"] = sf.pick(base_spec["pair"])
        else:
            raise InputError("base must give 'tetrad' or 'pair'")
        K = None
        if base_spec.get("K") is not None:
            K = decode_array(base_spec["K"], sf.space.field, depth=2, name="K").astype(sf.space.dtype)
            if K.shape != (sf.space.dim, sf.space.dim):
                raise InputError(f"K of shape {K.shape} on a space of dimension {sf.space.dim}")
        try:
            steps = int(data["steps"])
        except (TypeError, ValueError):
            raise InputError(f"steps must be an integer, got {data['steps']!r}")
        t_range = tuple(float(x) for x in data.get("t_range", (0.0, 1.0)))
        if len(t_range) != 2:
            raise InputError("t_range must have two entries")
        return cls(sf.space, generators, steps, base, t_range, K, rank_tol)


@dataclass
class JumpIncident:
    t_left: float
    t_right: float
    values: Tuple[int, int]
    classification: str
    resolved_at: Optional[float] = None

    def to_dict(self) -> dict:
        return {
            "t_left": self.t_left,
            "t_right": self.t_right,
            "values": list(self.values),
            "classification": self.classification,
            "resolved_at_rank_tol": self.resolved_at,
        }


@dataclass
class FamilyTrace:
    kind: str
    points: List[dict]
    incidents: List[JumpIncident]
    verdict: StabilityVerdict

    @property
    def values(self) -> List[int]:
        return [p["value"] for p in self.points if not p["refined"]]

    @property
    def constant(self) -> bool:
        return bool(self.verdict.conclusion_ok)

    @property
    def max_increment(self) -> float:
        incs = [p["increment"] for p in self.points if p.get("increment") is not None]
        return max(incs, default=0.0)

    @property
    def exit_code(self) -> int:
        return self.verdict.exit_code

    def rows(self) -> List[dict]:
        return sorted(self.points, key=lambda p: p["t"])

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "points": self.rows(),
            "incidents": [i.to_dict() for i in self.incidents],
            "verdict": self.verdict.to_dict(),
        }


def _evaluator(p: PathSpec, kind: str) -> Callable[[float], dict]:
    if kind == "tetrad-index":
        if not p.has_tetrad:
            raise InputError("tetrad-index walks need a tetrad base")

        def evaluate(t):
            T = p.tetrad_at(t)
            return {"value": T.index, "cap_excess": T.cap_excess, "sum_deficit": T.sum_deficit}

    elif kind == "relative-dim":
        if not p.has_pair:
            raise InputError("relative-dim walks need an M, N base")

        def evaluate(t):
            M, N, K = p.pair_at(t)
            r = relative_dim(M, N, K)
            return {"value": r.value, "kernel_dim": r.kernel_dim, "cokernel_dim": r.cokernel_dim}

    else:
        raise InputError(f"unknown walk kind {kind!r}; expected one of {KINDS}")

    def guarded(t):
        try:
            row = evaluate(float(t))
        except (ContainmentError, InputError) as e:
            raise PathError(f"instance invalid at t={t:.9g}: {e}", float(t))
        row["t"] = float(t)
        row["rank_tol"] = p.rank_tol
        return row

    return guarded


def _moving(p: PathSpec, t: float) -> Subspace:
    return p.base["M"].image(p.G(t))


def _increment(p: PathSpec, t0: float, t1: float, plan: SamplingPlan, tag: str) -> float:
    """δ̂(M(t0), M(t1)); upper end of the enclosure off ℓ²."""
    d = gap_hat(_moving(p, t0), _moving(p, t1), plan.child(tag))
    return d.hi


def _bisect(evaluate, left: dict, right: dict, floor: float) -> Tuple[dict, dict, List[dict]]:
    seen = []
    a, b = left, right
    while b["t"] - a["t"] > floor:
        row = evaluate(0.5 * (a["t"] + b["t"]))
        row["refined"] = True
        seen.append(row)
        if row["value"] != a["value"]:
            b = row
        else:
            a = row
    return a, b, seen


def _classify(p: PathSpec, kind: str, a: dict, b: dict) -> JumpIncident:
    for factor in TOL_SWEEP:
        tol = p.rank_tol * factor
        ev = _evaluator(p.with_tol(tol), kind)
        try:
            va, vb = ev(a["t"])["value"], ev(b["t"])["value"]
        except PathError:
            continue
        if va == vb:
            logger.warning("jump near t=%.9g disappears at rank tolerance %.1e", a["t"], tol)
            return JumpIncident(a["t"], b["t"], (a["value"], b["value"]), "tolerance-incident", tol)
    logger.error("jump %d -> %d near t=%.9g survives the tolerance sweep", a["value"], b["value"], a["t"])
    return JumpIncident(a["t"], b["t"], (a["value"], b["value"]), "jump")


def walk_family(p: PathSpec, kind: str = "tetrad-index", plan: Optional[SamplingPlan] = None,
                increments: bool = True) -> FamilyTrace:
    """Evaluate the invariant of `kind` along the path and check it is constant."""
    plan = plan or SamplingPlan()
    evaluate = _evaluator(p, kind)
    grid = p.grid()

    points = []
    for i, t in enumerate(grid):
        row = evaluate(t)
        row["refined"] = False
        row["increment"] = None
        points.append(row)
    if increments:
        for i in range(len(grid) - 1):
            points[i]["increment"] = _increment(p, grid[i], grid[i + 1], plan, f"step{i}")
    logger.debug("walked %d grid points of %s", len(points), kind)

    incidents = []
    refined = []
    for left, right in zip(points[:-1], points[1:]):
        if left["value"] == right["value"]:
            continue
        lo_row, hi_row, seen = _bisect(evaluate, left, right, BISECTION_FLOOR)
        refined.extend(seen)
        incidents.append(_classify(p, kind, lo_row, hi_row))

    b = VerdictBuilder(f"family-{kind}")
    b.require("steps_at_least_2", p.steps >= 2)
    b.require("generators_invertible", True, "rotations and shears")
    if increments:
        b.record("max_step_increment", Enclosure(0.0, max((r["increment"] for r in points[:-1]), default=0.0)))
    base_value = points[0]["value"]
    jumps = [i for i in incidents if i.classification == "jump"]
    for inc in incidents:
        b.note(f"{inc.classification} between t={inc.t_left:.9g} and t={inc.t_right:.9g}: {inc.values[0]} -> {inc.values[1]}")
    b.conclude("trace_constant", not jumps, {"value": base_value, "grid_points": len(points), "refined_points": len(refined)})
    return FamilyTrace(kind, points + refined, incidents, b.finish())


def step_halving_check(p: PathSpec, plan: Optional[SamplingPlan] = None,
                       factor: float = HALVING_FACTOR) -> StabilityVerdict:
    """Halving the step should halve the largest increment, within `factor`."""
    plan = plan or SamplingPlan()
    fine = replace(p, steps=2 * int(p.steps))

    def max_inc(spec, tag):
        g = spec.grid()
        return max(_increment(spec, g[i], g[i + 1], plan, f"{tag}{i}") for i in range(len(g) - 1))

    coarse_max = max_inc(p, "coarse")
    fine_max = max_inc(fine, "fine")
    b = VerdictBuilder("family-step-halving")
    b.require("steps_at_least_2", p.steps >= 2)
    if coarse_max < FROZEN_INCREMENT and fine_max < FROZEN_INCREMENT:
        b.note("frozen family: all increments vanish")
        b.conclude("halving_ratio", True, {"coarse": 0.0, "fine": 0.0})
        return b.finish()
    ratio = coarse_max / fine_max if fine_max > 0 else math.inf
    b.conclude("halving_ratio", 2.0 / factor <= ratio <= 2.0 * factor,
               {"coarse": coarse_max, "fine": fine_max, "ratio": ratio})
    return b.finish()

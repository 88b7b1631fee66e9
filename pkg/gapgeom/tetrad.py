"""Fredholm pair and tetrad indices, and stability checks for them.

A tetrad (Y1; M, N; Y2) satisfies Y1 ⊆ M∩N and M+N ⊆ Y2. Its index is
dim (M∩N)/Y1 − dim Y2/(M+N). In finite dimensions every pair and every
tetrad is Fredholm, so `kind` is always "fredholm".
"""
import logging
import math
import re
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .config import SamplingPlan
from .errors import InputError
from .metrics import directed_gap, farthest_unit_vector, min_gap
from .normed import (
    DistInterval,
    Subspace,
    annihilator,
    complement,
    intersection,
    is_subset,
    require_subset,
    subspace_sum,
)
from .splitting import delta_const
from .verdict import Enclosure, StabilityVerdict, VerdictBuilder, _plain, corner_range

logger = logging.getLogger(__name__)

VARIANTS = ("1.1a", "1.1b", "1.2a", "1.2b", "1.2c", "1.2d", "1.2e",
            "finite-ext-a", "finite-ext-b", "finite-ext-c")

# a in (0, sqrt(2)-1) used for the δ_i constants of the sum gate
SUM_GATE_A = 0.4


@dataclass(frozen=True, eq=False)
class Tetrad:
    Y1: Subspace
    M: Subspace
    N: Subspace
    Y2: Subspace

    @classmethod
    def build(cls, Y1: Subspace, M: Subspace, N: Subspace, Y2: Subspace) -> "Tetrad":
        require_subset(Y1, intersection(M, N), "Y1 ⊆ M∩N")
        require_subset(subspace_sum(M, N), Y2, "M+N ⊆ Y2")
        return cls(Y1, M, N, Y2)

    @classmethod
    def pair(cls, M: Subspace, N: Subspace) -> "Tetrad":
        return cls.build(Subspace.zero(M.space, M.rank_tol), M, N, Subspace.full(M.space, M.rank_tol))

    def image(self, T) -> "Tetrad":
        return Tetrad.build(self.Y1.image(T), self.M.image(T), self.N.image(T), self.Y2.image(T))

    def annihilators(self) -> "Tetrad":
        """(Y2^⊥; M^⊥, N^⊥; Y1^⊥) in the dual space; its index is −index."""
        return Tetrad.build(annihilator(self.Y2), annihilator(self.M), annihilator(self.N), annihilator(self.Y1))

    @property
    def cap_excess(self) -> int:
        return intersection(self.M, self.N).dim - self.Y1.dim

    @property
    def sum_deficit(self) -> int:
        return self.Y2.dim - subspace_sum(self.M, self.N).dim

    @property
    def index(self) -> int:
        return self.cap_excess - self.sum_deficit

    @property
    def kind(self) -> str:
        return "fredholm"

    def to_dict(self) -> dict:
        return {
            "dims": {"Y1": self.Y1.dim, "M": self.M.dim, "N": self.N.dim, "Y2": self.Y2.dim},
            "cap_excess": self.cap_excess,
            "sum_deficit": self.sum_deficit,
            "index": self.index,
            "kind": self.kind,
        }


def pair_index(M: Subspace, N: Subspace) -> Tuple[int, int, int]:
    cap = intersection(M, N).dim
    codim = M.space.dim - subspace_sum(M, N).dim
    return cap, codim, cap - codim


def tetrad_index(t: Tetrad) -> int:
    return t.index


def finite_diff_index_check(M: Subspace, Mp: Subspace, N: Subspace) -> StabilityVerdict:
    """Index(M',N) = Index(M,N) + dim M'/M for M ⊆ M'."""
    require_subset(M, Mp, "M ⊆ M'")
    n = Mp.dim - M.dim
    b = VerdictBuilder("finite-diff-index")
    b.require("M_subset_Mp", True)
    before = pair_index(M, N)[2]
    after = pair_index(Mp, N)[2]
    b.conclude("index_shift", after == before + n, {"index_M_N": before, "index_Mp_N": after, "n": n})
    return b.finish()


@dataclass
class Witness:
    kind: Optional[str]
    vector: Optional[np.ndarray]
    distance: Optional[DistInterval]
    note: str = ""

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "vector": None if self.vector is None else _plain(self.vector),
            "distance": None if self.distance is None else self.distance.to_dict(),
            "note": self.note,
        }


def two_point_witness(M: Subspace, N: Subspace, L: Subspace, a: float, b: float,
                      plan: Optional[SamplingPlan] = None) -> Witness:
    """u in S_M with dist(u,N) > a, or v in S_N with dist(v,L) > b.

    One of the two exists whenever L ⊊ M and (a+1)(b+1) < 2. A failed search
    is reported as such and never read as a disproof.
    """
    plan = plan or SamplingPlan()
    if not (is_subset(L, M) and L.dim < M.dim):
        raise InputError("two-point witness needs L to be a proper subspace of M")
    if not (a >= 0 and b >= 0 and (a + 1.0) * (b + 1.0) < 2.0):
        raise InputError(f"(a+1)(b+1) must be < 2, got a={a}, b={b}")
    if N.dim:
        v, dv = farthest_unit_vector(N, L, plan.child("v"))
        if dv.lo > b:
            return Witness("v", v, dv)
    u, du = farthest_unit_vector(M, N, plan.child("u"))
    if du.lo > a:
        return Witness("u", u, du)
    logger.warning("two-point witness search exhausted (u: %.3g, v budget %d)", du.lo, plan.budget)
    return Witness(None, None, None, "witness not found at budget")


def parse_variant(variant: str) -> Tuple[str, Optional[int]]:
    """'1.2d(3)' -> ('1.2d', 3)."""
    m = re.fullmatch(r"\s*([0-9a-z.\-]+)\s*(?:\(\s*(-?\d+)\s*\))?\s*", str(variant))
    if not m or m.group(1) not in VARIANTS:
        raise InputError(f"unknown variant {variant!r}; choose from {', '.join(VARIANTS)}")
    name, param = m.group(1), m.group(2)
    return name, (int(param) if param is not None else None)


def _one_or_gamma(A: Subspace, B: Subspace, plan: SamplingPlan) -> DistInterval:
    if A.dim == 0 or B.dim == 0:
        return DistInterval(1.0, 1.0, "closed-form")
    return min_gap(A, B, plan)


def _sum_gate(b: VerdictBuilder, t: Tetrad, tp: Tetrad, plan: SamplingPlan, prefix: str = "") -> bool:
    """Gate under which dim Y2'/(M'+N') ≤ dim Y2/(M+N).

    With L = M+N, S a complement of L in Y2 and n = dim S, the sum M'+N' is
    close to L: δ(L, M'+N') ≤ ε_sum = δ(N,N') + (δ(M,M')+δ(N,N'))/γ(M,N).
    The splitting condition (1+δ_{n+1})(1+ε_sum/γ(L,S)) < 2 with δ_i taken
    from δ(Y2',Y2) then forces the quotient to shrink.
    """
    L = subspace_sum(t.M, t.N)
    S = complement(L, t.Y2)
    n = S.dim
    dMM = b.record(prefix + "delta_M_Mp", directed_gap(t.M, tp.M, plan.child("MMp")))
    dNN = b.record(prefix + "delta_N_Np", directed_gap(t.N, tp.N, plan.child("NNp")))
    gMN = b.record(prefix + "gamma_M_N", _one_or_gamma(t.M, t.N, plan.child("gMN")))
    eps_sum = corner_range(lambda m, nn, g: nn + (m + nn) / g, m=dMM, nn=dNN, g=gMN)
    b.record(prefix + "eps_sum", eps_sum)
    dY = b.record(prefix + "delta_Y2p_Y2", directed_gap(tp.Y2, t.Y2, plan.child("Y2pY2")))
    gLS = b.record(prefix + "gamma_L_S", _one_or_gamma(L, S, plan.child("gLS")))
    b.record(prefix + "n", Enclosure(n, n))
    cond = corner_range(
        lambda d, e, g: (1.0 + delta_const(SUM_GATE_A, n + 1, d)) * (1.0 + e / g),
        d=dY, e=eps_sum, g=gLS,
    )
    return b.gate_lt(prefix + "sum_condition", cond, 2.0)


def _check_sum(b: VerdictBuilder, t: Tetrad, tp: Tetrad, plan: SamplingPlan, label: str):
    ok = _sum_gate(b, t, tp, plan)
    b.conclude_le(label, tp.sum_deficit, t.sum_deficit)
    return ok


def _finite_ext_a(b, M, N, Mp, Np, V, plan, prefix: str = ""):
    dNpN = b.record(prefix + "delta_Np_N", directed_gap(Np, N, plan.child("NpN")))
    dMMp = b.record(prefix + "delta_M_Mp", directed_gap(M, Mp, plan.child("MMp")))
    gMV = b.record(prefix + "gamma_M_V", _one_or_gamma(M, V, plan.child("gMV")))
    cond = corner_range(lambda x, y, g: (1.0 + x) * (1.0 + y / g), x=dNpN, y=dMMp, g=gMV)
    return b.gate_lt(prefix + "finite_ext_a_condition", cond, 2.0)


def _index_ge_gates(b: VerdictBuilder, t: Tetrad, tp: Tetrad, plan: SamplingPlan, prefix: str = "") -> bool:
    """Gates under which Index(t') ≥ Index(t).

    The sum gate bounds the sum deficit of t' by that of t. The cap excess is
    handled by part a of the finite-extension check with the roles swapped:
    Y1' ⊆ M'∩N' against Y1 ⊆ M∩N gives dim (M∩N)/Y1 ≤ dim (M'∩N')/Y1'.
    """
    ok = _sum_gate(b, t, tp, plan.child("sum"), prefix)
    cap, capp = intersection(t.M, t.N), intersection(tp.M, tp.N)
    V = complement(tp.Y1, capp)
    return _finite_ext_a(b, tp.Y1, capp, t.Y1, cap, V, plan.child("cap"), prefix + "cap_") and ok


def _finite_ext_b(b, M, N, Mp, Np, V, plan):
    dMpM = b.record("delta_Mp_M", directed_gap(Mp, M, plan.child("MpM")))
    dNNp = b.record("delta_N_Np", directed_gap(N, Np, plan.child("NNp")))
    gVM = b.record("gamma_V_M", _one_or_gamma(V, M, plan.child("gVM")))
    ok = b.gate_lt("delta_Mp_M_vs_gamma", Enclosure(dMpM.lo - gVM.hi, dMpM.hi - gVM.lo), 0.0)
    cond = corner_range(
        lambda d, g, e: (1.0 + (1.0 + g) * d / (g - d)) * (1.0 + e) if g > d else math.inf,
        d=dMpM, g=gVM, e=dNNp,
    )
    return b.gate_lt("finite_ext_b_condition", cond, 2.0) and ok


def verify_finite_extension(M: Subspace, N: Subspace, Mp: Subspace, Np: Subspace, part: str = "c",
                            V: Optional[Subspace] = None, plan: Optional[SamplingPlan] = None) -> StabilityVerdict:
    """Stability of dim N/M for M ⊆ N under small gaps.

    Part a: (1+δ(N',N))(1+δ(M,M')/γ(M,V)) < 2 gives dim N'/M' ≤ dim N/M.
    Part b: δ(M',M) < γ(V,M) and (1+(1+γ(V,M))δ(M',M)/(γ(V,M)−δ(M',M)))(1+δ(N,N')) < 2
    gives dim N'/M' ≥ dim V. Part c asks both.
    """
    plan = plan or SamplingPlan()
    if part not in ("a", "b", "c"):
        raise InputError(f"finite-extension part must be a, b or c, got {part!r}")
    require_subset(M, N, "M ⊆ N")
    require_subset(Mp, Np, "M' ⊆ N'")
    V = complement(M, N) if V is None else V
    require_subset(V, N, "V ⊆ N")
    b = VerdictBuilder(f"finite-ext-{part}")
    b.require("V_complements_M", intersection(V, M).dim == 0 and M.dim + V.dim == N.dim)
    before, after = N.dim - M.dim, Np.dim - Mp.dim
    if part in ("a", "c"):
        _finite_ext_a(b, M, N, Mp, Np, V, plan.child("a"))
        b.conclude_le("dim_Np_over_Mp_le", after, before)
    if part in ("b", "c"):
        _finite_ext_b(b, M, N, Mp, Np, V, plan.child("b"))
        b.conclude_ge("dim_Np_over_Mp_ge", after, V.dim)
    b.verdict.conclusion_values["dims"] = {"N/M": before, "N'/M'": after, "V": V.dim}
    return b.finish()


def verify_tetrad_stability(t: Tetrad, tp: Tetrad, variant: str, m: Optional[int] = None,
                            V: Optional[Subspace] = None,
                            plan: Optional[SamplingPlan] = None) -> StabilityVerdict:
    """Evaluate the gates of a stability statement on (t, t') and check its conclusion.

    The conclusion is compared in exact integers and only asserted when every
    gate is certified.
    """
    plan = plan or SamplingPlan()
    name, param = parse_variant(variant)
    if m is None:
        m = param
    if name.startswith("finite-ext"):
        return verify_finite_extension(t.M, t.N, tp.M, tp.N, name[-1], V, plan)

    label = name if m is None or name not in ("1.2d", "1.2e") else f"{name}({m})"
    b = VerdictBuilder(f"tetrad-{label}")
    values = {"index_t": t.index, "index_tp": tp.index,
              "sum_deficit_t": t.sum_deficit, "sum_deficit_tp": tp.sum_deficit,
              "cap_excess_t": t.cap_excess, "cap_excess_tp": tp.cap_excess}
    b.verdict.conclusion_values["indices"] = values

    if name == "1.1a":
        _check_sum(b, t, tp, plan, "sum_deficit_le")
    elif name == "1.1b":
        # the cap excess of t is the sum deficit of the annihilator tetrad
        _sum_gate(b, t.annihilators(), tp.annihilators(), plan.child("dual"), "dual_")
        b.conclude_le("cap_excess_le", tp.cap_excess, t.cap_excess)
    elif name in ("1.2a", "1.2d"):
        _index_ge_gates(b, t, tp, plan)
        if name == "1.2a":
            b.conclude_ge("index_ge", tp.index, t.index)
    elif name in ("1.2b", "1.2e"):
        # Index of the annihilator tetrad is −Index(t)
        _index_ge_gates(b, t.annihilators(), tp.annihilators(), plan.child("dual"), "dual_")
        if name == "1.2b":
            b.conclude_le("index_le", tp.index, t.index)
    elif name == "1.2c":
        _index_ge_gates(b, t, tp, plan)
        _index_ge_gates(b, t.annihilators(), tp.annihilators(), plan.child("dual"), "dual_")
        b.conclude("index_eq", tp.index == t.index, values)

    if name in ("1.2d", "1.2e"):
        if m is None:
            raise InputError(f"variant {name} needs an integer parameter, e.g. {name}(0)")
        if name == "1.2d":
            b.require("index_t_ge_m", t.index >= m, f"Index(t) = {t.index} < {m}")
            b.conclude_ge("index_tp_ge_m", tp.index, m)
        else:
            b.require("index_t_le_m", t.index <= m, f"Index(t) = {t.index} > {m}")
            b.conclude_le("index_tp_le_m", tp.index, m)
    verdict = b.finish()
    logger.debug("%s: %s", verdict.name, verdict.status)
    return verdict


__all__ = [
    "Tetrad",
    "Witness",
    "VARIANTS",
    "pair_index",
    "tetrad_index",
    "finite_diff_index_check",
    "two_point_witness",
    "parse_variant",
    "verify_finite_extension",
    "verify_tetrad_stability",
]

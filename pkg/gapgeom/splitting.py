"""Ball-distance certificates, transport into nearby subspaces, and the splitting construction.

Constants used throughout (i ≥ 1):
- a_i = a^i / (i (1+a)^{i-1}), a_0 = 1
- δ_i = min(δ(N,M)(1+a_i)/a_i, 1), δ_0 = δ(N,M)
- c_k = (n-k)(a+1)^{n-k-1}(1+δ_k)δ_k / ((a-δ_k)^{n-k}(1-δ_k))
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from .config import CONCLUSION_SLACK, DEFAULT_SPLIT_A, SamplingPlan
from .errors import ContainmentError, DecompositionError, GateError, InputError, TheoremViolation
from .metrics import directed_gap, farthest_unit_vector, gap_hat, min_gap
from .normed import (
    DistInterval,
    Subspace,
    dist_to_subspace,
    intersection,
    is_subset,
    nearest_point,
    require_subset,
    subspace_sum,
)
from .verdict import Enclosure, StabilityVerdict, VerdictBuilder, corner_range, point

logger = logging.getLogger(__name__)

B_THRESHOLD = math.sqrt(2.0) - 1.0
EPS_FACTOR = 1e-6


def a_const(a: float, i: int) -> float:
    if i == 0:
        return 1.0
    return a ** i / (i * (1.0 + a) ** (i - 1))


def delta_const(a: float, i: int, delta_NM: float) -> float:
    if i == 0:
        return delta_NM
    ai = a_const(a, i)
    return min(delta_NM * (1.0 + ai) / ai, 1.0)


def c_const(a: float, n: int, k: int, delta_k: float) -> float:
    if k >= n:
        return 0.0
    m = n - k
    if delta_k >= a or delta_k >= 1.0:
        return math.inf
    return m * (a + 1.0) ** (m - 1) * (1.0 + delta_k) * delta_k / ((a - delta_k) ** m * (1.0 - delta_k))


def gamma_U_bound(a: float, n: int, k: int, delta_k: float) -> float:
    """Lower bound on γ(U_{n-k}, L+V_k); the value 1 is attained when k = n."""
    if k >= n:
        return 1.0
    m = n - k
    return (a - delta_k) ** m / (m * (a + 1.0) ** (m - 1) * (1.0 + delta_k))


def splitting_constants(a: float, n: int, delta_NM: float) -> Dict[str, object]:
    """Tables of a_i, δ_i (i = 0..n+1) and c_k (k = 0..n)."""
    a_list = [a_const(a, i) for i in range(n + 2)]
    d_list = [delta_const(a, i, delta_NM) for i in range(n + 2)]
    c_list = [c_const(a, n, k, d_list[k]) for k in range(n + 1)]
    return {"a": a, "b": B_THRESHOLD, "n": n, "a_i": a_list, "delta_i": d_list, "c_k": c_list}


def Delta_values(deltas: Sequence[float]) -> List[float]:
    """Δ_k = ∏_{i≥k} δ_i / ∏_{i>k} (1+δ_i) for k = 1..n."""
    n = len(deltas)
    out = []
    for k in range(n):
        num = float(np.prod(deltas[k:]))
        den = float(np.prod([1.0 + d for d in deltas[k + 1:]]))
        out.append(num / den)
    return out


@dataclass
class BallDistanceCertificate:
    vectors: List[np.ndarray]
    deltas: List[float]
    Delta_k: List[float]
    gamma_bound: float
    verdict: Optional[StabilityVerdict] = None

    def to_dict(self) -> dict:
        return {
            "deltas": list(self.deltas),
            "Delta_k": list(self.Delta_k),
            "gamma_bound": self.gamma_bound,
            "verdict": self.verdict.to_dict() if self.verdict else None,
        }


def _chain(space, vectors, rank_tol):
    return [Subspace.span(space, np.stack(vectors[:k], axis=1) if k else [], rank_tol) for k in range(len(vectors) + 1)]


def ball_distance_certificate(M: Subspace, u: Sequence, deltas: Sequence[float],
                              plan: Optional[SamplingPlan] = None,
                              coefficients: Optional[Sequence] = None,
                              batch: int = 32) -> BallDistanceCertificate:
    """Check dist(u_k, M+V_{k-1}) ≥ δ_k and the resulting lower bounds.

    Raises GateError naming the first k whose distance is not certified.
    """
    plan = plan or SamplingPlan()
    space = M.space
    vecs = [space.coerce(v, "u") for v in u]
    if len(vecs) != len(deltas) or not vecs:
        raise InputError("need one delta per vector and at least one vector")
    for k, v in enumerate(vecs, 1):
        if abs(float(space.norm(v)) - 1.0) > 1e-9:
            raise InputError(f"u_{k} is not a unit vector")
    deltas = [float(d) for d in deltas]
    if not all(0.0 < d <= 1.0 for d in deltas):
        raise InputError("deltas must lie in (0, 1]")
    n = len(vecs)
    chain = _chain(space, vecs, M.rank_tol)

    b = VerdictBuilder("ball-distances")
    for k in range(1, n + 1):
        d = dist_to_subspace(vecs[k - 1], subspace_sum(M, chain[k - 1]))
        b.record(f"dist_u{k}", d)
        if d.lo < deltas[k - 1]:
            raise GateError(f"dist_u{k}", d.lo, deltas[k - 1])
    Delta = Delta_values(deltas)
    gamma_bound = Delta[0] / n

    for k in range(1, n + 1):
        b.conclude(f"dim_MV{k}_over_M", subspace_sum(M, chain[k]).dim - M.dim == k,
                   subspace_sum(M, chain[k]).dim - M.dim)
    rng = plan.rng()
    coeffs = [np.asarray(c) for c in (coefficients or [])]
    coeffs += list(rng.standard_normal((batch, n)))
    worst = math.inf
    U = np.stack(vecs, axis=1)
    for c in coeffs:
        target = gamma_bound * float(np.abs(c).sum())
        d = dist_to_subspace(U @ c, M)
        worst = min(worst, d.hi - target)
        if d.hi < target - b.slack:
            b.witness("ball_distance_coefficients", c)
    b.conclude("ball_distance_batch", worst >= -b.slack, worst)
    b.conclude_ge("gamma_Vn_M", min_gap(chain[n], M, plan.child("gamma")), gamma_bound)
    verdict = b.finish()
    return BallDistanceCertificate(vecs, deltas, Delta, gamma_bound, verdict)


def gap_finite_dimension_check(M: Subspace, Mp: Subspace, v: Sequence, vp: Sequence,
                               plan: Optional[SamplingPlan] = None) -> StabilityVerdict:
    """Dimension and gap conclusions for vectors v'_k close to a separated chain v_k.

    δ_k is the certified dist(v_k, M+V_{k-1}), Δ = ∏δ_k / (n ∏_{k≥2}(1+δ_k)) and
    δ = max ‖v_k − v'_k‖; the gate is δ < Δ − δ(M',M).
    """
    plan = plan or SamplingPlan()
    space = M.space
    vs = [space.coerce(x, "v") for x in v]
    vps = [space.coerce(x, "v'") for x in vp]
    if len(vs) != len(vps) or not vs:
        raise InputError("v and v' must be non-empty lists of equal length")
    n = len(vs)
    b = VerdictBuilder("gap-finite-dimension")
    chain = _chain(space, vs, M.rank_tol)
    deltas = []
    for k in range(1, n + 1):
        d = b.record(f"dist_v{k}", dist_to_subspace(vs[k - 1], subspace_sum(M, chain[k - 1])))
        deltas.append(min(d.lo, 1.0))
    if min(deltas) <= 0:
        b.fail("a chain vector lies in M + V_{k-1}")
        return b.finish()
    Delta = float(np.prod(deltas)) / (n * float(np.prod([1.0 + x for x in deltas[1:]])))
    b.record("Delta", point(Delta))
    delta = max(float(space.norm(a - c)) for a, c in zip(vs, vps))
    b.record("delta", point(delta))
    dMpM = b.record("delta_Mp_M", directed_gap(Mp, M, plan.child("MpM")))
    if not b.gate_lt("separation", Enclosure(delta + dMpM.lo, delta + dMpM.hi), Delta):
        return b.finish()
    Vn, Vp = chain[n], Subspace.span(space, np.stack(vps, axis=1), M.rank_tol)
    b.conclude("dim_V", Vn.dim == n, Vn.dim)
    b.conclude("dim_Vp", Vp.dim == n, Vp.dim)
    b.conclude("dim_MpVp_over_Mp", subspace_sum(Mp, Vp).dim - Mp.dim == n, subspace_sum(Mp, Vp).dim - Mp.dim)
    # denominator 1 + δ(M',M)(1+δ), not 1 + δ(M',M)
    g_bound = corner_range(lambda d: (Delta - delta - d) / (1.0 + d * (1.0 + delta)), d=dMpM)
    b.conclude_ge("gamma_Vp_Mp", min_gap(Vp, Mp, plan.child("gamma")), g_bound.lo)
    b.conclude_le("gap_hat_V_Vp", gap_hat(Vn, Vp, plan.child("hat")), delta / (Delta - delta))
    return b.finish()


@dataclass
class TransportResult:
    Vp: Subspace
    bound: float
    formula_bound: float
    delta_NNp: DistInterval
    eps: float
    chain_deltas: List[float]
    chain_gap: float
    gap_hat_V_Vp: Optional[DistInterval] = None

    def __iter__(self):
        yield self.Vp
        yield self.bound

    def to_dict(self) -> dict:
        return {
            "dim": self.Vp.dim,
            "bound": self.bound,
            "formula_bound": self.formula_bound,
            "delta_N_Np": self.delta_NNp.to_dict(),
            "eps": self.eps,
            "chain_deltas": list(self.chain_deltas),
            "chain_gap": self.chain_gap,
            "gap_hat_V_Vp": self.gap_hat_V_Vp.to_dict() if self.gap_hat_V_Vp else None,
        }


def separated_chain(V: Subspace, plan: Optional[SamplingPlan] = None):
    """Unit vectors v_1..v_n spanning V with dist(v_k, V_{k-1}) as large as found.

    For the Euclidean norm this is an orthonormal basis, so every distance is 1.
    """
    plan = plan or SamplingPlan()
    vecs, dists = [], []
    current = Subspace.zero(V.space, V.rank_tol)
    for k in range(V.dim):
        u, d = farthest_unit_vector(V, current, plan.child(f"chain{k}"))
        vecs.append(u)
        dists.append(d.lo)
        current = subspace_sum(current, Subspace.span(V.space, u, V.rank_tol))
    return vecs, dists


def transport_subspace(V: Subspace, N: Subspace, Np: Subspace,
                       plan: Optional[SamplingPlan] = None) -> TransportResult:
    """Carry V ⊆ N to an equidimensional V' ⊆ N' with certified δ̂(V,V') ≤ bound.

    Gate: δ(N,N') < 1/(2^{n-1} n). The returned bound comes from the chain
    actually built; `formula_bound` is the closed form 2^{n-1}n(δ+ε)/(1−2^{n-1}n(δ+ε)).
    """
    plan = plan or SamplingPlan()
    require_subset(V, N, "V ⊆ N")
    n = V.dim
    dNNp = directed_gap(N, Np, plan.child("NNp"))
    if n == 0:
        return TransportResult(Subspace.zero(V.space, V.rank_tol), 0.0, 0.0, dNNp, 0.0, [], 0.0)
    thr = 1.0 / (2 ** (n - 1) * n)
    if dNNp.hi >= thr:
        raise GateError("delta_N_Np", dNNp.hi, thr)
    eps = min(EPS_FACTOR * dNNp.hi, 0.5 * (thr - dNNp.hi))
    c = 2 ** (n - 1) * n * (dNNp.hi + eps)
    formula = c / (1.0 - c)

    vecs, dists = separated_chain(V, plan.child("chain"))
    images, moved = [], 0.0
    for v in vecs:
        w, d = nearest_point(v, Np)
        images.append(w)
        moved = max(moved, float(V.space.norm(v - w)))
    deltas = [min(d, 1.0) for d in dists]
    Delta = float(np.prod(deltas)) / (n * float(np.prod([1.0 + x for x in deltas[1:]])))
    if not moved < Delta:
        raise GateError("chain_separation", moved, Delta)
    Vp = Subspace.span(V.space, np.stack(images, axis=1), V.rank_tol)
    if Vp.dim != n:
        raise TheoremViolation(f"transported subspace has dimension {Vp.dim}, expected {n}")
    bound = moved / (Delta - moved)
    logger.debug("transport n=%d moved=%.3g Delta=%.3g bound=%.3g", n, moved, Delta, bound)
    res = TransportResult(Vp, bound, formula, dNNp, eps, deltas, moved)
    res.gap_hat_V_Vp = gap_hat(V, Vp, plan.child("hat"))
    if res.gap_hat_V_Vp.lo > bound + CONCLUSION_SLACK:
        raise TheoremViolation(
            f"transported subspace has gap {res.gap_hat_V_Vp.lo:.6g} from V, above the bound {bound:.6g}"
        )
    return res


@dataclass
class SplittingResult:
    V_k: Subspace
    U_nk: Subspace
    W_nk: Subspace
    k: int
    constants: Dict[str, object]
    checks: List[StabilityVerdict] = field(default_factory=list)
    label: str = "greedy"
    notes: List[str] = field(default_factory=list)

    @property
    def exit_code(self) -> int:
        from .verdict import combine_exit_codes

        return combine_exit_codes(self.checks)

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "label": self.label,
            "dims": {"V_k": self.V_k.dim, "U_nk": self.U_nk.dim, "W_nk": self.W_nk.dim},
            "constants": {k: (list(v) if isinstance(v, list) else v) for k, v in self.constants.items()},
            "checks": [c.to_dict() for c in self.checks],
            "notes": list(self.notes),
        }


def _span_add(A: Subspace, u: np.ndarray) -> Subspace:
    return subspace_sum(A, Subspace.span(A.space, u, A.rank_tol))


def split(L: Subspace, S: Subspace, N: Subspace, a: float = DEFAULT_SPLIT_A,
          plan: Optional[SamplingPlan] = None, strict: bool = False) -> SplittingResult:
    """Greedy construction of V_k, U_{n-k}, W_{n-k} for M = L ⊕ S against N.

    The construction always runs; each part's verdict records whether its
    hypotheses were certified. With `strict`, a failed gate raises GateError.
    """
    plan = plan or SamplingPlan()
    if not 0.0 < a < B_THRESHOLD:
        raise InputError(f"a must lie in (0, sqrt(2)-1), got {a}")
    if intersection(L, S).dim:
        raise DecompositionError("L and S intersect; M = L ⊕ S is not a direct sum")
    M = subspace_sum(L, S)
    n = S.dim
    space = M.space

    dNM = directed_gap(N, M, plan.child("NM"))
    dLN = directed_gap(L, N, plan.child("LN"))
    gLS = min_gap(L, S, plan.child("LS"))
    consts = splitting_constants(a, n, dNM.hi)
    consts["delta_N_M"] = dNM.to_dict()

    def delta_i(i):
        return corner_range(lambda d: delta_const(a, i, d), d=dNM)

    # part (a) gate
    ba = VerdictBuilder("split-a")
    ba.record("delta_N_M", dNM)
    ba.record("delta_L_N", dLN)
    ba.record("gamma_L_S", gLS)
    ba.record("delta_n_plus_1", delta_i(n + 1))
    gate_a = corner_range(lambda dn, dl, g: (1.0 + delta_const(a, n + 1, dn)) * (1.0 + dl / g),
                          dn=dNM, dl=dLN, g=gLS)
    ba.gate_lt("splitting_condition", gate_a, 2.0)

    # step 1: greedy extraction, at most n directions
    V = Subspace.zero(space, M.rank_tol)
    k = 0
    last = DistInterval(0.0, 0.0, "closed-form")
    notes = []
    for i in range(n + 1 if M.dim else 0):
        NV = subspace_sum(N, V)
        u, d = farthest_unit_vector(M, NV, plan.child(f"greedy{i}"))
        last = d
        if d.lo <= a:
            if not space.is_euclidean:
                notes.append(f"witness search exhausted at step {i + 1} (best certified distance {d.lo:.6g})")
            break
        if i == n:
            ba.conclude("k_le_n", False, {"k": n + 1})
            ba.witness("extra_direction", u)
            break
        V = _span_add(V, u)
        k += 1
    NV = subspace_sum(N, V)
    ba.conclude("dim_V_k", V.dim == k, V.dim)
    ba.conclude("N_cap_V_k", intersection(N, V).dim == 0, intersection(N, V).dim)
    gVN = min_gap(V, N, plan.child("gVN")) if k else DistInterval(1.0, 1.0, "closed-form")
    ba.conclude_ge("gamma_V_k_N", gVN, a_const(a, k))
    dM_NV = DistInterval(min(last.lo, 1.0), max(min(last.lo, 1.0), directed_gap(M, NV, plan.child("MNV")).hi), last.method)
    ba.conclude_le("delta_M_NV", dM_NV, a)
    dNV_M = directed_gap(NV, M, plan.child("NVM"))
    dk = delta_i(k)
    ba.conclude_le("delta_NV_M", dNV_M, dk.hi)
    verdict_a = ba.finish()
    checks = [verdict_a]

    # part (b)
    bb = VerdictBuilder("split-b")
    bb.gate_lt("splitting_condition", gate_a, 2.0)
    bb.gate_lt("delta_L_N_vs_a_k", dLN, a_const(a, k))
    bb.conclude("L_cap_V_k", intersection(L, V).dim == 0, intersection(L, V).dim)
    if k:
        g_bound = corner_range(lambda d: (a_const(a, k) - d) / (1.0 + d), d=dLN)
        bb.conclude_ge("gamma_V_k_L", min_gap(V, L, plan.child("gVL")), g_bound.lo)
    d_bound = corner_range(lambda d: a_const(a, k) * d / (a_const(a, k) - d) if d < a_const(a, k) else math.inf, d=dLN)
    bb.conclude_le("delta_LV_NV", directed_gap(subspace_sum(L, V), NV, plan.child("LVNV")), d_bound.hi)
    checks.append(bb.finish())

    # steps 3-4: U/W chains
    LV = subspace_sum(L, V)
    eps = EPS_FACTOR * dNV_M.hi
    delta_eps = dNV_M.hi + eps
    U = Subspace.zero(space, M.rank_tol)
    W = Subspace.zero(space, M.rank_tol)
    us, ws = [], []
    found_all = True
    for j in range(n - k):
        if NV.dim == 0:
            found_all = False
            break
        w, d = farthest_unit_vector(NV, subspace_sum(LV, U), plan.child(f"w{j}"))
        if d.lo <= B_THRESHOLD:
            found_all = False
            notes.append(f"no w_{j + 1} with certified distance > b found (best {d.lo:.6g})")
            break
        u, _ = nearest_point(w, M)
        us.append(u)
        ws.append(w)
        U = _span_add(U, u)
        W = _span_add(W, w)

    bc = VerdictBuilder("split-c")
    bc.gate_lt("splitting_condition", gate_a, 2.0)
    bc.gate_lt("delta_L_N_vs_a_k", dLN, a_const(a, k))
    ck = corner_range(lambda d: c_const(a, n, k, delta_const(a, k, d)), d=dNM)
    bc.gate_lt("c_k", ck, 1.0)
    bc.record("eps", point(eps))
    bc.record("delta_eps", point(delta_eps))
    if not found_all and not space.is_euclidean:
        bc.fail("w-chain witness search exhausted at budget; widen budget")
    bc.conclude("w_chain_complete", found_all, len(ws))
    bc.conclude("LV_cap_W", intersection(LV, W).dim == 0, intersection(LV, W).dim)
    LVU = subspace_sum(LV, U)
    bc.conclude("M_eq_L_V_U", found_all and LVU.dim == M.dim == L.dim + k + U.dim and is_subset(M, LVU),
                {"dim_L": L.dim, "k": k, "dim_U": U.dim, "dim_M": M.dim})
    bc.conclude("dim_U", U.dim == n - k, U.dim)
    if found_all:
        gU = min_gap(U, LV, plan.child("gU")) if n - k else DistInterval(1.0, 1.0, "closed-form")
        gb = corner_range(lambda d: gamma_U_bound(a, n, k, delta_const(a, k, d)), d=dNM)
        bc.conclude_ge("gamma_U_LV", gU, gb.lo)
        if n - k:
            bc.conclude_le("gap_hat_U_W", gap_hat(U, W, plan.child("UW")),
                           ck.hi / (1.0 - ck.hi) if ck.hi < 1.0 else math.inf)
    checks.append(bc.finish())

    # intermediate bounds of the chain, kept apart from the displayed conclusions
    bi = VerdictBuilder("split-c-intermediate")
    bi.record("delta_eps", point(delta_eps))
    for j, (u, w) in enumerate(zip(us, ws), 1):
        bi.conclude_le(f"u{j}_minus_w{j}", float(space.norm(u - w)), delta_eps)
        bi.conclude_ge(f"dist_u{j}_LV", dist_to_subspace(u, LV), max(B_THRESHOLD - delta_eps, 0.0))
    if not us:
        bi.note("no U/W chain was built")
    checks.append(bi.finish())

    if strict:
        for c in checks:
            if not c.hypothesis_ok:
                raise GateError(c.name, math.nan, math.nan, f"{c.name}: " + "; ".join(c.notes))
    consts["eps"] = eps
    consts["delta_eps"] = delta_eps
    label = "greedy, stop certified" if space.is_euclidean else "greedy"
    return SplittingResult(V, U, W, k, consts, checks, label, notes)

"""Gap, minimum gap and Hausdorff distance between subspaces.

- δ(M,N) = sup over unit u in M of dist(u, N); δ̂ = max of both directions
- γ(M,N) = inf over u in M outside N of dist(u, N) / dist(u, M∩N)
- d̂(M,N) = Hausdorff distance of the unit spheres

For the Euclidean norm everything is exact through singular values. For
other norms, lower bounds of δ come from sampled unit vectors (each one
certified by a dual vector) and upper bounds from the exact ℓ² value moved
through the norm-equivalence constant.
"""
import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np
from scipy import linalg, stats
from scipy.stats import qmc

from .config import DEFAULT_BUDGET, DEFAULT_REFINE_STEPS, DEFAULT_SEED, SamplingPlan
from .errors import InputError, ShapeError
from .normed import (
    DistInterval,
    NormedSpace,
    Subspace,
    complement,
    interval_max,
    interval_min,
    intersection,
    is_subset,
    lp_norm,
    operator_norm,
    solve_distance,
)
from .verdict import StabilityVerdict, VerdictBuilder, corner_range

logger = logging.getLogger(__name__)

# candidates kept for local refinement
REFINE_POOL = 5


@dataclass
class GapReport:
    delta_MN: DistInterval
    delta_NM: DistInterval
    delta_hat: DistInterval
    gamma_MN: DistInterval
    gamma_NM: DistInterval
    gamma_hat: DistInterval
    hausdorff: Optional[DistInterval] = None
    samples_used: int = 0
    seed: int = DEFAULT_SEED
    budget: int = DEFAULT_BUDGET
    refine_steps: int = DEFAULT_REFINE_STEPS

    def to_dict(self) -> dict:
        out = {
            "delta_MN": self.delta_MN.to_dict(),
            "delta_NM": self.delta_NM.to_dict(),
            "delta_hat": self.delta_hat.to_dict(),
            "gamma_MN": self.gamma_MN.to_dict(),
            "gamma_NM": self.gamma_NM.to_dict(),
            "gamma_hat": self.gamma_hat.to_dict(),
            "samples_used": self.samples_used,
            "seed": self.seed,
            "budget": self.budget,
            "refine_steps": self.refine_steps,
        }
        if self.hausdorff is not None:
            out["hausdorff"] = self.hausdorff.to_dict()
        return out


def _same_space(M: Subspace, N: Subspace):
    if M.space != N.space:
        raise ShapeError("subspaces live in different ambient spaces")


def _unweighted(sub: Subspace) -> Subspace:
    """The subspace D·sub inside the unweighted space of the same exponent."""
    sp = sub.space
    flat = NormedSpace(sp.dim, sp.field, sp.p)
    if sp.weights is None:
        return Subspace(flat, sub.basis, sub.rank_tol)
    return Subspace(flat, sub.scaled_basis(), sub.rank_tol)


def _residual_svd(QM: np.ndarray, QN: np.ndarray):
    R = QM - QN @ (QN.conj().T @ QM)
    return linalg.svd(R, full_matrices=False)


def _l2_gap(QM: np.ndarray, QN: np.ndarray) -> float:
    if QM.shape[1] == 0:
        return 0.0
    if QN.shape[1] == 0:
        return 1.0
    _, s, _ = _residual_svd(QM, QN)
    return float(min(s[0], 1.0))


def gap_l2_exact(M: Subspace, N: Subspace) -> float:
    """Largest singular value of (I − P_N)Q_M in raw Euclidean coordinates."""
    _same_space(M, N)
    return _l2_gap(M.basis, N.basis)


def _l2_min_gap(M: Subspace, N: Subspace) -> float:
    if is_subset(M, N):
        return 1.0
    L = intersection(M, N)
    Mp = complement(L, within=M)
    _, s, _ = _residual_svd(Mp.basis, N.basis)
    return float(min(s[-1], 1.0))


def _unit(u: np.ndarray, p: float) -> np.ndarray:
    n = lp_norm(u, p)
    return u / n if n > 0 else u


def _random_coeffs(rng, k: int, count: int, is_complex: bool) -> np.ndarray:
    g = rng.standard_normal((count, k))
    if is_complex:
        g = g + 1j * rng.standard_normal((count, k))
    return g


def _sobol_coeffs(rng, k: int, count: int, is_complex: bool) -> np.ndarray:
    """Scrambled Sobol points pushed through the normal quantile, so that
    their directions cover the coefficient sphere evenly."""
    d = 2 * k if is_complex else k
    if d == 0 or count <= 0:
        return np.zeros((max(count, 0), k), dtype=complex if is_complex else float)
    engine = qmc.Sobol(d=d, scramble=True, seed=rng)
    pts = engine.random_base2(max(int(math.ceil(math.log2(count))), 0))[:count]
    g = stats.norm.ppf(np.clip(pts, 1e-12, 1.0 - 1e-12))
    if is_complex:
        return g[:, :k] + 1j * g[:, k:]
    return g


class _Sampler:
    """Shared bookkeeping for the sphere samplers of one subspace pair."""

    def __init__(self, Mu: Subspace, Nu: Subspace, plan: SamplingPlan):
        self.M = Mu
        self.N = Nu
        self.p = Mu.space.p
        self.is_complex = Mu.space.is_complex
        self.plan = plan
        self.rng = plan.rng()
        self.used = 0

    def dist(self, u: np.ndarray, Q: np.ndarray):
        self.used += 1
        return solve_distance(u, Q, self.p, self.is_complex, self.M.rank_tol)

    def seeds(self, directions: np.ndarray) -> List[np.ndarray]:
        """Deterministic coefficient seeds followed by a low-discrepancy budget."""
        QM = self.M.basis
        k = QM.shape[1]
        out = [directions[:, j] for j in range(directions.shape[1])]
        out.extend(QM.conj().T[:, i] for i in range(QM.shape[0]) if np.any(np.abs(QM[i]) > 1e-12))
        out.extend(_sobol_coeffs(self.rng, k, self.plan.budget, self.is_complex))
        return out


def _delta_sampled(Mu: Subspace, Nu: Subspace, plan: SamplingPlan) -> Tuple[float, np.ndarray, int]:
    """Best certified lower bound of δ(M,N) over sampled and refined unit vectors.

    Returns the bound, the coefficient vector attaining it and the samples used.
    """
    s = _Sampler(Mu, Nu, plan)
    QM, QN = Mu.basis, Nu.basis
    _, _, Vh = _residual_svd(QM, QN)
    scored = []
    for idx, c in enumerate(s.seeds(Vh.conj().T)):
        u = _unit(QM @ c, s.p)
        sol = s.dist(u, QN)
        scored.append((-sol.lo, idx, c, sol))
    scored.sort(key=lambda t: (t[0], t[1]))
    best, best_c = -scored[0][0], scored[0][2]
    for _, _, c, sol in scored[:REFINE_POOL]:
        step = 0.5
        cur, cur_sol = c / (np.linalg.norm(c) or 1.0), sol
        for _ in range(plan.refine_steps):
            y = cur_sol.dual
            u = _unit(QM @ cur, s.p)
            pair = np.vdot(y, u)
            g = QM.conj().T @ y
            if pair != 0:
                g = g * (pair / abs(pair))
            if not s.is_complex:
                g = g.real
            gn = np.linalg.norm(g)
            if gn == 0:
                break
            trial = cur + step * g / gn
            trial = trial / np.linalg.norm(trial)
            tsol = s.dist(_unit(QM @ trial, s.p), QN)
            if tsol.lo > cur_sol.lo:
                cur, cur_sol = trial, tsol
            else:
                step *= 0.5
        if cur_sol.lo > best:
            best, best_c = cur_sol.lo, cur
    return best, best_c, s.used


def _gamma_sampled(Mu: Subspace, Nu: Subspace, plan: SamplingPlan) -> Tuple[float, int]:
    """Smallest sampled ratio dist(u,N).hi / dist(u,M∩N).lo, an upper bound of γ(M,N)."""
    L = intersection(Mu, Nu)
    Mp = complement(L, within=Mu)
    s = _Sampler(Mp, Nu, plan)
    QL, QN, QP = L.basis, Nu.basis, Mp.basis
    _, _, Vh = _residual_svd(QP, QN)

    def ratio(c):
        u = _unit(QP @ c, s.p)
        num = s.dist(u, QN).hi
        den = s.dist(u, QL).lo if QL.shape[1] else float(lp_norm(u, s.p))
        return num / den if den > 0 else math.inf

    directions = Vh.conj().T[:, ::-1]
    scored = sorted(((ratio(c), i, c) for i, c in enumerate(s.seeds(directions))), key=lambda t: (t[0], t[1]))
    best = scored[0][0]
    for val, _, c in scored[:REFINE_POOL]:
        step = 0.25
        cur = c / (np.linalg.norm(c) or 1.0)
        for _ in range(plan.refine_steps):
            xi = _random_coeffs(s.rng, cur.shape[0], 1, s.is_complex)[0]
            trial = cur + step * xi / np.linalg.norm(xi)
            trial = trial / np.linalg.norm(trial)
            tv = ratio(trial)
            if tv < val:
                cur, val = trial, tv
            else:
                step *= 0.5
        best = min(best, val)
    return best, s.used


def _delta(M: Subspace, N: Subspace, plan: SamplingPlan) -> Tuple[DistInterval, int]:
    if M.dim == 0:
        return DistInterval(0.0, 0.0, "closed-form"), 0
    if N.dim == 0:
        return DistInterval(1.0, 1.0, "closed-form"), 0
    Mu, Nu = _unweighted(M), _unweighted(N)
    if Mu.space.is_euclidean:
        return DistInterval.exact(_l2_gap(Mu.basis, Nu.basis)).clip(1.0), 0
    kappa = Mu.space.kappa
    d2 = _l2_gap(Mu.basis, Nu.basis)
    lo, hi = d2 / kappa, min(1.0, kappa * d2)
    if is_subset(M, N):
        return DistInterval(0.0, hi, "sampled"), 0
    if M.dim == 1:
        u = _unit(Mu.basis[:, 0], Mu.space.p)
        sol = solve_distance(u, Nu.basis, Mu.space.p, Mu.space.is_complex, M.rank_tol)
        return DistInterval(max(lo, sol.lo), max(min(hi, sol.hi), max(lo, sol.lo)), sol.method), 1
    best, _, used = _delta_sampled(Mu, Nu, plan)
    lo = max(lo, best)
    return DistInterval(lo, max(hi, lo), "sampled"), used


def _gamma(M: Subspace, N: Subspace, plan: SamplingPlan) -> Tuple[DistInterval, int]:
    if is_subset(M, N):
        return DistInterval(1.0, 1.0, "closed-form"), 0
    Mu, Nu = _unweighted(M), _unweighted(N)
    g2 = _l2_min_gap(Mu, Nu)
    if Mu.space.is_euclidean:
        return DistInterval.exact(g2).clip(1.0), 0
    lo = g2 / Mu.space.kappa
    best, used = _gamma_sampled(Mu, Nu, plan)
    hi = min(1.0, best)
    return DistInterval(min(lo, hi), hi, "sampled"), used


def farthest_unit_vector(M: Subspace, N: Subspace, plan: Optional[SamplingPlan] = None):
    """Unit vector u of M with the best certified lower bound on dist(u, N).

    Exact for the Euclidean norm (top singular direction). Returns (u, interval)
    with u in raw coordinates.
    """
    _same_space(M, N)
    if M.dim == 0:
        raise InputError("the zero subspace has no unit vectors")
    plan = plan or SamplingPlan()
    Mu, Nu = _unweighted(M), _unweighted(N)
    p = Mu.space.p
    if Mu.space.is_euclidean or Nu.dim == 0:
        _, _, Vh = _residual_svd(Mu.basis, Nu.basis)
        c = Vh[0].conj()
    else:
        _, c, _ = _delta_sampled(Mu, Nu, plan)
    us = _unit(Mu.basis @ c, p)
    sol = solve_distance(us, Nu.basis, p, Mu.space.is_complex, M.rank_tol)
    return us / M.space.scale, sol.interval()


def directed_gap(M: Subspace, N: Subspace, plan: Optional[SamplingPlan] = None) -> DistInterval:
    """Certified enclosure of δ(M,N)."""
    _same_space(M, N)
    return _delta(M, N, plan or SamplingPlan())[0]


def gap_hat(M: Subspace, N: Subspace, plan: Optional[SamplingPlan] = None) -> DistInterval:
    plan = plan or SamplingPlan()
    return interval_max(directed_gap(M, N, plan.child("MN")), directed_gap(N, M, plan.child("NM")))


def min_gap(M: Subspace, N: Subspace, plan: Optional[SamplingPlan] = None) -> DistInterval:
    """Certified enclosure of γ(M,N); equals 1 when M ⊆ N."""
    _same_space(M, N)
    return _gamma(M, N, plan or SamplingPlan())[0]


def hausdorff_distance(M: Subspace, N: Subspace, plan: Optional[SamplingPlan] = None) -> DistInterval:
    _same_space(M, N)
    if M.dim == 0 and N.dim == 0:
        return DistInterval(0.0, 0.0, "closed-form")
    if M.dim == 0 or N.dim == 0:
        return DistInterval(2.0, 2.0, "closed-form")
    Mu, Nu = _unweighted(M), _unweighted(N)
    if Mu.space.is_euclidean:
        def smin(A, B):
            if A.shape[1] > B.shape[1]:
                return 0.0
            return float(linalg.svd(B.conj().T @ A, compute_uv=False)[-1])

        s = min(smin(Mu.basis, Nu.basis), smin(Nu.basis, Mu.basis))
        return DistInterval.exact(math.sqrt(max(0.0, 2.0 - 2.0 * min(s, 1.0)))).clip(2.0)
    dh = gap_hat(M, N, plan)
    return DistInterval(dh.lo, max(dh.lo, min(2.0, 2.0 * dh.hi)), "sampled")


def gap_report(M: Subspace, N: Subspace, budget: int = DEFAULT_BUDGET, seed: int = DEFAULT_SEED,
               refine_steps: int = DEFAULT_REFINE_STEPS, hausdorff: bool = False) -> GapReport:
    """All gap quantities of the pair (M, N) with certified enclosures."""
    _same_space(M, N)
    plan = SamplingPlan(budget=budget, refine_steps=refine_steps, seed=seed)
    dMN, u1 = _delta(M, N, plan.child("delta_MN"))
    dNM, u2 = _delta(N, M, plan.child("delta_NM"))
    gMN, u3 = _gamma(M, N, plan.child("gamma_MN"))
    gNM, u4 = _gamma(N, M, plan.child("gamma_NM"))
    report = GapReport(
        delta_MN=dMN,
        delta_NM=dNM,
        delta_hat=interval_max(dMN, dNM),
        gamma_MN=gMN,
        gamma_NM=gNM,
        gamma_hat=interval_min(gMN, gNM),
        samples_used=u1 + u2 + u3 + u4,
        seed=seed,
        budget=budget,
        refine_steps=refine_steps,
    )
    if hausdorff:
        report.hausdorff = hausdorff_distance(M, N, plan.child("hausdorff"))
    logger.debug("gap report dim %d/%d: delta_hat=[%.3g, %.3g]", M.dim, N.dim, report.delta_hat.lo, report.delta_hat.hi)
    return report


def check_delta_triangle(M: Subspace, N: Subspace, L: Subspace,
                         plan: Optional[SamplingPlan] = None) -> StabilityVerdict:
    """1 + δ(M,L) ≤ (1 + δ(M,N))(1 + δ(N,L)), with the left side taken low."""
    plan = plan or SamplingPlan()
    b = VerdictBuilder("delta-triangle")
    dML = b.record("delta_ML", directed_gap(M, L, plan.child("ML")))
    dMN = b.record("delta_MN", directed_gap(M, N, plan.child("MN")))
    dNL = b.record("delta_NL", directed_gap(N, L, plan.child("NL")))
    b.conclude_le("one_plus_delta_ML", 1.0 + dML.lo, (1.0 + dMN.hi) * (1.0 + dNL.hi))
    return b.finish()


def check_invertible_distortion(M: Subspace, N: Subspace, A, plan: Optional[SamplingPlan] = None) -> StabilityVerdict:
    """δ(AM,AN)/(‖A‖‖A⁻¹‖) ≤ δ(M,N) ≤ ‖A‖‖A⁻¹‖ δ(AM,AN)."""
    plan = plan or SamplingPlan()
    A = np.asarray(A)
    b = VerdictBuilder("invertible-distortion")
    smin = linalg.svd(A, compute_uv=False)[-1] if A.size else 0.0
    if not b.require("A_invertible", smin > M.rank_tol * max(1.0, float(np.abs(A).max(initial=0.0)))):
        return b.finish()
    nA = b.record("norm_A", operator_norm(A, M.space))
    nAi = b.record("norm_A_inv", operator_norm(linalg.inv(A), M.space))
    cond = corner_range(lambda a, ai: a * ai, a=nA, ai=nAi)
    b.record("cond", cond)
    dMN = b.record("delta_MN", directed_gap(M, N, plan.child("MN")))
    dA = b.record("delta_AM_AN", directed_gap(M.image(A), N.image(A), plan.child("AMAN")))
    b.conclude_le("lower", dA.lo / cond.hi, dMN.hi + b.slack)
    b.conclude_le("upper", dMN.lo, cond.hi * dA.hi + b.slack)
    return b.finish()


def check_small_perturbation(M: Subspace, A, plan: Optional[SamplingPlan] = None) -> StabilityVerdict:
    """For ‖A‖ < 1: δ(M,(I+A)M) ≤ ‖A‖ and δ((I+A)M,M) ≤ ‖A‖/(1−‖A‖)."""
    plan = plan or SamplingPlan()
    A = np.asarray(A)
    b = VerdictBuilder("small-perturbation")
    nA = operator_norm(A, M.space)
    if not b.gate_lt("norm_A", nA, 1.0):
        return b.finish()
    image = M.image(np.eye(M.space.dim) + A)
    d1 = b.record("delta_M_IAM", directed_gap(M, image, plan.child("fwd")))
    d2 = b.record("delta_IAM_M", directed_gap(image, M, plan.child("bwd")))
    b.conclude_le("forward", d1, nA.hi)
    b.conclude_le("backward", d2, nA.hi / (1.0 - nA.hi))
    return b.finish()


__all__ = [
    "GapReport",
    "gap_report",
    "gap_l2_exact",
    "directed_gap",
    "gap_hat",
    "min_gap",
    "hausdorff_distance",
    "check_delta_triangle",
    "check_invertible_distortion",
    "check_small_perturbation",
    "farthest_unit_vector",
]

"""Relative dimensions under finite-rank perturbations.

N is a right semi-compact perturbation of M when (I+K)M ⊆ N for some
compact K; the relative dimension [M−N] is the index of I+K: M → N.
Compact operators are modelled by matrices, so [M−N] = dim M − dim N and
every report cross-checks that identity.
"""
import logging
import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy import linalg

from .config import SamplingPlan
from .errors import ContainmentError, DecompositionError, InputError, ShapeError
from .metrics import directed_gap, min_gap
from .normed import (
    DistInterval,
    NormedSpace,
    Subspace,
    complement,
    departing_direction,
    intersection,
    is_subset,
    operator_norm,
    subspace_sum,
)
from .verdict import Enclosure, StabilityVerdict, VerdictBuilder, corner_range

logger = logging.getLogger(__name__)

RELDIM_VARIANTS = ("1.4c", "1.4d", "1.4e")


@dataclass
class PerturbationOperator:
    K: np.ndarray
    norm_K: DistInterval
    invertible_IplusK: bool
    cond_a: Optional[Enclosure] = None

    @classmethod
    def from_matrix(cls, K, space: NormedSpace, rank_tol: float = 1e-9) -> "PerturbationOperator":
        K = np.asarray(K)
        if K.shape != (space.dim, space.dim):
            raise ShapeError(f"perturbation of shape {K.shape} on a space of dimension {space.dim}")
        if not np.all(np.isfinite(K)):
            raise InputError("perturbation has non-finite entries")
        K = K.astype(space.dtype)
        T = np.eye(space.dim, dtype=space.dtype) + K
        s = linalg.svd(T, compute_uv=False)
        invertible = bool(s[-1] > rank_tol * max(1.0, s[0]))
        cond = None
        if invertible:
            nT = operator_norm(T, space)
            nTi = operator_norm(linalg.inv(T), space)
            cond = corner_range(lambda x, y: max(1.0, x * y), x=nT, y=nTi)
        return cls(K, operator_norm(K, space), invertible, cond)

    @property
    def identity_plus(self) -> np.ndarray:
        return np.eye(self.K.shape[0], dtype=self.K.dtype) + self.K

    def to_dict(self) -> dict:
        return {
            "norm_K": self.norm_K.to_dict(),
            "invertible_IplusK": self.invertible_IplusK,
            "cond_a": self.cond_a.to_dict() if self.cond_a else None,
        }


@dataclass
class RelDimReport:
    value: int
    kernel_dim: int
    cokernel_dim: int
    K_used: PerturbationOperator

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "kernel_dim": self.kernel_dim,
            "cokernel_dim": self.cokernel_dim,
            "K_used": self.K_used.to_dict(),
        }


def _as_perturbation(K, space: NormedSpace) -> PerturbationOperator:
    if isinstance(K, PerturbationOperator):
        return K
    return PerturbationOperator.from_matrix(K, space)


def _require_maps_into(M: Subspace, N: Subspace, T: np.ndarray, what: str):
    image = M.image(T)
    if not is_subset(image, N):
        raise ContainmentError(f"{what}: (I+K)M ⊄ N", departing_direction(image, N))
    return image


def relative_dim(M: Subspace, N: Subspace, K) -> RelDimReport:
    """[M−N] as the index of I+K: M → N."""
    K = _as_perturbation(K, M.space)
    image = _require_maps_into(M, N, K.identity_plus, "relative dimension")
    kernel = M.dim - image.dim
    cokernel = N.dim - image.dim
    report = RelDimReport(kernel - cokernel, kernel, cokernel, K)
    if report.value != M.dim - N.dim:
        logger.error("relative dimension %d disagrees with dim M - dim N = %d", report.value, M.dim - N.dim)
    return report


def semi_compact_witness(M: Subspace, N: Subspace) -> PerturbationOperator:
    """K = P_N − I, so that (I+K)M = P_N M ⊆ N."""
    K = N.projector() - np.eye(M.space.dim, dtype=M.space.dtype)
    return PerturbationOperator.from_matrix(K, M.space, M.rank_tol)


def finite_change_dim(lam: Subspace, mu: Subspace) -> int:
    """dim λ/(λ∩μ) − dim μ/(λ∩μ)."""
    cap = intersection(lam, mu).dim
    return (lam.dim - cap) - (mu.dim - cap)


def additivity_check(alpha: Subspace, beta: Subspace, gamma: Subspace, K, L) -> StabilityVerdict:
    """[α−γ] = [α−β] + [β−γ] with the composite perturbation (I+L)(I+K) − I."""
    space = alpha.space
    K = _as_perturbation(K, space)
    L = _as_perturbation(L, space)
    ab = relative_dim(alpha, beta, K)
    bc = relative_dim(beta, gamma, L)
    composite = L.identity_plus @ K.identity_plus - np.eye(space.dim, dtype=space.dtype)
    ac = relative_dim(alpha, gamma, PerturbationOperator.from_matrix(composite, space, alpha.rank_tol))
    b = VerdictBuilder("reldim-additivity")
    b.conclude("additivity", ac.value == ab.value + bc.value,
               {"alpha_gamma": ac.value, "alpha_beta": ab.value, "beta_gamma": bc.value})
    return b.finish()


def antisymmetry_check(lam: Subspace, mu: Subspace, K=None, L=None) -> StabilityVerdict:
    """[λ−μ] = −[μ−λ] when both orientations are semi-compact perturbations."""
    K = semi_compact_witness(lam, mu) if K is None else K
    L = semi_compact_witness(mu, lam) if L is None else L
    fwd = relative_dim(lam, mu, K)
    bwd = relative_dim(mu, lam, L)
    b = VerdictBuilder("reldim-antisymmetry")
    b.conclude("antisymmetry", fwd.value == -bwd.value, {"lam_mu": fwd.value, "mu_lam": bwd.value})
    b.conclude("finite_change", finite_change_dim(lam, mu) == fwd.value, finite_change_dim(lam, mu))
    return b.finish()


def special_case_check(M: Subspace, N: Subspace, K=None, plan: Optional[SamplingPlan] = None) -> StabilityVerdict:
    """δ(M,N) < 1 gives [M−N] ≤ 0."""
    plan = plan or SamplingPlan()
    K = semi_compact_witness(M, N) if K is None else K
    b = VerdictBuilder("reldim-special-case")
    b.gate_lt("delta_M_N", directed_gap(M, N, plan), 1.0)
    b.conclude_le("reldim_le_zero", relative_dim(M, N, K).value, 0)
    return b.finish()


def graph_operator(alpha: Subspace, beta: Subspace, gamma: Subspace) -> Tuple[np.ndarray, bool]:
    """A: α → β with γ = {a + Aa : a ∈ α}, for α ⊕ β = β ⊕ γ = X.

    A is returned as a dim×dim matrix vanishing on the Euclidean complement
    of α, together with whether I + A maps α isomorphically onto γ.
    """
    d = alpha.space.dim
    for name, P, Q in (("alpha + beta", alpha, beta), ("beta + gamma", beta, gamma)):
        if intersection(P, Q).dim or P.dim + Q.dim != d:
            raise DecompositionError(f"{name} is not a direct sum decomposition of X")
    if alpha.dim == 0:
        return np.zeros((d, d), dtype=alpha.space.dtype), True
    stacked = np.concatenate([alpha.basis, beta.basis], axis=1)
    coef = linalg.solve(stacked, gamma.basis)
    ca, cb = coef[: alpha.dim], coef[alpha.dim:]
    A = beta.basis @ cb @ linalg.inv(ca) @ alpha.basis.conj().T
    graph = Subspace.span(alpha.space, alpha.basis + A @ alpha.basis, alpha.rank_tol)
    if not (is_subset(graph, gamma) and is_subset(gamma, graph)):
        raise DecompositionError("gamma is not the graph of the computed operator")
    iso = graph.dim == alpha.dim and relative_dim(alpha, gamma, PerturbationOperator.from_matrix(A, alpha.space)).value == 0
    return A, bool(iso)


def normalize_perturbation(M: Subspace, N: Subspace, K) -> Tuple[Subspace, Subspace, PerturbationOperator]:
    """Split off the kernel of I+K on M and return an invertible I+K₁.

    With Z = ker(I+K) ∩ M and M₁ its complement in M, I+K₁ agrees with I+K on
    M₁ and maps Z together with a complement of M onto a complement of
    N₁ = (I+K)M₁. So (I+K₁)M₁ = N₁ ⊆ N and dim M/M₁ = dim Z.
    """
    space = M.space
    K = _as_perturbation(K, space)
    T = K.identity_plus
    _require_maps_into(M, N, T, "normalize")
    if K.invertible_IplusK:
        return M, M.image(T), K
    null = linalg.null_space(T @ M.basis, rcond=M.rank_tol) if M.dim else np.zeros((0, 0))
    Z = Subspace.span(space, M.basis @ null if null.size else [], M.rank_tol)
    M1 = complement(Z, M)
    N1 = M1.image(T)
    rest = complement(M)
    domain = np.concatenate([M1.basis, Z.basis, rest.basis], axis=1)
    target = np.concatenate([T @ M1.basis, complement(N1).basis], axis=1)
    T1 = target @ linalg.inv(domain)
    K1 = PerturbationOperator.from_matrix(T1 - np.eye(space.dim, dtype=space.dtype), space, M.rank_tol)
    if not K1.invertible_IplusK:
        raise DecompositionError("normalised I+K is not invertible at tolerance")
    logger.debug("normalize: dim M=%d, kernel=%d, dim N1=%d", M.dim, Z.dim, N1.dim)
    return M1, N1, K1


def small_restriction(K, eps: float, space: Optional[NormedSpace] = None) -> Tuple[Subspace, int]:
    """Subspace C of finite codimension with ‖K|_C‖ < eps.

    The top singular directions of K (in scaled coordinates) are removed;
    the threshold accounts for the ℓᵖ/ℓ² equivalence constants.
    """
    if isinstance(K, PerturbationOperator):
        K = K.K
    K = np.asarray(K)
    space = space or NormedSpace(K.shape[0])
    if eps <= 0:
        raise InputError("eps must be positive")
    d = space.scale
    Ks = (d[:, None] * K) / d[None, :]
    _, s, Vh = linalg.svd(Ks)
    thr = eps / (space.up_from_l2 * space.up_to_l2)
    keep = s < thr
    codim = int(np.sum(~keep))
    C_scaled = Vh[codim:].conj().T
    C = Subspace.span(space, C_scaled / d[:, None] if C_scaled.size else [], 1e-12)
    return C, codim


def _reldim_triple(M, N, K1):
    TM = M.image(K1.identity_plus)
    C = intersection(TM, N)
    return TM, complement(C, N), complement(C, TM)


def parse_reldim_variant(variant: str) -> Tuple[str, Optional[int]]:
    text = str(variant).strip()
    name, _, rest = text.partition("(")
    if name not in RELDIM_VARIANTS:
        raise InputError(f"unknown variant {variant!r}; choose from {', '.join(RELDIM_VARIANTS)}")
    if rest:
        try:
            return name, int(rest.rstrip(") "))
        except ValueError:
            raise InputError(f"bad variant parameter in {variant!r}")
    return name, None


def verify_reldim_stability(M: Subspace, N: Subspace, Mp: Subspace, Np: Subspace, K1=None,
                            U: Optional[Subspace] = None, V: Optional[Subspace] = None,
                            variant: str = "1.4e", plan: Optional[SamplingPlan] = None) -> StabilityVerdict:
    """Gate on θ₁/η₁ (and θ₂/η₂) and compare [M'−N'] with [M−N].

    K1 defaults to P_N − I normalised to an invertible operator. U and V
    default to complements of (I+K₁)M ∩ N inside N and (I+K₁)M.
    """
    plan = plan or SamplingPlan()
    name, m = parse_reldim_variant(variant)
    space = M.space
    if K1 is None:
        K1 = semi_compact_witness(M, N)
    K1 = _as_perturbation(K1, space)
    base = relative_dim(M, N, K1)
    if not K1.invertible_IplusK:
        _, _, K1 = normalize_perturbation(M, N, K1)
    TM, U0, V0 = _reldim_triple(M, N, K1)
    U = U0 if U is None else U
    V = V0 if V is None else V

    label = f"{name}({m})" if m is not None else name
    b = VerdictBuilder(f"reldim-{label}")
    b.require("U_subset_N", is_subset(U, N))
    b.require("V_subset_TM", is_subset(V, TM))
    lhs, rhs = subspace_sum(TM, U), subspace_sum(N, V)
    b.require("same_space_decomposition",
              is_subset(lhs, rhs) and is_subset(rhs, lhs) and intersection(TM, U).dim == 0 and intersection(N, V).dim == 0)
    b.verdict.conclusion_values["dims"] = {"U": U.dim, "V": V.dim}
    if m is not None:
        b.note("the [M−N] = −∞ branch cannot occur for matrices; m is recorded only")
    a = b.record("a", K1.cond_a)

    def one_or(x, y, tag):
        if x.dim == 0 or y.dim == 0:
            return DistInterval(1.0, 1.0, "closed-form")
        return min_gap(x, y, plan.child(tag))

    etas = []
    if name in ("1.4c", "1.4e"):
        g = b.record("gamma_U_TM", one_or(U, TM, "gU"))
        d = b.record("delta_Mp_M", directed_gap(Mp, M, plan.child("MpM")))
        b.gate_lt("a_delta_Mp_M_minus_gamma", corner_range(lambda a_, d_, g_: a_ * d_ - g_, a_=a, d_=d, g_=g), 0.0)
        theta1 = corner_range(lambda a_, d_, g_: a_ * (1 + g_) * d_ / (g_ - a_ * d_) if g_ > a_ * d_ else math.inf,
                              a_=a, d_=d, g_=g)
        b.record("theta_1", theta1)
        dN = b.record("delta_N_Np", directed_gap(N, Np, plan.child("NNp")))
        gNV = b.record("gamma_N_V", one_or(N, V, "gNV"))
        eta1 = corner_range(lambda x, y, t: (1 + x / y) * (1 + t), x=dN, y=gNV, t=theta1)
        b.gate_lt("eta_1", eta1, 2.0)
        etas.append(eta1)
    if name in ("1.4d", "1.4e"):
        gM = b.record("gamma_U_TM", one_or(U, TM, "gU"))
        TN = N.image(K1.identity_plus)
        g2 = b.record("gamma_U_TN", one_or(U, TN, "gUN"))
        d2 = b.record("delta_Np_N", directed_gap(Np, N, plan.child("NpN")))
        b.gate_lt("a_delta_Np_N_minus_gamma", corner_range(lambda a_, d_, g_: a_ * d_ - g_, a_=a, d_=d2, g_=gM), 0.0)
        b.gate_lt("theta_2_denominator", corner_range(lambda a_, d_, g_: a_ * d_ - g_, a_=a, d_=d2, g_=g2), 0.0)
        theta2 = corner_range(lambda a_, d_, g_: a_ * (1 + g_) * d_ / (g_ - a_ * d_) if g_ > a_ * d_ else math.inf,
                              a_=a, d_=d2, g_=g2)
        b.record("theta_2", theta2)
        dM = b.record("delta_M_Mp", directed_gap(M, Mp, plan.child("MMp")))
        gMV = b.record("gamma_M_V", one_or(M, V, "gMV"))
        eta2 = corner_range(lambda x, y, t: (1 + x / y) * (1 + t), x=dM, y=gMV, t=theta2)
        b.gate_lt("eta_2", eta2, 2.0)
        etas.append(eta2)

    if b.gates_ok and etas:
        worst = max(e.hi for e in etas)
        _, codim = small_restriction(K1, (2.0 - worst) / 2.0, space)
        b.verdict.conclusion_values["small_restriction_codim"] = codim

    after = relative_dim(Mp, Np, semi_compact_witness(Mp, Np))
    b.verdict.conclusion_values["reldim"] = {"M_N": base.value, "Mp_Np": after.value}
    if name == "1.4c":
        b.conclude_le("reldim_le", after.value, base.value)
    elif name == "1.4d":
        b.conclude_ge("reldim_ge", after.value, base.value)
    else:
        b.conclude("reldim_eq", after.value == base.value, after.value)
    return b.finish()


__all__ = [
    "PerturbationOperator",
    "RelDimReport",
    "RELDIM_VARIANTS",
    "relative_dim",
    "semi_compact_witness",
    "finite_change_dim",
    "additivity_check",
    "antisymmetry_check",
    "special_case_check",
    "graph_operator",
    "normalize_perturbation",
    "small_restriction",
    "verify_reldim_stability",
]

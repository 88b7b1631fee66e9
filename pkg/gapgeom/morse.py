"""Bounded symmetric forms on subspaces and their Morse indices.

A SymmetricPair stores Q on V through its Gram matrix in V's orthonormal
basis b_1..b_k: Q(x, y) = cᵀ G conj(e) for x = Bc, y = Be. Changing basis
by T acts as G' = Tᵀ G conj(T).
"""
import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
from scipy import linalg

from .config import DEFAULT_RANK_TOL, SamplingPlan
from .errors import GateError, InputError, IsotropyError, ShapeError, SignatureError, TheoremViolation
from .metrics import directed_gap
from .normed import (
    DistInterval,
    NormedSpace,
    Subspace,
    complement,
    dist_to_subspace,
    intersection,
    is_subset,
    operator_norm,
    require_subset,
)
from .splitting import transport_subspace
from .verdict import Enclosure, StabilityVerdict, VerdictBuilder, corner_range, point

logger = logging.getLogger(__name__)

MORSE_VARIANTS = ("thm1.6", "prop1.7", "prop-definite")
HERMITIAN_TOL = 1e-12
CGAP_REFINE_POOL = 5


@dataclass(frozen=True, eq=False)
class SymmetricPair:
    V: Subspace
    gram: np.ndarray

    def __post_init__(self):
        G = np.asarray(self.gram)
        if G.shape != (self.V.dim, self.V.dim):
            raise ShapeError(f"Gram matrix of shape {G.shape} for a subspace of dimension {self.V.dim}")
        if not np.all(np.isfinite(G)):
            raise InputError("Gram matrix has non-finite entries")
        scale = max(1.0, float(np.abs(G).max(initial=0.0)))
        if np.abs(G - G.conj().T).max(initial=0.0) > HERMITIAN_TOL * scale:
            raise SignatureError("Gram matrix is not Hermitian")
        G = 0.5 * (G + G.conj().T)
        if np.iscomplexobj(G) and not self.V.space.is_complex:
            if np.abs(G.imag).max(initial=0.0) > HERMITIAN_TOL * scale:
                raise InputError("complex Gram matrix for a real space")
            G = G.real
        object.__setattr__(self, "gram", G.astype(self.V.space.dtype))

    @classmethod
    def from_raw(cls, space: NormedSpace, columns, gram, rank_tol: float = DEFAULT_RANK_TOL) -> "SymmetricPair":
        """Pair from a Gram matrix given in an arbitrary (full-rank) spanning basis."""
        V = Subspace.from_basis(space, columns, rank_tol)
        cols = np.asarray(columns, dtype=space.dtype)
        if cols.ndim == 1:
            cols = cols[:, None]
        G = np.asarray(gram)
        if G.shape != (cols.shape[1], cols.shape[1]):
            raise ShapeError(f"Gram matrix of shape {G.shape} for {cols.shape[1]} basis columns")
        if V.dim == 0:
            return cls(V, np.zeros((0, 0)))
        C = V.basis.conj().T @ cols
        T = linalg.inv(C)
        return cls(V, T.T @ G @ T.conj())

    @classmethod
    def zero_form(cls, V: Subspace) -> "SymmetricPair":
        return cls(V, np.zeros((V.dim, V.dim)))

    @property
    def space(self) -> NormedSpace:
        return self.V.space

    def scaled(self, h: float) -> "SymmetricPair":
        return SymmetricPair(self.V, h * self.gram)

    def evaluate(self, x, y) -> complex:
        c = self.V.coordinates(x)
        e = self.V.coordinates(y)
        val = c @ self.gram @ e.conj()
        return val if self.space.is_complex else float(np.real(val))

    def restrict(self, alpha: Subspace) -> "SymmetricPair":
        """Q|α for α ⊆ V."""
        require_subset(alpha, self.V, "α ⊆ V")
        A = self.V.coordinates(alpha.basis)
        return SymmetricPair(alpha, A.T @ self.gram @ A.conj())

    def eigen(self) -> Tuple[np.ndarray, np.ndarray]:
        if self.V.dim == 0:
            return np.zeros(0), np.zeros((0, 0))
        return linalg.eigh(self.gram)

    def _threshold(self, w: np.ndarray) -> float:
        return self.V.rank_tol * float(np.abs(w).max(initial=0.0))

    @property
    def indices(self) -> Tuple[int, int, int]:
        w, _ = self.eigen()
        thr = self._threshold(w)
        plus = int(np.sum(w > thr))
        minus = int(np.sum(w < -thr))
        return plus, minus, self.V.dim - plus - minus

    @property
    def m_plus(self) -> int:
        return self.indices[0]

    @property
    def m_minus(self) -> int:
        return self.indices[1]

    @property
    def m_zero(self) -> int:
        return self.indices[2]

    def eigen_subspace(self, sign: str) -> Subspace:
        """Span of eigenvectors with positive, negative, zero or nonnegative eigenvalues."""
        w, U = self.eigen()
        thr = self._threshold(w)
        mask = {"+": w > thr, "-": w < -thr, "0": np.abs(w) <= thr, "+0": w >= -thr, "-0": w <= thr}[sign]
        cols = self.V.basis @ U[:, mask].conj() if mask.any() else []
        return Subspace.span(self.space, cols, self.V.rank_tol)

    def to_dict(self) -> dict:
        plus, minus, zero = self.indices
        return {"dim": self.V.dim, "m_plus": plus, "m_minus": minus, "m_zero": zero}


def morse_indices(Q: SymmetricPair) -> Tuple[int, int, int]:
    return Q.indices


def _scaled_gram(Q: SymmetricPair) -> Tuple[np.ndarray, np.ndarray]:
    """Gram in a basis whose scaled image is orthonormal, with that basis in raw coordinates."""
    space = Q.space
    Bs = Q.V.scaled_basis()
    raw = Bs / space.scale[:, None]
    T = Q.V.coordinates(raw)
    return T.T @ Q.gram @ T.conj(), raw


def _form_norm_hi(Q: SymmetricPair) -> Tuple[float, np.ndarray, np.ndarray]:
    G, raw = _scaled_gram(Q)
    top = float(linalg.norm(G, 2)) if G.size else 0.0
    return Q.space.up_to_l2 ** 2 * top, G, raw


def _unit_norm(space: NormedSpace, x: np.ndarray) -> float:
    return float(space.norm(x))


def form_metrics(Q: SymmetricPair, plan: Optional[SamplingPlan] = None,
                 gamma: bool = True) -> Tuple[DistInterval, Optional[Enclosure]]:
    """‖Q‖ and the reduced minimum modulus γ(Q).

    Exact for p = 2. Otherwise ‖Q‖ is enclosed by sampled ratios below and
    β²‖G‖₂ above; γ(Q) by λ_min/α² below and sampled ratios above.
    """
    plan = plan or SamplingPlan()
    space = Q.space
    if Q.V.dim == 0:
        return DistInterval(0.0, 0.0, "closed-form"), (Enclosure(math.inf, math.inf) if gamma else None)
    if gamma and Q.m_plus and Q.m_minus:
        raise SignatureError(f"γ(Q) needs a semi-definite form, signature is {Q.indices}")
    hi, G, raw = _form_norm_hi(Q)
    w, U = linalg.eigh(G)
    if space.is_euclidean:
        norm_q = DistInterval.exact(hi)
    else:
        rng = plan.rng()
        cands = [U[:, i].conj() for i in range(U.shape[1])]
        cands += list(rng.standard_normal((max(8, plan.budget // 20), G.shape[0])))
        lo = hi / (space.up_from_l2 ** 2 * space.up_to_l2 ** 2)
        for i, a in enumerate(cands):
            b = cands[(i + 1) % len(cands)]
            for x, y in ((a, a), (a, b)):
                nx, ny = _unit_norm(space, raw @ x), _unit_norm(space, raw @ y)
                if nx > 0 and ny > 0:
                    lo = max(lo, abs(x @ G @ y.conj()) / (nx * ny))
        norm_q = DistInterval(min(lo, hi), hi, "sampled")
    if not gamma:
        return norm_q, None

    thr = Q.V.rank_tol * float(np.abs(w).max(initial=0.0))
    nonzero = np.abs(w) > thr
    if not nonzero.any():
        return norm_q, Enclosure(math.inf, math.inf)
    lam = float(np.abs(w[nonzero]).min())
    if space.is_euclidean:
        g = DistInterval.exact(lam)
        return norm_q, Enclosure(g.lo, g.hi)
    lo = lam / space.up_from_l2 ** 2
    null = Subspace.span(space, raw @ U[:, ~nonzero].conj() if (~nonzero).any() else [], Q.V.rank_tol)
    rng = plan.child("gamma").rng()
    cands = [U[:, i].conj() for i in np.flatnonzero(nonzero)]
    cands += list(rng.standard_normal((max(8, plan.budget // 20), G.shape[0])))
    best = math.inf
    for cvec in cands:
        x = raw @ cvec
        d = dist_to_subspace(x, null).lo if null.dim else _unit_norm(space, x)
        if d > 0:
            best = min(best, abs(float(np.real(cvec @ G @ cvec.conj()))) / d ** 2)
    return norm_q, Enclosure(lo, max(lo, best))


def form_annihilator(Q: SymmetricPair, lam: Subspace) -> Subspace:
    """λ^Q = {u ∈ V : Q(u, v) = 0 for all v in λ}."""
    require_subset(lam, Q.V, "λ ⊆ V")
    if lam.dim == 0:
        return Q.V
    A = Q.V.coordinates(lam.basis)
    pairing = A.conj().T @ Q.gram.conj()
    w, _ = Q.eigen()
    thr = Q._threshold(w)
    _, s, Vh = linalg.svd(pairing)
    r = int(np.sum(s > thr)) if thr > 0 else 0
    null = Vh[r:].conj().T
    return Subspace.span(Q.space, Q.V.basis @ null if null.size else [], Q.V.rank_tol)


def reduced_form(Q: SymmetricPair, eps: Subspace, plan: Optional[SamplingPlan] = None) -> SymmetricPair:
    """Q̃ on ε^Q/ε, realised on a complement of ε inside ε^Q."""
    plan = plan or SamplingPlan()
    E = form_annihilator(Q, eps)
    if not is_subset(eps, E):
        R = eps.basis - E.projector() @ eps.basis
        _, _, Vh = linalg.svd(R, full_matrices=False)
        raise IsotropyError("ε is not isotropic: ε ⊄ ε^Q", eps.basis @ Vh[0].conj())
    C = complement(eps, E)
    reduced = Q.restrict(C)
    if eps.dim and C.dim:
        rng = plan.rng()
        shift = eps.basis @ rng.standard_normal((eps.dim, C.dim))
        other = Subspace.span(Q.space, C.basis + shift, Q.V.rank_tol)
        if Q.restrict(other).indices != reduced.indices:
            raise TheoremViolation("reduced form signature depends on the complement")
    return reduced


@dataclass
class Decomposition:
    alpha: Subspace
    alpha_Q: Subspace
    direct: bool

    def to_dict(self) -> dict:
        return {"dim_alpha": self.alpha.dim, "dim_alpha_Q": self.alpha_Q.dim, "direct": self.direct}


def decompose(Q: SymmetricPair, alpha: Subspace) -> Decomposition:
    """V = α ⊕ α^Q for a finite-dimensional Q-definite α."""
    Qa = Q.restrict(alpha)
    plus, minus, _ = Qa.indices
    if alpha.dim and plus != alpha.dim and minus != alpha.dim:
        raise SignatureError(f"α is not Q-definite (signature {Qa.indices})")
    aQ = form_annihilator(Q, alpha)
    direct = intersection(alpha, aQ).dim == 0 and alpha.dim + aQ.dim == Q.V.dim
    return Decomposition(alpha, aQ, direct)


def maximal_definite(Q: SymmetricPair, h: int = 1) -> Tuple[Subspace, StabilityVerdict]:
    """Maximal hQ-positive-definite α from the eigenvectors, with Q|α^Q checked (−h)-semi-definite."""
    if h not in (1, -1):
        raise InputError("h must be 1 or -1")
    hQ = Q.scaled(h)
    alpha = hQ.eigen_subspace("+")
    rest = hQ.restrict(form_annihilator(hQ, alpha))
    b = VerdictBuilder("maximal-definite")
    b.conclude("dim_alpha_eq_m_plus", alpha.dim == hQ.m_plus, alpha.dim)
    b.conclude("annihilator_semidefinite", rest.m_plus == 0, rest.indices)
    return alpha, b.finish()


def decompose_or_maximal(Q: SymmetricPair, mode: str, alpha: Optional[Subspace] = None, h: int = 1):
    if mode == "decompose":
        if alpha is None:
            raise InputError("decompose needs α")
        return decompose(Q, alpha)
    if mode == "maximal":
        return maximal_definite(Q, h)
    raise InputError(f"unknown mode {mode!r}; use 'decompose' or 'maximal'")


@dataclass
class CGapReport:
    value: DistInterval
    c: float
    samples: int
    seed: int
    tight: str = "upper only"
    normalization: str = "‖x‖+‖u‖ = ‖y‖+‖v‖ = 1"
    witness: Optional[List[np.ndarray]] = field(default=None, repr=False)

    def to_dict(self) -> dict:
        return {
            "value": self.value.to_dict(),
            "c": self.c,
            "samples": self.samples,
            "seed": self.seed,
            "tight": self.tight,
            "normalization": self.normalization,
        }


def _cgap_ratio(Q, R, c, x, y, u, v) -> float:
    space = Q.space
    s1 = float(space.norm(x) + space.norm(u))
    s2 = float(space.norm(y) + space.norm(v))
    if s1 <= 0 or s2 <= 0:
        return 0.0
    x, u, y, v = x / s1, u / s1, y / s2, v / s2
    resid = abs(Q.evaluate(x, y) - R.evaluate(u, v))
    return float(resid - c * (space.norm(v - y) + space.norm(u - x)))


def _lift_bar(Q: SymmetricPair, W: Subspace) -> np.ndarray:
    """Gram on W of Q̄ = Q(P_V ·, P_V ·)."""
    T = Q.V.coordinates(W.basis)
    return T.T @ Q.gram @ T.conj()


def _cgap_upper(Q: SymmetricPair, R: SymmetricPair, c: float) -> float:
    """δ_c ≤ ‖(Q̄−R)|_W‖ + 2 max(0, ‖Q̄‖ − c), and the same with the roles swapped."""
    space = Q.space
    out = math.inf
    for A, B in ((Q, R), (R, Q)):
        diff = SymmetricPair(B.V, _lift_bar(A, B.V) - B.gram)
        P = A.V.projector()
        p_norm = operator_norm(P, space).hi if A.V.dim else 0.0
        bar = _form_norm_hi(A)[0] * p_norm ** 2
        out = min(out, _form_norm_hi(diff)[0] + 2.0 * max(0.0, bar - c))
    return out


def _random_in(sub: Subspace, rng) -> np.ndarray:
    if sub.dim == 0:
        return np.zeros(sub.space.dim, dtype=sub.space.dtype)
    c = rng.standard_normal(sub.dim)
    if sub.space.is_complex:
        c = c + 1j * rng.standard_normal(sub.dim)
    return sub.basis @ c


def _nudge(vec: np.ndarray, sub: Subspace, step: float, rng) -> np.ndarray:
    """Random move inside `sub` of relative size `step`; zero components stay zero."""
    size = float(np.linalg.norm(vec))
    if size == 0.0:
        return vec
    d = _random_in(sub, rng)
    nd = float(np.linalg.norm(d))
    return vec if nd == 0.0 else vec + step * size / nd * d


def c_gap(Q: SymmetricPair, R: SymmetricPair, c: float = 0.0,
          plan: Optional[SamplingPlan] = None) -> CGapReport:
    """Enclosure of δ_c(Q, R).

    The lower end is the best sampled tuple (x, y, u, v) after homogeneous
    normalisation, the upper end the algebraic bound from pairing each side
    with its projection.
    """
    plan = plan or SamplingPlan()
    if c < 0 or not math.isfinite(c):
        raise InputError(f"c must be a nonnegative real, got {c}")
    if Q.space != R.space:
        raise ShapeError("forms live in different ambient spaces")
    space = Q.space
    zero = np.zeros(space.dim, dtype=space.dtype)
    PV, PW = Q.V.projector(), R.V.projector()
    rng = plan.rng()

    tuples = []
    for F, P, on_q in ((Q, PW, True), (R, PV, False)):
        w, U = F.eigen()
        for i in range(U.shape[1]):
            e = F.V.basis @ U[:, i].conj()
            pe = P @ e
            if on_q:
                tuples += [(e, e, pe, pe), (e, e, zero, zero)]
            else:
                tuples += [(pe, pe, e, e), (zero, zero, e, e)]
    for i in range(plan.budget):
        x, y = _random_in(Q.V, rng), _random_in(Q.V, rng)
        u, v = _random_in(R.V, rng), _random_in(R.V, rng)
        kind = i % 4
        if kind == 0:
            tuples.append((x, y, PW @ x, PW @ y))
        elif kind == 1:
            tuples.append((PV @ u, PV @ v, u, v))
        elif kind == 2:
            tuples.append((x, y, zero, zero) if i % 8 == 2 else (zero, zero, u, v))
        else:
            tuples.append((x, y, u, v))

    scored = sorted(((_cgap_ratio(Q, R, c, *t), n) for n, t in enumerate(tuples)), key=lambda s: (-s[0], s[1]))
    best = max(scored[0][0], 0.0) if scored else 0.0
    best_t = tuples[scored[0][1]] if scored else None
    used = len(tuples)
    for val, n in scored[:CGAP_REFINE_POOL]:
        cur, cur_val, step = list(tuples[n]), val, 0.5
        for _ in range(plan.refine_steps):
            subs = (Q.V, Q.V, R.V, R.V)
            trial = [_nudge(vec, sub, step, rng) for vec, sub in zip(cur, subs)]
            tv = _cgap_ratio(Q, R, c, *trial)
            used += 1
            if tv > cur_val:
                cur, cur_val = trial, tv
            else:
                step *= 0.5
        if cur_val > best:
            best, best_t = cur_val, cur
    hi = _cgap_upper(Q, R, c)
    exact = space.is_euclidean and hi - best <= 1e-9 * max(1.0, hi)
    if best > hi + 1e-9 * max(1.0, hi):
        logger.warning("c-gap: sampled lower end %.6g exceeds the algebraic upper end %.6g", best, hi)
    value = DistInterval(min(best, hi), max(best, hi), "sampled")
    logger.debug("c-gap c=%g: [%.4g, %.4g] from %d tuples", c, value.lo, value.hi, used)
    return CGapReport(value, float(c), used, plan.seed, "both" if exact else "upper only",
                      witness=None if best_t is None else list(best_t))


def _one_minus(n, eta):
    return 1.0 - n * eta


def _rho_compact(n, g, dc, c, dab, dvw, eta):
    s = _one_minus(n, eta)
    if s <= 0:
        return math.inf
    return (n * g * dc * (2 + dvw) / s * ((1 + dab) ** 2 + 1 + dab)
            + n * c * g * (2 + 2 * dvw) / s * (1 + dab) ** 2
            - 2 * n * c * g * s ** -0.5 * (1 + dab) + dvw)


def _rho_full(n, g, dc, c, dab, dvw):
    """δ(V,W) + n(1−nη)^{-1/2}(1+δ(α,β))γ^{-1/2}C with η from (g, dc, c, dab)."""
    eta = 4.0 / g * (dc + c * dab)
    s = _one_minus(n, eta)
    if s <= 0 or g <= 0:
        return math.inf
    r = s ** -0.5
    gi = g ** -0.5
    C = (gi * dc * (2 + dvw) * (r * (1 + dab) + 1)
         + c * gi * (2 + dvw) * ((r - 1) * (1 + dab) + dab)
         + c * gi * dvw * (r * (1 + dab) + 1))
    return dvw + n * r * (1 + dab) * gi * C


def annihilator_gap_certificate(Q: SymmetricPair, R: SymmetricPair, alpha: Subspace, beta: Subspace,
                                c: float = 0.0, h: int = 1,
                                plan: Optional[SamplingPlan] = None) -> StabilityVerdict:
    """Gap between α^Q and β^R for nearby definite α ⊆ V and β ⊆ W.

    Gate: η = 4γ(Q|α)⁻¹(δ_c(Q,R) + cδ(α,β)) < 1/n with the full-pair c-gap.
    Conclusions: hR positive definite on β, δ(α^Q,β^R) ≤ ρ₁, δ(β^R,α^Q) ≤ ρ₂.
    """
    plan = plan or SamplingPlan()
    if h not in (1, -1):
        raise InputError("h must be 1 or -1")
    Qa, Rb = Q.restrict(alpha), R.restrict(beta)
    n = alpha.dim
    if n == 0 or beta.dim != n:
        raise InputError(f"need dim α = dim β ≥ 1, got {alpha.dim} and {beta.dim}")
    if Qa.scaled(h).m_plus != n:
        raise SignatureError("hQ is not positive definite on α")
    b = VerdictBuilder("annihilator-gap")
    g = form_metrics(Qa.scaled(h), plan.child("gQa"))[1]
    b.record("gamma_Q_alpha", g)
    dc_full = b.record("c_gap_full", c_gap(Q, R, c, plan.child("cfull")).value)
    dc_rest = b.record("c_gap_restricted", c_gap(Qa, Rb, c, plan.child("crest")).value)
    dab = b.record("delta_alpha_beta", directed_gap(alpha, beta, plan.child("ab")))
    dvw = b.record("delta_V_W", directed_gap(Q.V, R.V, plan.child("VW")))
    dwv = b.record("delta_W_V", directed_gap(R.V, Q.V, plan.child("WV")))
    eta = corner_range(lambda g_, d_, a_: 4.0 / g_ * (d_ + c * a_), g_=g, d_=dc_full, a_=dab)
    b.record("eta_restricted", corner_range(lambda g_, d_, a_: 4.0 / g_ * (d_ + c * a_), g_=g, d_=dc_rest, a_=dab))
    if not b.gate_lt("eta", eta, 1.0 / n):
        return b.finish()

    rho1 = corner_range(lambda g_, d_, a_, v_: _rho_full(n, g_, d_, c, a_, v_), g_=g, d_=dc_full, a_=dab, v_=dvw)
    rho2 = corner_range(lambda g_, d_, a_, v_: _rho_full(n, g_, d_, c, a_, v_), g_=g, d_=dc_full, a_=dab, v_=dwv)
    eta_p = eta.hi
    rho1_p = _rho_compact(n, g.hi, dc_rest.hi, c, dab.hi, dvw.hi, eta_p)
    rho2_p = _rho_compact(n, g.hi, dc_rest.hi, c, dab.hi, dwv.hi, eta_p)
    b.verdict.conclusion_values["rho_compact"] = {"rho_1": rho1_p, "rho_2": rho2_p}

    hRb = Rb.scaled(h)
    b.conclude("hR_positive_definite_on_beta", hRb.m_plus == n, hRb.indices)
    aQ = form_annihilator(Q, alpha)
    bR = form_annihilator(R, beta)
    d1 = directed_gap(aQ, bR, plan.child("aQbR"))
    d2 = directed_gap(bR, aQ, plan.child("bRaQ"))
    b.conclude_le("delta_alphaQ_betaR", d1, rho1.hi)
    b.conclude_le("delta_betaR_alphaQ", d2, rho2.hi)
    for label, d, bound in (("rho_1", d1, rho1_p), ("rho_2", d2, rho2_p)):
        if d.lo > bound + b.slack:
            b.note(f"compact {label} = {bound:.6g} is below the certified gap {d.lo:.6g}; full bound holds")
            logger.warning("annihilator-gap: compact %s fails on this instance", label)
    verdict = b.finish()
    if verdict.hypothesis_ok and hRb.m_plus != n:
        raise TheoremViolation("hR is not positive definite on β although η < 1/n", verdict)
    return verdict


def _prop_definite(b: VerdictBuilder, Q: SymmetricPair, R: SymmetricPair, V0: Subspace, W0: Subspace,
                   h: int, c: float, dc: DistInterval, plan: SamplingPlan, prefix: str = "") -> Optional[int]:
    """Gates of the definite case; returns n = dim V^Q/V₀ or None when a precondition fails."""
    hQ = Q.scaled(h)
    if not b.require(prefix + "hQ_semidefinite", hQ.m_minus == 0, f"signature {hQ.indices}"):
        return None
    VQ = form_annihilator(Q, Q.V)
    WR = form_annihilator(R, R.V)
    if not (b.require(prefix + "V0_subset_VQ", is_subset(V0, VQ)) and b.require(prefix + "W0_subset_WR", is_subset(W0, WR))):
        return None
    n = VQ.dim - V0.dim
    K = 2.0 ** (n + 1) * (n + 1)
    g = form_metrics(hQ, plan.child(prefix + "g"))[1]
    b.gate_gt(prefix + "gamma_Q", g, 0.0)
    dWV = b.record(prefix + "delta_W_V", directed_gap(R.V, Q.V, plan.child(prefix + "WV")))
    d0 = b.record(prefix + "delta_V0_W0", directed_gap(V0, W0, plan.child(prefix + "V0W0")))
    b.gate_lt(prefix + "definite_condition_1", Enclosure(dWV.lo + d0.lo, dWV.hi + d0.hi), 1.0 / K)

    def lhs_minus_rhs(w, z, gq, e):
        if K * w >= 1:
            return math.inf
        delta = K * w / (1 - K * w)
        d = 0.0 if math.isinf(gq) else 1.0 / gq
        lhs = math.sqrt(d * (2 + delta) * (2 * e + (2 * e + 2 * c) * delta))
        rhs = (1 - K * (w + z)) / (K * (1 + z))
        return lhs - rhs

    b.gate_lt(prefix + "definite_condition_2", corner_range(lhs_minus_rhs, w=dWV, z=d0, gq=g, e=dc), 0.0)
    return n


def verify_morse_stability(Q: SymmetricPair, R: SymmetricPair, variant: str, h: int = 1, c: float = 0.0,
                           V0: Optional[Subspace] = None, W0: Optional[Subspace] = None,
                           alpha: Optional[Subspace] = None, beta: Optional[Subspace] = None,
                           plan: Optional[SamplingPlan] = None) -> StabilityVerdict:
    """Morse-index stability of (Q,V) under a nearby (R,W).

    - prop-definite: m⁻(hR) + dim W^R/W₀ ≤ dim V^Q/V₀ for hQ semi-definite
    - prop1.7: m⁺(hR) ≥ dim α for hQ positive definite on α
    - thm1.6: m⁺(hR) + dim W^R/W₀ ≤ dim α for V = α ⊕ β
    """
    plan = plan or SamplingPlan()
    if variant not in MORSE_VARIANTS:
        raise InputError(f"unknown variant {variant!r}; choose from {', '.join(MORSE_VARIANTS)}")
    if h not in (1, -1):
        raise InputError("h must be 1 or -1")
    if c < 0:
        raise InputError("c must be nonnegative")
    space = Q.space
    V0 = Subspace.zero(space, Q.V.rank_tol) if V0 is None else V0
    W0 = Subspace.zero(space, R.V.rank_tol) if W0 is None else W0
    hQ, hR = Q.scaled(h), R.scaled(h)
    b = VerdictBuilder(f"morse-{variant}")
    dc = b.record("c_gap", c_gap(Q, R, c, plan.child("cgap")).value)
    WR = form_annihilator(R, R.V)

    if variant == "prop-definite":
        n = _prop_definite(b, Q, R, V0, W0, h, c, dc, plan)
        if n is not None:
            lhs = hR.m_minus + WR.dim - W0.dim
            b.conclude_le("m_minus_plus_quotient", lhs, n)
        return b.finish()

    if variant == "prop1.7":
        alpha = hQ.eigen_subspace("+") if alpha is None else alpha
        k = alpha.dim
        if not b.require("alpha_positive_definite", k >= 1 and hQ.restrict(alpha).m_plus == k):
            return b.finish()
        try:
            tr = transport_subspace(alpha, Q.V, R.V, plan.child("transport"))
        except GateError as exc:
            b.fail(f"transport: {exc}")
            return b.finish()
        b.record("transport_bound", point(tr.bound))
        beta1 = tr.Vp
        g = form_metrics(hQ.restrict(alpha), plan.child("ga"))[1]
        b.record("gamma_Q_alpha", g)
        dab = b.record("delta_alpha_beta", directed_gap(alpha, beta1, plan.child("ab")))
        eta = corner_range(lambda g_, d_, a_: 4.0 / g_ * (d_ + c * a_), g_=g, d_=dc, a_=dab)
        b.gate_lt("eta", eta, 1.0 / k)
        b.conclude_ge("m_plus_hR", hR.m_plus, k)
        return b.finish()

    # thm1.6
    if alpha is None or beta is None:
        alpha = hQ.eigen_subspace("+0")
        beta = hQ.eigen_subspace("-")
    b.require("V_eq_alpha_plus_beta", intersection(alpha, beta).dim == 0 and alpha.dim + beta.dim == Q.V.dim
              and is_subset(alpha, Q.V) and is_subset(beta, Q.V))
    if not b.gates_ok:
        return b.finish()
    b.require("Q_orthogonal", np.abs(_cross_gram(Q, alpha, beta)).max(initial=0.0)
              <= 1e-9 * max(1.0, float(np.abs(Q.gram).max(initial=0.0))))
    b.require("alpha_semidefinite", hQ.restrict(alpha).m_minus == 0)
    Qb = hQ.restrict(beta)
    b.require("beta_negative_definite", Qb.m_minus == beta.dim)
    b.require("V0_subset_VQ", is_subset(V0, form_annihilator(Q, Q.V)))
    b.require("W0_subset_WR", is_subset(W0, WR))
    if not b.gates_ok:
        return b.finish()
    if beta.dim:
        b.gate_gt("gamma_Q_beta", form_metrics(Qb, plan.child("gb"))[1], 0.0)

    Qalpha = hQ.restrict(alpha)
    alpha1 = Qalpha.eigen_subspace("+")
    k = alpha1.dim
    b.record("k", point(k))
    if k:
        try:
            tr = transport_subspace(alpha1, Q.V, R.V, plan.child("transport"))
        except GateError as exc:
            b.fail(f"transport: {exc}")
            return b.finish()
        b.record("transport_bound", point(tr.bound))
        beta1 = tr.Vp
        g = form_metrics(hQ.restrict(alpha1), plan.child("ga1"))[1]
        b.record("gamma_Q_alpha1", g)
        dab = b.record("delta_alpha1_beta1", directed_gap(alpha1, beta1, plan.child("a1b1")))
        eta = corner_range(lambda g_, d_, a_: 4.0 / g_ * (d_ + c * a_), g_=g, d_=dc, a_=dab)
        if not b.gate_lt("eta", eta, 1.0 / k):
            return b.finish()
        if hR.restrict(beta1).m_plus != k:
            b.conclude("hR_positive_definite_on_beta1", False, hR.restrict(beta1).indices)
            return b.finish()
    else:
        beta1 = Subspace.zero(space, R.V.rank_tol)
    a1Q = form_annihilator(Q, alpha1)
    b1R = form_annihilator(R, beta1)
    Qsub, Rsub = Q.restrict(a1Q), R.restrict(b1R)
    n = _prop_definite(b, Qsub, Rsub, V0, W0, -h, c, dc, plan.child("definite"), prefix="definite.")
    if n is None:
        return b.finish()
    inner = Rsub.scaled(-h).m_minus + form_annihilator(Rsub, Rsub.V).dim - W0.dim
    b.conclude_le("definite_case", inner, n)
    lhs = hR.m_plus + WR.dim - W0.dim
    b.verdict.conclusion_values["counts"] = {"m_plus_hR": hR.m_plus, "dim_WR": WR.dim, "dim_W0": W0.dim,
                                             "dim_alpha": alpha.dim, "k": k}
    b.conclude_le("m_plus_plus_quotient", lhs, alpha.dim)
    return b.finish()


def _cross_gram(Q: SymmetricPair, A: Subspace, B: Subspace) -> np.ndarray:
    a = Q.V.coordinates(A.basis)
    c = Q.V.coordinates(B.basis)
    return a.T @ Q.gram @ c.conj()


__all__ = [
    "SymmetricPair",
    "CGapReport",
    "Decomposition",
    "MORSE_VARIANTS",
    "morse_indices",
    "form_metrics",
    "form_annihilator",
    "reduced_form",
    "decompose",
    "maximal_definite",
    "decompose_or_maximal",
    "c_gap",
    "annihilator_gap_certificate",
    "verify_morse_stability",
]

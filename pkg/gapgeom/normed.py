"""Finite-dimensional normed spaces, subspaces and certified distances.

The ambient space is ℝⁿ or ℂⁿ with a weighted ℓᵖ norm ‖x‖ = ‖Dx‖_p, where
D = diag(w^{1/p}) (D = diag(w) for p = ∞). Every metric computation runs in
the scaled coordinates Dx, where the norm is the plain ℓᵖ norm.

Subspaces store a Euclidean-orthonormal basis in raw coordinates. All
dimension counts go through one rank tolerance, so reports stay internally
consistent.
"""
import logging
import math
from dataclasses import dataclass
from dataclasses import field as dc_field
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy import linalg
from scipy.optimize import linprog, minimize

from .config import DEFAULT_RANK_TOL
from .errors import ContainmentError, InputError, ShapeError

logger = logging.getLogger(__name__)

METHODS = ("exact-l2", "lp-linear-program", "subgradient", "sampled", "closed-form")
# rounding pad on exact ℓ² values, keeps hi - lo within 1e-12 (1 + hi)
L2_PAD = 4e-13


def _parse_p(p) -> float:
    if isinstance(p, str):
        if p.lower() in ("inf", "infinity", "∞"):
            return math.inf
        try:
            p = float(p)
        except ValueError:
            raise InputError(f"unrecognised norm exponent {p!r}")
    p = float(p)
    if not (p >= 1.0):
        raise InputError(f"norm exponent must be >= 1, got {p}")
    return p


def lp_norm(x: np.ndarray, p: float, axis: int = 0) -> np.ndarray:
    """Unweighted ℓᵖ norm along `axis` (p may be math.inf)."""
    a = np.abs(x)
    if a.size == 0:
        return np.zeros(a.shape[1 - axis]) if a.ndim == 2 else 0.0
    if math.isinf(p):
        return a.max(axis=axis)
    if p == 1.0:
        return a.sum(axis=axis)
    if p == 2.0:
        return np.sqrt((a * a).sum(axis=axis))
    return (a ** p).sum(axis=axis) ** (1.0 / p)


def dual_exponent(p: float) -> float:
    if p == 1.0:
        return math.inf
    if math.isinf(p):
        return 1.0
    return p / (p - 1.0)


@dataclass(frozen=True)
class NormedSpace:
    dim: int
    field: str = "real"
    p: float = 2.0
    weights: Optional[Tuple[float, ...]] = None
    # set on spaces built by dual(), so that dual() of the dual is the original
    predual: Optional["NormedSpace"] = dc_field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if not isinstance(self.dim, (int, np.integer)) or self.dim < 1:
            raise InputError(f"space dimension must be a positive integer, got {self.dim!r}")
        if self.field not in ("real", "complex"):
            raise InputError(f"field must be 'real' or 'complex', got {self.field!r}")
        object.__setattr__(self, "p", _parse_p(self.p))
        if self.weights is not None:
            w = tuple(float(v) for v in self.weights)
            if len(w) != self.dim:
                raise ShapeError(f"{len(w)} weights for a space of dimension {self.dim}")
            if not all(math.isfinite(v) and v > 0 for v in w):
                raise InputError("norm weights must be finite and strictly positive")
            object.__setattr__(self, "weights", w)

    @property
    def dtype(self):
        return np.complex128 if self.field == "complex" else np.float64

    @property
    def is_complex(self) -> bool:
        return self.field == "complex"

    @property
    def is_euclidean(self) -> bool:
        return self.p == 2.0

    @property
    def scale(self) -> np.ndarray:
        """Diagonal of D, so that ‖x‖ = ‖Dx‖_p."""
        if self.weights is None:
            return np.ones(self.dim)
        w = np.asarray(self.weights)
        return w if math.isinf(self.p) else w ** (1.0 / self.p)

    @property
    def kappa(self) -> float:
        """ℓᵖ↔ℓ² equivalence constant n^{|1/2 - 1/p|}."""
        inv = 0.0 if math.isinf(self.p) else 1.0 / self.p
        return float(self.dim) ** abs(0.5 - inv)

    @property
    def up_from_l2(self) -> float:
        """α with ‖x‖_p ≤ α‖x‖_2 in scaled coordinates."""
        return self.kappa if self.p < 2.0 else 1.0

    @property
    def up_to_l2(self) -> float:
        """β with ‖x‖_2 ≤ β‖x‖_p in scaled coordinates."""
        return self.kappa if self.p > 2.0 else 1.0

    def coerce(self, u, name: str = "vector") -> np.ndarray:
        arr = np.asarray(u)
        if arr.ndim == 1:
            if arr.shape[0] != self.dim:
                raise ShapeError(f"{name} has length {arr.shape[0]}, space has dimension {self.dim}")
        elif arr.ndim == 2:
            if arr.shape[0] != self.dim:
                raise ShapeError(f"{name} has {arr.shape[0]} rows, space has dimension {self.dim}")
        else:
            raise ShapeError(f"{name} must be a vector or a column array")
        if np.iscomplexobj(arr) and not self.is_complex:
            if np.abs(arr.imag).max(initial=0.0) > 0:
                raise InputError(f"complex {name} in a real space")
            arr = arr.real
        arr = arr.astype(self.dtype)
        if not np.all(np.isfinite(arr)):
            raise InputError(f"{name} has non-finite entries")
        return arr

    def norm(self, x) -> np.ndarray:
        """Norm of a vector, or column norms of a 2-D array."""
        x = np.asarray(x)
        d = self.scale
        scaled = d * x if x.ndim == 1 else d[:, None] * x
        return lp_norm(scaled, self.p, axis=0)

    def dual(self) -> "NormedSpace":
        if self.predual is not None:
            return self.predual
        q = dual_exponent(self.p)
        if self.weights is None:
            return NormedSpace(self.dim, self.field, q, predual=self)
        inv = 1.0 / self.scale
        w = inv if math.isinf(q) else inv ** q
        return NormedSpace(self.dim, self.field, q, tuple(w), predual=self)

    def describe(self) -> dict:
        p = "inf" if math.isinf(self.p) else self.p
        out = {"dim": self.dim, "field": self.field, "norm": {"p": p}}
        if self.weights is not None:
            out["norm"]["weights"] = list(self.weights)
        return out


def _as_columns(space: NormedSpace, columns) -> np.ndarray:
    if np.size(columns) == 0:
        return np.zeros((space.dim, 0), dtype=space.dtype)
    cols = np.asarray(columns)
    if cols.ndim == 1:
        cols = cols[:, None]
    return space.coerce(cols, "basis")


def _orth(a: np.ndarray, rank_tol: float) -> np.ndarray:
    if a.shape[1] == 0 or not np.any(a):
        return np.zeros((a.shape[0], 0), dtype=a.dtype)
    return linalg.orth(a, rcond=rank_tol)


@dataclass(frozen=True, eq=False)
class Subspace:
    space: NormedSpace
    basis: np.ndarray
    rank_tol: float = DEFAULT_RANK_TOL

    @classmethod
    def span(cls, space: NormedSpace, columns, rank_tol: float = DEFAULT_RANK_TOL) -> "Subspace":
        """Subspace spanned by `columns`, re-ranked at `rank_tol`."""
        cols = _as_columns(space, columns)
        return cls(space, _orth(cols, rank_tol), rank_tol)

    @classmethod
    def from_basis(cls, space: NormedSpace, columns, rank_tol: float = DEFAULT_RANK_TOL) -> "Subspace":
        """Like span, but the columns must have full numerical rank."""
        given = _as_columns(space, columns).shape[1]
        sub = cls.span(space, columns, rank_tol)
        if sub.dim != given:
            raise InputError(f"basis of {given} columns has numerical rank {sub.dim} at tolerance {rank_tol:g}")
        return sub

    @classmethod
    def zero(cls, space: NormedSpace, rank_tol: float = DEFAULT_RANK_TOL) -> "Subspace":
        return cls(space, np.zeros((space.dim, 0), dtype=space.dtype), rank_tol)

    @classmethod
    def full(cls, space: NormedSpace, rank_tol: float = DEFAULT_RANK_TOL) -> "Subspace":
        return cls(space, np.eye(space.dim, dtype=space.dtype), rank_tol)

    @classmethod
    def coordinate(cls, space: NormedSpace, indices: Sequence[int], rank_tol: float = DEFAULT_RANK_TOL) -> "Subspace":
        eye = np.eye(space.dim, dtype=space.dtype)
        return cls(space, eye[:, list(indices)], rank_tol)

    @property
    def dim(self) -> int:
        return int(self.basis.shape[1])

    @property
    def codim(self) -> int:
        return self.space.dim - self.dim

    def projector(self) -> np.ndarray:
        """Euclidean orthogonal projector in raw coordinates."""
        return self.basis @ self.basis.conj().T

    def scaled_basis(self) -> np.ndarray:
        """Orthonormal basis of D·self, where the norm is plain ℓᵖ."""
        return _orth(self.space.scale[:, None] * self.basis, self.rank_tol)

    def image(self, T) -> "Subspace":
        T = np.asarray(T)
        if T.shape != (self.space.dim, self.space.dim):
            raise ShapeError(f"operator of shape {T.shape} on a space of dimension {self.space.dim}")
        return Subspace.span(self.space, T @ self.basis, self.rank_tol)

    def coordinates(self, x) -> np.ndarray:
        return self.basis.conj().T @ np.asarray(x)

    def with_tol(self, rank_tol: float) -> "Subspace":
        return Subspace(self.space, _orth(self.basis, rank_tol), rank_tol)

    def __repr__(self):
        return f"Subspace(dim={self.dim}, ambient={self.space.dim})"


@dataclass(frozen=True)
class DistInterval:
    lo: float
    hi: float
    method: str = "exact-l2"

    def __post_init__(self):
        lo, hi = float(self.lo), float(self.hi)
        if not (math.isfinite(lo) and math.isfinite(hi)):
            raise InputError(f"non-finite interval [{lo}, {hi}]")
        if lo > hi:
            if lo - hi > 1e-12 * (1.0 + abs(hi)):
                raise ValueError(f"inverted interval [{lo}, {hi}]")
            lo = hi
        object.__setattr__(self, "lo", max(lo, 0.0))
        object.__setattr__(self, "hi", max(hi, 0.0))
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}")

    @classmethod
    def exact(cls, value: float, method: str = "exact-l2", pad: bool = True) -> "DistInterval":
        v = float(value)
        d = L2_PAD * (1.0 + abs(v)) if pad else 0.0
        return cls(max(v - d, 0.0), v + d, method)

    @property
    def width(self) -> float:
        return self.hi - self.lo

    @property
    def mid(self) -> float:
        return 0.5 * (self.lo + self.hi)

    def contains(self, x: float, slack: float = 0.0) -> bool:
        return self.lo - slack <= x <= self.hi + slack

    def clip(self, upper: float) -> "DistInterval":
        return DistInterval(min(self.lo, upper), min(self.hi, upper), self.method)

    def to_dict(self) -> dict:
        return {"lo": self.lo, "hi": self.hi, "method": self.method}


def interval_max(a: DistInterval, b: DistInterval) -> DistInterval:
    method = a.method if a.method == b.method else "sampled"
    return DistInterval(max(a.lo, b.lo), max(a.hi, b.hi), method)


def interval_min(a: DistInterval, b: DistInterval) -> DistInterval:
    method = a.method if a.method == b.method else "sampled"
    return DistInterval(min(a.lo, b.lo), min(a.hi, b.hi), method)


@dataclass
class DistanceSolution:
    """Result of one distance solve in scaled coordinates.

    `coef` gives the nearest point Q·coef, `dual` a certificate y with Qᴴy = 0.
    """

    lo: float
    hi: float
    method: str
    coef: np.ndarray
    dual: np.ndarray

    def interval(self) -> DistInterval:
        return DistInterval(min(self.lo, self.hi), self.hi, self.method)


def _phase(r: np.ndarray) -> np.ndarray:
    a = np.abs(r)
    out = np.zeros_like(r)
    nz = a > 0
    out[nz] = r[nz] / a[nz]
    return out


def _dual_from_residual(r: np.ndarray, p: float) -> np.ndarray:
    a = np.abs(r)
    top = a.max(initial=0.0)
    if top == 0:
        return np.zeros_like(r)
    if math.isinf(p):
        return np.where(a >= (1 - 1e-9) * top, _phase(r), 0)
    if p == 1.0:
        return np.where(a > 1e-12 * top, _phase(r), 0)
    return (a / top) ** (p - 1.0) * _phase(r)


def _dual_bound(us: np.ndarray, Q: np.ndarray, y: np.ndarray, p: float) -> Tuple[float, np.ndarray]:
    """Certified lower bound |yᴴu|/‖y‖_q after projecting y onto ann(Q)."""
    if Q.shape[1]:
        y = y - Q @ (Q.conj().T @ y)
    qn = lp_norm(y, dual_exponent(p))
    if qn == 0:
        return 0.0, y
    return float(abs(np.vdot(y, us)) / qn), y


def _solve_lp(us: np.ndarray, Q: np.ndarray, p: float) -> Optional[DistanceSolution]:
    n, k = Q.shape
    if p == 1.0:
        cost = np.concatenate([np.zeros(k), np.ones(n)])
        slack = -np.eye(n)
        bounds = [(None, None)] * k + [(0, None)] * n
    else:
        cost = np.concatenate([np.zeros(k), [1.0]])
        slack = -np.ones((n, 1))
        bounds = [(None, None)] * k + [(0, None)]
    A_ub = np.concatenate([
        np.concatenate([-Q, slack], 1),
        np.concatenate([+Q, slack], 1),
    ], 0)
    b_ub = np.concatenate([-us, +us])
    res = linprog(cost, A_ub=A_ub, b_ub=b_ub, bounds=bounds, method="highs")
    if res.status != 0 or res.x is None:
        logger.warning("distance LP did not solve (%s); falling back to descent", res.message)
        return None
    coef = res.x[:k]
    hi = float(lp_norm(us - Q @ coef, p))
    marg = np.asarray(res.ineqlin.marginals)
    y = marg[n:] - marg[:n]
    lo, y = _dual_bound(us, Q, y, p)
    return DistanceSolution(min(lo, hi), hi, "lp-linear-program", coef, y)


def _solve_descent(us: np.ndarray, Q: np.ndarray, p: float, is_complex: bool) -> DistanceSolution:
    k = Q.shape[1]
    c0 = Q.conj().T @ us

    def unpack(z):
        return z[:k] + 1j * z[k:] if is_complex else z

    def objective(z):
        r = us - Q @ unpack(z)
        val = float(lp_norm(r, p))
        if math.isinf(p) or p == 1.0:
            return val
        if val == 0:
            return 0.0, np.zeros_like(z)
        a = np.abs(r) / val
        w = np.zeros_like(a)
        nz = a > 0
        w[nz] = a[nz] ** (p - 2.0)
        g = -(Q.conj().T @ (w * r)) / val
        grad = np.concatenate([g.real, g.imag]) if is_complex else g.real
        return val, grad

    z0 = np.concatenate([c0.real, c0.imag]) if is_complex else c0.real
    if math.isinf(p) or p == 1.0:
        res = minimize(objective, z0, method="Powell", options={"xtol": 1e-12, "ftol": 1e-14, "maxiter": 4000})
    else:
        res = minimize(objective, z0, jac=True, method="L-BFGS-B",
                       options={"maxiter": 500, "gtol": 1e-13, "ftol": 1e-15})
    coef = unpack(res.x)
    r = us - Q @ coef
    hi = float(lp_norm(r, p))
    lo, y = _dual_bound(us, Q, _dual_from_residual(r, p), p)
    return DistanceSolution(min(lo, hi), hi, "subgradient", coef, y)


def solve_distance(us: np.ndarray, Q: np.ndarray, p: float, is_complex: bool,
                   rank_tol: float = DEFAULT_RANK_TOL) -> DistanceSolution:
    """dist_p(us, span Q) in scaled coordinates; Q has orthonormal columns."""
    k = Q.shape[1]
    norm_u = float(lp_norm(us, p))
    if k == 0 or norm_u == 0:
        return DistanceSolution(norm_u, norm_u, "exact-l2" if p == 2.0 else "closed-form",
                                np.zeros(k, dtype=us.dtype), _dual_from_residual(us, p))
    if p == 2.0:
        coef = Q.conj().T @ us
        r = us - Q @ coef
        v = float(np.linalg.norm(r))
        if v <= rank_tol * norm_u:
            return DistanceSolution(0.0, v, "exact-l2", coef, r)
        pad = L2_PAD * (1.0 + v)
        return DistanceSolution(max(v - pad, 0.0), v + pad, "exact-l2", coef, r)
    sol = None
    if not is_complex and (p == 1.0 or math.isinf(p)):
        sol = _solve_lp(us.real, Q.real, p)
    if sol is None:
        sol = _solve_descent(us, Q, p, is_complex)
    if sol.hi <= rank_tol * norm_u:
        sol.lo = 0.0
    return sol


def dist_to_subspace(u, N: Subspace) -> DistInterval:
    """Certified enclosure of inf_{v∈N} ‖u − v‖ in N's ambient norm."""
    space = N.space
    u = space.coerce(u, "u")
    if u.ndim != 1:
        raise ShapeError("dist_to_subspace takes a single vector")
    us = space.scale * u
    return solve_distance(us, N.scaled_basis(), space.p, space.is_complex, N.rank_tol).interval()


def nearest_point(u, N: Subspace) -> Tuple[np.ndarray, DistInterval]:
    """A point of N attaining (up to solver tolerance) the distance from u."""
    space = N.space
    u = space.coerce(u, "u")
    Qs = N.scaled_basis()
    sol = solve_distance(space.scale * u, Qs, space.p, space.is_complex, N.rank_tol)
    v = (Qs @ sol.coef) / space.scale
    return v, sol.interval()


def _check_same(A: Subspace, B: Subspace):
    if A.space != B.space:
        raise ShapeError("subspaces live in different ambient spaces")


def _stack_svd(A: Subspace, B: Subspace):
    tol = max(A.rank_tol, B.rank_tol)
    stacked = np.concatenate([A.basis, B.basis], axis=1)
    if stacked.shape[1] == 0:
        return stacked, np.zeros(0), np.zeros((0, 0)), 0
    U, s, Vh = linalg.svd(stacked, full_matrices=True)
    r = int(np.sum(s > tol * s[0])) if s.size and s[0] > 0 else 0
    return U, s, Vh, r


def subspace_sum(A: Subspace, B: Subspace) -> Subspace:
    _check_same(A, B)
    U, _, _, r = _stack_svd(A, B)
    tol = max(A.rank_tol, B.rank_tol)
    return Subspace(A.space, np.ascontiguousarray(U[:, :r]).astype(A.space.dtype), tol)


def intersection(A: Subspace, B: Subspace) -> Subspace:
    _check_same(A, B)
    tol = max(A.rank_tol, B.rank_tol)
    if A.dim == 0 or B.dim == 0:
        return Subspace.zero(A.space, tol)
    _, _, Vh, r = _stack_svd(A, B)
    Z = Vh[r:].conj().T
    if Z.shape[1] == 0:
        return Subspace.zero(A.space, tol)
    vecs = A.basis @ Z[:A.dim] * math.sqrt(2.0)
    q, _ = linalg.qr(vecs, mode="economic")
    return Subspace(A.space, q.astype(A.space.dtype), tol)


def is_subset(A: Subspace, B: Subspace) -> bool:
    """A ⊆ B at tolerance, i.e. δ(A, B) = 0 numerically."""
    _check_same(A, B)
    if A.dim == 0:
        return True
    return subspace_sum(A, B).dim == B.dim


def departing_direction(A: Subspace, B: Subspace) -> np.ndarray:
    """Unit vector of A farthest (Euclidean) from B."""
    R = A.basis - B.projector() @ A.basis
    _, _, Vh = linalg.svd(R, full_matrices=False)
    return A.basis @ Vh[0].conj()


def require_subset(A: Subspace, B: Subspace, what: str = "A ⊆ B"):
    if not is_subset(A, B):
        raise ContainmentError(f"containment {what} fails", departing_direction(A, B))


def quotient_dim(A: Subspace, B: Subspace) -> int:
    require_subset(B, A, "B ⊆ A")
    return A.dim - B.dim


def annihilator(A: Subspace) -> Subspace:
    """A^⊥ in the dual space: coordinate functionals f with fᴴa = 0 on A."""
    dual = A.space.dual()
    if A.dim == 0:
        return Subspace.full(dual, A.rank_tol)
    null = linalg.null_space(A.basis.conj().T, rcond=A.rank_tol)
    return Subspace(dual, null.astype(dual.dtype), A.rank_tol)


def complement(A: Subspace, within: Optional[Subspace] = None) -> Subspace:
    """Euclidean orthogonal complement of A inside `within` (default: the whole space)."""
    W = Subspace.full(A.space, A.rank_tol) if within is None else within
    _check_same(A, W)
    require_subset(A, W, "A ⊆ within")
    R = W.basis - A.projector() @ W.basis
    q = _orth(R, max(A.rank_tol, W.rank_tol))
    q = q[:, : W.dim - A.dim]
    return Subspace(A.space, q.astype(A.space.dtype), W.rank_tol)


def subspace_algebra(A: Subspace, B: Optional[Subspace], op: str):
    """Dispatch for sum, intersection, quotient_dim, annihilator and contains.

    `contains` answers δ(A, B) = 0, i.e. whether A sits inside B.
    """
    if op == "annihilator":
        return annihilator(A)
    if B is None:
        raise InputError(f"operation {op!r} needs two subspaces")
    if op == "sum":
        return subspace_sum(A, B)
    if op == "intersection":
        return intersection(A, B)
    if op == "quotient_dim":
        return quotient_dim(A, B)
    if op == "contains":
        return is_subset(A, B)
    raise InputError(f"unknown subspace operation {op!r}")


def operator_norm(A, space: NormedSpace, samples: int = 64, seed: int = 0) -> DistInterval:
    """Enclosure of the induced operator norm of A on `space`."""
    A = np.asarray(A)
    if A.shape != (space.dim, space.dim):
        raise ShapeError(f"operator of shape {A.shape} on a space of dimension {space.dim}")
    if not np.all(np.isfinite(A)):
        raise InputError("operator has non-finite entries")
    d = space.scale
    As = (d[:, None] * A) / d[None, :]
    p = space.p
    if p == 2.0:
        return DistInterval.exact(float(linalg.norm(As, 2)) if As.size else 0.0)
    col = float(np.abs(As).sum(axis=0).max())
    row = float(np.abs(As).sum(axis=1).max())
    if p == 1.0:
        return DistInterval(col, col, "closed-form")
    if math.isinf(p):
        return DistInterval(row, row, "closed-form")
    hi = col ** (1.0 / p) * row ** (1.0 - 1.0 / p)
    rng = np.random.default_rng(seed)
    cand = [np.eye(space.dim)[:, i] for i in range(space.dim)]
    _, _, Vh = linalg.svd(As)
    cand.append(Vh[0].conj())
    cand.extend(rng.standard_normal((samples, space.dim)))
    lo = 0.0
    for x in cand:
        nx = lp_norm(x, p)
        if nx > 0:
            lo = max(lo, float(lp_norm(As @ x, p) / nx))
    return DistInterval(min(lo, hi), hi, "sampled")

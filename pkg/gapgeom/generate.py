"""Seeded random instances with hypotheses satisfied by construction.

Every instance is built from one random unitary frame Q of the ambient
space: subspaces are spans of disjoint blocks of Q's columns, with the
columns inside each block mixed by a well-conditioned matrix so that the
stored bases are not orthonormal. The integers a checker should find are
written into the instance's "manifest".
"""
import logging
import math
from typing import Dict, Optional, Tuple

import numpy as np
from scipy import linalg

from .config import DEFAULT_SPLIT_A, MAX_GENERATE_SIZE, SamplingPlan
from .errors import InputError
from .normed import NormedSpace
from .splitting import a_const
from .storage import encode_array, space_to_json

logger = logging.getLogger(__name__)

GENERATE_KINDS = ("pair", "tetrad", "reldim", "morse", "path", "split")
DEFAULT_PERTURBATION = 1e-3
# a_{i} drops below rounding level soon after this
SPLIT_MAX_DIM_S = 8


def _gaussian(rng, shape, complex_field: bool) -> np.ndarray:
    z = rng.normal(size=shape)
    if complex_field:
        z = z + 1j * rng.normal(size=shape)
    return z


def _frame(rng, n: int, complex_field: bool) -> np.ndarray:
    q, r = linalg.qr(_gaussian(rng, (n, n), complex_field))
    d = np.diag(r)
    return q * (d / np.abs(d))


def _mix(rng, cols: np.ndarray, complex_field: bool) -> np.ndarray:
    k = cols.shape[1]
    if k == 0:
        return cols
    T = _frame(rng, k, complex_field) @ np.diag(rng.uniform(0.5, 2.0, size=k))
    return cols @ T


def small_rotation(rng, n: int, eps: float, complex_field: bool = False) -> np.ndarray:
    """exp(eps·S) for a random skew-Hermitian S with ‖S‖₂ = 1."""
    A = _gaussian(rng, (n, n), complex_field)
    S = A - A.conj().T
    S = S / linalg.norm(S, 2)
    return linalg.expm(eps * S)


def _blocks(rng, n: int, parts: int, minimum: Tuple[int, ...]) -> Tuple[int, ...]:
    """Random nonnegative block sizes with sum ≤ n and the given minima."""
    need = sum(minimum)
    if need > n:
        raise InputError(f"size {n} too small for this kind (needs {need})")
    sizes = list(minimum)
    spare = int(rng.integers(0, n - need + 1))
    for _ in range(spare):
        sizes[int(rng.integers(0, parts))] += 1
    return tuple(sizes)


def _pair_frame(rng, n, cf, with_tetrad):
    Q = _frame(rng, n, cf)
    if with_tetrad:
        y, c, a, b, e = _blocks(rng, n, 5, (0, 1, 1, 0, 0))
    else:
        y, e = 0, 0
        c, a, b = _blocks(rng, n, 3, (0, 1, 0))
    cap = Q[:, : y + c]
    Ma = Q[:, y + c: y + c + a]
    Nb = Q[:, y + c + a: y + c + a + b]
    top = y + c + a + b + e
    cols = {
        "M": _mix(rng, np.hstack([cap, Ma]), cf),
        "N": _mix(rng, np.hstack([cap, Nb]), cf),
    }
    manifest = {
        "dim_M": y + c + a,
        "dim_N": y + c + b,
        "dim_cap": y + c,
        "codim_sum": n - (y + c + a + b),
    }
    if with_tetrad:
        cols["Y1"] = _mix(rng, Q[:, :y], cf)
        cols["Y2"] = _mix(rng, Q[:, :top], cf)
        manifest.update({"dim_Y1": y, "dim_Y2": top, "cap_excess": c, "sum_deficit": e, "index": c - e})
    else:
        manifest["index"] = manifest["dim_cap"] - manifest["codim_sum"]
    return Q, cols, manifest


def _perturbed(cols: Dict[str, np.ndarray], R: np.ndarray) -> Dict[str, np.ndarray]:
    return {f"{k}p": R @ v for k, v in cols.items()}


def generate_pair(rng, space: NormedSpace, eps: float):
    _, cols, manifest = _pair_frame(rng, space.dim, space.is_complex, with_tetrad=False)
    return cols, manifest, {}


def generate_tetrad(rng, space: NormedSpace, eps: float):
    _, cols, manifest = _pair_frame(rng, space.dim, space.is_complex, with_tetrad=True)
    R = small_rotation(rng, space.dim, eps, space.is_complex)
    cols.update(_perturbed(cols, R))
    manifest["perturbation"] = eps
    return cols, manifest, {}


def generate_reldim(rng, space: NormedSpace, eps: float):
    """(M, N, K) with (I+K)M ⊆ N; I+K maps M onto a rank-r part of N."""
    n, cf = space.dim, space.is_complex
    Q = _frame(rng, n, cf)
    m = int(rng.integers(1, n + 1))
    k = int(rng.integers(1, n + 1))
    BM = Q[:, :m]
    # N overlaps M in a random number of directions
    shift = int(rng.integers(0, n - k + 1))
    BN = Q[:, shift: shift + k]
    r = int(rng.integers(0, min(m, k) + 1))
    C = _gaussian(rng, (k, r), cf) @ _gaussian(rng, (r, m), cf) if r else np.zeros((k, m))
    X = _gaussian(rng, (n, n), cf)
    T = BN @ C @ BM.conj().T + X @ (np.eye(n) - BM @ BM.conj().T)
    K = T - np.eye(n)
    cols = {"M": _mix(rng, BM, cf), "N": _mix(rng, BN, cf)}
    R = small_rotation(rng, n, eps, cf)
    cols.update(_perturbed(cols, R))
    manifest = {
        "dim_M": m,
        "dim_N": k,
        "rank": r,
        "kernel_dim": m - r,
        "cokernel_dim": k - r,
        "relative_dim": m - k,
        "perturbation": eps,
    }
    return cols, manifest, {"K": encode_array(K)}


def generate_morse(rng, space: NormedSpace, eps: float):
    """A form Q on V with prescribed signature, and R on a rotated V."""
    n, cf = space.dim, space.is_complex
    Q = _frame(rng, n, cf)
    plus, minus, zero = _blocks(rng, n, 3, (0, 0, 0))
    if plus + minus + zero == 0:
        plus = 1
    k = plus + minus + zero
    lam = np.concatenate([
        rng.uniform(0.5, 2.0, size=plus),
        -rng.uniform(0.5, 2.0, size=minus),
        np.zeros(zero),
    ])
    # Q(x, y) = cᵀ G conj(e) in the columns B = Q_V S; congruence keeps the signature
    S = _mix(rng, np.eye(k), cf)
    BV = Q[:, :k] @ S
    G = S.T @ np.diag(lam) @ S.conj()
    G = 0.5 * (G + G.conj().T)
    R = small_rotation(rng, n, eps, cf)
    E = _gaussian(rng, (k, k), cf)
    E = (E + E.conj().T) / max(1.0, linalg.norm(E + E.conj().T, 2))
    GR = G + eps * E
    cols = {"V": BV, "W": R @ BV}
    manifest = {"dim_V": k, "m_plus": plus, "m_minus": minus, "m_zero": zero, "perturbation": eps}
    forms = {
        "Q": {"subspace": "V", "gram": encode_array(G)},
        "R": {"subspace": "W", "gram": encode_array(GR)},
    }
    return cols, manifest, {"forms": forms}


def generate_split(rng, space: NormedSpace, eps: float):
    """L ⊕ S with S = S1 ⊕ S2, and N a small rotation of L ⊕ S1.

    dim S is at most SPLIT_MAX_DIM_S and the rotation is kept below a tenth
    of a_{dim S + 1}, so the splitting condition holds.
    """
    n, cf = space.dim, space.is_complex
    Q = _frame(rng, n, cf)
    l, s1, s2 = _blocks(rng, n, 3, (1, 0, 1))
    # extra S directions go to L
    over = max(0, s1 + s2 - SPLIT_MAX_DIM_S)
    cut = min(over, s1)
    l, s1, s2 = l + over, s1 - cut, s2 - (over - cut)
    eps = min(eps, 0.1 * a_const(DEFAULT_SPLIT_A, s1 + s2 + 1))
    L = Q[:, :l]
    S1 = Q[:, l: l + s1]
    S2 = Q[:, l + s1: l + s1 + s2]
    R = small_rotation(rng, n, eps, cf)
    cols = {
        "L": _mix(rng, L, cf),
        "S": _mix(rng, np.hstack([S1, S2]), cf),
        "N": _mix(rng, R @ np.hstack([L, S1]), cf),
    }
    manifest = {"dim_L": l, "dim_S": s1 + s2, "dim_N": l + s1, "expected_k": s2, "perturbation": eps}
    return cols, manifest, {}


def generate_path(rng, space: NormedSpace, eps: float, steps: int = 20):
    cols, manifest, _ = generate_tetrad(rng, space, eps)
    cols = {k: v for k, v in cols.items() if not k.endswith("p")}
    n = space.dim
    gens = []
    for _ in range(int(rng.integers(1, 4))):
        i, j = (int(x) for x in rng.choice(n, size=2, replace=False))
        if rng.random() < 0.5:
            gens.append({"type": "rotation", "plane": [i, j], "rate": float(rng.uniform(-math.pi, math.pi))})
        else:
            gens.append({"type": "shear", "direction": [i, j], "rate": float(rng.uniform(-1.0, 1.0))})
    manifest = {k: manifest[k] for k in ("index", "dim_M", "dim_N")}
    manifest["relative_dim"] = manifest["dim_M"] - manifest["dim_N"]
    return cols, manifest, {"generator": gens, "steps": steps, "t_range": [0.0, 1.0],
                            "base": {"tetrad": ["Y1", "M", "N", "Y2"]}}


_BUILDERS = {
    "pair": generate_pair,
    "tetrad": generate_tetrad,
    "reldim": generate_reldim,
    "morse": generate_morse,
    "split": generate_split,
    "path": generate_path,
}


def generate(kind: str, seed: int, size: int, field: str = "real", p=2,
             eps: Optional[float] = None) -> dict:
    """Instance dict for `kind` in an ambient space of dimension `size`.

    Identical (kind, seed, size, field, p, eps) give identical instances.
    """
    if kind not in _BUILDERS:
        raise InputError(f"unknown instance kind {kind!r}; expected one of {GENERATE_KINDS}")
    if not 1 <= int(size) <= MAX_GENERATE_SIZE:
        raise InputError(f"unsupported size {size}; expected 1..{MAX_GENERATE_SIZE}")
    eps = DEFAULT_PERTURBATION if eps is None else float(eps)
    if not 0.0 <= eps < 1.0:
        raise InputError(f"perturbation size must lie in [0, 1), got {eps}")
    space = NormedSpace(int(size), field, p)
    rng = SamplingPlan(seed=int(seed)).child(f"generate:{kind}").rng()
    cols, manifest, extra = _BUILDERS[kind](rng, space, eps)
    described = space_to_json(space, cols)
    logger.debug("generated %s instance (seed %d, size %d): %s", kind, seed, size, manifest)
    meta = {"kind": kind, "seed": int(seed), "size": int(size)}
    if kind == "path":
        return {"space": described, **extra, "manifest": manifest, **meta}
    return {**described, **extra, "manifest": manifest, **meta}

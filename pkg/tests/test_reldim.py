import numpy as np
import pytest

from gapgeom.errors import ContainmentError, DecompositionError, InputError, ShapeError
from gapgeom.generate import generate
from gapgeom.normed import NormedSpace, Subspace, is_subset
from gapgeom.reldim import (
    PerturbationOperator,
    additivity_check,
    antisymmetry_check,
    finite_change_dim,
    graph_operator,
    normalize_perturbation,
    parse_reldim_variant,
    relative_dim,
    semi_compact_witness,
    small_restriction,
    special_case_check,
    verify_reldim_stability,
)
from gapgeom.storage import load_space, parse_space


def test_sample_relative_dimension(samples_dir):
    sf = load_space(samples_dir / "reldim_r3.json")
    K = np.asarray(sf.extra["K"], dtype=float)
    rep = relative_dim(sf.get("M"), sf.get("N"), K)
    assert (rep.value, rep.kernel_dim, rep.cokernel_dim) == (1, 1, 0)
    assert rep.K_used.invertible_IplusK is False


def test_witness_perturbation(r4, rng, random_subspace):
    for _ in range(10):
        M = random_subspace(r4, int(rng.integers(0, 5)), rng)
        N = random_subspace(r4, int(rng.integers(0, 5)), rng)
        rep = relative_dim(M, N, semi_compact_witness(M, N))
        assert rep.value == M.dim - N.dim


def test_relative_dim_needs_containment(r3, span):
    with pytest.raises(ContainmentError):
        relative_dim(span(r3, [0, 1, 0]), span(r3, [1, 0, 0]), np.zeros((3, 3)))


def test_perturbation_shape(r3):
    with pytest.raises(ShapeError):
        PerturbationOperator.from_matrix(np.zeros((2, 2)), r3)
    with pytest.raises(InputError):
        PerturbationOperator.from_matrix(np.full((3, 3), np.inf), r3)


def test_finite_change_dim(r3, span):
    assert finite_change_dim(span(r3, [1, 0, 0], [0, 1, 0]), span(r3, [0, 1, 0])) == 1
    assert finite_change_dim(span(r3, [1, 0, 0]), span(r3, [0, 1, 0])) == 0


def test_additivity(r3, span):
    alpha = span(r3, [1, 0, 0], [0, 1, 0])
    beta = span(r3, [1, 0, 0])
    gamma = Subspace.zero(r3)
    K = beta.projector() - np.eye(3)
    L = -np.eye(3)
    v = additivity_check(alpha, beta, gamma, K, L)
    assert v.status == "passed"
    assert v.conclusion_values["additivity"] == {"alpha_gamma": 2, "alpha_beta": 1, "beta_gamma": 1}


def test_antisymmetry(r3, span):
    v = antisymmetry_check(span(r3, [1, 0, 0], [0, 1, 0]), span(r3, [0, 1, 0]))
    assert v.status == "passed"
    assert v.conclusion_values["antisymmetry"] == {"lam_mu": 1, "mu_lam": -1}


def test_special_case(r3, span, plan):
    assert special_case_check(span(r3, [1, 0, 0]), span(r3, [1, 0, 0], [0, 1, 0]), plan=plan).status == "passed"
    assert special_case_check(span(r3, [1, 0, 0], [0, 1, 0]), span(r3, [1, 0, 0]), plan=plan).status == "gate-failed"


def test_graph_operator():
    X = NormedSpace(2)
    t = 0.7
    alpha = Subspace.span(X, [1.0, 0.0])
    beta = Subspace.span(X, [0.0, 1.0])
    gamma = Subspace.span(X, [1.0, t])
    A, iso = graph_operator(alpha, beta, gamma)
    assert np.allclose(A @ np.array([1.0, 0.0]), [0.0, t])
    assert iso


def test_graph_operator_needs_direct_sums():
    X = NormedSpace(2)
    e1 = Subspace.span(X, [1.0, 0.0])
    with pytest.raises(DecompositionError):
        graph_operator(e1, e1, Subspace.span(X, [0.0, 1.0]))


def test_normalize_perturbation(samples_dir):
    sf = load_space(samples_dir / "reldim_r3.json")
    M, N = sf.get("M"), sf.get("N")
    M1, N1, K1 = normalize_perturbation(M, N, np.asarray(sf.extra["K"], dtype=float))
    assert K1.invertible_IplusK
    assert (M1.dim, N1.dim) == (1, 1)
    assert is_subset(N1, N)
    assert relative_dim(M, N, sf.extra["K"]).value == M.dim - N.dim


def test_small_restriction(r3):
    K = np.diag([2.0, 0.5, 0.01])
    C, codim = small_restriction(K, 0.1, r3)
    assert codim == 2
    assert C.dim == 1
    with pytest.raises(InputError):
        small_restriction(K, 0.0, r3)


def test_parse_reldim_variant():
    assert parse_reldim_variant("1.4c(2)") == ("1.4c", 2)
    assert parse_reldim_variant("1.4e") == ("1.4e", None)
    with pytest.raises(InputError):
        parse_reldim_variant("1.5")


def test_stability_under_small_rotation(samples_dir, plan, rotation):
    sf = load_space(samples_dir / "reldim_r3.json")
    M, N = sf.get("M"), sf.get("N")
    R = rotation(3, 0, 2, 1e-3)
    v = verify_reldim_stability(M, N, M.image(R), N.image(R), variant="1.4e", plan=plan)
    assert v.status == "passed"
    assert v.conclusion_values["reldim"] == {"M_N": 1, "Mp_Np": 1}


def test_value_does_not_depend_on_the_perturbation():
    for seed in range(50):
        inst = generate("reldim", seed, 2 + seed % 7)
        sf = parse_space(inst)
        M, N = sf.get("M"), sf.get("N")
        given = relative_dim(M, N, np.asarray(inst["K"], dtype=float))
        witness = relative_dim(M, N, semi_compact_witness(M, N))
        assert given.value == witness.value == inst["manifest"]["relative_dim"] == M.dim - N.dim


def test_additivity_and_antisymmetry_on_random_triples(rng, random_subspace):
    for i in range(100):
        X = NormedSpace(2 + i % 6)
        alpha, beta, gamma = (random_subspace(X, int(rng.integers(0, X.dim + 1)), rng) for _ in range(3))
        K = semi_compact_witness(alpha, beta)
        L = semi_compact_witness(beta, gamma)
        assert additivity_check(alpha, beta, gamma, K, L).exit_code == 0
        assert antisymmetry_check(alpha, gamma).exit_code == 0

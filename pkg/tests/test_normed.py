import math

import numpy as np
import pytest

from gapgeom.errors import ContainmentError, InputError, ShapeError
from gapgeom.generate import generate
from gapgeom.metrics import gap_hat
from gapgeom.normed import (
    DistInterval,
    NormedSpace,
    Subspace,
    annihilator,
    complement,
    dist_to_subspace,
    intersection,
    is_subset,
    lp_norm,
    operator_norm,
    quotient_dim,
    subspace_algebra,
    subspace_sum,
)
from gapgeom.storage import parse_space


def test_lp_norm_values():
    x = np.array([3.0, -4.0])
    assert lp_norm(x, 1.0) == pytest.approx(7.0)
    assert lp_norm(x, 2.0) == pytest.approx(5.0)
    assert lp_norm(x, math.inf) == pytest.approx(4.0)


def test_space_rejects_bad_input():
    with pytest.raises(InputError):
        NormedSpace(0)
    with pytest.raises(InputError):
        NormedSpace(3, p=0.5)
    with pytest.raises(InputError):
        NormedSpace(3, field="quaternion")
    with pytest.raises(ShapeError):
        NormedSpace(3, weights=(1.0, 2.0))
    with pytest.raises(InputError):
        NormedSpace(2, weights=(1.0, -1.0))


def test_p_accepts_inf_string():
    assert math.isinf(NormedSpace(2, p="inf").p)


@pytest.mark.parametrize("p,expected", [(1, 2.0), (2, 1.0), ("inf", 2.0)])
def test_kappa(p, expected):
    assert NormedSpace(4, p=p).kappa == pytest.approx(expected)


def test_dual_of_dual_is_the_same_space():
    X = NormedSpace(3, p=3, weights=(1.0, 2.0, 3.0))
    assert X.dual().p == pytest.approx(1.5)
    assert X.dual().dual() == X
    assert NormedSpace(4, p=1.7).dual().dual() == NormedSpace(4, p=1.7)


def test_weighted_norm():
    X = NormedSpace(2, p=1, weights=(2.0, 3.0))
    assert float(X.norm(np.array([1.0, -1.0]))) == pytest.approx(5.0)


def test_coerce_rejects_non_finite(r3):
    with pytest.raises(InputError):
        r3.coerce([1.0, math.nan, 0.0])
    with pytest.raises(ShapeError):
        r3.coerce([1.0, 0.0])


def test_complex_vector_in_real_space(r3):
    with pytest.raises(InputError):
        r3.coerce(np.array([1j, 0, 0]))


def test_dist_interval_validation():
    with pytest.raises(InputError):
        DistInterval(math.nan, 1.0)
    with pytest.raises(ValueError):
        DistInterval(1.0, 0.5)
    d = DistInterval.exact(0.5)
    assert d.lo <= 0.5 <= d.hi
    assert d.width < 1e-11


def test_from_basis_rejects_dependent_columns(r3):
    with pytest.raises(InputError):
        Subspace.from_basis(r3, np.array([[1.0, 2.0], [0.0, 0.0], [1.0, 2.0]]))


def test_zero_and_full(r3):
    assert Subspace.zero(r3).dim == 0
    assert Subspace.full(r3).dim == 3
    assert Subspace.full(r3).codim == 0


def test_sum_and_intersection(r3, span):
    A = span(r3, [1, 0, 0], [0, 1, 0])
    B = span(r3, [0, 1, 0], [0, 0, 1])
    cap = intersection(A, B)
    assert cap.dim == 1
    assert is_subset(cap, span(r3, [0, 1, 0]))
    assert subspace_sum(A, B).dim == 3


def test_intersection_with_zero(r3, span):
    assert intersection(Subspace.zero(r3), span(r3, [1, 0, 0])).dim == 0


def test_annihilator_of_line(r3, span):
    ann = annihilator(span(r3, [1, 0, 0]))
    assert ann.dim == 2
    assert is_subset(ann, Subspace.coordinate(r3.dual(), [1, 2]))


def test_annihilator_dimension_identity(r4, rng, random_subspace):
    for k in range(5):
        A = random_subspace(r4, k, rng)
        assert annihilator(A).dim == r4.dim - A.dim


@pytest.mark.parametrize("p", [3.0, 1.5, math.inf])
def test_annihilator_is_reflexive_on_weighted_spaces(p, rng, random_subspace):
    X = NormedSpace(4, p=p, weights=(2.0, 3.0, 5.0, 7.0))
    for k in range(5):
        M = random_subspace(X, k, rng)
        back = annihilator(annihilator(M))
        assert back.space == X
        assert back.dim == M.dim
        assert gap_hat(M, back).hi < 1e-8


def test_annihilator_is_reflexive_on_generated_pairs(plan):
    for seed in range(50):
        X = NormedSpace(2 + seed % 5, p=(3.0, 1.5)[seed % 2], weights=tuple(1.0 + i for i in range(2 + seed % 5)))
        sf = parse_space(generate("pair", seed, X.dim))
        for name in ("M", "N"):
            M = Subspace.span(X, sf.get(name).basis)
            back = annihilator(annihilator(M))
            assert back.space == X
            assert gap_hat(M, back, plan).hi < 1e-8


def test_quotient_dim(r3, span):
    assert quotient_dim(Subspace.full(r3), span(r3, [1, 0, 0])) == 2
    with pytest.raises(ContainmentError) as exc:
        quotient_dim(span(r3, [1, 0, 0]), span(r3, [0, 1, 0]))
    assert exc.value.direction is not None


def test_complement_inside(r3, span):
    W = span(r3, [1, 0, 0], [0, 1, 0])
    C = complement(span(r3, [1, 0, 0]), W)
    assert C.dim == 1
    assert is_subset(C, span(r3, [0, 1, 0]))


def test_algebra_dispatch(r3, span):
    e1, e12 = span(r3, [1, 0, 0]), span(r3, [1, 0, 0], [0, 1, 0])
    assert subspace_algebra(e1, e12, "contains") is True
    assert subspace_algebra(e12, e1, "contains") is False
    assert subspace_algebra(e12, e1, "quotient_dim") == 1
    assert subspace_algebra(e1, None, "annihilator").dim == 2
    with pytest.raises(InputError):
        subspace_algebra(e1, None, "sum")
    with pytest.raises(InputError):
        subspace_algebra(e1, e12, "xor")


def test_dist_l2(r3, span):
    d = dist_to_subspace([1.0, 1.0, 0.0], span(r3, [1, 0, 0]))
    assert d.contains(1.0)


def test_dist_l1_linear_program(span):
    X = NormedSpace(2, p=1)
    d = dist_to_subspace([0.5, 0.5], span(X, [1, 0]))
    assert d.contains(0.5, slack=1e-9)
    assert d.method == "lp-linear-program"


def test_dist_sup_norm(span):
    X = NormedSpace(2, p="inf")
    d = dist_to_subspace([1.0, 1.0], span(X, [1, 0]))
    assert d.contains(1.0, slack=1e-9)


def test_operator_norms():
    A = np.array([[1.0, 2.0], [3.0, 4.0]])
    assert operator_norm(A, NormedSpace(2, p=1)).contains(6.0)
    assert operator_norm(A, NormedSpace(2, p="inf")).contains(7.0)
    assert operator_norm(A, NormedSpace(2)).contains(float(np.linalg.norm(A, 2)))
    mid = operator_norm(A, NormedSpace(2, p=3))
    assert mid.lo <= mid.hi


def test_operator_norm_shape(r3):
    with pytest.raises(ShapeError):
        operator_norm(np.eye(2), r3)

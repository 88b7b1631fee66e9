import math

import numpy as np
import pytest

from gapgeom import splitting
from gapgeom.errors import DecompositionError, GateError, InputError, TheoremViolation
from gapgeom.generate import generate
from gapgeom.normed import DistInterval, NormedSpace, Subspace, intersection, is_subset
from gapgeom.splitting import (
    B_THRESHOLD,
    Delta_values,
    a_const,
    ball_distance_certificate,
    c_const,
    delta_const,
    gap_finite_dimension_check,
    separated_chain,
    split,
    splitting_constants,
    transport_subspace,
)
from gapgeom.storage import parse_space


def test_a_constants():
    assert a_const(0.4, 0) == 1.0
    assert a_const(0.4, 1) == pytest.approx(0.4)
    assert a_const(0.4, 2) == pytest.approx(0.16 / 2.8)


def test_delta_constants_are_capped():
    assert delta_const(0.4, 0, 0.01) == 0.01
    assert delta_const(0.4, 1, 0.01) == pytest.approx(0.01 * 1.4 / 0.4)
    assert delta_const(0.4, 3, 0.9) == 1.0


def test_c_constant_edges():
    assert c_const(0.3, 2, 2, 0.1) == 0.0
    assert math.isinf(c_const(0.3, 2, 0, 0.5))
    assert c_const(0.3, 2, 1, 0.0) == 0.0


def test_constant_tables():
    table = splitting_constants(0.2, 3, 0.0)
    assert len(table["a_i"]) == 5
    assert len(table["delta_i"]) == 5
    assert len(table["c_k"]) == 4
    assert table["b"] == pytest.approx(math.sqrt(2) - 1)


def test_Delta_values():
    assert Delta_values([0.5, 0.5]) == pytest.approx([1.0 / 6.0, 0.5])
    assert Delta_values([1.0]) == pytest.approx([1.0])


def test_split_example_in_r3(r3, span, plan):
    L, S, N = span(r3, [1, 0, 0]), span(r3, [0, 1, 0]), span(r3, [0, 0, 1])
    result = split(L, S, N, a=0.3, plan=plan)
    assert result.k == 1
    assert result.V_k.dim == 1
    assert intersection(N, result.V_k).dim == 0
    assert is_subset(result.V_k, span(r3, [1, 0, 0], [0, 1, 0]))
    # δ(L,N) = 1, so the splitting condition cannot be certified
    assert result.checks[0].name == "split-a"
    assert result.checks[0].status == "gate-failed"
    assert result.exit_code == 1


def test_split_when_N_is_M(r3, span, plan):
    L, S = span(r3, [1, 0, 0]), span(r3, [0, 1, 0])
    N = span(r3, [1, 0, 0], [0, 1, 0])
    result = split(L, S, N, a=0.3, plan=plan)
    assert result.k == 0
    assert result.V_k.dim == 0
    assert result.label == "greedy, stop certified"


def test_split_strict_raises(r3, span, plan):
    L, S, N = span(r3, [1, 0, 0]), span(r3, [0, 1, 0]), span(r3, [0, 0, 1])
    with pytest.raises(GateError):
        split(L, S, N, a=0.3, plan=plan, strict=True)


def test_split_rejects_bad_input(r3, span, plan):
    L = span(r3, [1, 0, 0])
    with pytest.raises(InputError):
        split(L, span(r3, [0, 1, 0]), L, a=B_THRESHOLD, plan=plan)
    with pytest.raises(DecompositionError):
        split(L, span(r3, [1, 0, 0], [0, 1, 0]), L, a=0.3, plan=plan)


def test_split_reports_checks(r3, span, plan):
    L, S = span(r3, [1, 0, 0]), span(r3, [0, 1, 0])
    result = split(L, S, span(r3, [1, 0, 0], [0, 1, 0]), a=0.3, plan=plan)
    names = [c.name for c in result.checks]
    assert names[:3] == ["split-a", "split-b", "split-c"]
    d = result.to_dict()
    assert d["k"] == 0
    assert set(d["dims"]) == {"V_k", "U_nk", "W_nk"}


def test_separated_chain_is_orthonormal_in_l2(r4, rng, random_subspace):
    V = random_subspace(r4, 3, rng)
    vecs, dists = separated_chain(V)
    assert len(vecs) == 3
    assert dists == pytest.approx([1.0, 1.0, 1.0], abs=1e-9)
    G = np.array(vecs) @ np.array(vecs).T
    assert np.allclose(G, np.eye(3), atol=1e-9)


def test_transport_identity(r3, span, plan):
    N = span(r3, [1, 0, 0], [0, 1, 0])
    V = span(r3, [1, 0, 0])
    res = transport_subspace(V, N, N, plan)
    assert res.Vp.dim == 1
    assert res.bound < 1e-9
    assert is_subset(res.Vp, N)


def test_transport_small_rotation(r3, span, plan, rotation):
    N = span(r3, [1, 0, 0], [0, 1, 0])
    Np = N.image(rotation(3, 1, 2, 0.01))
    V = span(r3, [1, 0, 0], [0, 1, 0])
    res = transport_subspace(V, N, Np, plan)
    assert res.Vp.dim == 2
    assert is_subset(res.Vp, Np)
    assert res.gap_hat_V_Vp.hi <= res.bound + 1e-9
    assert res.formula_bound > 0


def test_transport_raises_when_gap_exceeds_bound(r3, span, plan, rotation, monkeypatch):
    N = span(r3, [1, 0, 0], [0, 1, 0])
    Np = N.image(rotation(3, 1, 2, 0.01))
    V = span(r3, [1, 0, 0], [0, 1, 0])
    monkeypatch.setattr(splitting, "gap_hat", lambda *args, **kwargs: DistInterval(0.5, 0.5, "exact-l2"))
    with pytest.raises(TheoremViolation, match="above the bound"):
        transport_subspace(V, N, Np, plan)


def test_transport_gate(r3, span, plan, rotation):
    N = span(r3, [1, 0, 0], [0, 1, 0])
    Np = N.image(rotation(3, 1, 2, 0.5))
    with pytest.raises(GateError):
        transport_subspace(N, N, Np, plan)


def test_transport_of_zero(r3, span, plan):
    N = span(r3, [1, 0, 0])
    res = transport_subspace(Subspace.zero(r3), N, N, plan)
    assert res.Vp.dim == 0
    assert res.bound == 0.0


def test_gap_finite_dimension(r3, span, plan):
    M = span(r3, [1, 0, 0])
    v = [np.array([0.0, 1.0, 0.0])]
    vp = [np.array([0.0, 1.0, 0.01])]
    verdict = gap_finite_dimension_check(M, M, v, vp, plan)
    assert verdict.status == "passed"


def test_gap_finite_dimension_far(r3, span, plan):
    M = span(r3, [1, 0, 0])
    v = [np.array([0.0, 1.0, 0.0])]
    vp = [np.array([0.0, 0.0, 1.0])]
    assert gap_finite_dimension_check(M, M, v, vp, plan).status == "gate-failed"


def test_ball_distance_certificate(r3, span, plan):
    M = span(r3, [1, 0, 0])
    u = [np.array([0.0, 1.0, 0.0]), np.array([0.0, 0.0, 1.0])]
    cert = ball_distance_certificate(M, u, [0.5, 0.5], plan)
    assert cert.Delta_k == pytest.approx([1.0 / 6.0, 0.5])
    assert cert.verdict.status == "passed"


def test_split_in_l1_runs(plan, span):
    X = NormedSpace(3, p=1)
    L, S = span(X, [1, 0, 0]), span(X, [0, 1, 0])
    N = span(X, [1, 0, 0], [0, 1, 0])
    result = split(L, S, N, a=0.3, plan=plan)
    assert result.k == 0
    assert result.label == "greedy"


def test_generated_split_instances_have_no_violations():
    for seed in range(100):
        inst = generate("split", seed, 3 + seed % 6)
        sf = parse_space(inst)
        result = split(sf.get("L"), sf.get("S"), sf.get("N"))
        assert result.exit_code == 0, (seed, [c.notes for c in result.checks])
        assert result.k == inst["manifest"]["expected_k"]

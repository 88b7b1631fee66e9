import math

import numpy as np
import pytest

from gapgeom.config import SamplingPlan
from gapgeom.errors import InputError, IsotropyError, ShapeError, SignatureError
from gapgeom.generate import generate
from gapgeom.morse import (
    SymmetricPair,
    annihilator_gap_certificate,
    c_gap,
    decompose,
    decompose_or_maximal,
    form_annihilator,
    form_metrics,
    maximal_definite,
    morse_indices,
    reduced_form,
    verify_morse_stability,
)
from gapgeom.normed import NormedSpace, Subspace, is_subset
from gapgeom.splitting import transport_subspace
from gapgeom.storage import load_space, parse_form, parse_space


def pair(space, gram):
    return SymmetricPair.from_raw(space, np.eye(space.dim), np.asarray(gram, dtype=float))


@pytest.fixture
def sample_forms(samples_dir):
    sf = load_space(samples_dir / "morse_r2.json")
    forms = sf.extra["forms"]
    return sf, parse_form(forms["Q"], sf), parse_form(forms["R"], sf)


def test_indices():
    X = NormedSpace(3)
    assert morse_indices(pair(X, np.diag([1.0, -1.0, 0.0]))) == (1, 1, 1)
    assert pair(X, np.diag([2.0, 3.0, 1.0])).indices == (3, 0, 0)


def test_gram_in_a_skew_basis():
    X = NormedSpace(2)
    cols = np.array([[1.0, 1.0], [0.0, 1.0]])
    # Q(b1,b1) = 1, Q(b2,b2) = -1 in the skew basis b1 = e1, b2 = e1 + e2
    Q = SymmetricPair.from_raw(X, cols, np.diag([1.0, -1.0]))
    assert Q.indices == (1, 1, 0)
    assert Q.evaluate(cols[:, 1], cols[:, 1]) == pytest.approx(-1.0)
    assert Q.evaluate(cols[:, 0], cols[:, 1]) == pytest.approx(0.0, abs=1e-12)


def test_non_hermitian_gram_rejected():
    with pytest.raises(SignatureError):
        pair(NormedSpace(2), [[1.0, 2.0], [0.0, 1.0]])


def test_gram_shape_checked():
    with pytest.raises(ShapeError):
        SymmetricPair.from_raw(NormedSpace(2), np.eye(2), np.eye(3))


def test_complex_hermitian_form():
    C2 = NormedSpace(2, field="complex")
    G = np.array([[0.0, 1j], [-1j, 0.0]])
    Q = SymmetricPair.from_raw(C2, np.eye(2), G)
    assert Q.indices == (1, 1, 0)


def test_form_annihilator_of_axis():
    X = NormedSpace(2)
    Q = pair(X, np.diag([1.0, -1.0]))
    ann = form_annihilator(Q, Subspace.span(X, [1.0, 0.0]))
    assert ann.dim == 1
    assert is_subset(ann, Subspace.span(X, [0.0, 1.0]))


def test_radical_is_annihilator_of_whole_space():
    X = NormedSpace(3)
    Q = pair(X, np.diag([1.0, 0.0, -2.0]))
    rad = form_annihilator(Q, Q.V)
    assert rad.dim == 1
    assert is_subset(rad, Subspace.span(X, [0.0, 1.0, 0.0]))


def test_reduced_form_of_hyperbolic_plane():
    X = NormedSpace(3)
    G = np.array([[0.0, 1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]])
    Q = pair(X, G)
    red = reduced_form(Q, Subspace.span(X, [1.0, 0.0, 0.0]))
    assert red.V.dim == 1
    assert red.indices == (1, 0, 0)


def test_reduced_form_needs_isotropic_subspace():
    X = NormedSpace(3)
    Q = pair(X, np.diag([1.0, 1.0, 1.0]))
    with pytest.raises(IsotropyError) as exc:
        reduced_form(Q, Subspace.span(X, [0.0, 0.0, 1.0]))
    assert exc.value.witness is not None


def test_decompose():
    X = NormedSpace(2)
    Q = pair(X, np.diag([1.0, -1.0]))
    d = decompose(Q, Subspace.span(X, [1.0, 0.0]))
    assert d.direct
    assert d.alpha_Q.dim == 1


def test_decompose_needs_definite_alpha():
    X = NormedSpace(2)
    Q = pair(X, [[0.0, 1.0], [1.0, 0.0]])
    with pytest.raises(SignatureError):
        decompose(Q, Subspace.full(X))
    with pytest.raises(InputError):
        decompose_or_maximal(Q, "decompose")
    with pytest.raises(InputError):
        decompose_or_maximal(Q, "split")


def test_maximal_definite():
    X = NormedSpace(3)
    Q = pair(X, np.diag([1.0, -1.0, 0.0]))
    alpha, verdict = maximal_definite(Q)
    assert alpha.dim == 1
    assert verdict.status == "passed"
    beta, _ = maximal_definite(Q, h=-1)
    assert is_subset(beta, Subspace.span(X, [0.0, 1.0, 0.0]))


def test_form_metrics_semidefinite():
    X = NormedSpace(2)
    norm_q, gamma = form_metrics(pair(X, np.diag([2.0, 0.0])))
    assert norm_q.contains(2.0)
    assert gamma.lo <= 2.0 <= gamma.hi


def test_form_metrics_conventions():
    X = NormedSpace(2)
    _, gamma = form_metrics(SymmetricPair.zero_form(Subspace.full(X)))
    assert math.isinf(gamma.lo)
    with pytest.raises(SignatureError):
        form_metrics(pair(X, np.diag([1.0, -1.0])))


def test_c_gap_of_identical_forms(sample_forms, plan):
    _, Q, _ = sample_forms
    rep = c_gap(Q, Q, c=2.0, plan=plan)
    assert rep.value.hi < 1e-9


def test_c_gap_is_an_enclosure(sample_forms, plan):
    _, Q, R = sample_forms
    rep = c_gap(Q, R, c=0.0, plan=plan)
    assert 0.0 <= rep.value.lo <= rep.value.hi
    near = c_gap(Q, R, c=2.0, plan=plan)
    assert near.value.hi <= 0.001 + 1e-9


def test_c_gap_rejects_negative_c(sample_forms):
    _, Q, R = sample_forms
    with pytest.raises(InputError):
        c_gap(Q, R, c=-1.0)


def test_annihilator_gap(sample_forms, plan):
    sf, Q, R = sample_forms
    alpha = sf.get("alpha")
    v = annihilator_gap_certificate(Q, R, alpha, alpha, c=2.0, plan=plan)
    assert v.status == "passed"
    assert "rho_compact" in v.conclusion_values


def test_annihilator_gap_needs_definite_alpha(sample_forms, plan):
    sf, Q, R = sample_forms
    e2 = Subspace.span(sf.space, [0.0, 1.0])
    with pytest.raises(SignatureError):
        annihilator_gap_certificate(Q, R, e2, e2, c=2.0, plan=plan)


@pytest.mark.parametrize("variant", ["thm1.6", "prop1.7"])
def test_stability_of_sample(sample_forms, plan, variant):
    _, Q, R = sample_forms
    v = verify_morse_stability(Q, R, variant, c=2.0, plan=plan)
    assert v.status == "passed"


def test_definite_case_needs_semidefinite_form(sample_forms, plan):
    _, Q, R = sample_forms
    v = verify_morse_stability(Q, R, "prop-definite", c=2.0, plan=plan)
    assert v.status == "gate-failed"


def test_unknown_variant(sample_forms):
    _, Q, R = sample_forms
    with pytest.raises(InputError):
        verify_morse_stability(Q, R, "thm9")


def generated_forms(seed, eps):
    inst = generate("morse", seed, 1 + seed % 3, eps=eps)
    sf = parse_space(inst)
    return parse_form(inst["forms"]["Q"], sf), parse_form(inst["forms"]["R"], sf)


def test_congruence_keeps_the_indices(rng):
    for i in range(100):
        n = 1 + i % 6
        lam = rng.choice([-1.0, 0.0, 1.0], size=n) * rng.uniform(0.5, 2.0, size=n)
        U, _ = np.linalg.qr(rng.standard_normal((n, n)))
        W, _ = np.linalg.qr(rng.standard_normal((n, n)))
        S = U @ np.diag(rng.uniform(0.5, 2.0, size=n)) @ W
        G = S.T @ np.diag(lam) @ S
        expected = (int(np.sum(lam > 0)), int(np.sum(lam < 0)), int(np.sum(lam == 0)))
        assert morse_indices(pair(NormedSpace(n), 0.5 * (G + G.T))) == expected


def test_annihilator_gap_on_generated_forms():
    done, seed = 0, 0
    while done < 100:
        Q, R = generated_forms(seed, 1e-5)
        seed += 1
        h = 1 if Q.m_plus else -1
        alpha = Q.scaled(h).eigen_subspace("+")
        if alpha.dim == 0:
            continue
        beta = transport_subspace(alpha, Q.V, R.V).Vp
        v = annihilator_gap_certificate(Q, R, alpha, beta, c=2.5, h=h, plan=SamplingPlan(budget=200, seed=seed))
        assert v.exit_code == 0, (seed, v.notes)
        assert v.hypothesis_values["eta"].hi < 1.0 / alpha.dim
        done += 1


@pytest.mark.parametrize("variant", ["thm1.6", "prop1.7", "prop-definite"])
def test_stability_on_generated_forms(variant):
    done, seed = 0, 0
    while done < 50:
        Q, R = generated_forms(seed, 1e-8)
        seed += 1
        if variant == "prop1.7":
            if not (Q.m_plus or Q.m_minus):
                continue
            h = 1 if Q.m_plus else -1
        elif variant == "prop-definite":
            if Q.m_minus and Q.m_plus:
                continue
            h = 1 if not Q.m_minus else -1
        else:
            h = 1
        v = verify_morse_stability(Q, R, variant, h=h, c=2.5, plan=SamplingPlan(budget=200, seed=seed))
        assert v.exit_code == 0, (seed, v.notes)
        done += 1


def test_c_gap_shrinks_as_c_grows():
    for seed in range(20):
        Q, R = generated_forms(seed, 1e-3)
        plan = SamplingPlan(budget=100, seed=seed)
        highs = [c_gap(Q, R, c, plan).value.hi for c in (0.0, 0.5, 1.0, 2.0, 4.0)]
        assert all(a >= b - 1e-12 for a, b in zip(highs, highs[1:]))

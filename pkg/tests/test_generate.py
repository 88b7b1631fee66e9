import numpy as np
import pytest

from gapgeom.config import DEFAULT_SPLIT_A
from gapgeom.errors import InputError
from gapgeom.family import PathSpec, walk_family
from gapgeom.generate import GENERATE_KINDS, SPLIT_MAX_DIM_S, generate, small_rotation
from gapgeom.morse import morse_indices
from gapgeom.reldim import relative_dim
from gapgeom.splitting import a_const, split
from gapgeom.storage import parse_form, parse_space
from gapgeom.tetrad import Tetrad, pair_index


@pytest.mark.parametrize("kind", GENERATE_KINDS)
def test_same_seed_same_instance(kind):
    assert generate(kind, 11, 6) == generate(kind, 11, 6)


def test_different_seeds_differ():
    assert generate("pair", 1, 6) != generate("pair", 2, 6)


@pytest.mark.parametrize("seed", range(5))
def test_pair_manifest(seed):
    inst = generate("pair", seed, 6)
    sf = parse_space(inst)
    man = inst["manifest"]
    assert pair_index(sf.get("M"), sf.get("N")) == (man["dim_cap"], man["codim_sum"], man["index"])


@pytest.mark.parametrize("seed", range(5))
def test_tetrad_manifest(seed):
    inst = generate("tetrad", seed, 7)
    sf = parse_space(inst)
    t = Tetrad.build(*sf.pick("Y1,M,N,Y2"))
    tp = Tetrad.build(*sf.pick("Y1p,Mp,Np,Y2p"))
    man = inst["manifest"]
    assert (t.cap_excess, t.sum_deficit, t.index) == (man["cap_excess"], man["sum_deficit"], man["index"])
    assert tp.index == t.index


@pytest.mark.parametrize("seed", range(5))
def test_reldim_manifest(seed):
    inst = generate("reldim", seed, 5)
    sf = parse_space(inst)
    rep = relative_dim(sf.get("M"), sf.get("N"), np.asarray(inst["K"], dtype=float))
    man = inst["manifest"]
    assert (rep.value, rep.kernel_dim, rep.cokernel_dim) == (man["relative_dim"], man["kernel_dim"], man["cokernel_dim"])


@pytest.mark.parametrize("seed", range(5))
def test_morse_manifest(seed):
    inst = generate("morse", seed, 5)
    sf = parse_space(inst)
    Q = parse_form(inst["forms"]["Q"], sf)
    man = inst["manifest"]
    assert morse_indices(Q) == (man["m_plus"], man["m_minus"], man["m_zero"])


def test_complex_instance():
    inst = generate("tetrad", 3, 4, field="complex")
    sf = parse_space(inst)
    assert sf.space.is_complex
    assert Tetrad.build(*sf.pick("Y1,M,N,Y2")).index == inst["manifest"]["index"]


def test_path_instance_walks():
    inst = generate("path", 4, 5)
    p = PathSpec.from_json(inst)
    trace = walk_family(p)
    assert trace.constant
    assert set(trace.values) == {inst["manifest"]["index"]}


def test_split_instance_shape():
    inst = generate("split", 2, 6)
    sf = parse_space(inst)
    man = inst["manifest"]
    assert sf.get("L").dim == man["dim_L"]
    assert sf.get("S").dim == man["dim_S"]
    assert sf.get("N").dim == man["dim_N"]


def test_small_rotation_is_orthogonal(rng):
    R = small_rotation(rng, 5, 0.01)
    assert np.allclose(R.T @ R, np.eye(5), atol=1e-12)
    assert np.linalg.norm(R - np.eye(5), 2) == pytest.approx(0.01, rel=1e-3)


def test_generate_rejects_bad_arguments():
    with pytest.raises(InputError):
        generate("pair", 0, 65)
    with pytest.raises(InputError):
        generate("pair", 0, 0)
    with pytest.raises(InputError):
        generate("knot", 0, 4)
    with pytest.raises(InputError):
        generate("tetrad", 0, 4, eps=1.5)


@pytest.mark.parametrize("seed", [57, 65, *range(3)])
def test_split_instance_passes_its_gates(seed):
    inst = generate("split", seed, 8)
    sf = parse_space(inst)
    man = inst["manifest"]
    result = split(sf.get("L"), sf.get("S"), sf.get("N"))
    assert all(c.hypothesis_ok for c in result.checks)
    assert result.exit_code == 0
    assert result.k == man["expected_k"]
    assert man["perturbation"] <= 0.1 * a_const(DEFAULT_SPLIT_A, man["dim_S"] + 1)


def test_split_instance_caps_dim_s():
    for seed in range(20):
        man = generate("split", seed, 30)["manifest"]
        assert 1 <= man["dim_S"] <= SPLIT_MAX_DIM_S
        assert man["dim_L"] + man["dim_S"] <= 30

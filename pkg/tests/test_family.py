import math

import numpy as np
import pytest

from gapgeom.config import BISECTION_FLOOR
from gapgeom.errors import InputError
from gapgeom.family import Generator, PathSpec, _bisect, step_halving_check, walk_family
from gapgeom.generate import generate
from gapgeom.normed import NormedSpace
from gapgeom.storage import read_json, space_to_json


@pytest.fixture
def rotation_path(samples_dir):
    return PathSpec.from_json(read_json(samples_dir / "r4_rotation_path.json"))


def pair_path(generators, steps=10, K=None):
    X = NormedSpace(3)
    data = {
        "space": space_to_json(X, {"M": np.eye(3)[:, :2], "N": np.eye(3)[:, :1]}),
        "generator": generators,
        "steps": steps,
        "base": {"pair": ["M", "N"]},
    }
    if K is not None:
        data["base"]["K"] = K
    return PathSpec.from_json(data)


def test_generator_matrices():
    rot = Generator("rotation", (0, 2), math.pi / 2)
    assert np.allclose(rot.matrix(3, 1.0) @ [1.0, 0.0, 0.0], [0.0, 0.0, 1.0])
    shear = Generator("shear", (0, 1), 2.0)
    assert shear.matrix(2, 0.5)[0, 1] == pytest.approx(1.0)
    assert np.allclose(shear.matrix(2, 0.0), np.eye(2))


def test_generator_validation():
    with pytest.raises(InputError):
        Generator("twist", (0, 1), 1.0).validate(3)
    with pytest.raises(InputError):
        Generator("rotation", (1, 1), 1.0).validate(3)
    with pytest.raises(InputError):
        Generator("rotation", (0, 5), 1.0).validate(3)
    with pytest.raises(InputError):
        Generator.from_json({"type": "rotation", "plane": [0]})


def test_rotation_path_keeps_index(rotation_path):
    trace = walk_family(rotation_path)
    assert trace.values == [1] * 101
    assert trace.constant
    assert trace.incidents == []
    assert trace.exit_code == 0
    assert trace.verdict.name == "family-tetrad-index"


def test_rotation_increments(rotation_path):
    trace = walk_family(rotation_path)
    # a quarter turn over 100 steps moves M by sin(pi/200) per step
    assert trace.max_increment == pytest.approx(math.sin(math.pi / 200), rel=1e-6)


def test_step_halving(rotation_path):
    v = step_halving_check(rotation_path)
    assert v.status == "passed"
    assert v.conclusion_values["halving_ratio"]["ratio"] == pytest.approx(2.0, rel=1e-3)


def test_frozen_family(samples_dir):
    data = read_json(samples_dir / "r4_rotation_path.json")
    # rotating inside M's own plane leaves M fixed
    data["generator"] = [{"type": "rotation", "plane": [0, 1], "rate": 1.0}]
    p = PathSpec.from_json(data)
    trace = walk_family(p)
    assert trace.constant
    assert trace.max_increment < 1e-10
    v = step_halving_check(p)
    assert v.status == "passed"
    assert any("frozen" in n for n in v.notes)


def test_relative_dim_along_shear():
    p = pair_path([{"type": "shear", "direction": [0, 2], "rate": 1.0}])
    trace = walk_family(p, kind="relative-dim")
    assert set(trace.values) == {1}
    assert trace.constant
    row = trace.rows()[0]
    assert (row["kernel_dim"], row["cokernel_dim"]) == (1, 0)


def test_relative_dim_with_given_K():
    K = [[0, 0, 0], [0, -1, 0], [0, 0, 0]]
    p = pair_path({"composite": [{"type": "rotation", "plane": [1, 2], "rate": 1.0},
                                 {"type": "shear", "direction": [0, 1], "rate": 0.5}]}, K=K)
    assert len(p.generators) == 2
    assert walk_family(p, kind="relative-dim").constant


def test_walk_needs_matching_base():
    p = pair_path([{"type": "shear", "direction": [0, 2], "rate": 1.0}])
    with pytest.raises(InputError):
        walk_family(p, kind="tetrad-index")
    with pytest.raises(InputError):
        walk_family(p, kind="spectral-flow")


def test_path_validation(samples_dir):
    data = read_json(samples_dir / "r4_rotation_path.json")
    with pytest.raises(InputError):
        PathSpec.from_json({**data, "steps": 1})
    with pytest.raises(InputError):
        PathSpec.from_json({**data, "t_range": [0.5, 0.2]})
    with pytest.raises(InputError):
        PathSpec.from_json({k: v for k, v in data.items() if k != "base"})
    with pytest.raises(InputError):
        PathSpec.from_json({**data, "base": {"tetrad": ["Y1", "M"]}})


def test_path_json_reloads(rotation_path):
    again = PathSpec.from_json(rotation_path.to_json())
    assert again.steps == rotation_path.steps
    assert again.generators == rotation_path.generators
    assert again.has_tetrad


def test_bisection_localises_jump():
    def evaluate(t):
        return {"t": t, "value": int(t > 0.3)}

    a, b, seen = _bisect(evaluate, evaluate(0.0), evaluate(1.0), BISECTION_FLOOR)
    assert a["value"] == 0 and b["value"] == 1
    assert a["t"] <= 0.3 < b["t"]
    assert b["t"] - a["t"] <= BISECTION_FLOOR
    assert seen


def test_generated_paths_are_constant():
    for seed in range(200):
        inst = generate("path", seed, 2 + seed % 7)
        p = PathSpec.from_json(inst)
        trace = walk_family(p, increments=False)
        assert trace.constant, seed
        assert set(trace.values) == {inst["manifest"]["index"]}
        assert step_halving_check(p).exit_code == 0, seed

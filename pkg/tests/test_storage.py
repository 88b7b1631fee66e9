import json

import numpy as np
import pytest

from gapgeom.errors import InputError, ShapeError
from gapgeom.normed import NormedSpace, Subspace
from gapgeom.storage import (
    append_verdict_row,
    decode_array,
    encode_array,
    load_operator,
    load_space,
    parse_form,
    parse_operator,
    parse_space,
    read_json,
    read_ledger,
    save_instance,
    save_report,
    save_trace_csv,
    space_to_json,
)


def test_read_json_errors(tmp_path):
    with pytest.raises(InputError):
        read_json(tmp_path / "missing.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{not json", encoding="utf-8")
    with pytest.raises(InputError):
        read_json(bad)
    listy = tmp_path / "list.json"
    listy.write_text("[1, 2]", encoding="utf-8")
    with pytest.raises(InputError):
        read_json(listy)


def test_load_sample_space(samples_dir):
    sf = load_space(samples_dir / "r4_tetrad.json")
    assert sf.space == NormedSpace(4)
    assert sf.get("Y1").dim == 0
    assert [s.dim for s in sf.pick("Y1,M,N,Y2")] == [0, 2, 2, 3]
    with pytest.raises(InputError):
        sf.get("Z")


def test_space_norm_and_extra(samples_dir):
    sf = load_space(samples_dir / "gap_l1.json")
    assert sf.space.p == 1.0
    sf = load_space(samples_dir / "morse_r2.json")
    assert set(sf.extra["forms"]) == {"Q", "R"}


def test_parse_space_errors():
    with pytest.raises(InputError):
        parse_space({"subspaces": {}})
    with pytest.raises(InputError):
        parse_space({"dim": "three"})
    with pytest.raises(ShapeError):
        parse_space({"dim": 3, "subspaces": {"M": [[1, 0]]}})
    with pytest.raises(InputError):
        parse_space({"dim": 2, "norm": {"p": 0.5}})


def test_complex_columns():
    data = {"dim": 2, "field": "complex", "subspaces": {"M": [[[1, 0], [0, 1]]]}}
    sf = parse_space(data)
    assert np.allclose(sf.columns["M"][:, 0], [1.0, 1j])
    again = parse_space(space_to_json(sf.space, {"M": sf.columns["M"]}))
    assert np.allclose(again.columns["M"], sf.columns["M"])


def test_decode_array_shapes():
    assert decode_array([[1, 2], [3, 4]]).shape == (2, 2)
    with pytest.raises(ShapeError):
        decode_array([1, 2, 3])
    with pytest.raises(InputError):
        decode_array([["a", "b"]])
    assert encode_array(np.array([[1 + 2j]])) == [[[1.0, 2.0]]]


def test_space_to_json_accepts_subspaces(r3):
    sub = Subspace.coordinate(r3, [0, 2])
    out = space_to_json(r3, {"A": sub})
    assert out["dim"] == 3
    assert len(out["subspaces"]["A"]) == 2
    assert parse_space(out).get("A").dim == 2


def test_operators(tmp_path, r3):
    assert parse_operator({"matrix": np.eye(3).tolist()}, r3).shape == (3, 3)
    with pytest.raises(ShapeError):
        parse_operator(np.eye(2).tolist(), r3)
    with pytest.raises(InputError):
        parse_operator({"rows": []}, r3)
    path = tmp_path / "k.json"
    path.write_text(json.dumps({"matrix": (2 * np.eye(3)).tolist()}), encoding="utf-8")
    assert np.allclose(load_operator(path, r3), 2 * np.eye(3))


def test_form_needs_known_subspace(samples_dir):
    sf = load_space(samples_dir / "morse_r2.json")
    with pytest.raises(InputError):
        parse_form({"subspace": "nope", "gram": [[1]]}, sf)
    with pytest.raises(InputError):
        parse_form({"gram": [[1]]}, sf)
    assert parse_form(sf.extra["forms"]["Q"], sf).indices == (1, 1, 0)


def test_save_report(tmp_path):
    out = save_report({"value": np.float64(0.5), "flag": np.bool_(True), "n": np.int64(3)},
                      tmp_path / "nested" / "report.json")
    data = json.loads(out.read_text(encoding="utf-8"))
    assert data["value"] == 0.5
    assert data["flag"] is True
    assert data["n"] == 3
    assert "generated_at" in data


def test_save_instance_is_stable(tmp_path):
    a = save_instance({"b": 1, "a": [1.0, 2.0]}, tmp_path / "a.json")
    b = save_instance({"a": [1.0, 2.0], "b": 1}, tmp_path / "b.json")
    assert a.read_bytes() == b.read_bytes()


def test_trace_csv_is_sorted(tmp_path):
    rows = [{"t": 0.5, "value": 1}, {"t": 0.0, "value": 1}, {"t": 0.25, "value": 2}]
    out = save_trace_csv(rows, tmp_path / "trace.csv")
    df = read_ledger(out)
    assert list(df["t"]) == [0.0, 0.25, 0.5]


def test_ledger_appends(tmp_path):
    ledger = tmp_path / "ledger.csv"
    assert read_ledger(ledger) is None
    append_verdict_row({"command": "gap", "status": "passed", "exit_code": 0}, ledger)
    append_verdict_row({"command": "split", "status": "gate-failed", "exit_code": 1}, ledger)
    df = read_ledger(ledger)
    assert list(df["command"]) == ["gap", "split"]
    assert list(df["exit_code"]) == [0, 1]

"""JSON tensor-file round trips and parse failures."""

import json

import numpy as np
import pytest

from packconv import PackConvError, RangeError, ShapeError
from packconv.tensorfile import load_tensor, save_tensor


def test_round_trip_1d(tmp_path):
    path = tmp_path / "t.json"
    save_tensor(path, np.array([3, 5, 7]), bitwidth=3, signed=False)
    tensor = load_tensor(path)
    assert tensor.shape == (3,)
    assert tensor.bitwidth == 3
    assert not tensor.signed
    assert tensor.array.tolist() == [3, 5, 7]


def test_round_trip_3d_signed(tmp_path):
    path = tmp_path / "t.json"
    rng = np.random.Generator(np.random.PCG64(6))
    data = rng.integers(-8, 8, size=(2, 3, 4))
    save_tensor(path, data, bitwidth=4, signed=True)
    tensor = load_tensor(path)
    assert tensor.shape == (2, 3, 4)
    assert tensor.signed
    assert np.array_equal(tensor.array, data)


def test_file_ends_with_newline(tmp_path):
    path = tmp_path / "t.json"
    save_tensor(path, np.array([1]), bitwidth=1, signed=False)
    assert path.read_bytes().endswith(b"\n")


def _write(tmp_path, payload):
    path = tmp_path / "bad.json"
    path.write_text(payload if isinstance(payload, str) else json.dumps(payload))
    return path


def test_missing_file_names_path(tmp_path):
    with pytest.raises(PackConvError, match="nope.json"):
        load_tensor(tmp_path / "nope.json")


def test_invalid_json_names_path(tmp_path):
    path = _write(tmp_path, '{"shape": [3')
    with pytest.raises(PackConvError, match="invalid JSON"):
        load_tensor(path)


def test_not_an_object(tmp_path):
    path = _write(tmp_path, [1, 2, 3])
    with pytest.raises(PackConvError):
        load_tensor(path)


def test_missing_keys(tmp_path):
    path = _write(tmp_path, {"shape": [1], "data": [0]})
    with pytest.raises(PackConvError, match="bitwidth|signed"):
        load_tensor(path)


@pytest.mark.parametrize(
    "shape", ["3", [0], [2, -1], [1.5], []],
)
def test_bad_shape_rejected(tmp_path, shape):
    payload = {"shape": shape, "bitwidth": 4, "signed": False, "data": [1]}
    path = _write(tmp_path, payload)
    with pytest.raises(PackConvError):
        load_tensor(path)


def test_shape_data_mismatch(tmp_path):
    payload = {"shape": [4], "bitwidth": 4, "signed": False, "data": [1, 2]}
    path = _write(tmp_path, payload)
    with pytest.raises(ShapeError):
        load_tensor(path)


def test_out_of_range_data(tmp_path):
    payload = {"shape": [1], "bitwidth": 4, "signed": False, "data": [16]}
    path = _write(tmp_path, payload)
    with pytest.raises(RangeError):
        load_tensor(path)


def test_bool_data_rejected(tmp_path):
    payload = {"shape": [1], "bitwidth": 4, "signed": False, "data": [True]}
    path = _write(tmp_path, payload)
    with pytest.raises(PackConvError):
        load_tensor(path)


def test_unwritable_path_names_path(tmp_path):
    target = tmp_path / "no" / "such" / "dir" / "t.json"
    with pytest.raises(PackConvError, match="t.json"):
        save_tensor(target, np.array([1]), bitwidth=1, signed=False)

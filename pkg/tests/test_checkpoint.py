import numpy as np
import pytest

from asyncplan import nn
from asyncplan.nn.checkpoint import CheckpointError, MANIFEST_NAME, BLOB_NAME


def test_round_trip_byte_identical(tmp_path):
    rng = np.random.default_rng(0)
    params = {
        "enc.weight": nn.Parameter(rng.normal(size=(4, 3))),
        "enc.bias": nn.Parameter(np.zeros(3)),
        "gate": nn.Parameter(np.array(0.0)),
    }
    p1 = tmp_path / "ck1"
    nn.save_checkpoint(p1, params, config={"d_model": 4})
    arrays, config = nn.load_checkpoint(p1)
    assert config == {"d_model": 4}
    p2 = tmp_path / "ck2"
    nn.save_checkpoint(p2, arrays, config=config)
    assert (p1 / MANIFEST_NAME).read_bytes() == (p2 / MANIFEST_NAME).read_bytes()
    assert (p1 / BLOB_NAME).read_bytes() == (p2 / BLOB_NAME).read_bytes()
    assert np.array_equal(arrays["enc.weight"], params["enc.weight"].data)


def test_corrupted_manifest_fails_clean(tmp_path):
    params = {"w": nn.Parameter(np.ones(2))}
    path = nn.save_checkpoint(tmp_path / "ck", params)
    (path / MANIFEST_NAME).write_text("{not json")
    with pytest.raises(CheckpointError):
        nn.load_checkpoint(path)


def test_truncated_blob_fails(tmp_path):
    params = {"w": nn.Parameter(np.ones(8))}
    path = nn.save_checkpoint(tmp_path / "ck", params)
    blob = (path / BLOB_NAME).read_bytes()
    (path / BLOB_NAME).write_bytes(blob[:-8])
    with pytest.raises(CheckpointError, match="truncated"):
        nn.load_checkpoint(path)


def test_assign_parameters_lists_all_offenders():
    model = {
        "a": nn.Parameter(np.zeros((2, 2))),
        "b": nn.Parameter(np.zeros(3)),
    }
    arrays = {
        "a": np.ones((2, 3)),       # shape mismatch
        "zz": np.ones(1),           # unknown
    }
    with pytest.raises(CheckpointError) as err:
        nn.assign_parameters(model, arrays)
    msg = str(err.value)
    assert "shape mismatch for a" in msg
    assert "missing from checkpoint: b" in msg
    assert "unknown parameter in checkpoint: zz" in msg
    # nothing was partially assigned
    assert np.array_equal(model["a"].data, np.zeros((2, 2)))


def test_assign_parameters_allow_missing_prefix():
    model = {
        "base.w": nn.Parameter(np.zeros(2)),
        "inject.k": nn.Parameter(np.full(2, 7.0)),
    }
    nn.assign_parameters(model, {"base.w": np.ones(2)}, allow_missing=("inject.",))
    assert model["base.w"].data.tolist() == [1.0, 1.0]
    assert model["inject.k"].data.tolist() == [7.0, 7.0]

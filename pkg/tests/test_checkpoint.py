import numpy as np
import pytest

from fioc import numkit as nk


def test_round_trip_is_exact(tmp_path):
    rng = np.random.default_rng(21)
    tensors = {
        "enc/W0": rng.standard_normal((4, 3)),
        "enc/b0": rng.standard_normal(4),
        "meta/step": np.array(17.0),
        "deep/rank3": rng.standard_normal((2, 3, 4)),
    }
    path = tmp_path / "params.fioc"
    nk.save_tensors(path, tensors)
    loaded = nk.load_tensors(path)
    assert set(loaded) == set(tensors)
    for key in tensors:
        assert loaded[key].shape == np.asarray(tensors[key]).shape
        assert np.array_equal(loaded[key], tensors[key])


def test_header_magic_and_version(tmp_path):
    path = tmp_path / "p.fioc"
    nk.save_tensors(path, {"x": np.zeros(2)})
    raw = path.read_bytes()
    assert raw[:4] == b"FIOC"
    assert int.from_bytes(raw[4:6], "little") == 1


def test_bad_magic_rejected(tmp_path):
    path = tmp_path / "bad.fioc"
    path.write_bytes(b"NOPE" + b"\x00" * 16)
    with pytest.raises(nk.CheckpointError):
        nk.load_tensors(path)


def test_truncated_payload_rejected(tmp_path):
    path = tmp_path / "p.fioc"
    nk.save_tensors(path, {"x": np.arange(8.0)})
    raw = path.read_bytes()
    path.write_bytes(raw[:-8])
    with pytest.raises(nk.CheckpointError):
        nk.load_tensors(path)


def test_canonical_name_order_makes_bytes_stable(tmp_path):
    a = {"b": np.ones(2), "a": np.zeros(3)}
    b = {"a": np.zeros(3), "b": np.ones(2)}
    pa, pb = tmp_path / "a.fioc", tmp_path / "b.fioc"
    nk.save_tensors(pa, a)
    nk.save_tensors(pb, b)
    assert pa.read_bytes() == pb.read_bytes()

import numpy as np
import pytest

from bodycomp.container import ContainerError, read_container, write_container


def test_round_trip_preserves_bits(tmp_path, rng):
    arrays = [("a", rng.normal(size=(3, 4))), ("b", np.array([np.pi, -0.0, 1e-300])), ("c", np.zeros((0, 2)))]
    path = tmp_path / "x.bin"
    write_container(str(path), "thing", {"k": [1, 2]}, arrays)
    meta, back = read_container(str(path), "thing")
    assert meta == {"k": [1, 2]}
    assert list(back) == ["a", "b", "c"]
    for name, arr in arrays:
        assert back[name].shape == arr.shape
        assert back[name].tobytes() == arr.tobytes()


def test_wrong_kind(tmp_path):
    path = tmp_path / "x.bin"
    write_container(str(path), "thing", {}, [])
    with pytest.raises(ContainerError, match="expected"):
        read_container(str(path), "other")


def test_not_a_model_file(tmp_path):
    path = tmp_path / "x.bin"
    path.write_bytes(b"hello\n")
    with pytest.raises(ContainerError):
        read_container(str(path))


def test_header_layout(tmp_path):
    path = tmp_path / "x.bin"
    write_container(str(path), "thing", {}, [("a", np.ones(2))])
    data = path.read_bytes()
    head, rest = data.split(b"\n", 1)
    magic, version, n = head.split()
    assert (magic, version) == (b"BODYCOMP", b"1")
    assert rest[int(n):] == np.ones(2, dtype="<f8").tobytes()

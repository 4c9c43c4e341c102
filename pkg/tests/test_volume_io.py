"""Tests for .vol3d volume reading, writing, and validation."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from coreseg.errors import VolumeFormatError
from coreseg.volume_io import (
    KIND_INSTANCE,
    KIND_MASK,
    LabelVolume,
    VolumeHeader,
    new_volume,
    read_volume,
    write_volume,
)


def small_volume() -> LabelVolume:
    data = np.arange(24, dtype=np.uint32).reshape(2, 3, 4)
    return new_volume(data, KIND_INSTANCE)


def test_round_trip_equality(tmp_path):
    vol = small_volume()
    path = tmp_path / "v.vol3d"
    write_volume(vol, path)
    back = read_volume(path)
    assert back == vol
    assert back.voxels.dtype == np.uint32


def test_write_is_byte_deterministic(tmp_path):
    vol = small_volume()
    write_volume(vol, tmp_path / "a.vol3d")
    write_volume(vol, tmp_path / "b.vol3d")
    assert (tmp_path / "a.vol3d").read_bytes() == (tmp_path / "b.vol3d").read_bytes()


def test_on_disk_layout(tmp_path):
    vol = small_volume()
    path = tmp_path / "v.vol3d"
    write_volume(vol, path)
    blob = path.read_bytes()
    header = b"shape=2,3,4\nkind=instance_labels\nwidth=4\norder=zyx\n\n"
    assert blob.startswith(header)
    payload = blob[len(header):]
    assert payload == vol.voxels.astype("<u4").tobytes()
    # z-major linearization: voxel (z, y, x) sits at z*12 + y*4 + x
    flat = np.frombuffer(payload, dtype="<u4")
    assert flat[1 * 12 + 2 * 4 + 3] == vol.voxels[1, 2, 3]


def test_mask_round_trip(tmp_path):
    vol = new_volume(np.ones((2, 2, 2), dtype=np.uint32), KIND_MASK)
    path = tmp_path / "m.vol3d"
    write_volume(vol, path)
    assert read_volume(path).header.value_kind == KIND_MASK


def test_read_missing_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        read_volume(tmp_path / "absent.vol3d")


def test_read_rejects_truncated_payload(tmp_path):
    vol = small_volume()
    path = tmp_path / "v.vol3d"
    write_volume(vol, path)
    blob = path.read_bytes()
    path.write_bytes(blob[:-4])
    with pytest.raises(VolumeFormatError, match="payload length"):
        read_volume(path)


def test_read_rejects_oversized_payload(tmp_path):
    vol = small_volume()
    path = tmp_path / "v.vol3d"
    write_volume(vol, path)
    path.write_bytes(path.read_bytes() + b"\x00\x00\x00\x00")
    with pytest.raises(VolumeFormatError, match="payload length"):
        read_volume(path)


def test_read_rejects_missing_blank_line(tmp_path):
    path = tmp_path / "v.vol3d"
    path.write_bytes(b"shape=1,1,1\nkind=binary_mask\nwidth=4\norder=zyx\n")
    with pytest.raises(VolumeFormatError, match="blank-line"):
        read_volume(path)


@pytest.mark.parametrize(
    "header_text,fragment",
    [
        ("shape=1,1,1\nkind=nonsense\nwidth=4\norder=zyx", "value kind"),
        ("shape=1,1,1\nkind=binary_mask\nwidth=8\norder=zyx", "width"),
        ("shape=1,1,1\nkind=binary_mask\nwidth=4\norder=xyz", "order"),
        ("shape=1,1\nkind=binary_mask\nwidth=4\norder=zyx", "shape"),
        ("shape=1,a,1\nkind=binary_mask\nwidth=4\norder=zyx", "shape"),
        ("shape=1,1,1\nkind=binary_mask\nwidth=4", "keys"),
        ("shape=1,1,1\nshape=1,1,1\nkind=binary_mask\nwidth=4\norder=zyx", "duplicate"),
        ("shape=1,1,1\nbogus\nwidth=4\norder=zyx", "header line"),
    ],
)
def test_read_rejects_malformed_headers(tmp_path, header_text, fragment):
    path = tmp_path / "v.vol3d"
    path.write_bytes(header_text.encode() + b"\n\n" + b"\x00" * 4)
    with pytest.raises(VolumeFormatError, match=fragment):
        read_volume(path)


def test_read_rejects_mask_values_above_one(tmp_path):
    path = tmp_path / "m.vol3d"
    payload = np.array([2], dtype="<u4").tobytes()
    path.write_bytes(b"shape=1,1,1\nkind=binary_mask\nwidth=4\norder=zyx\n\n" + payload)
    with pytest.raises(VolumeFormatError, match="greater than 1"):
        read_volume(path)


def test_new_volume_accepts_bool():
    vol = new_volume(np.ones((1, 2, 3), dtype=bool), KIND_MASK)
    assert vol.voxels.dtype == np.uint32
    assert int(vol.voxels.sum()) == 6


def test_new_volume_accepts_int64():
    vol = new_volume(np.full((1, 1, 1), 2**32 - 1, dtype=np.int64))
    assert int(vol.voxels[0, 0, 0]) == 2**32 - 1


@pytest.mark.parametrize(
    "arr,kind",
    [
        (np.zeros((2, 2), dtype=np.uint32), KIND_INSTANCE),
        (np.zeros((2, 2, 2), dtype=np.float64), KIND_INSTANCE),
        (np.full((1, 1, 1), -1, dtype=np.int64), KIND_INSTANCE),
        (np.full((1, 1, 1), 2**32, dtype=np.int64), KIND_INSTANCE),
        (np.full((1, 1, 1), 2, dtype=np.uint32), KIND_MASK),
    ],
)
def test_new_volume_rejects_bad_input(arr, kind):
    with pytest.raises(VolumeFormatError):
        new_volume(arr, kind)


def test_header_rejects_zero_axis():
    with pytest.raises(VolumeFormatError, match="positive"):
        VolumeHeader(shape=(0, 1, 1), value_kind=KIND_MASK).validate()


def test_header_counts():
    h = VolumeHeader(shape=(2, 3, 4), value_kind=KIND_INSTANCE)
    assert h.voxel_count == 24
    assert h.payload_bytes == 96


def test_volume_equality():
    a = small_volume()
    b = small_volume()
    assert a == b
    b.voxels[0, 0, 0] += 1
    assert a != b
    assert a != "not a volume"


@settings(max_examples=25, deadline=None)
@given(
    arr=hnp.arrays(
        dtype=np.uint32,
        shape=hnp.array_shapes(min_dims=3, max_dims=3, min_side=1, max_side=6),
        elements=st.integers(min_value=0, max_value=2**32 - 1),
    )
)
def test_round_trip_property(tmp_path_factory, arr):
    path = tmp_path_factory.mktemp("vol") / "v.vol3d"
    vol = new_volume(arr, KIND_INSTANCE)
    write_volume(vol, path)
    assert read_volume(path) == vol

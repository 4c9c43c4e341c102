"""Dense 3D label volume I/O in a portable, bit-exact binary format.

The on-disk format (".vol3d") is a text header followed by a raw payload:

    shape=Z,Y,X
    kind=instance_labels|binary_mask
    width=4
    order=zyx
    <blank line>
    Z*Y*X little-endian unsigned 32-bit integers

The header is ASCII key=value lines terminated by one blank line, so the
format can be read or written from any language without third-party
parsers. Voxels are stored z-major: index = z*(Y*X) + y*X + x. Round
trips are byte-identical.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import VolumeFormatError

KIND_INSTANCE = "instance_labels"
KIND_MASK = "binary_mask"
_KINDS = (KIND_INSTANCE, KIND_MASK)
_ELEMENT_WIDTH = 4
_STORAGE_ORDER = "zyx"


@dataclass(frozen=True)
class VolumeHeader:
    """Shape and value-kind metadata for one stored volume.

    Attributes:
        shape: (z, y, x) voxel counts, all positive.
        value_kind: "instance_labels" or "binary_mask".
        element_width: Bytes per voxel, fixed at 4 (unsigned little-endian).
        storage_order: Fixed "zyx" (z-major linearization).
    """

    shape: tuple[int, int, int]
    value_kind: str
    element_width: int = _ELEMENT_WIDTH
    storage_order: str = _STORAGE_ORDER

    def validate(self) -> None:
        """Raise VolumeFormatError when any header invariant fails."""
        if len(self.shape) != 3 or any(
            not isinstance(c, int) or c < 1 for c in self.shape
        ):
            raise VolumeFormatError(
                f"shape must be three positive integers, got {self.shape!r}"
            )
        if self.value_kind not in _KINDS:
            raise VolumeFormatError(f"unknown value kind {self.value_kind!r}")
        if self.element_width != _ELEMENT_WIDTH:
            raise VolumeFormatError(
                f"element width must be {_ELEMENT_WIDTH}, got {self.element_width}"
            )
        if self.storage_order != _STORAGE_ORDER:
            raise VolumeFormatError(
                f"storage order must be {_STORAGE_ORDER!r}, got {self.storage_order!r}"
            )

    @property
    def voxel_count(self) -> int:
        z, y, x = self.shape
        return z * y * x

    @property
    def payload_bytes(self) -> int:
        return self.voxel_count * self.element_width


class LabelVolume:
    """A dense 3D grid of 32-bit instance identifiers, 0 = background.

    Attributes:
        header: The VolumeHeader describing shape and value kind.
        voxels: C-contiguous uint32 array of header.shape.
    """

    def __init__(self, header: VolumeHeader, voxels: np.ndarray) -> None:
        self.header = header
        self.voxels = voxels

    def validate(self) -> None:
        """Raise VolumeFormatError when any volume invariant fails."""
        self.header.validate()
        if tuple(self.voxels.shape) != self.header.shape:
            raise VolumeFormatError(
                f"voxel array shape {tuple(self.voxels.shape)} does not match "
                f"header shape {self.header.shape}"
            )
        if self.voxels.dtype != np.uint32:
            raise VolumeFormatError(
                f"voxel dtype must be uint32, got {self.voxels.dtype}"
            )
        if self.header.value_kind == KIND_MASK and self.voxels.size:
            if int(self.voxels.max()) > 1:
                raise VolumeFormatError(
                    "binary_mask volume contains values greater than 1"
                )

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, LabelVolume):
            return NotImplemented
        return self.header == other.header and np.array_equal(self.voxels, other.voxels)

    def __repr__(self) -> str:
        return f"LabelVolume(shape={self.header.shape}, kind={self.header.value_kind!r})"


def new_volume(voxels: np.ndarray, value_kind: str = KIND_INSTANCE) -> LabelVolume:
    """Build a validated LabelVolume from any non-negative integer array.

    Args:
        voxels: 3D integer array; values must fit in uint32.
        value_kind: "instance_labels" or "binary_mask".

    Raises:
        VolumeFormatError: On bad shape, negative or oversized values, or a
            binary_mask containing values above 1.
    """
    arr = np.asarray(voxels)
    if arr.ndim != 3:
        raise VolumeFormatError(f"voxel array must be 3D, got {arr.ndim}D")
    if not np.issubdtype(arr.dtype, np.integer) and arr.dtype != np.bool_:
        raise VolumeFormatError(f"voxel dtype must be integral, got {arr.dtype}")
    if arr.size and arr.dtype != np.bool_:
        lo = int(arr.min())
        hi = int(arr.max())
        if lo < 0 or hi > 0xFFFFFFFF:
            raise VolumeFormatError(
                f"voxel values must lie in [0, 2^32), found range [{lo}, {hi}]"
            )
    vol = LabelVolume(
        VolumeHeader(shape=tuple(int(c) for c in arr.shape), value_kind=value_kind),
        np.ascontiguousarray(arr, dtype=np.uint32),
    )
    vol.validate()
    return vol


def _header_bytes(header: VolumeHeader) -> bytes:
    lines = (
        f"shape={header.shape[0]},{header.shape[1]},{header.shape[2]}\n"
        f"kind={header.value_kind}\n"
        f"width={header.element_width}\n"
        f"order={header.storage_order}\n"
        "\n"
    )
    return lines.encode("ascii")


def _parse_header(raw: bytes, path: Path) -> VolumeHeader:
    try:
        text = raw.decode("ascii")
    except UnicodeDecodeError as exc:
        raise VolumeFormatError(f"{path}: malformed header: not ASCII") from exc
    fields: dict[str, str] = {}
    for line in text.splitlines():
        if "=" not in line:
            raise VolumeFormatError(f"{path}: malformed header line {line!r}")
        key, _, value = line.partition("=")
        if key in fields:
            raise VolumeFormatError(f"{path}: malformed header: duplicate key {key!r}")
        fields[key] = value
    expected = {"shape", "kind", "width", "order"}
    if set(fields) != expected:
        raise VolumeFormatError(
            f"{path}: malformed header: keys {sorted(fields)} != {sorted(expected)}"
        )
    parts = fields["shape"].split(",")
    if len(parts) != 3 or not all(p.isdigit() and p for p in parts):
        raise VolumeFormatError(f"{path}: malformed header shape {fields['shape']!r}")
    shape = tuple(int(p) for p in parts)
    if not fields["width"].isdigit():
        raise VolumeFormatError(f"{path}: malformed header width {fields['width']!r}")
    header = VolumeHeader(
        shape=shape,
        value_kind=fields["kind"],
        element_width=int(fields["width"]),
        storage_order=fields["order"],
    )
    try:
        header.validate()
    except VolumeFormatError as exc:
        raise VolumeFormatError(f"{path}: malformed header: {exc}") from None
    return header


def read_volume(path: str | Path) -> LabelVolume:
    """Read a .vol3d file into a validated LabelVolume.

    Args:
        path: File to read.

    Raises:
        FileNotFoundError: If path does not exist.
        VolumeFormatError: On malformed header, payload length mismatch, or
            a binary_mask payload containing values above 1.
    """
    p = Path(path)
    if not p.is_file():
        raise FileNotFoundError(f"volume file not found: {p}")
    blob = p.read_bytes()
    sep = blob.find(b"\n\n")
    if sep < 0:
        raise VolumeFormatError(f"{p}: malformed header: missing blank-line terminator")
    header = _parse_header(blob[:sep], p)
    payload = blob[sep + 2 :]
    if len(payload) != header.payload_bytes:
        raise VolumeFormatError(
            f"{p}: payload length mismatch: expected {header.payload_bytes} bytes, "
            f"found {len(payload)}"
        )
    voxels = (
        np.frombuffer(payload, dtype="<u4")
        .reshape(header.shape)
        .astype(np.uint32, copy=True)
    )
    vol = LabelVolume(header, voxels)
    vol.validate()
    return vol


def write_volume(vol: LabelVolume, path: str | Path) -> None:
    """Write a LabelVolume to path in .vol3d format.

    Output bytes are a pure function of the volume, so identical volumes
    produce identical files. The volume is validated before any write, so
    an invalid volume leaves no partial file behind.

    Args:
        vol: Volume to store.
        path: Destination file.

    Raises:
        VolumeFormatError: If vol violates an invariant.
        OSError: If the destination is unwritable.
    """
    vol.validate()
    p = Path(path)
    payload = np.ascontiguousarray(vol.voxels, dtype="<u4").tobytes()
    p.write_bytes(_header_bytes(vol.header) + payload)

"""Volume padding, patch extraction, and reassembly.

A volume is padded at the high end of each axis to the next multiple of
the patch shape (end-padding keeps patch offsets = grid_index *
patch_shape), then cut into a non-overlapping grid of fixed-size patches.
Reassembly places every patch back and crops the padding, so
reassemble(tile(v)) == v voxel for voxel.

Padding modes:
    zero: padded margin voxels are 0.
    reflect: mirror about the last in-bounds plane, without duplicating
        the edge plane, e.g. [a, b, c] padded to length 5 -> [a, b, c, b, a].
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

import numpy as np

from .errors import GridError
from .volume_io import LabelVolume, VolumeHeader

PAD_ZERO = "zero"
PAD_REFLECT = "reflect"
_PAD_MODES = (PAD_ZERO, PAD_REFLECT)

GRID_MANIFEST_VERSION = 1


@dataclass(frozen=True)
class PatchSpec:
    """Geometry of one tiling: shapes, padding, and grid dimensions.

    Attributes:
        patch_shape: (z, y, x) size of every patch.
        pad_mode: "zero" or "reflect".
        original_shape: (z, y, x) of the source volume.
        padded_shape: original rounded up to patch_shape multiples.
        grid_dims: (nz, ny, nx) patch counts per axis.
    """

    patch_shape: tuple[int, int, int]
    pad_mode: str
    original_shape: tuple[int, int, int]
    padded_shape: tuple[int, int, int]
    grid_dims: tuple[int, int, int]

    @property
    def patch_count(self) -> int:
        nz, ny, nx = self.grid_dims
        return nz * ny * nx


@dataclass(frozen=True)
class PatchId:
    """Identity of one patch: source volume name plus grid position."""

    volume_name: str
    grid_index: tuple[int, int, int]


def plan_grid(
    original_shape: tuple[int, int, int],
    patch_shape: tuple[int, int, int],
    pad_mode: str = PAD_REFLECT,
) -> PatchSpec:
    """Compute the padded shape and grid dimensions for a tiling.

    Args:
        original_shape: (z, y, x) of the volume to tile, all >= 1.
        patch_shape: (z, y, x) patch size, all >= 1.
        pad_mode: "zero" or "reflect".

    Returns:
        A PatchSpec with padded_shape[i] = ceil(original[i]/patch[i]) *
        patch[i] and grid_dims[i] = padded[i] / patch[i].

    Raises:
        GridError: On a zero- or negative-sized axis or unknown pad mode.
    """
    if pad_mode not in _PAD_MODES:
        raise GridError(f"unknown pad mode {pad_mode!r}, expected one of {_PAD_MODES}")
    for name, shape in (("original", original_shape), ("patch", patch_shape)):
        if len(shape) != 3 or any(int(c) < 1 for c in shape):
            raise GridError(f"{name} shape must be three positive integers, got {shape}")
    original = tuple(int(c) for c in original_shape)
    patch = tuple(int(c) for c in patch_shape)
    grid = tuple(math.ceil(o / p) for o, p in zip(original, patch))
    padded = tuple(g * p for g, p in zip(grid, patch))
    return PatchSpec(
        patch_shape=patch,
        pad_mode=pad_mode,
        original_shape=original,
        padded_shape=padded,
        grid_dims=grid,
    )


def _reflect_index_map(length: int, padded: int) -> np.ndarray:
    # Mirror about the last in-bounds plane without duplicating it; numpy's
    # "reflect" pad has exactly that convention and handles pads longer than
    # the axis by bouncing repeatedly.
    return np.pad(np.arange(length, dtype=np.int64), (0, padded - length), mode="reflect")


def _check_id(spec: PatchSpec, pid: PatchId) -> None:
    idx = pid.grid_index
    if len(idx) != 3 or any(int(i) < 0 for i in idx):
        raise GridError(f"grid index must be three non-negative integers, got {idx}")
    if any(int(i) >= d for i, d in zip(idx, spec.grid_dims)):
        raise GridError(f"grid index {tuple(idx)} outside grid dims {spec.grid_dims}")


def extract_patch(vol: LabelVolume, spec: PatchSpec, pid: PatchId) -> LabelVolume:
    """Extract one patch, padding margins according to spec.pad_mode.

    Args:
        vol: Source volume; shape must equal spec.original_shape.
        spec: Tiling geometry.
        pid: Which grid cell to extract.

    Returns:
        A LabelVolume of spec.patch_shape with vol's value kind. Voxels
        inside the original extent copy the source; margin voxels follow
        the pad mode.

    Raises:
        GridError: On an out-of-range id or shape mismatch.
    """
    _check_id(spec, pid)
    if tuple(vol.voxels.shape) != spec.original_shape:
        raise GridError(
            f"volume shape {tuple(vol.voxels.shape)} does not match "
            f"spec original shape {spec.original_shape}"
        )
    starts = [int(i) * p for i, p in zip(pid.grid_index, spec.patch_shape)]
    stops = [s + p for s, p in zip(starts, spec.patch_shape)]
    if spec.pad_mode == PAD_REFLECT:
        maps = [
            _reflect_index_map(n, pn)[sl]
            for n, pn, sl in zip(
                spec.original_shape,
                spec.padded_shape,
                (slice(a, b) for a, b in zip(starts, stops)),
            )
        ]
        block = vol.voxels[np.ix_(*maps)]
    else:
        block = np.zeros(spec.patch_shape, dtype=np.uint32)
        ins = [slice(s, min(e, n)) for s, e, n in zip(starts, stops, spec.original_shape)]
        if all(s.start < s.stop for s in ins):
            spans = [slice(0, s.stop - s.start) for s in ins]
            block[tuple(spans)] = vol.voxels[tuple(ins)]
    return LabelVolume(
        VolumeHeader(shape=spec.patch_shape, value_kind=vol.header.value_kind),
        np.ascontiguousarray(block, dtype=np.uint32),
    )


def tile(
    vol: LabelVolume, spec: PatchSpec, volume_name: str
) -> dict[PatchId, LabelVolume]:
    """Extract every patch of the grid in z-major grid order.

    Args:
        vol: Source volume matching spec.original_shape.
        spec: Tiling geometry.
        volume_name: Name stamped into every PatchId.

    Returns:
        Mapping from PatchId to patch volume, one entry per grid cell.
    """
    out: dict[PatchId, LabelVolume] = {}
    nz, ny, nx = spec.grid_dims
    for iz in range(nz):
        for iy in range(ny):
            for ix in range(nx):
                pid = PatchId(volume_name=volume_name, grid_index=(iz, iy, ix))
                out[pid] = extract_patch(vol, spec, pid)
    return out


def reassemble(patches: Mapping[PatchId, LabelVolume], spec: PatchSpec) -> LabelVolume:
    """Rebuild the original volume from a complete patch set.

    Args:
        patches: Exactly one patch per grid cell, each of spec.patch_shape.
        spec: Tiling geometry.

    Returns:
        A LabelVolume of spec.original_shape; the padded margin is dropped.

    Raises:
        GridError: On a missing or extraneous PatchId, mixed volume names or
            value kinds, or a wrong patch shape.
    """
    if not patches:
        raise GridError("reassemble requires at least one patch")
    names = {pid.volume_name for pid in patches}
    if len(names) > 1:
        raise GridError(f"patches mix volume names {sorted(names)}")
    name = next(iter(names))
    kinds = {p.header.value_kind for p in patches.values()}
    if len(kinds) > 1:
        raise GridError(f"patches mix value kinds {sorted(kinds)}")
    nz, ny, nx = spec.grid_dims
    expected = {
        PatchId(name, (iz, iy, ix))
        for iz in range(nz)
        for iy in range(ny)
        for ix in range(nx)
    }
    extra = set(patches) - expected
    if extra:
        pid = sorted(extra, key=lambda q: q.grid_index)[0]
        raise GridError(f"unexpected patch at grid index {pid.grid_index}")
    missing = expected - set(patches)
    if missing:
        pid = sorted(missing, key=lambda q: q.grid_index)[0]
        raise GridError(f"missing patch at grid index {pid.grid_index}")
    padded = np.zeros(spec.padded_shape, dtype=np.uint32)
    for pid, patch in patches.items():
        if tuple(patch.voxels.shape) != spec.patch_shape:
            raise GridError(
                f"patch {pid.grid_index} has shape {tuple(patch.voxels.shape)}, "
                f"expected {spec.patch_shape}"
            )
        starts = [int(i) * p for i, p in zip(pid.grid_index, spec.patch_shape)]
        spans = tuple(slice(s, s + p) for s, p in zip(starts, spec.patch_shape))
        padded[spans] = patch.voxels
    crop = tuple(slice(0, n) for n in spec.original_shape)
    kind = next(iter(kinds))
    return LabelVolume(
        VolumeHeader(shape=spec.original_shape, value_kind=kind),
        np.ascontiguousarray(padded[crop]),
    )


def patch_filename(pid: PatchId) -> str:
    """Return the on-disk name `<volume_name>_z<iz>_y<iy>_x<ix>.vol3d`."""
    iz, iy, ix = pid.grid_index
    return f"{pid.volume_name}_z{iz}_y{iy}_x{ix}.vol3d"


def write_grid_manifest(spec: PatchSpec, volume_name: str, path: str | Path) -> None:
    """Write the grid manifest: spec fields plus every patch filename.

    The manifest lists patches in z-major grid order so the file is a
    deterministic function of (spec, volume_name).
    """
    lines = [
        f"format_version={GRID_MANIFEST_VERSION}",
        f"volume_name={volume_name}",
        "original_shape=" + ",".join(str(c) for c in spec.original_shape),
        "patch_shape=" + ",".join(str(c) for c in spec.patch_shape),
        f"pad_mode={spec.pad_mode}",
        "padded_shape=" + ",".join(str(c) for c in spec.padded_shape),
        "grid_dims=" + ",".join(str(c) for c in spec.grid_dims),
    ]
    nz, ny, nx = spec.grid_dims
    for iz in range(nz):
        for iy in range(ny):
            for ix in range(nx):
                lines.append(f"patch={patch_filename(PatchId(volume_name, (iz, iy, ix)))}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="ascii")


def read_grid_manifest(path: str | Path) -> tuple[PatchSpec, str, list[str]]:
    """Read a grid manifest back into (spec, volume_name, patch filenames).

    Raises:
        GridError: On malformed or version-mismatched manifests.
    """
    text = Path(path).read_text(encoding="ascii")
    fields: dict[str, str] = {}
    filenames: list[str] = []
    for line in text.splitlines():
        if not line:
            continue
        key, _, value = line.partition("=")
        if key == "patch":
            filenames.append(value)
        elif key in fields:
            raise GridError(f"{path}: duplicate manifest key {key!r}")
        else:
            fields[key] = value
    required = {
        "format_version",
        "volume_name",
        "original_shape",
        "patch_shape",
        "pad_mode",
        "padded_shape",
        "grid_dims",
    }
    if not required.issubset(fields):
        raise GridError(f"{path}: manifest missing keys {sorted(required - set(fields))}")
    if fields["format_version"] != str(GRID_MANIFEST_VERSION):
        raise GridError(f"{path}: unsupported manifest version {fields['format_version']!r}")

    def _triple(key: str) -> tuple[int, int, int]:
        parts = fields[key].split(",")
        if len(parts) != 3 or not all(re.fullmatch(r"\d+", p) for p in parts):
            raise GridError(f"{path}: malformed {key} {fields[key]!r}")
        return tuple(int(p) for p in parts)

    spec = plan_grid(_triple("original_shape"), _triple("patch_shape"), fields["pad_mode"])
    if spec.padded_shape != _triple("padded_shape") or spec.grid_dims != _triple("grid_dims"):
        raise GridError(f"{path}: manifest geometry is internally inconsistent")
    return spec, fields["volume_name"], filenames

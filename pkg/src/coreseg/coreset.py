"""Embedding-space sample selection: k-center greedy and random baseline.

Selection operates on row-normalized embeddings under the cosine distance
d(i, j) = 1 - <e_i, e_j>, clamped to [0, 2]. k-center greedy starts from
k_init uniformly drawn items and then repeatedly adds the item whose
minimum distance to the selected set is largest (farthest-point
sampling), recording the coverage radius after every pick. Distance rows
are always produced by the same matrix-vector product, whether they come
from a precomputed DistanceMatrix or are computed on the fly, so both
routes yield bit-identical manifests.

Randomness is pinned to the SplitMix64 generator documented in
coreseg.rng, so a manifest is reproducible from (method, rng_seed,
k_init, budget) on any platform.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import _kernels
from .errors import InternalError, SelectionError
from .rng import SplitMix64

SELECTION_MANIFEST_VERSION = 1

METHOD_CORESET = "coreset"
METHOD_RANDOM = "random"


@dataclass
class EmbeddingMatrix:
    """N x Dim feature matrix with per-row item identifiers.

    Attributes:
        ids: Unique item identifiers, one per row.
        values: (N, Dim) float64 array of finite features.
        normalized: True when every row has unit L2 norm.
    """

    ids: list[str]
    values: np.ndarray
    normalized: bool = False

    def validate(self) -> None:
        """Raise SelectionError when any invariant fails."""
        if self.values.ndim != 2 or self.values.shape[0] < 1 or self.values.shape[1] < 1:
            raise SelectionError(
                f"embedding matrix must be (N >= 1, Dim >= 1), got {self.values.shape}"
            )
        if len(self.ids) != self.values.shape[0]:
            raise SelectionError(
                f"{len(self.ids)} ids for {self.values.shape[0]} embedding rows"
            )
        if len(set(self.ids)) != len(self.ids):
            raise SelectionError("embedding ids must be unique")
        if not np.isfinite(self.values).all():
            raise SelectionError("embedding matrix contains non-finite entries")
        if self.normalized:
            norms = np.linalg.norm(self.values, axis=1)
            if not np.all(np.abs(norms - 1.0) <= 1e-6):
                raise SelectionError("normalized flag set but rows are not unit norm")


@dataclass
class DistanceMatrix:
    """N x N symmetric cosine-distance matrix with entries in [0, 2]."""

    size: int
    entries: np.ndarray
    ids: list[str] | None = None

    def validate(self) -> None:
        """Raise SelectionError when any invariant fails."""
        if self.entries.shape != (self.size, self.size):
            raise SelectionError(
                f"entries shape {self.entries.shape} does not match size {self.size}"
            )
        if not np.allclose(self.entries, self.entries.T, atol=1e-6, rtol=0.0):
            raise SelectionError("distance matrix is not symmetric within 1e-6")
        if np.any(np.abs(np.diagonal(self.entries)) > 1e-6):
            raise SelectionError("distance matrix diagonal exceeds 1e-6")
        if self.entries.size and (self.entries.min() < 0.0 or self.entries.max() > 2.0):
            raise SelectionError("distance entries fall outside [0, 2]")


@dataclass
class SelectionManifest:
    """Ordered record of one selection run.

    Attributes:
        method: "coreset" or "random".
        rng_seed: Seed of the documented SplitMix64 generator.
        k_init: Count of random initial picks (equals budget for random
            selection, where every pick is random).
        budget: Target selection size.
        selected: Chosen item identifiers in pick order.
        radius_trace: Coverage radius after each pick; empty when no
            embedding data was available to compute it.
    """

    method: str
    rng_seed: int
    k_init: int
    budget: int
    selected: list[str] = field(default_factory=list)
    radius_trace: list[float] = field(default_factory=list)

    def validate(self, source_ids: Sequence[str] | None = None) -> None:
        """Raise SelectionError when any invariant fails.

        Args:
            source_ids: When given, every selected id must appear in it.
        """
        if self.method not in (METHOD_CORESET, METHOD_RANDOM):
            raise SelectionError(f"unknown selection method {self.method!r}")
        if len(self.selected) != self.budget:
            raise SelectionError(
                f"{len(self.selected)} selected ids for budget {self.budget}"
            )
        if len(set(self.selected)) != len(self.selected):
            raise SelectionError("selected ids are not unique")
        if source_ids is not None:
            known = set(source_ids)
            for item in self.selected:
                if item not in known:
                    raise SelectionError(f"selected id {item!r} not in source ids")
        if self.radius_trace and self.method == METHOD_CORESET:
            for a, b in zip(self.radius_trace, self.radius_trace[1:]):
                if b > a:
                    raise SelectionError("coreset radius trace is not non-increasing")


def normalize_rows(E: EmbeddingMatrix) -> EmbeddingMatrix:
    """Scale every embedding row to unit L2 norm.

    Args:
        E: Source matrix; rows with norm below 1e-12 are rejected.

    Returns:
        A new EmbeddingMatrix with the normalized flag set and ids
        preserved in order.

    Raises:
        SelectionError: On a zero or near-zero row, reported with its id.
    """
    E.validate()
    values = np.ascontiguousarray(E.values, dtype=np.float64)
    norms = np.linalg.norm(values, axis=1)
    bad = np.flatnonzero(norms < 1e-12)
    if bad.size:
        raise SelectionError(
            f"zero-norm embedding row for id {E.ids[int(bad[0])]!r}"
        )
    return EmbeddingMatrix(
        ids=list(E.ids), values=values / norms[:, None], normalized=True
    )


def _distance_row(values: np.ndarray, i: int) -> np.ndarray:
    # The single definition of a cosine-distance row. Greedy selection and
    # cosine_distance_matrix both call this, which is what makes the
    # precomputed-matrix and on-the-fly routes bit-identical.
    row = 1.0 - values @ values[i]
    np.clip(row, 0.0, 2.0, out=row)
    return row


def cosine_distance_matrix(E: EmbeddingMatrix) -> DistanceMatrix:
    """Compute the full cosine-distance matrix d = 1 - E.E^T.

    Args:
        E: A normalized EmbeddingMatrix.

    Returns:
        A DistanceMatrix with entries clamped to [0, 2] and a zero
        diagonal.

    Raises:
        SelectionError: If E is not normalized.
    """
    if not E.normalized:
        raise SelectionError("cosine_distance_matrix requires normalized embeddings")
    E.validate()
    values = np.ascontiguousarray(E.values, dtype=np.float64)
    n = values.shape[0]
    entries = np.empty((n, n), dtype=np.float64)
    for i in range(n):
        entries[i] = _distance_row(values, i)
    np.fill_diagonal(entries, 0.0)
    return DistanceMatrix(size=n, entries=entries, ids=list(E.ids))


def _as_normalized(E: EmbeddingMatrix) -> EmbeddingMatrix:
    return E if E.normalized else normalize_rows(E)


def kcenter_greedy(
    E: EmbeddingMatrix,
    budget: int,
    k_init: int = 3,
    rng_seed: int = 0,
    distances: DistanceMatrix | None = None,
    use_numba: bool | None = None,
) -> SelectionManifest:
    """Select a core-set by k-center greedy (farthest-point) sampling.

    The first k_init items are drawn uniformly without replacement by the
    seeded generator; each later pick is the unselected item with the
    largest minimum distance to the selected set, lowest index on ties.
    The coverage radius (max over unselected of min distance to selected)
    is recorded after every pick, so radius_trace has budget entries and
    is non-increasing.

    Args:
        E: Embedding matrix; normalized internally when needed.
        budget: Total picks, including the k_init random ones.
        k_init: Random initial picks, 1 <= k_init <= budget.
        rng_seed: Seed for the documented SplitMix64 generator.
        distances: Optional precomputed DistanceMatrix to read rows from;
            the selection is identical either way.
        use_numba: Force a kernel path; None picks the package default.

    Returns:
        A validated SelectionManifest with method "coreset".

    Raises:
        SelectionError: If budget exceeds the item count or k_init is
            outside [1, budget].
    """
    En = _as_normalized(E)
    n = len(En.ids)
    if budget > n:
        raise SelectionError(f"budget {budget} exceeds item count {n}")
    if not 1 <= k_init <= budget:
        raise SelectionError(f"k_init {k_init} outside [1, budget={budget}]")
    if distances is not None:
        distances.validate()
        if distances.size != n:
            raise SelectionError(
                f"distance matrix size {distances.size} does not match {n} items"
            )
    values = np.ascontiguousarray(En.values, dtype=np.float64)

    def row_of(i: int) -> np.ndarray:
        if distances is not None:
            return np.ascontiguousarray(distances.entries[i], dtype=np.float64)
        return _distance_row(values, i)

    init = SplitMix64(rng_seed).sample(n, k_init)
    selected_mask = np.zeros(n, dtype=np.bool_)
    min_d = np.full(n, np.inf, dtype=np.float64)
    order: list[int] = []
    trace: list[float] = []
    next_pick = -1
    for step in range(budget):
        pick = init[step] if step < k_init else next_pick
        if pick < 0:
            raise InternalError("greedy ran out of candidates before the budget")
        selected_mask[pick] = True
        order.append(pick)
        next_pick = _kernels.min_update_argmax(
            min_d, row_of(pick), selected_mask, use_numba
        )
        trace.append(float(min_d[next_pick]) if next_pick >= 0 else 0.0)
    manifest = SelectionManifest(
        method=METHOD_CORESET,
        rng_seed=rng_seed,
        k_init=k_init,
        budget=budget,
        selected=[En.ids[i] for i in order],
        radius_trace=trace,
    )
    manifest.validate(En.ids)
    return manifest


def random_select(
    ids: Sequence[str],
    budget: int,
    rng_seed: int = 0,
    embeddings: EmbeddingMatrix | None = None,
    use_numba: bool | None = None,
) -> SelectionManifest:
    """Select a uniform random subset as the baseline strategy.

    Args:
        ids: Item identifiers to draw from.
        budget: Number of picks.
        rng_seed: Seed for the documented SplitMix64 generator.
        embeddings: Optional embeddings for the same ids; when given, the
            coverage radius is recorded after every pick for reporting.
            The trace is diagnostic only and is unconstrained.
        use_numba: Force a kernel path; None picks the package default.

    Returns:
        A validated SelectionManifest with method "random" and k_init =
        budget (every pick is random).

    Raises:
        SelectionError: If budget exceeds the item count or embeddings ids
            disagree with ids.
    """
    n = len(ids)
    if budget > n:
        raise SelectionError(f"budget {budget} exceeds item count {n}")
    order = SplitMix64(rng_seed).sample(n, budget)
    trace: list[float] = []
    if embeddings is not None and budget > 0:
        En = _as_normalized(embeddings)
        if list(En.ids) != list(ids):
            raise SelectionError("embeddings ids do not match the id list")
        values = np.ascontiguousarray(En.values, dtype=np.float64)
        selected_mask = np.zeros(n, dtype=np.bool_)
        min_d = np.full(n, np.inf, dtype=np.float64)
        for pick in order:
            selected_mask[pick] = True
            nxt = _kernels.min_update_argmax(
                min_d, _distance_row(values, pick), selected_mask, use_numba
            )
            trace.append(float(min_d[nxt]) if nxt >= 0 else 0.0)
    manifest = SelectionManifest(
        method=METHOD_RANDOM,
        rng_seed=rng_seed,
        k_init=budget,
        budget=budget,
        selected=[ids[i] for i in order],
        radius_trace=trace,
    )
    manifest.validate(ids)
    return manifest


def coverage_radius(d: DistanceMatrix, selected: Sequence[str] | Sequence[int]) -> float:
    """Return the k-center objective of a selection.

    Args:
        d: Distance matrix; must carry ids when selected holds strings.
        selected: Non-empty ids or row indices of the selected set.

    Returns:
        Max over unselected items of the min distance to any selected
        item; 0.0 when every item is selected.

    Raises:
        SelectionError: On an empty selection or unknown id/index.
    """
    d.validate()
    items = list(selected)
    if not items:
        raise SelectionError("coverage_radius requires a non-empty selection")
    if isinstance(items[0], str):
        if d.ids is None:
            raise SelectionError("distance matrix carries no ids to resolve names")
        index_of = {item: i for i, item in enumerate(d.ids)}
        try:
            idx = [index_of[item] for item in items]
        except KeyError as exc:
            raise SelectionError(f"unknown selected id {exc.args[0]!r}") from None
    else:
        idx = [int(i) for i in items]
        if any(i < 0 or i >= d.size for i in idx):
            raise SelectionError("selected index outside the distance matrix")
    mask = np.zeros(d.size, dtype=np.bool_)
    mask[idx] = True
    if mask.all():
        return 0.0
    sub = d.entries[np.ix_(~mask, mask)]
    return float(sub.min(axis=1).max())


def write_embeddings(E: EmbeddingMatrix, stem: str | Path) -> None:
    """Write the three-file embedding set <stem>.meta/.f32/.ids.

    The meta file holds count/dim/dtype, the .f32 file the row-major
    little-endian float32 payload, and the .ids file one identifier per
    line, order-aligned with the rows.
    """
    E.validate()
    n, dim = E.values.shape
    Path(f"{stem}.meta").write_text(
        f"count={n}\ndim={dim}\ndtype=f32le\n", encoding="ascii"
    )
    Path(f"{stem}.f32").write_bytes(
        np.ascontiguousarray(E.values, dtype="<f4").tobytes()
    )
    Path(f"{stem}.ids").write_text(
        "".join(f"{item}\n" for item in E.ids), encoding="utf-8"
    )


def read_embeddings(stem: str | Path) -> EmbeddingMatrix:
    """Read an embedding set written by write_embeddings.

    Returns:
        An EmbeddingMatrix with float64 values and normalized = False.

    Raises:
        FileNotFoundError: If any of the three files is missing.
        SelectionError: On malformed metadata or count mismatches.
    """
    meta_path = Path(f"{stem}.meta")
    payload_path = Path(f"{stem}.f32")
    ids_path = Path(f"{stem}.ids")
    for p in (meta_path, payload_path, ids_path):
        if not p.is_file():
            raise FileNotFoundError(f"embedding file not found: {p}")
    fields: dict[str, str] = {}
    for line in meta_path.read_text(encoding="ascii").splitlines():
        if not line:
            continue
        key, _, value = line.partition("=")
        fields[key] = value
    try:
        count = int(fields["count"])
        dim = int(fields["dim"])
        dtype = fields["dtype"]
    except (KeyError, ValueError) as exc:
        raise SelectionError(f"{meta_path}: malformed embedding metadata") from exc
    if dtype != "f32le":
        raise SelectionError(f"{meta_path}: unsupported dtype {dtype!r}")
    raw = payload_path.read_bytes()
    if len(raw) != count * dim * 4:
        raise SelectionError(
            f"{payload_path}: payload holds {len(raw)} bytes, expected {count * dim * 4}"
        )
    values = np.frombuffer(raw, dtype="<f4").reshape(count, dim).astype(np.float64)
    ids = ids_path.read_text(encoding="utf-8").splitlines()
    if len(ids) != count:
        raise SelectionError(
            f"{ids_path}: {len(ids)} ids for {count} embedding rows"
        )
    E = EmbeddingMatrix(ids=ids, values=values, normalized=False)
    E.validate()
    return E


def write_selection_manifest(manifest: SelectionManifest, path: str | Path) -> None:
    """Write a manifest as a key/value block plus the ordered id list."""
    manifest.validate()
    lines = [
        f"format_version={SELECTION_MANIFEST_VERSION}",
        f"method={manifest.method}",
        f"rng_seed={manifest.rng_seed}",
        f"k_init={manifest.k_init}",
        f"budget={manifest.budget}",
        "radius_trace=" + ",".join(repr(v) for v in manifest.radius_trace),
        "selected:",
    ]
    lines.extend(manifest.selected)
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_selection_manifest(path: str | Path) -> SelectionManifest:
    """Read a manifest written by write_selection_manifest.

    Raises:
        SelectionError: On malformed or version-mismatched manifests.
    """
    text = Path(path).read_text(encoding="utf-8")
    lines = text.splitlines()
    fields: dict[str, str] = {}
    selected: list[str] = []
    in_ids = False
    for line in lines:
        if in_ids:
            if line:
                selected.append(line)
            continue
        if line == "selected:":
            in_ids = True
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise SelectionError(f"{path}: malformed manifest line {line!r}")
        fields[key] = value
    try:
        if fields["format_version"] != str(SELECTION_MANIFEST_VERSION):
            raise SelectionError(
                f"{path}: unsupported manifest version {fields['format_version']!r}"
            )
        trace_text = fields["radius_trace"]
        manifest = SelectionManifest(
            method=fields["method"],
            rng_seed=int(fields["rng_seed"]),
            k_init=int(fields["k_init"]),
            budget=int(fields["budget"]),
            selected=selected,
            radius_trace=[float(v) for v in trace_text.split(",")] if trace_text else [],
        )
    except (KeyError, ValueError) as exc:
        raise SelectionError(f"{path}: malformed selection manifest") from exc
    manifest.validate()
    return manifest

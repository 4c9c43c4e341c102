"""Instance matching by IoU and the derived metric suite.

Predicted and ground-truth instances are matched by strict IoU >
threshold with a threshold of at least 0.5, the regime where matching is
provably unique: a predicted instance cannot exceed 0.5 IoU with two
disjoint ground-truth instances. Matched, unmatched-predicted, and
unmatched-truth instances become TP, FP, and FN, from which the suite is
derived:

    precision = tp / (tp + fp)            recall = tp / (tp + fn)
    f1        = 2 tp / (2 tp + fp + fn)   accuracy = tp / (tp + fp + fn)
    sq        = (sum of matched IoU) / tp
    rq        = f1
    pq        = sq * rq = (sum of matched IoU) / (tp + fp/2 + fn/2)

Every ratio with a zero denominator scores 0. The identity
f1 = 2 * accuracy / (1 + accuracy) holds algebraically, and pq <= f1 with
equality iff every match has IoU 1. Background (label 0) never
participates in matching.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import InternalError, MetricsError
from .volume_io import LabelVolume

CSV_COLUMNS = (
    "budget",
    "tp",
    "fp",
    "fn",
    "precision",
    "recall",
    "f1",
    "accuracy",
    "sq",
    "rq",
    "pq",
    "iou_threshold",
)


@dataclass(frozen=True)
class MatchResult:
    """Outcome of IoU matching between two instance volumes.

    Attributes:
        matches: (pred_id, gt_id, iou) triples, ascending by pred_id, with
            every iou strictly above iou_threshold.
        unmatched_pred: Predicted ids with no match (the FP set), ascending.
        unmatched_gt: Ground-truth ids with no match (the FN set), ascending.
        iou_threshold: The strict matching threshold, in [0.5, 1).
    """

    matches: tuple[tuple[int, int, float], ...]
    unmatched_pred: tuple[int, ...]
    unmatched_gt: tuple[int, ...]
    iou_threshold: float

    @property
    def sum_iou(self) -> float:
        return sum(iou for _, _, iou in self.matches)


@dataclass(frozen=True)
class MetricsRecord:
    """Matching counts and every derived score."""

    tp: int
    fp: int
    fn: int
    precision: float
    recall: float
    f1: float
    accuracy: float
    sq: float
    rq: float
    pq: float

    @classmethod
    def from_counts(cls, tp: int, fp: int, fn: int, sum_iou: float) -> "MetricsRecord":
        """Derive the full record from counts and the matched IoU sum."""

        def ratio(num: float, den: float) -> float:
            return num / den if den > 0 else 0.0

        f1 = ratio(2 * tp, 2 * tp + fp + fn)
        sq = ratio(sum_iou, tp)
        return cls(
            tp=tp,
            fp=fp,
            fn=fn,
            precision=ratio(tp, tp + fp),
            recall=ratio(tp, tp + fn),
            f1=f1,
            accuracy=ratio(tp, tp + fp + fn),
            sq=sq,
            rq=f1,
            pq=sq * f1,
        )


def overlap_histogram(
    pred: LabelVolume, gt: LabelVolume, use_numba: bool | None = None
) -> tuple[dict[tuple[int, int], int], dict[int, int], dict[int, int]]:
    """Count overlap voxels per (pred_id, gt_id) pair plus per-id totals.

    Args:
        pred: Predicted instance volume.
        gt: Ground-truth instance volume of the same shape.
        use_numba: Force a kernel path; None picks the package default.

    Returns:
        (pairs, pred_totals, gt_totals): pairs maps (pred_id, gt_id) to the
        count of voxels carrying both labels; the totals map every
        foreground id of each volume to its voxel count. IoU(p, g) is
        derivable as pairs[p, g] / (pred_totals[p] + gt_totals[g] -
        pairs[p, g]).

    Raises:
        MetricsError: On a shape mismatch.
    """
    if pred.voxels.shape != gt.voxels.shape:
        raise MetricsError(
            f"pred shape {tuple(pred.voxels.shape)} does not match "
            f"gt shape {tuple(gt.voxels.shape)}"
        )
    keys, counts = _kernels.overlap_pairs(pred.voxels, gt.voxels, use_numba)
    pairs = {
        (int(k >> np.uint64(32)), int(k & np.uint64(0xFFFFFFFF))): int(c)
        for k, c in zip(keys, counts)
    }
    pred_totals = _foreground_totals(pred)
    gt_totals = _foreground_totals(gt)
    return pairs, pred_totals, gt_totals


def _foreground_totals(vol: LabelVolume) -> dict[int, int]:
    flat = vol.voxels.ravel()
    ids, counts = np.unique(flat[flat > 0], return_counts=True)
    return {int(i): int(c) for i, c in zip(ids, counts)}


def match_instances(
    pred: LabelVolume,
    gt: LabelVolume,
    iou_threshold: float = 0.5,
    use_numba: bool | None = None,
) -> MatchResult:
    """Match instances across volumes by strict IoU > iou_threshold.

    Args:
        pred: Predicted instance volume.
        gt: Ground-truth instance volume of the same shape.
        iou_threshold: Strict threshold in [0.5, 1); 0.5 guarantees a
            unique matching.
        use_numba: Force a kernel path; None picks the package default.

    Returns:
        A MatchResult partitioning both id sets.

    Raises:
        MetricsError: On shape mismatch or a threshold outside [0.5, 1).
    """
    if not 0.5 <= iou_threshold < 1.0:
        raise MetricsError(
            f"iou threshold must lie in [0.5, 1), got {iou_threshold}"
        )
    pairs, pred_totals, gt_totals = overlap_histogram(pred, gt, use_numba)
    matches: list[tuple[int, int, float]] = []
    matched_pred: set[int] = set()
    matched_gt: set[int] = set()
    for (p, g), inter in sorted(pairs.items()):
        union = pred_totals[p] + gt_totals[g] - inter
        iou = inter / union
        if iou > iou_threshold:
            if p in matched_pred or g in matched_gt:
                raise InternalError(
                    "duplicate match despite threshold >= 0.5; matching is broken"
                )
            matches.append((p, g, iou))
            matched_pred.add(p)
            matched_gt.add(g)
    return MatchResult(
        matches=tuple(matches),
        unmatched_pred=tuple(sorted(set(pred_totals) - matched_pred)),
        unmatched_gt=tuple(sorted(set(gt_totals) - matched_gt)),
        iou_threshold=iou_threshold,
    )


def compute_metrics(m: MatchResult) -> MetricsRecord:
    """Derive the metric suite from a MatchResult."""
    return MetricsRecord.from_counts(
        tp=len(m.matches),
        fp=len(m.unmatched_pred),
        fn=len(m.unmatched_gt),
        sum_iou=m.sum_iou,
    )


def evaluate(
    pred: LabelVolume,
    gt: LabelVolume,
    iou_threshold: float = 0.5,
    use_numba: bool | None = None,
) -> MetricsRecord:
    """Match and score in one step.

    Equivalent to compute_metrics(match_instances(pred, gt, iou_threshold)).
    """
    return compute_metrics(match_instances(pred, gt, iou_threshold, use_numba))


def pool_matches(results: list[MatchResult]) -> MetricsRecord:
    """Pool matching counts across volumes into one record.

    Instance ids are volume-local, so pooling sums tp/fp/fn and the
    matched IoU mass instead of merging id sets. This is the
    instance-pooled alternative to averaging per-volume scores.

    Args:
        results: MatchResults sharing one iou_threshold.

    Raises:
        MetricsError: On an empty list or mixed thresholds.
    """
    if not results:
        raise MetricsError("pool_matches requires at least one result")
    thresholds = {m.iou_threshold for m in results}
    if len(thresholds) > 1:
        raise MetricsError(f"cannot pool across thresholds {sorted(thresholds)}")
    return MetricsRecord.from_counts(
        tp=sum(len(m.matches) for m in results),
        fp=sum(len(m.unmatched_pred) for m in results),
        fn=sum(len(m.unmatched_gt) for m in results),
        sum_iou=sum(m.sum_iou for m in results),
    )


def metrics_kv_text(record: MetricsRecord, budget: int, iou_threshold: float) -> str:
    """Render one record as a flat key=value document."""
    values = _row_values(record, budget, iou_threshold)
    return "".join(f"{k}={v}\n" for k, v in zip(CSV_COLUMNS, values))


def metrics_csv_text(record: MetricsRecord, budget: int, iou_threshold: float) -> str:
    """Render one record as a CSV document with a header row."""
    values = _row_values(record, budget, iou_threshold)
    return ",".join(CSV_COLUMNS) + "\n" + ",".join(values) + "\n"


def _row_values(record: MetricsRecord, budget: int, iou_threshold: float) -> list[str]:
    return [
        str(budget),
        str(record.tp),
        str(record.fp),
        str(record.fn),
        repr(record.precision),
        repr(record.recall),
        repr(record.f1),
        repr(record.accuracy),
        repr(record.sq),
        repr(record.rq),
        repr(record.pq),
        repr(iou_threshold),
    ]


def parse_metrics_csv(text: str, source: str = "<metrics>") -> tuple[int, MetricsRecord, float]:
    """Parse a single-row metrics CSV back into (budget, record, threshold).

    Raises:
        MetricsError: On missing header, wrong columns, or a malformed row.
    """
    lines = [line for line in text.splitlines() if line]
    if len(lines) != 2 or lines[0] != ",".join(CSV_COLUMNS):
        raise MetricsError(f"{source}: expected a header row plus one metrics row")
    cells = lines[1].split(",")
    if len(cells) != len(CSV_COLUMNS):
        raise MetricsError(f"{source}: expected {len(CSV_COLUMNS)} cells, got {len(cells)}")
    try:
        budget = int(cells[0])
        record = MetricsRecord(
            tp=int(cells[1]),
            fp=int(cells[2]),
            fn=int(cells[3]),
            precision=float(cells[4]),
            recall=float(cells[5]),
            f1=float(cells[6]),
            accuracy=float(cells[7]),
            sq=float(cells[8]),
            rq=float(cells[9]),
            pq=float(cells[10]),
        )
        threshold = float(cells[11])
    except ValueError as exc:
        raise MetricsError(f"{source}: malformed metrics row") from exc
    return budget, record, threshold

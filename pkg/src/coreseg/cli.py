"""Command-line pipeline: tile, fuse, cc, select, evaluate, report.

Each command reads a flat key=value config (``--config``), applies
command-line overrides (flags win), checks its inputs, and refuses to
touch existing outputs unless ``--force`` is given. All randomness flows
from the configured rng_seed; nothing reads the clock or other ambient
entropy, so identical configurations produce byte-identical outputs.

A ``run_manifest`` capturing the tool version, the hash of the resolved
configuration, and the digest of every input is written alongside every
output set.

Exit statuses:
    0  success
    2  usage or configuration error
    3  input error (missing or malformed files, invalid request)
    4  internal invariant violation
    5  outputs exist and --force was not given
"""

from __future__ import annotations

import argparse
import hashlib
import re
import sys
from pathlib import Path

from . import __version__
from .config import (
    PipelineConfig,
    apply_overrides,
    load_config,
    parse_budgets,
    parse_connectivity,
    parse_shape,
    resolved_lines,
)
from .coreset import (
    kcenter_greedy,
    normalize_rows,
    random_select,
    read_embeddings,
    write_selection_manifest,
)
from .errors import (
    ConfigError,
    CoresegError,
    FusionError,
    GridError,
    InternalError,
    MetricsError,
    OverwriteRefused,
    ReportError,
    SelectionError,
    VolumeFormatError,
)
from .instance_metrics import evaluate, metrics_csv_text, metrics_kv_text, parse_metrics_csv
from .label_fusion import (
    Connectivity,
    component_count,
    connected_components,
    stack_slices,
)
from .patch_grid import PatchId, patch_filename, plan_grid, tile, write_grid_manifest
from .report import build_curve, percent_csv, render_curve_table, surpass_summary
from .volume_io import read_volume, write_volume

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_INPUT = 3
EXIT_INTERNAL = 4
EXIT_EXISTS = 5

RUN_MANIFEST_VERSION = 1

_INPUT_ERRORS = (
    FileNotFoundError,
    NotADirectoryError,
    VolumeFormatError,
    GridError,
    FusionError,
    SelectionError,
    MetricsError,
    ReportError,
)


def _flag(parser_fn):
    # Adapt config-value parsers to argparse so bad flag values exit 2.
    def convert(text: str):
        try:
            return parser_fn(text)
        except ConfigError as exc:
            raise argparse.ArgumentTypeError(str(exc)) from None

    return convert


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="coreseg",
        description="Core-set selection and evaluation pipeline for 3D segmentation",
    )
    parser.add_argument("--version", action="version", version=f"coreseg {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", help="flat key=value configuration file")
        p.add_argument(
            "--force", action="store_true", help="overwrite existing outputs"
        )

    p = sub.add_parser("tile", help="pad a volume and cut it into patches")
    common(p)
    p.add_argument("--volume", help="input .vol3d volume")
    p.add_argument("--name", dest="volume_name", help="volume name for patch files")
    p.add_argument(
        "--patch", dest="patch_shape", type=_flag(parse_shape), help="patch shape Z,Y,X"
    )
    p.add_argument("--pad-mode", dest="pad_mode", choices=("zero", "reflect"))
    p.add_argument("--out-dir", dest="out_dir", help="directory for patches")

    p = sub.add_parser("fuse", help="stack 2D slice masks and label 3D instances")
    common(p)
    p.add_argument("--slices-dir", dest="slices_dir", help="directory of z=1 .vol3d slices")
    p.add_argument(
        "--connectivity", type=_flag(parse_connectivity), help="6 or 26 (default 26)"
    )
    p.add_argument("--out", help="output .vol3d instance volume")

    p = sub.add_parser("cc", help="label connected components of a mask volume")
    common(p)
    p.add_argument("--mask", help="input binary_mask .vol3d volume")
    p.add_argument(
        "--connectivity", type=_flag(parse_connectivity), help="6 or 26 (default 26)"
    )
    p.add_argument("--out", help="output .vol3d instance volume")

    p = sub.add_parser("select", help="select items by core-set or random strategy")
    common(p)
    p.add_argument("--embeddings", help="embedding file stem (<stem>.meta/.f32/.ids)")
    p.add_argument("--method", choices=("coreset", "random"))
    p.add_argument(
        "--budget", type=_flag(int), help="single budget overriding the config list"
    )
    p.add_argument(
        "--budgets", type=_flag(parse_budgets), help="comma-separated budget list"
    )
    p.add_argument("--seed", dest="rng_seed", type=_flag(int), help="selection seed")
    p.add_argument("--k-init", dest="k_init", type=_flag(int), help="random initial picks")
    p.add_argument("--out-dir", dest="out_dir", help="directory for manifests")

    p = sub.add_parser("evaluate", help="score a prediction against ground truth")
    common(p)
    p.add_argument("--pred", help="predicted instance .vol3d volume")
    p.add_argument("--gt", help="ground-truth instance .vol3d volume")
    p.add_argument(
        "--iou-threshold", dest="iou_threshold", type=_flag(float), help="default 0.5"
    )
    p.add_argument("--budget", type=_flag(int), help="budget stamped into the record")
    p.add_argument("--out-dir", dest="out_dir", help="directory for metrics files")

    p = sub.add_parser("report", help="aggregate metrics files into learning curves")
    common(p)
    p.add_argument("--metrics-dir", dest="metrics_dir", help="directory of metrics_b*.csv")
    p.add_argument(
        "--fraction",
        dest="surpass_fraction",
        type=_flag(float),
        help="surpass fraction (default 0.9)",
    )
    p.add_argument("--out-dir", dest="out_dir", help="directory for report files")

    return parser


def _merge_config(args: argparse.Namespace) -> PipelineConfig:
    cfg = load_config(args.config) if args.config else PipelineConfig()
    overrides = {
        key: getattr(args, key)
        for key in (
            "patch_shape",
            "pad_mode",
            "connectivity",
            "iou_threshold",
            "k_init",
            "budgets",
            "rng_seed",
            "method",
            "surpass_fraction",
            "budget",
            "volume",
            "volume_name",
            "slices_dir",
            "mask",
            "embeddings",
            "pred",
            "gt",
            "metrics_dir",
            "out",
            "out_dir",
        )
        if hasattr(args, key)
    }
    return apply_overrides(cfg, overrides)


def _require(value: str | None, what: str) -> str:
    if value is None:
        raise ConfigError(f"missing required {what}")
    return value


def _input_file(value: str | None, what: str) -> Path:
    p = Path(_require(value, what))
    if not p.is_file():
        raise FileNotFoundError(f"{what} does not exist: {p}")
    return p


def _input_dir(value: str | None, what: str) -> Path:
    p = Path(_require(value, what))
    if not p.is_dir():
        raise NotADirectoryError(f"{what} does not exist: {p}")
    return p


def _guard_outputs(targets: list[Path], force: bool) -> None:
    if force:
        return
    for t in targets:
        if t.exists():
            raise OverwriteRefused(f"output exists: {t} (use --force to overwrite)")


def _write_run_manifest(
    path: Path,
    command: str,
    cfg: PipelineConfig,
    inputs: list[tuple[str, Path]],
    outputs: list[str],
) -> None:
    config_text = resolved_lines(cfg)
    lines = [
        f"format_version={RUN_MANIFEST_VERSION}",
        f"tool=coreseg/{__version__}",
        f"command={command}",
        f"config_sha256={hashlib.sha256(config_text.encode('ascii')).hexdigest()}",
    ]
    digested = [
        (role, p.name, hashlib.sha256(p.read_bytes()).hexdigest()) for role, p in inputs
    ]
    for role, name, digest in sorted(digested):
        lines.append(f"input={role}:{name}:{digest}")
    for name in sorted(outputs):
        lines.append(f"output={name}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def cmd_tile(cfg: PipelineConfig, force: bool) -> int:
    vol_path = _input_file(cfg.volume, "input volume (--volume / volume)")
    out_dir = Path(_require(cfg.out_dir, "output directory (--out-dir / out_dir)"))
    vol = read_volume(vol_path)
    name = cfg.volume_name or vol_path.stem
    spec = plan_grid(vol.header.shape, cfg.patch_shape, cfg.pad_mode)
    nz, ny, nx = spec.grid_dims
    pids = [
        PatchId(name, (iz, iy, ix))
        for iz in range(nz)
        for iy in range(ny)
        for ix in range(nx)
    ]
    patch_files = [patch_filename(pid) for pid in pids]
    targets = [out_dir / f for f in patch_files]
    targets += [out_dir / "grid_manifest.txt", out_dir / "run_manifest.txt"]
    _guard_outputs(targets, force)
    out_dir.mkdir(parents=True, exist_ok=True)
    patches = tile(vol, spec, name)
    for pid in pids:
        write_volume(patches[pid], out_dir / patch_filename(pid))
    write_grid_manifest(spec, name, out_dir / "grid_manifest.txt")
    _write_run_manifest(
        out_dir / "run_manifest.txt",
        "tile",
        cfg,
        [("volume", vol_path)],
        patch_files + ["grid_manifest.txt"],
    )
    print(
        f"patches={spec.patch_count} grid={nz},{ny},{nx} "
        f"padded={spec.padded_shape[0]},{spec.padded_shape[1]},{spec.padded_shape[2]}"
    )
    return EXIT_OK


def _ordered_slices(slices_dir: Path) -> list[tuple[int, Path]]:
    files = sorted(slices_dir.glob("*.vol3d"))
    if not files:
        raise FusionError(f"no .vol3d slices in {slices_dir}")
    keyed: list[tuple[int, Path]] = []
    seen: dict[int, Path] = {}
    for f in files:
        m = re.search(r"(\d+)$", f.stem)
        if not m:
            raise FusionError(f"slice filename lacks a numeric suffix: {f.name}")
        num = int(m.group(1))
        if num in seen:
            raise FusionError(
                f"duplicate slice index {num}: {seen[num].name} and {f.name}"
            )
        seen[num] = f
        keyed.append((num, f))
    keyed.sort()
    return keyed


def cmd_fuse(cfg: PipelineConfig, force: bool) -> int:
    slices_dir = _input_dir(cfg.slices_dir, "slice directory (--slices-dir / slices_dir)")
    out = Path(_require(cfg.out, "output path (--out / out)"))
    keyed = _ordered_slices(slices_dir)
    grids = []
    first_shape: tuple[int, int] | None = None
    for _, f in keyed:
        v = read_volume(f)
        z, y, x = v.header.shape
        if z != 1:
            raise FusionError(f"{f.name}: slice has z-size {z}, expected 1")
        if first_shape is None:
            first_shape = (y, x)
        elif (y, x) != first_shape:
            raise FusionError(
                f"{f.name}: slice shape {(y, x)} does not match first slice {first_shape}"
            )
        grids.append(v.voxels[0])
    mask = stack_slices(grids)
    labeled = connected_components(mask, Connectivity(cfg.connectivity))
    run_path = Path(f"{out}.run.txt")
    _guard_outputs([out, run_path], force)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_volume(labeled, out)
    _write_run_manifest(
        run_path, "fuse", cfg, [("slice", f) for _, f in keyed], [out.name]
    )
    z, y, x = labeled.header.shape
    print(f"components={component_count(labeled)} slices={len(keyed)} shape={z},{y},{x}")
    return EXIT_OK


def cmd_cc(cfg: PipelineConfig, force: bool) -> int:
    mask_path = _input_file(cfg.mask, "input mask (--mask / mask)")
    out = Path(_require(cfg.out, "output path (--out / out)"))
    mask = read_volume(mask_path)
    labeled = connected_components(mask, Connectivity(cfg.connectivity))
    run_path = Path(f"{out}.run.txt")
    _guard_outputs([out, run_path], force)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_volume(labeled, out)
    _write_run_manifest(run_path, "cc", cfg, [("mask", mask_path)], [out.name])
    print(f"components={component_count(labeled)}")
    return EXIT_OK


def cmd_select(cfg: PipelineConfig, force: bool) -> int:
    stem = _require(cfg.embeddings, "embedding stem (--embeddings / embeddings)")
    out_dir = Path(_require(cfg.out_dir, "output directory (--out-dir / out_dir)"))
    E = read_embeddings(stem)
    En = normalize_rows(E)
    budgets = (cfg.budget,) if cfg.budget is not None else cfg.budgets
    names = [f"selection_{cfg.method}_b{b}.txt" for b in budgets if b > 0]
    # Manifest name carries the method so coreset and random runs can
    # share a directory without colliding.
    run_name = f"run_manifest_{cfg.method}.txt"
    targets = [out_dir / n for n in names] + [out_dir / run_name]
    _guard_outputs(targets, force)
    out_dir.mkdir(parents=True, exist_ok=True)
    for b in budgets:
        if b <= 0:
            print(f"budget={b} skipped (nothing to select)")
            continue
        if cfg.method == "coreset":
            manifest = kcenter_greedy(En, b, k_init=cfg.k_init, rng_seed=cfg.rng_seed)
        else:
            manifest = random_select(En.ids, b, rng_seed=cfg.rng_seed, embeddings=En)
        write_selection_manifest(manifest, out_dir / f"selection_{cfg.method}_b{b}.txt")
        radius = repr(manifest.radius_trace[-1]) if manifest.radius_trace else "na"
        print(f"method={cfg.method} budget={b} radius={radius}")
    inputs = [
        ("embeddings", Path(f"{stem}.meta")),
        ("embeddings", Path(f"{stem}.f32")),
        ("embeddings", Path(f"{stem}.ids")),
    ]
    _write_run_manifest(out_dir / run_name, "select", cfg, inputs, names)
    return EXIT_OK


def cmd_evaluate(cfg: PipelineConfig, force: bool) -> int:
    pred_path = _input_file(cfg.pred, "prediction volume (--pred / pred)")
    gt_path = _input_file(cfg.gt, "ground-truth volume (--gt / gt)")
    out_dir = Path(_require(cfg.out_dir, "output directory (--out-dir / out_dir)"))
    if cfg.budget is None:
        raise ConfigError("evaluate requires a budget (--budget / budget)")
    if not 0.5 <= cfg.iou_threshold < 1.0:
        raise ConfigError(
            f"iou_threshold must lie in [0.5, 1), got {cfg.iou_threshold}"
        )
    pred = read_volume(pred_path)
    gt = read_volume(gt_path)
    record = evaluate(pred, gt, cfg.iou_threshold)
    kv_name = f"metrics_b{cfg.budget}.txt"
    csv_name = f"metrics_b{cfg.budget}.csv"
    # Manifest name carries the budget so one metrics directory can
    # accumulate every budget of a learning curve.
    run_name = f"metrics_b{cfg.budget}.run.txt"
    targets = [out_dir / kv_name, out_dir / csv_name, out_dir / run_name]
    _guard_outputs(targets, force)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / kv_name).write_text(
        metrics_kv_text(record, cfg.budget, cfg.iou_threshold), encoding="ascii"
    )
    (out_dir / csv_name).write_text(
        metrics_csv_text(record, cfg.budget, cfg.iou_threshold), encoding="ascii"
    )
    _write_run_manifest(
        out_dir / run_name,
        "evaluate",
        cfg,
        [("pred", pred_path), ("gt", gt_path)],
        [kv_name, csv_name],
    )
    print(
        f"budget={cfg.budget} tp={record.tp} fp={record.fp} fn={record.fn} "
        f"f1={record.f1!r} pq={record.pq!r}"
    )
    return EXIT_OK


def cmd_report(cfg: PipelineConfig, force: bool) -> int:
    metrics_dir = _input_dir(cfg.metrics_dir, "metrics directory (--metrics-dir / metrics_dir)")
    out_dir = Path(_require(cfg.out_dir, "output directory (--out-dir / out_dir)"))
    files = sorted(metrics_dir.glob("metrics_b*.csv"))
    if not files:
        raise ReportError(f"no metrics_b*.csv files in {metrics_dir}")
    records = {}
    for f in files:
        budget, record, _ = parse_metrics_csv(f.read_text(encoding="ascii"), source=f.name)
        if budget in records:
            raise ReportError(f"{f.name}: duplicate budget {budget}")
        records[budget] = record
    curve = build_curve(records)
    curve_csv = percent_csv(curve)
    table_text = render_curve_table(curve)
    surpass_text = surpass_summary(curve, cfg.surpass_fraction)
    targets = [
        out_dir / "curve.csv",
        out_dir / "curve_table.txt",
        out_dir / "surpass.txt",
        out_dir / "run_manifest.txt",
    ]
    _guard_outputs(targets, force)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "curve.csv").write_text(curve_csv, encoding="ascii")
    (out_dir / "curve_table.txt").write_text(table_text, encoding="ascii")
    (out_dir / "surpass.txt").write_text(surpass_text, encoding="ascii")
    _write_run_manifest(
        out_dir / "run_manifest.txt",
        "report",
        cfg,
        [("metrics", f) for f in files],
        ["curve.csv", "curve_table.txt", "surpass.txt"],
    )
    print(surpass_text, end="")
    return EXIT_OK


_COMMANDS = {
    "tile": cmd_tile,
    "fuse": cmd_fuse,
    "cc": cmd_cc,
    "select": cmd_select,
    "evaluate": cmd_evaluate,
    "report": cmd_report,
}


def main(argv: list[str] | None = None) -> int:
    """Entry point; returns the process exit status."""
    parser = build_parser()
    args = parser.parse_args(argv)
    command = args.command
    try:
        cfg = _merge_config(args)
        return _COMMANDS[command](cfg, args.force)
    except OverwriteRefused as exc:
        print(f"coreseg {command}: {exc}", file=sys.stderr)
        return EXIT_EXISTS
    except ConfigError as exc:
        print(f"coreseg {command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except _INPUT_ERRORS as exc:
        print(f"coreseg {command}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except InternalError as exc:
        print(f"coreseg {command}: internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except CoresegError as exc:
        print(f"coreseg {command}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except Exception as exc:  # pragma: no cover - safety net for bugs
        print(f"coreseg {command}: internal error: {exc!r}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())

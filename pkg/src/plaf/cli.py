"""Command-line surface: synth | ingest | build | query | stats.

Every command is deterministic given identical inputs, flags, and seed,
and supports --json for machine-readable output. Errors map to distinct
exit codes: 3 missing input, 4 format error, 5 invariant violation,
6 dimension mismatch, 7 other failures (argparse uses 2 for usage).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from plaf import kernels
from plaf.core import (
    DimensionMismatchError,
    FormatError,
    InputMissingError,
    PlafError,
    ValidationError,
)
from plaf.frame2d import AssignmentPolicy, build_frame
from plaf.lift3d import FusionConfig, build_map
from plaf.query import (
    TextQuery,
    argmax_labels,
    export_cloud_ply,
    export_heatmap_pgm,
    query_pixels,
    query_points,
)
from plaf.storage import (
    StorageModel,
    container,
    dense_2d_cost,
    dense_3d_cost,
    index_ref_3d_cost,
    mask_indexed_2d_cost,
    ratio_2d,
    ratio_3d,
)
from plaf.storage import inputs as io
from plaf.synth import SyntheticSceneSpec, generate_scene

EXIT_OK = 0
EXIT_INPUT_MISSING = 3
EXIT_FORMAT = 4
EXIT_VALIDATION = 5
EXIT_DIMENSION = 6
EXIT_OTHER = 7


def _fmt_bytes(n: int) -> str:
    for unit, scale in (("GB", 1e9), ("MB", 1e6), ("KB", 1e3)):
        if n >= scale:
            return f"{n / scale:.2f} {unit}"
    return f"{n} B"


def _emit(args, payload: dict, human_lines: list[str]) -> None:
    if args.json:
        print(json.dumps(payload, sort_keys=True))
    else:
        for line in human_lines:
            print(line)


def _stats_2d(height: int, width: int, mask_count: int, dim: int, bf: int = 4, bi: int = 2) -> dict:
    model = StorageModel(
        height=height, width=width, mask_count=mask_count, feature_dim=dim,
        float_bytes=bf, index_bytes=bi,
    )
    return {
        "height": height,
        "width": width,
        "mask_count": mask_count,
        "feature_dim": dim,
        "dense_2d_bytes": dense_2d_cost(model),
        "mask_indexed_2d_bytes": mask_indexed_2d_cost(model),
        "ratio_2d": ratio_2d(model),
    }


def _stats_3d(points: int, pool: int, dim: int, bf: int = 4, br: int = 2) -> dict:
    model = StorageModel(
        point_count=points, pool_size=pool, feature_dim=dim, float_bytes=bf, ref_bytes=br,
    )
    return {
        "point_count": points,
        "pool_size": pool,
        "feature_dim": dim,
        "dense_3d_bytes": dense_3d_cost(model),
        "index_ref_3d_bytes": index_ref_3d_cost(model),
        "ratio_3d": ratio_3d(model),
    }


def _2d_lines(s: dict) -> list[str]:
    return [
        f"dense 2D storage:        {s['dense_2d_bytes']} bytes ({_fmt_bytes(s['dense_2d_bytes'])})",
        f"mask-indexed 2D storage: {s['mask_indexed_2d_bytes']} bytes ({_fmt_bytes(s['mask_indexed_2d_bytes'])})",
        f"2D ratio:                {s['ratio_2d']:.7f} ({100 * s['ratio_2d']:.4f}%)",
    ]


def _3d_lines(s: dict) -> list[str]:
    return [
        f"dense 3D storage:        {s['dense_3d_bytes']} bytes ({_fmt_bytes(s['dense_3d_bytes'])})",
        f"index+reference storage: {s['index_ref_3d_bytes']} bytes ({_fmt_bytes(s['index_ref_3d_bytes'])})",
        f"3D ratio:                {s['ratio_3d']:.7f} ({100 * s['ratio_3d']:.4f}%)",
    ]


def _log_histogram(values: np.ndarray) -> dict[str, int]:
    """Power-of-two buckets, e.g. {"1": 3, "2-3": 1, "4-7": 9}."""
    out: dict[str, int] = {}
    if values.size == 0:
        return out
    values = values.astype(np.int64)
    top = int(values.max())
    lo = 1
    while lo <= top:
        hi = lo * 2 - 1
        n = int(((values >= lo) & (values <= hi)).sum())
        if n:
            out[str(lo) if lo == hi else f"{lo}-{hi}"] = n
        lo *= 2
    return out


def cmd_synth(args) -> int:
    spec = SyntheticSceneSpec(
        object_count=args.objects,
        feature_dim=args.dim,
        height=args.height,
        width=args.width,
        frame_count=args.frames,
        noise_sigma=args.sigma,
        seed=args.seed,
    )
    manifest = generate_scene(spec, args.out)
    payload = {
        "out": str(args.out),
        "objects": len(manifest["objects"]),
        "frames": len(manifest["frames"]),
    }
    _emit(args, payload, [
        f"wrote {len(manifest['frames'])} frames and {len(manifest['objects'])} "
        f"text embeddings to {args.out}",
    ])
    return EXIT_OK


def cmd_ingest(args) -> int:
    feat = io.read_dense_features(args.features)
    masks = io.read_masks(args.masks)
    if masks.count == 0:
        print("warning: no masks; frame will hold only background", file=sys.stderr)
    frame = build_frame(feat, masks, AssignmentPolicy(args.policy))
    written = container.write_frame(frame, args.out)
    s = _stats_2d(frame.height, frame.width, frame.mask_count, frame.dim)
    payload = dict(s)
    payload.update({"out": str(args.out), "file_bytes": written, "kernel_backend": kernels.backend_name()})
    _emit(args, payload, [
        f"wrote {args.out} ({written} bytes, {frame.mask_count} masks)",
        *_2d_lines(s),
    ])
    return EXIT_OK


def cmd_build(args) -> int:
    if len(args.frames) != len(args.cameras):
        raise DimensionMismatchError(
            f"{len(args.frames)} frames but {len(args.cameras)} cameras"
        )
    pairs = []
    for frame_path, cam_path in zip(args.frames, args.cameras):
        if not Path(frame_path).exists():
            raise InputMissingError(f"missing frame file {frame_path}")
        pairs.append((container.read_frame(frame_path), io.read_camera(cam_path)))
    config = FusionConfig(
        similarity_threshold=args.tau, voxel_size=args.voxel, pixel_stride=args.stride
    )
    pool, cloud, report = build_map(pairs, config)
    container.write_map(pool, cloud, args.out)
    payload = report.to_dict()
    payload["out"] = str(args.out)
    lines = [
        f"wrote {args.out}: {cloud.count} points referencing {pool.size} pool entries",
        f"skipped pixels: {sum(r.pixels_skipped for r in report.frames)}",
    ]
    if cloud.count:
        lines += _3d_lines(
            _stats_3d(cloud.count, pool.size, pool.dim, br=cloud.ref_bytes)
        )
    _emit(args, payload, lines)
    return EXIT_OK


def _load_queries(args) -> list[TextQuery]:
    queries = []
    for path in args.embedding:
        label, vec = io.read_text_embedding(path)
        queries.append(
            TextQuery(label=label, embedding=vec, score_threshold=args.theta, top_k=args.topk)
        )
    return queries


def cmd_query(args) -> int:
    target = Path(args.target)
    if not target.exists():
        raise InputMissingError(f"missing target artifact {target}")
    queries = _load_queries(args)
    suffix = target.suffix
    if suffix == ".plaf2d":
        frame = container.read_frame(target)
        results = [query_pixels(frame, q) for q in queries]
        cloud = None
    elif suffix == ".plaf3d":
        pool, cloud = container.read_map(target)
        results = [query_points(pool, cloud, q) for q in queries]
    else:
        raise FormatError(f"unknown artifact type {suffix!r}", path=target, kind="bad-descriptor")

    payload = {"target": str(target), "mode": args.mode, "queries": []}
    lines = []
    if args.mode == "threshold":
        for q, r in zip(queries, results):
            finite = r.scores[np.isfinite(r.scores)]
            entry = {
                "label": q.label,
                "selected": int(r.selected.size),
                "targets": int(r.scores.size),
                "theta": q.score_threshold,
                "top_k": q.top_k,
                "max_score": float(finite.max()) if finite.size else None,
            }
            payload["queries"].append(entry)
            lines.append(
                f"{q.label!r}: selected {r.selected.size}/{r.scores.size} targets"
                + (f", max score {entry['max_score']:.4f}" if finite.size else "")
            )
        if args.out:
            for q, r in zip(queries, results):
                tag = f".{q.label}" if len(queries) > 1 else ""
                if suffix == ".plaf2d":
                    export_heatmap_pgm(r, Path(f"{args.out}{tag}.pgm"))
                else:
                    export_cloud_ply(r, cloud, Path(f"{args.out}{tag}.ply"))
            payload["out"] = str(args.out)
    else:  # argmax over queries
        labels = argmax_labels(results)
        counts = {
            q.label: int((labels == i).sum()) for i, q in enumerate(queries)
        }
        payload["argmax_counts"] = counts
        payload["background"] = int((labels == -1).sum())
        lines.append("argmax winners: " + json.dumps(counts, sort_keys=True))
        if args.out:
            if suffix == ".plaf2d":
                io.write_raw_array(
                    Path(f"{args.out}.f32"),
                    labels.astype(np.float32).reshape(frame.height, frame.width),
                )
            else:
                io.write_raw_array(Path(f"{args.out}.f32"), labels.astype(np.float32).reshape(-1, 1))
            payload["out"] = str(args.out)
    _emit(args, payload, lines)
    return EXIT_OK


def cmd_stats(args) -> int:
    if args.dry_run:
        payload: dict = {"dry_run": True}
        lines: list[str] = []
        if args.height and args.width:
            s = _stats_2d(args.height, args.width, args.masks, args.dim, bf=args.bf, bi=args.bi)
            payload["stats_2d"] = s
            lines += _2d_lines(s)
        if args.points:
            s = _stats_3d(args.points, args.pool, args.dim, bf=args.bf, br=args.br)
            payload["stats_3d"] = s
            lines += _3d_lines(s)
        if not lines:
            raise ValidationError(
                "--dry-run needs --height/--width (2D) and/or --points (3D) plus --dim"
            )
        _emit(args, payload, lines)
        return EXIT_OK

    if not args.artifact:
        raise ValidationError("stats needs an artifact path or --dry-run")
    target = Path(args.artifact)
    if not target.exists():
        raise InputMissingError(f"missing artifact {target}")
    if target.suffix == ".plaf2d":
        frame = container.read_frame(target)
        s = _stats_2d(frame.height, frame.width, frame.mask_count, frame.dim)
        areas = np.bincount(
            frame.index_map.reshape(-1).astype(np.int64), minlength=frame.mask_count + 1
        )[1:]
        payload = {
            "artifact": str(target),
            "stats_2d": s,
            "mask_area_histogram": _log_histogram(areas),
            "file_bytes": target.stat().st_size,
        }
        lines = [
            f"{target}: {frame.height}x{frame.width}, {frame.mask_count} masks, dim {frame.dim}",
            *_2d_lines(s),
            f"mask area histogram: {json.dumps(_log_histogram(areas), sort_keys=False)}",
        ]
    elif target.suffix == ".plaf3d":
        pool, cloud = container.read_map(target)
        s = _stats_3d(cloud.count, pool.size, pool.dim, br=cloud.ref_bytes)
        payload = {
            "artifact": str(target),
            "stats_3d": s,
            "observation_histogram": _log_histogram(pool.counts),
            "semantic_bytes": container.map_semantic_bytes(
                cloud.count, pool.size, pool.dim, cloud.ref_bytes
            ),
            "geometry_bytes": cloud.count * 12,
            "file_bytes": target.stat().st_size,
        }
        lines = [
            f"{target}: {cloud.count} points, pool {pool.size}, dim {pool.dim}, "
            f"{cloud.ref_bytes}-byte refs",
            *_3d_lines(s),
            f"semantic payload: {payload['semantic_bytes']} bytes; "
            f"positions: {payload['geometry_bytes']} bytes (excluded from the ratio)",
            f"observation histogram: {json.dumps(_log_histogram(pool.counts), sort_keys=False)}",
        ]
    else:
        raise FormatError(f"unknown artifact type {target.suffix!r}", path=target, kind="bad-descriptor")
    _emit(args, payload, lines)
    return EXIT_OK


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="plaf",
        description="Mask-indexed semantic memory: compact 2D/3D open-vocabulary maps.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic scene with known ground truth")
    p.add_argument("--objects", type=int, default=5)
    p.add_argument("--dim", type=int, default=32)
    p.add_argument("--height", type=int, default=96)
    p.add_argument("--width", type=int, default=128)
    p.add_argument("--frames", type=int, default=8)
    p.add_argument("--sigma", type=float, default=0.05)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("ingest", help="features + masks -> .plaf2d frame")
    p.add_argument("--features", required=True)
    p.add_argument("--masks", required=True)
    p.add_argument(
        "--policy",
        default=AssignmentPolicy.SMALLEST_MASK.value,
        choices=[pol.value for pol in AssignmentPolicy],
    )
    p.add_argument("--out", "-o", required=True)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("build", help="fuse .plaf2d frames + cameras -> .plaf3d map")
    p.add_argument("--frames", nargs="+", required=True)
    p.add_argument("--cameras", nargs="+", required=True)
    p.add_argument("--tau", type=float, default=0.90, help="cosine merge threshold")
    p.add_argument("--voxel", type=float, default=0.02, help="dedup voxel size (m)")
    p.add_argument("--stride", type=int, default=4, help="pixel sampling stride")
    p.add_argument("--out", "-o", required=True)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("query", help="match text embeddings against a frame or map")
    p.add_argument("target", help=".plaf2d or .plaf3d artifact")
    p.add_argument("--embedding", action="append", required=True, help="repeatable")
    p.add_argument("--theta", type=float, default=0.5)
    p.add_argument("--topk", type=int, default=None)
    p.add_argument("--mode", choices=["threshold", "argmax"], default="threshold")
    p.add_argument("--out", default=None, help="output prefix (.pgm/.ply/.f32)")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_query)

    p = sub.add_parser("stats", help="storage arithmetic for artifacts or hypothetical sizes")
    p.add_argument("artifact", nargs="?", default=None)
    p.add_argument("--dry-run", action="store_true")
    p.add_argument("--height", type=int, default=0)
    p.add_argument("--width", type=int, default=0)
    p.add_argument("--masks", type=int, default=0)
    p.add_argument("--dim", type=int, default=0)
    p.add_argument("--points", type=lambda s: int(float(s)), default=0)
    p.add_argument("--pool", type=lambda s: int(float(s)), default=0)
    p.add_argument("--bf", type=int, default=4, help="bytes per float element")
    p.add_argument("--bi", type=int, default=2, help="bytes per 2D index")
    p.add_argument("--br", type=int, default=2, help="bytes per 3D reference")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_stats)

    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InputMissingError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT_MISSING
    except FormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FORMAT
    except DimensionMismatchError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DIMENSION
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except PlafError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_OTHER
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_OTHER


if __name__ == "__main__":
    sys.exit(main())

"""plaf-extract: run models over images and emit plaf ingest files."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from plaf_extract.errors import ImageError, ModelError
from plaf_extract.jobs import ExtractionJob, run

IMAGE_SUFFIXES = {".png", ".jpg", ".jpeg", ".bmp", ".webp"}


def _collect_images(path: Path) -> list[Path]:
    if path.is_dir():
        return sorted(p for p in path.iterdir() if p.suffix.lower() in IMAGE_SUFFIXES)
    return [path]


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="plaf-extract",
        description="Extract dense features, class-agnostic masks, and text "
        "embeddings into plaf ingest formats.",
    )
    parser.add_argument("--images", required=True, help="image file or directory")
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--labels", default="", help="comma-separated text prompts")
    parser.add_argument(
        "--backbone", default="radio",
        help="feature backbone identifier (e.g. radio, colorstat-64)",
    )
    parser.add_argument(
        "--masker", default="sam", help="mask generator identifier (e.g. sam, colorcc)"
    )
    parser.add_argument(
        "--text-encoder", default="openclip",
        help="text encoder identifier (e.g. openclip, hashproj)",
    )
    parser.add_argument("--device", default="cpu")
    parser.add_argument("--min-mask-area", type=int, default=32)
    parser.add_argument("--verbose", action="store_true")
    args = parser.parse_args(argv)

    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )

    labels = [s.strip() for s in args.labels.split(",") if s.strip()]
    images = _collect_images(Path(args.images))
    try:
        job = ExtractionJob(
            images=images,
            out_dir=Path(args.out),
            labels=labels,
            backbone=args.backbone,
            masker=args.masker,
            text_encoder=args.text_encoder,
            device=args.device,
            min_mask_area=args.min_mask_area,
        )
        manifest = run(job)
    except ModelError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ImageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    print(
        f"extracted {len(manifest['images'])} images "
        f"({manifest['feature_dim']}-dim features) and "
        f"{len(manifest['embeddings'])} text embeddings to {args.out}"
    )
    return 0


if __name__ == "__main__":
    sys.exit(main())

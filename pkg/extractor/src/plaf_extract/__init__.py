"""Adapter package: runs a dense visual backbone, a class-agnostic mask
generator, and a text encoder, writing the mapping engine's ingest files."""

from plaf_extract.jobs import ExtractionJob, run

__version__ = "0.1.0"

__all__ = ["ExtractionJob", "run", "__version__"]

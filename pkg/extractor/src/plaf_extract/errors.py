class ExtractError(Exception):
    """Base error for the extractor."""


class ModelError(ExtractError):
    """A model identifier could not be resolved or loaded."""


class ImageError(ExtractError):
    """An input image could not be decoded."""

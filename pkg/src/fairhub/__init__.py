"""fairhub: desk-scale study curation and catalog toolkit."""

from importlib import resources

__version__ = "0.1.0"


def data_path(name: str):
    """Path to a shipped resource file (sample codebook, templates, terms)."""
    return resources.files("fairhub").joinpath("data", name)


def read_data(name: str) -> bytes:
    return data_path(name).read_bytes()

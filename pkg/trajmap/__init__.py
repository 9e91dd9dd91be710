import importlib.metadata as metadata

__version__ = metadata.version(__name__)

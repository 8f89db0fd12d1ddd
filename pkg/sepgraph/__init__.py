from importlib.metadata import PackageNotFoundError, version

try:
    __version__ = version("sepgraph")
except PackageNotFoundError:
    # package is not installed
    __version__ = "unknown"

import logging
from pathlib import Path

from sepgraph.graph_core import SeparatedGraphError, read_sgr

from .utils import load_graph_layers

logger = logging.getLogger(__name__)


def sgr_read_file(path):
    """A basic implementation of the napari_get_reader hook specification.

    Parameters
    ----------
    path : str or list of str
        Path to file, or list of paths.

    Returns
    -------
    function or None
        If the path is a readable .sgr file, return a function that accepts
        the same path and returns a list of layer data tuples.
    """
    if isinstance(path, (str, Path)) and is_sgr_file(path):
        return sgr_reader
    return None


def is_sgr_file(path) -> bool:
    path = Path(path)
    if path.suffix != ".sgr" or not path.is_file():
        return False
    try:
        read_sgr(path)
    except (SeparatedGraphError, OSError, UnicodeDecodeError):
        return False
    return True


def sgr_reader(path, point_size=15, opacity=0.6):
    """Take a path to a .sgr file and return a list of LayerData tuples.

    Returns
    -------
    layer_data : list of tuples
        A points layer with the vertices and a shapes layer with one line
        per edge, each as (data, metadata, layer_type).
    """
    path = Path(path).resolve()
    logger.debug("Loading separated graph from %s", path)
    g = read_sgr(path)
    return load_graph_layers(g, path.stem, point_size, opacity)

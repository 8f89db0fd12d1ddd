from typing import TYPE_CHECKING, Dict, List

import networkx as nx
import numpy as np

from sepgraph.condition_n import branching_vertices
from sepgraph.graph_core import SeparatedGraph

if TYPE_CHECKING:
    from napari.types import LayerDataTuple


def vertex_positions(
    g: SeparatedGraph, scale: float = 100.0
) -> Dict[str, np.ndarray]:
    """Circular layout of the vertices in (row, column) order.

    Parameters
    ----------
    g : SeparatedGraph
        Graph to lay out.
    scale : float, optional
        Radius of the layout circle, by default 100.

    Returns
    -------
    Dict[str, np.ndarray]
        Position of every vertex, keyed by vertex id.
    """
    skeleton = nx.MultiDiGraph()
    skeleton.add_nodes_from(g.vertices)
    skeleton.add_edges_from((e.source, e.range) for e in g.edges)
    layout = nx.circular_layout(skeleton, scale=scale)
    return {v: np.asarray(layout[v])[::-1] for v in g.vertices}


def edge_segments(
    g: SeparatedGraph, positions: Dict[str, np.ndarray]
) -> List[np.ndarray]:
    return [
        np.stack([positions[e.source], positions[e.range]]) for e in g.edges
    ]


def load_graph_layers(
    g: SeparatedGraph,
    name: str,
    point_size: float = 15,
    opacity: float = 0.6,
    edge_width: float = 2,
) -> List["LayerDataTuple"]:
    """Build a points layer of vertices and a shapes layer of edges."""
    positions = vertex_positions(g)
    branching = set(branching_vertices(g))
    points = np.array([positions[v] for v in g.vertices]).reshape(-1, 2)
    layers = [
        (
            points,
            {
                "name": f"{name} vertices",
                "size": point_size,
                "opacity": opacity,
                "features": {
                    "vertex": np.array(g.vertices, dtype=object),
                    "branching": np.array(
                        [v in branching for v in g.vertices], dtype=bool
                    ),
                },
                "face_color": "lightskyblue",
            },
            "points",
        ),
        (
            edge_segments(g, positions),
            {
                "name": f"{name} edges",
                "shape_type": "line",
                "edge_width": edge_width,
                "opacity": opacity,
                "features": {
                    "edge": np.array([e.id for e in g.edges], dtype=object),
                    "group": np.array(
                        [e.group for e in g.edges], dtype=object
                    ),
                },
                "edge_color": "lightgoldenrodyellow",
            },
            "shapes",
        ),
    ]
    return layers

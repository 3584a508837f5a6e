"""Greedy coverage route over the required ridge edges."""

from __future__ import annotations

from dataclasses import dataclass

import networkx as nx
import numpy as np

from ..errors import PollibotError
from .voronoi import VoronoiGraph


class Unreachable(PollibotError):
    pass


@dataclass(frozen=True)
class InspectionRoute:
    nodes: tuple[int, ...]
    edges: tuple[int, ...]
    length: float
    polyline: np.ndarray

    def covered(self) -> frozenset:
        return frozenset(self.edges)


def _cheapest_edge(g: nx.MultiGraph, a: int, b: int) -> int:
    data = g.get_edge_data(a, b)
    return min(data, key=lambda k: (data[k]["length"], k))


def plan_inspection(graph: VoronoiGraph, start_node: int) -> InspectionRoute:
    """Repeatedly walk the shortest path to the nearest end of an uncovered
    required edge and traverse that edge. Edges crossed on the way count as
    covered too."""
    if not 0 <= start_node < len(graph.nodes):
        raise ValueError(f"unknown start node {start_node}")
    g = graph.to_networkx()
    todo = set(graph.required_edges())
    nodes, edges = [start_node], []
    cur = start_node
    while todo:
        dist, paths = nx.single_source_dijkstra(g, cur, weight="length")
        options = []
        for k in sorted(todo):
            e = graph.edges[k]
            for a, b in ((e.u, e.v), (e.v, e.u)):
                if a in dist:
                    options.append((dist[a], k, a, b))
        if not options:
            raise Unreachable(f"required edges {sorted(todo)} are not reachable from node {start_node}")
        _, k, a, b = min(options)
        walk = paths[a]
        for p, q in zip(walk[:-1], walk[1:]):
            e = _cheapest_edge(g, p, q)
            edges.append(e)
            nodes.append(q)
            todo.discard(e)
        edges.append(k)
        nodes.append(b)
        todo.discard(k)
        cur = b
    length = float(sum(graph.edges[k].length for k in edges))
    pieces = [graph.nodes[start_node][None, :]]
    for k, a in zip(edges, nodes[:-1]):
        pieces.append(graph.edge_path(k, a)[1:])
    return InspectionRoute(tuple(nodes), tuple(edges), length, np.vstack(pieces))

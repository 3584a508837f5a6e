"""Medial-ridge roadmap of the free space with per-row-side required edges."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable

import networkx as nx
import numpy as np
from scipy import ndimage
from skimage.morphology import skeletonize

from ..errors import PollibotError
from ..slam.grid import FREE, OccupancyGrid
from ..world import PlantRow, Side

REQUIRED_BAND = 1.5  # multiples of d_park from the row face
MIN_SPAN = 0.25  # share of the row length an edge must run alongside


class NoFreeSpace(PollibotError):
    pass


@dataclass(frozen=True)
class VoronoiEdge:
    u: int
    v: int
    length: float
    polyline: np.ndarray = field(repr=False)  # (k, 2), from node u to node v


@dataclass(eq=False)
class VoronoiGraph:
    nodes: np.ndarray  # (n, 2)
    edges: list[VoronoiEdge]
    required: dict = field(default_factory=dict)  # (row_id, Side) -> frozenset of edge ids
    ridge: np.ndarray | None = field(default=None, repr=False)  # (m, 2) thinned ridge cell centres

    def required_edges(self) -> frozenset:
        out = set()
        for ids in self.required.values():
            out |= ids
        return frozenset(out)

    def to_networkx(self) -> nx.MultiGraph:
        g = nx.MultiGraph()
        g.add_nodes_from(range(len(self.nodes)))
        for k, e in enumerate(self.edges):
            g.add_edge(e.u, e.v, key=k, length=e.length)
        return g

    def nearest_node(self, point) -> int:
        d = np.hypot(*(self.nodes - np.asarray(point, float)).T)
        return int(np.argmin(d))

    def edge_path(self, k: int, start: int) -> np.ndarray:
        """Polyline of edge ``k`` walked from node ``start``."""
        e = self.edges[k]
        if start == e.u:
            return e.polyline
        if start == e.v:
            return e.polyline[::-1]
        raise ValueError(f"node {start} is not an end of edge {k}")


def ridge_mask(grid: OccupancyGrid) -> np.ndarray:
    """Free cells whose nearest obstacle differs from a 4-neighbour's nearest
    obstacle by more than two cells. The grid border counts as obstacle."""
    free = np.pad(grid.values == FREE, 1, constant_values=False)
    _, (iy, ix) = ndimage.distance_transform_edt(free, return_indices=True)
    ridge = np.zeros_like(free)
    for dy, dx in ((0, 1), (1, 0)):
        a = (slice(0, free.shape[0] - dy), slice(0, free.shape[1] - dx))
        b = (slice(dy, None), slice(dx, None))
        jump = np.hypot(iy[a] - iy[b], ix[a] - ix[b]) > 2.0
        both = free[a] & free[b] & jump
        ridge[a] |= both
        ridge[b] |= both
    return ridge[1:-1, 1:-1]


_NEIGHBOURS = [(dy, dx) for dy in (-1, 0, 1) for dx in (-1, 0, 1) if (dy, dx) != (0, 0)]


def _pixel_graph(skel: np.ndarray) -> nx.Graph:
    g = nx.Graph()
    ys, xs = np.nonzero(skel)
    on = set(zip(ys.tolist(), xs.tolist()))
    for p in sorted(on):
        g.add_node(p)
    h, w = skel.shape
    for y, x in sorted(on):
        for dy, dx in _NEIGHBOURS:
            q = (y + dy, x + dx)
            if q not in on or q < (y, x):
                continue
            if dy and dx and ((y + dy, x) in on or (y, x + dx) in on):
                continue  # the axis pair already connects these, keep the skeleton a tree locally
            g.add_edge((y, x), q, w=math.hypot(dy, dx))
    return g


def _chains(g: nx.Graph):
    """Split a pixel graph into chains between nodes of degree != 2."""
    key = {p for p in g.nodes if g.degree(p) != 2}
    for comp in nx.connected_components(g):
        if not key & comp:
            key.add(min(comp))  # pure cycle: cut it somewhere fixed
    seen = set()
    chains = []
    for a in sorted(key):
        for b in sorted(g.neighbors(a)):
            if frozenset((a, b)) in seen:
                continue
            path = [a, b]
            seen.add(frozenset((a, b)))
            while path[-1] not in key:
                nxt = [q for q in sorted(g.neighbors(path[-1])) if q != path[-2]]
                seen.add(frozenset((path[-1], nxt[0])))
                path.append(nxt[0])
            chains.append(path)
    return sorted(key), chains


def _prune(g: nx.Graph, min_len_cells: float) -> nx.Graph:
    """Drop dead-end chains shorter than ``min_len_cells``, repeatedly."""
    g = g.copy()
    while True:
        _, chains = _chains(g)
        removed = False
        for path in chains:
            ends = (g.degree(path[0]), g.degree(path[-1]))
            if 1 not in ends or ends == (1, 1):
                continue
            length = sum(g.edges[p, q]["w"] for p, q in zip(path[:-1], path[1:]))
            if length < min_len_cells:
                tip = path if ends[0] == 1 else path[::-1]
                g.remove_nodes_from(tip[:-1])
                removed = True
        if not removed:
            return g


def _tag_required(graph: VoronoiGraph, rows: Iterable[PlantRow], d_park: float) -> dict:
    required = {}
    for row in rows:
        for side in (Side.LEFT, Side.RIGHT):
            best, fallback = set(), None
            for k, e in enumerate(graph.edges):
                s, lat = row.to_row_frame(e.polyline)
                off = side.sign * lat - row.half_width
                along = (s >= 0) & (s <= row.length) & (off > 0)
                if not along.any():
                    continue
                near = along & (off <= REQUIRED_BAND * d_park)
                if near.any() and np.ptp(s[near]) >= MIN_SPAN * row.length:
                    best.add(k)
                elif np.ptp(s[along]) >= MIN_SPAN * row.length:
                    score = (float(np.median(off[along])), k)
                    fallback = min(fallback, score) if fallback else score
            if not best and fallback is not None:
                best.add(fallback[1])  # wide corridor: the ridge nearest the face
            required[(row.id, side)] = frozenset(best)
    return required


def build_voronoi(
    grid: OccupancyGrid,
    rows: Iterable[PlantRow] = (),
    d_park: float = 0.75,
    prune_length: float = 0.3,
) -> VoronoiGraph:
    """Skeletonised medial ridge of the free space as a graph of chains.

    Nodes are ridge junctions and dead ends; every edge keeps its cell-centre
    polyline. Edges running alongside a row face within ``1.5 * d_park`` are
    required for that (row, side).
    """
    if not (grid.values == FREE).any():
        raise NoFreeSpace("the grid has no free cells")
    skel = skeletonize(ridge_mask(grid))
    g = _prune(_pixel_graph(skel), prune_length / grid.resolution)
    key, chains = _chains(g)
    key = [p for p in key if g.degree(p) > 0] or key
    index = {p: i for i, p in enumerate(key)}

    def centre(cells):
        c = np.asarray(cells, float)
        return grid.cell_center(c[:, 1].astype(int), c[:, 0].astype(int))

    nodes = centre(key) if key else np.zeros((0, 2))
    edges = []
    for path in chains:
        poly = centre(path)
        length = float(np.hypot(*np.diff(poly, axis=0).T).sum())
        if length > 0:
            edges.append(VoronoiEdge(index[path[0]], index[path[-1]], length, poly))
    ys, xs = np.nonzero(skel)
    graph = VoronoiGraph(nodes, edges, ridge=grid.cell_center(xs, ys) if len(xs) else np.zeros((0, 2)))
    graph.required = _tag_required(graph, rows, d_park)
    return graph

"""8-connected Dijkstra on an occupancy grid."""

from __future__ import annotations

import heapq
import math

from ..errors import PollibotError
from ..slam.grid import FREE, OccupancyGrid

SQRT2 = math.sqrt(2.0)
# axis moves first; the order only matters for equal-cost parents
_MOVES = ((1, 0, 1.0), (-1, 0, 1.0), (0, 1, 1.0), (0, -1, 1.0),
          (1, 1, SQRT2), (-1, 1, SQRT2), (1, -1, SQRT2), (-1, -1, SQRT2))


class NoPath(PollibotError):
    pass


class BlockedEndpoint(PollibotError):
    pass


def dijkstra_path(grid: OccupancyGrid, start: tuple[int, int], goal: tuple[int, int]) -> list[tuple[int, int]]:
    """Shortest path between (ix, iy) cells in unit-cell costs (1 and sqrt 2).

    Diagonal steps need both adjacent axis cells free. Equal-cost frontier
    entries pop in flat-index order, so the result is deterministic.
    """
    w, h = grid.width, grid.height
    free = (grid.values == FREE).ravel().tolist()
    for name, (x, y) in (("start", start), ("goal", goal)):
        if not (0 <= x < w and 0 <= y < h) or not free[y * w + x]:
            raise BlockedEndpoint(f"{name} cell {(x, y)} is not free")
    s, t = start[1] * w + start[0], goal[1] * w + goal[0]
    dist = {s: 0.0}
    parent = {s: -1}
    done = set()
    heap = [(0.0, s)]
    while heap:
        d, u = heapq.heappop(heap)
        if u in done:
            continue
        done.add(u)
        if u == t:
            break
        ux, uy = u % w, u // w
        for dx, dy, c in _MOVES:
            x, y = ux + dx, uy + dy
            if not (0 <= x < w and 0 <= y < h):
                continue
            v = y * w + x
            if not free[v] or v in done:
                continue
            if dx and dy and not (free[uy * w + x] and free[y * w + ux]):
                continue
            nd = d + c
            if nd < dist.get(v, math.inf):
                dist[v] = nd
                parent[v] = u
                heapq.heappush(heap, (nd, v))
    if t not in done:
        raise NoPath(f"goal {goal} is unreachable from {start}")
    path = []
    u = t
    while u != -1:
        path.append((u % w, u // w))
        u = parent[u]
    return path[::-1]


def path_cost(path) -> float:
    """Length of a cell path in cells."""
    total = 0.0
    for (x0, y0), (x1, y1) in zip(path[:-1], path[1:]):
        total += SQRT2 if x0 != x1 and y0 != y1 else 1.0
    return total

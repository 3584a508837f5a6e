"""Independent brute-force references used by the unit and acceptance suites."""

import itertools
import math

import numpy as np

SQRT2 = math.sqrt(2.0)


def grid_shortest_cost(free: np.ndarray, start, goal) -> float:
    """8-connected path cost by Bellman-Ford style relaxation to a fixed point.

    ``free[iy, ix]``; diagonal moves need both side cells free. Returns inf
    when the goal is unreachable.
    """
    h, w = free.shape
    dist = np.full((h, w), math.inf)
    dist[start[1], start[0]] = 0.0
    changed = True
    while changed:
        changed = False
        for y in range(h):
            for x in range(w):
                if not free[y, x] or dist[y, x] == math.inf:
                    continue
                for dx in (-1, 0, 1):
                    for dy in (-1, 0, 1):
                        if dx == dy == 0:
                            continue
                        nx_, ny = x + dx, y + dy
                        if not (0 <= nx_ < w and 0 <= ny < h) or not free[ny, nx_]:
                            continue
                        if dx and dy and not (free[y, nx_] and free[ny, x]):
                            continue
                        c = dist[y, x] + (SQRT2 if dx and dy else 1.0)
                        if c < dist[ny, nx_] - 1e-12:
                            dist[ny, nx_] = c
                            changed = True
    return float(dist[goal[1], goal[0]])


def all_pairs(graph) -> np.ndarray:
    """Floyd-Warshall over the Voronoi graph's edge lengths."""
    n = len(graph.nodes)
    d = np.full((n, n), math.inf)
    np.fill_diagonal(d, 0.0)
    for e in graph.edges:
        d[e.u, e.v] = d[e.v, e.u] = min(d[e.u, e.v], e.length)
    for k in range(n):
        d = np.minimum(d, d[:, k:k + 1] + d[k:k + 1, :])
    return d


def optimal_coverage_length(graph, start: int) -> float:
    """Shortest walk from ``start`` traversing every required edge, by
    enumerating every order of the distinct required edges and both
    traversal directions of each."""
    req = sorted(graph.required_edges())
    if not req:
        return 0.0
    d = all_pairs(graph)
    best = math.inf
    for order in itertools.permutations(req):
        # DP over direction choices: state = node we stand on after each edge
        states = {start: 0.0}
        for k in order:
            e = graph.edges[k]
            nxt = {}
            for node, cost in states.items():
                for a, b in ((e.u, e.v), (e.v, e.u)):
                    c = cost + d[node, a] + e.length
                    if c < nxt.get(b, math.inf):
                        nxt[b] = c
            states = nxt
        best = min(best, min(states.values()))
    return best


def exact_order_cost(dist: np.ndarray) -> tuple[tuple[int, ...], float]:
    """Cheapest open tour from row/column 0 over the remaining indices by
    recursive enumeration (lexicographically first on ties)."""
    n = dist.shape[0] - 1
    best = [None, math.inf]

    def rec(cur, left, path, cost):
        if cost >= best[1] + 1e-12 and best[0] is not None:
            return
        if not left:
            if cost < best[1] - 1e-12:
                best[0], best[1] = tuple(path), cost
            return
        for j in sorted(left):
            rec(j, left - {j}, path + [j - 1], cost + dist[cur, j])

    rec(0, frozenset(range(1, n + 1)), [], 0.0)
    return (best[0] or ()), (best[1] if n else 0.0)


def argmin_cost(robot, candidates, c_d, c_f):
    """Brute-force minimiser of c_d * distance + c_f / n_f over n_f > 0."""
    best, key = None, None
    for c in candidates:
        if c.n_f <= 0:
            continue
        cost = c_d * math.hypot(c.parking.x - robot.x, c.parking.y - robot.y) + c_f / c.n_f
        k = (cost, c.cell.row_id, c.cell.side.value, c.cell.index)
        if key is None or k < key:
            best, key = c, k
    return best

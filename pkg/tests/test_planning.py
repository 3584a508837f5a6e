import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pollibot.experiments import random_three_row_config, three_row_config
from pollibot.geometry import Pose2
from pollibot.maps import world_grid
from pollibot.planning import (
    BlockedEndpoint, CandidateCell, CostParams, DWAParams, NoCandidates, NoFreeSpace, NoPath,
    VoronoiEdge, VoronoiGraph, build_voronoi, cell_cost, dijkstra_path, dwa_step, next_pollination_cell,
    path_cost, plan_inspection, rollouts,
)
from pollibot.slam import FREE, OCCUPIED, GridSpec, OccupancyGrid, inflate, rasterize
from pollibot.world import GridCellRef, PlantRow, RobotState, Side, WorldConfig, build_world

from oracles import argmin_cost, grid_shortest_cost, optimal_coverage_length


def grid_from(free: np.ndarray, res=0.1) -> OccupancyGrid:
    return OccupancyGrid(Pose2(), res, free.shape[1], free.shape[0], np.where(free, FREE, OCCUPIED))


# -- Voronoi -----------------------------------------------------------------


def test_empty_room_ridge_has_centre():
    w = build_world(WorldConfig(room_width=4.0, room_length=4.0, robot_start=(1.0, 1.0, 0.0)))
    g = build_voronoi(world_grid(w))
    assert np.hypot(*(g.ridge - [2.0, 2.0]).T).min() <= 0.05 * math.sqrt(2)


def test_corridor_between_rows_is_required():
    rows = (PlantRow("A", (1.5, 1.6)), PlantRow("B", (1.5, 3.8)))
    w = build_world(WorldConfig(room_width=6.5, room_length=5.4, rows=rows, robot_start=(0.7, 0.7, 0.0)))
    g = build_voronoi(world_grid(w), w.rows, w.config.d_park)
    mid = (1.6 + 3.8) / 2
    shared = g.required[("A", Side.LEFT)] & g.required[("B", Side.RIGHT)]
    assert shared
    for k in shared:
        poly = g.edges[k].polyline
        inside = (poly[:, 0] > 2.0) & (poly[:, 0] < 4.4)
        assert np.abs(poly[inside, 1] - mid).max() <= 0.1


def test_fully_occupied_has_no_free_space():
    with pytest.raises(NoFreeSpace):
        build_voronoi(grid_from(np.zeros((10, 10), bool)))


@pytest.mark.parametrize("seed", range(10))
def test_every_side_has_required_edges(seed):
    w = build_world(random_three_row_config(seed))
    g = build_voronoi(world_grid(w), w.rows, w.config.d_park)
    assert len(g.required) == 6 and all(g.required.values())
    assert all(e.length > 0 for e in g.edges)


# -- inspection --------------------------------------------------------------


def toy_graph(required):
    nodes = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
    edges = []
    for u, v in ((0, 1), (1, 2), (2, 3), (3, 0)):
        edges.append(VoronoiEdge(u, v, 1.0, nodes[[u, v]]))
    return VoronoiGraph(nodes, edges, required)


def test_no_required_edges_route_is_start():
    r = plan_inspection(toy_graph({}), 2)
    assert r.nodes == (2,) and r.length == 0.0


def test_one_row_matches_exhaustive():
    w = build_world(WorldConfig(room_width=6.0, room_length=4.0, rows=(PlantRow("A", (1.28, 2.0)),), robot_start=(0.6, 0.6, 0.0)))
    g = build_voronoi(world_grid(w), w.rows, w.config.d_park)
    start = g.nearest_node((0.6, 0.6))
    r = plan_inspection(g, start)
    assert g.required_edges() <= r.covered()
    assert r.length == pytest.approx(optimal_coverage_length(g, start), rel=1e-12)


def test_route_is_a_connected_walk():
    w = build_world(three_row_config())
    g = build_voronoi(world_grid(w), w.rows, w.config.d_park)
    r = plan_inspection(g, g.nearest_node((0.9, 0.9)))
    for k, a, b in zip(r.edges, r.nodes[:-1], r.nodes[1:]):
        assert {g.edges[k].u, g.edges[k].v} == {a, b}
    assert r.length == pytest.approx(sum(g.edges[k].length for k in r.edges))
    seg = np.hypot(*np.diff(r.polyline, axis=0).T)
    assert seg.max() < 0.05 * math.sqrt(2) + 1e-9


@pytest.mark.parametrize("seed", range(20))
def test_three_rows_within_bound(seed):
    w = build_world(random_three_row_config(seed))
    g = build_voronoi(world_grid(w), w.rows, w.config.d_park)
    start = g.nearest_node(w.config.robot_start[:2])
    r = plan_inspection(g, start)
    assert g.required_edges() <= r.covered()
    assert r.length <= 1.5 * optimal_coverage_length(g, start) + 1e-9


# -- next-cell selection -----------------------------------------------


def cand(i, x, n, side=Side.LEFT, row="A"):
    return CandidateCell(GridCellRef(row, side, i), Pose2(x, 0.0, 0.0), n)


def test_singleton():
    c = cand(0, 50.0, 1)
    assert next_pollination_cell(Pose2(), [c], CostParams(3.0, 0.1)) is c


def test_two_candidate_example():
    a, b = cand(0, 1.0, 1), cand(1, 2.0, 10)
    assert cell_cost(Pose2(), a, CostParams()) == pytest.approx(2.0)
    assert cell_cost(Pose2(), b, CostParams()) == pytest.approx(2.1)
    assert next_pollination_cell(Pose2(), [b, a]) is a


def test_scaling_keeps_argmin():
    cs = [cand(0, 1.0, 1), cand(1, 2.0, 10), cand(2, 1.5, 3)]
    assert next_pollination_cell(Pose2(), cs, CostParams(5.0, 5.0)) is next_pollination_cell(Pose2(), cs)


def test_zero_counts_excluded():
    with pytest.raises(NoCandidates):
        next_pollination_cell(Pose2(), [cand(0, 1.0, 0), cand(1, 2.0, 0)])
    live = cand(1, 9.0, 1)
    assert next_pollination_cell(Pose2(), [cand(0, 0.0, 0), live]) is live


def test_tie_break_lowest_cell():
    a, b = cand(3, 1.0, 2, Side.RIGHT), cand(3, -1.0, 2, Side.LEFT)
    assert next_pollination_cell(Pose2(), [a, b]) is b


def test_invalid_params():
    with pytest.raises(ValueError):
        CostParams(0.0, 1.0)


candidate_sets = st.lists(
    st.tuples(st.sampled_from("ABC"), st.sampled_from(list(Side)), st.integers(0, 4),
              st.floats(-10, 10), st.floats(-10, 10), st.integers(0, 6)),
    min_size=1, max_size=20, unique_by=lambda t: t[:3],
)


@settings(max_examples=300)
@given(candidate_sets, st.floats(0.01, 10), st.floats(0.01, 10), st.floats(0.01, 100))
def test_selection_matches_brute_force(raw, c_d, c_f, lam):
    cs = [CandidateCell(GridCellRef(r, s, i), Pose2(x, y, 0.0), n) for r, s, i, x, y, n in raw]
    robot = Pose2(0.5, -0.5, 0.0)
    expect = argmin_cost(robot, cs, c_d, c_f)
    if expect is None:
        with pytest.raises(NoCandidates):
            next_pollination_cell(robot, cs, CostParams(c_d, c_f))
        return
    got = next_pollination_cell(robot, cs, CostParams(c_d, c_f))
    assert got is expect
    scaled = next_pollination_cell(robot, cs, CostParams(lam * c_d, lam * c_f))
    k = lambda c: c_d * math.hypot(c.parking.x - 0.5, c.parking.y + 0.5) + c_f / c.n_f
    # scaling can only swap exact ties, never the minimal cost
    assert k(scaled) == pytest.approx(k(got), rel=1e-9)


# -- Dijkstra ----------------------------------------------------------------


def test_start_equals_goal():
    g = grid_from(np.ones((5, 5), bool))
    p = dijkstra_path(g, (2, 2), (2, 2))
    assert p == [(2, 2)] and path_cost(p) == 0.0


def test_free_diagonal():
    p = dijkstra_path(grid_from(np.ones((5, 5), bool)), (0, 0), (4, 4))
    assert path_cost(p) == pytest.approx(4 * math.sqrt(2))


def test_enclosed_goal():
    free = np.ones((7, 7), bool)
    free[2:5, 2:5] = False
    free[3, 3] = True
    with pytest.raises(NoPath):
        dijkstra_path(grid_from(free), (0, 0), (3, 3))


def test_blocked_endpoint():
    free = np.ones((4, 4), bool)
    free[0, 0] = False
    with pytest.raises(BlockedEndpoint):
        dijkstra_path(grid_from(free), (0, 0), (3, 3))


def test_no_corner_cutting():
    free = np.ones((3, 3), bool)
    free[0, 1] = False
    p = dijkstra_path(grid_from(free), (0, 0), (1, 1))
    assert path_cost(p) == pytest.approx(2.0)


def test_deterministic():
    g = grid_from(np.ones((9, 9), bool))
    assert dijkstra_path(g, (0, 4), (8, 4)) == dijkstra_path(g, (0, 4), (8, 4))


@settings(max_examples=120, deadline=None)
@given(st.integers(2, 20), st.integers(2, 20), st.integers(0, 2**32 - 1), st.floats(0.0, 0.45))
def test_dijkstra_matches_oracle(w, h, seed, density):
    rng = np.random.default_rng(seed)
    free = rng.random((h, w)) >= density
    cells = np.argwhere(free)
    if len(cells) < 1:
        return
    (sy, sx), (gy, gx) = cells[rng.integers(len(cells))], cells[rng.integers(len(cells))]
    expect = grid_shortest_cost(free, (sx, sy), (gx, gy))
    g = grid_from(free)
    if math.isinf(expect):
        with pytest.raises(NoPath):
            dijkstra_path(g, (int(sx), int(sy)), (int(gx), int(gy)))
        return
    p = dijkstra_path(g, (int(sx), int(sy)), (int(gx), int(gy)))
    assert path_cost(p) == pytest.approx(expect, abs=1e-9)
    assert p[0] == (sx, sy) and p[-1] == (gx, gy)
    for (x0, y0), (x1, y1) in zip(p[:-1], p[1:]):
        assert max(abs(x1 - x0), abs(y1 - y0)) == 1 and free[y1, x1]


# -- DWA ---------------------------------------------------------------------


def open_grid(size=6.0):
    n = int(size / 0.05)
    return rasterize(np.zeros((0, 2)), GridSpec(Pose2(), 0.05, n, n))


def score_all(state, goal, grid, p):
    """Independent enumeration of the window, the admissibility tests and the score."""
    v_lo, v_hi = max(p.v_min, state.v - p.acc_v * p.dt), min(p.v_max, state.v + p.acc_v * p.dt)
    w_lo, w_hi = max(-p.omega_max, state.omega - p.acc_omega * p.dt), min(p.omega_max, state.omega + p.acc_omega * p.dt)
    out = []
    for v in np.linspace(v_lo, v_hi, p.n_v):
        for w in np.linspace(w_lo, w_hi, p.n_omega):
            traj = rollouts(state.pose.x, state.pose.y, state.pose.theta, [v], [w], p.horizon, p.sim_dt)[0]
            if grid.blocked(traj[:, :2]).any():
                continue
            clear = grid.clearance_at(traj[1:, :2]).min()
            if v > 0 and v * v / (2 * p.acc_v) > clear:
                continue
            x, y, th = traj[-1]
            err = abs(math.remainder(math.atan2(goal[1] - y, goal[0] - x) - th, 2 * math.pi))
            ahead = max(0.0, math.cos(math.remainder(
                math.atan2(goal[1] - state.pose.y, goal[0] - state.pose.x) - state.pose.theta, 2 * math.pi)))
            s = (p.w_heading * (1 - err / math.pi) + p.w_clearance * min(clear, p.clearance_cap) / p.clearance_cap
                 + p.w_velocity * v / p.v_max * ahead)
            out.append((s, v, w))
    return out


def test_goal_ahead_from_rest():
    p = DWAParams()
    state = RobotState(Pose2(1.0, 3.0, 0.0))
    v, w = dwa_step(state, (5.0, 3.0), open_grid(), p)
    cand = score_all(state, (5.0, 3.0), open_grid(), p)
    best = max(cand, key=lambda t: (round(t[0], 12), t[1], -abs(t[2])))
    assert v == pytest.approx(p.acc_v * p.dt) and w == 0.0
    assert (v, w) == pytest.approx(best[1:])


def test_wall_inside_stopping_distance():
    # moving at 0.5 m/s with 0.3 m/s^2 braking needs ~0.42 m; the wall is 0.3 m off
    p = DWAParams(v_max=0.6, acc_v=0.3)
    g = open_grid()
    g.values[:, int(1.3 / 0.05):] = OCCUPIED
    state = RobotState(Pose2(1.0, 3.0, 0.0), v=0.5)
    assert not [c for c in score_all(state, (5.0, 3.0), g, p) if c[1] > 0]
    v, w = dwa_step(state, (5.0, 3.0), g, p)
    assert v == 0.0


def test_goal_behind_turns_in_place():
    p = DWAParams()
    state = RobotState(Pose2(3.0, 3.0, 0.0))
    v, w = dwa_step(state, (1.0, 3.0), open_grid(), p)
    assert v == 0.0
    assert abs(w) == pytest.approx(p.acc_omega * p.dt)


def test_goal_behind_left_turns_left():
    state = RobotState(Pose2(3.0, 3.0, 0.0))
    _, w = dwa_step(state, (1.0, 3.2), open_grid())
    assert w > 0


@settings(max_examples=60, deadline=None)
@given(st.floats(0.5, 5.5), st.floats(0.5, 5.5), st.floats(-math.pi, math.pi), st.floats(0.0, 0.4),
       st.floats(-1.0, 1.0), st.floats(0.5, 5.5), st.floats(0.5, 5.5))
def test_dwa_command_trajectory_is_free(x, y, th, v0, w0, gx, gy):
    g = inflate(world_grid(build_world(three_row_config())), 0.3)
    pose = Pose2(x, y, th)
    if g.blocked(pose.position[None, :])[0]:
        return
    p = DWAParams()
    v, w = dwa_step(RobotState(pose, v0, w0), (gx, gy), g, p)
    traj = rollouts(x, y, th, [v], [w], p.horizon, p.sim_dt)[0]
    # the fallback rotates in place, so every command keeps the horizon free
    assert not g.blocked(traj[:, :2]).any()

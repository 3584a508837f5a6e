"""Planar pose graph: odometry (between) and anchor (unary global) factors,
analytic residual/Jacobian, and a batch Levenberg-Marquardt solver."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import sparse
from scipy.linalg import solveh_banded
from scipy.sparse.linalg import splu

from ..errors import PollibotError
from ..geometry import Pose2, wrap_angle


class SingularSystem(PollibotError):
    pass


class GraphError(PollibotError, ValueError):
    pass


def _check_information(info) -> np.ndarray:
    info = np.asarray(info, dtype=float)
    if info.shape != (3, 3) or not np.allclose(info, info.T):
        raise GraphError("information must be a symmetric 3x3 matrix")
    try:
        np.linalg.cholesky(info)
    except np.linalg.LinAlgError as exc:
        raise GraphError("information must be positive definite") from exc
    return info


def _sqrt_information(info: np.ndarray) -> np.ndarray:
    # U with U^T U = information, so |U e|^2 = e^T info e
    return np.linalg.cholesky(info).T


@dataclass(frozen=True, eq=False)
class OdometryFactor:
    from_node: int
    to_node: int
    measurement: Pose2
    information: np.ndarray

    @property
    def sqrt_information(self) -> np.ndarray:
        return _sqrt_information(self.information)


@dataclass(frozen=True, eq=False)
class AnchorFactor:
    node: int
    measurement: Pose2
    information: np.ndarray

    @property
    def sqrt_information(self) -> np.ndarray:
        return _sqrt_information(self.information)


class FactorGraph:
    def __init__(self):
        self.num_nodes = 0
        self.odometry: list[OdometryFactor] = []
        self.anchors: list[AnchorFactor] = []
        self._packed = {"odometry": ([], [], []), "anchors": ([], [], [])}
        self._arrays = None

    @property
    def nodes(self) -> range:
        return range(self.num_nodes)

    def add_node(self) -> int:
        self.num_nodes += 1
        self._arrays = None
        return self.num_nodes - 1

    def add_odometry(self, i: int, j: int, measurement: Pose2, information) -> OdometryFactor:
        if i == j:
            raise GraphError("odometry factor endpoints must differ")
        for n in (i, j):
            if not 0 <= n < self.num_nodes:
                raise GraphError(f"unknown node {n}")
        f = OdometryFactor(i, j, measurement, _check_information(information))
        self.odometry.append(f)
        self._pack("odometry", (i, j), f)
        return f

    def add_anchor(self, node: int, measurement: Pose2, information) -> AnchorFactor:
        if not 0 <= node < self.num_nodes:
            raise GraphError(f"unknown node {node}")
        f = AnchorFactor(node, measurement, _check_information(information))
        self.anchors.append(f)
        self._pack("anchors", (node,), f)
        return f

    def _pack(self, kind, ends, factor):
        idx, z, u = self._packed[kind]
        idx.append(ends)
        z.append(factor.measurement.as_array())
        u.append(factor.sqrt_information)
        self._arrays = None

    @property
    def num_residuals(self) -> int:
        return 3 * (len(self.odometry) + len(self.anchors))

    def arrays(self):
        if self._arrays is None:
            def pack(kind, width):
                idx, z, u = self._packed[kind]
                if not idx:
                    return (np.zeros((0, width), int), np.zeros((0, 3)), np.zeros((0, 3, 3)))
                return np.array(idx, dtype=int), np.array(z), np.array(u)
            self._arrays = (pack("odometry", 2), pack("anchors", 1))
        return self._arrays


def _mv(a, v):
    """Batched matrix-vector product."""
    return (a @ v[..., None])[..., 0]


def _rot_t(th):
    """Stack of R(th)^T, shape (m, 2, 2)."""
    c, s = np.cos(th), np.sin(th)
    out = np.empty(np.shape(th) + (2, 2))
    out[..., 0, 0] = c
    out[..., 0, 1] = s
    out[..., 1, 0] = -s
    out[..., 1, 1] = c
    return out


def graph_residual(graph: FactorGraph, estimate) -> tuple[np.ndarray, sparse.csr_matrix]:
    """Whitened residual vector and its block-sparse Jacobian.

    Each factor's error is the pose vector of ``inverse(z) o predicted``
    with the angle wrapped; odometry factors come first, then anchors.
    """
    r, terms = _linearize(graph, estimate)
    shape = (graph.num_residuals, 3 * graph.num_nodes)
    rows, cols, vals = [], [], []
    for fac, node, blk in terms:
        rows.append(np.broadcast_to(3 * fac[:, None, None] + np.arange(3)[None, :, None], blk.shape).ravel())
        cols.append(np.broadcast_to(3 * node[:, None, None] + np.arange(3)[None, None, :], blk.shape).ravel())
        vals.append(blk.ravel())
    if not rows:
        return r.ravel(), sparse.csr_matrix(shape)
    jac = sparse.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=shape)
    return r.ravel(), jac


def _linearize(graph: FactorGraph, estimate):
    """Whitened residual blocks (factors, 3) and the Jacobian as a list of
    (factor index, node index, 3x3 block) stacks."""
    x = np.asarray(estimate, dtype=float).reshape(-1, 3)
    if len(x) != graph.num_nodes:
        raise GraphError("estimate must cover every node")
    (oi, oz, ou), (ai, az, au) = graph.arrays()
    res_parts, terms = [], []

    m = len(oi)
    if m:
        i, j = oi[:, 0], oi[:, 1]
        ri_t = _rot_t(x[i, 2])
        rz_t = _rot_t(oz[:, 2])
        d = x[j, :2] - x[i, :2]
        tp = _mv(ri_t, d)
        et = _mv(rz_t, tp - oz[:, :2])
        eth = wrap_angle(x[j, 2] - x[i, 2] - oz[:, 2])
        e = np.column_stack([et, eth])

        c, s = np.cos(x[i, 2]), np.sin(x[i, 2])
        dri_t = np.empty((m, 2, 2))
        dri_t[:, 0, 0] = -s
        dri_t[:, 0, 1] = c
        dri_t[:, 1, 0] = -c
        dri_t[:, 1, 1] = -s
        a = rz_t @ ri_t
        ji = np.zeros((m, 3, 3))
        jj = np.zeros((m, 3, 3))
        ji[:, :2, :2] = -a
        ji[:, :2, 2] = _mv(rz_t @ dri_t, d)
        ji[:, 2, 2] = -1.0
        jj[:, :2, :2] = a
        jj[:, 2, 2] = 1.0
        res_parts.append(_mv(ou, e))
        fac = np.arange(m)
        terms.append((fac, i, ou @ ji))
        terms.append((fac, j, ou @ jj))

    k = len(ai)
    if k:
        n = ai[:, 0]
        rz_t = _rot_t(az[:, 2])
        et = _mv(rz_t, x[n, :2] - az[:, :2])
        eth = wrap_angle(x[n, 2] - az[:, 2])
        e = np.column_stack([et, eth])
        jn = np.zeros((k, 3, 3))
        jn[:, :2, :2] = rz_t
        jn[:, 2, 2] = 1.0
        res_parts.append(_mv(au, e))
        terms.append((m + np.arange(k), n, au @ jn))

    r = np.concatenate(res_parts) if res_parts else np.zeros((0, 3))
    return r, terms


def _normal_equations(graph, x):
    """Residual, J^T r, and J^T J as stacked 3x3 blocks (row node, col node, block)."""
    r, terms = _linearize(graph, x)
    g = np.zeros((graph.num_nodes, 3))
    bi, bj, bv = [np.zeros(0, int)], [np.zeros(0, int)], [np.zeros((0, 3, 3))]
    for fa, na, ba in terms:
        contrib = _mv(ba.transpose(0, 2, 1), r[fa])
        for k in range(3):
            g[:, k] += np.bincount(na, contrib[:, k], graph.num_nodes)
        for fb, nb, bb in terms:
            if fa is not fb:  # blocks couple only within one factor
                continue
            bi.append(na)
            bj.append(nb)
            bv.append(ba.transpose(0, 2, 1) @ bb)
    return r.ravel(), (np.concatenate(bi), np.concatenate(bj), np.concatenate(bv)), g.ravel()


# Below this many unknowns a dense solve beats sparse LU.
DENSE_LIMIT = 900


class _Solver:
    """Assembles and solves the damped normal equations. Odometry chains
    give a narrow band, which is solved as such; otherwise dense for small
    graphs and sparse LU for large ones."""

    def __init__(self, graph: FactorGraph):
        self.n = 3 * graph.num_nodes
        oi = graph.arrays()[0][0]
        gap = int(np.abs(oi[:, 0] - oi[:, 1]).max()) if len(oi) else 0
        self.band = 3 * gap + 2
        if 4 * self.band < self.n:
            self.mode = "banded"
        elif self.n <= DENSE_LIMIT:
            self.mode = "dense"
        else:
            self.mode = "sparse"
        self._index = None

    def _scalar_index(self, bi, bj):
        if self._index is None:
            p = np.arange(3)
            rows = np.broadcast_to(3 * bi[:, None, None] + p[None, :, None], (len(bi), 3, 3)).ravel()
            cols = np.broadcast_to(3 * bj[:, None, None] + p[None, None, :], (len(bj), 3, 3)).ravel()
            if self.mode == "banded":
                keep = cols >= rows
                flat = (self.band + rows - cols) * self.n + cols
                self._index = (keep, flat[keep])
            else:
                self._index = (rows, cols)
        return self._index

    def assemble(self, blocks):
        bi, bj, bv = blocks
        vals = bv.ravel()
        n = self.n
        if self.mode == "banded":
            keep, flat = self._scalar_index(bi, bj)
            return np.bincount(flat, vals[keep], (self.band + 1) * n).reshape(self.band + 1, n)
        rows, cols = self._scalar_index(bi, bj)
        if self.mode == "dense":
            return np.bincount(rows * n + cols, vals, n * n).reshape(n, n)
        return sparse.csc_matrix((vals, (rows, cols)), shape=(n, n))

    def solve(self, h, g, lam):
        try:
            if self.mode == "banded":
                ab = h.copy()
                ab[self.band] *= 1.0 + lam
                return solveh_banded(ab, -g)
            if self.mode == "dense":
                return np.linalg.solve(h + lam * np.diag(np.diag(h)), -g)
            return splu((h + lam * sparse.diags(h.diagonal())).tocsc()).solve(-g)
        except (np.linalg.LinAlgError, RuntimeError) as exc:
            raise SingularSystem(str(exc)) from exc


def graph_cost(graph: FactorGraph, estimate) -> float:
    r, _ = graph_residual(graph, estimate)
    return 0.5 * float(r @ r)


def optimize_lm(
    graph: FactorGraph,
    initial,
    lambda0: float = 1e-4,
    max_iters: int = 50,
    tol: float = 1e-10,
    history: Optional[list] = None,
) -> np.ndarray:
    """Levenberg-Marquardt with Marquardt diagonal scaling and multiplicative
    damping (x10 on rejection, /10 on acceptance).

    Returns an (n, 3) array of poses. ``history``, when given, receives the
    cost before the first step and after every accepted step.
    """
    if not graph.anchors:
        raise GraphError("at least one anchor factor is required to fix the gauge")
    x = np.array(initial, dtype=float).reshape(-1, 3)
    if len(x) != graph.num_nodes:
        raise GraphError("estimate must cover every node")
    x[:, 2] = wrap_angle(x[:, 2])
    solver = _Solver(graph)
    r, blocks, g = _normal_equations(graph, x)
    h = solver.assemble(blocks)
    cost = 0.5 * float(r @ r)
    if history is not None:
        history.append(cost)
    lam = lambda0
    for _ in range(max_iters):
        if cost <= 1e-30:
            break
        delta = solver.solve(h, g, lam)
        if not np.all(np.isfinite(delta)):
            raise SingularSystem("damped normal equations produced a non-finite step")
        x_new = x + delta.reshape(-1, 3)
        x_new[:, 2] = wrap_angle(x_new[:, 2])
        r_new, blocks, g_new = _normal_equations(graph, x_new)
        h_new = solver.assemble(blocks)
        cost_new = 0.5 * float(r_new @ r_new)
        if cost_new < cost:
            rel = (cost - cost_new) / cost
            x, r, h, g, cost = x_new, r_new, h_new, g_new, cost_new
            lam = max(lam / 10.0, 1e-15)
            if history is not None:
                history.append(cost)
            if rel < tol:
                break
        else:
            lam *= 10.0
            if lam > 1e16:
                break
    return x


def diag_information(sigma_xy: float, sigma_theta: float) -> np.ndarray:
    return np.diag([1.0 / sigma_xy**2, 1.0 / sigma_xy**2, 1.0 / sigma_theta**2])


def poses_from_array(x) -> list[Pose2]:
    return [Pose2(*row) for row in np.asarray(x).reshape(-1, 3)]


def dead_reckon(start: Pose2, increments) -> list[Pose2]:
    out = [start]
    for z in increments:
        out.append(out[-1].compose(z))
    return out


def angle_error(a: float, b: float) -> float:
    return abs(float(wrap_angle(a - b)))


__all__ = [
    "AnchorFactor", "FactorGraph", "GraphError", "OdometryFactor", "SingularSystem",
    "dead_reckon", "diag_information", "graph_cost", "graph_residual", "optimize_lm",
    "poses_from_array", "angle_error",
]

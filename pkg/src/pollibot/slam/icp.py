"""Point-to-point ICP against the prior map, match-fraction gating and
multi-start initial-offset search."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.spatial import cKDTree

from ..errors import PollibotError
from ..geometry import IDENTITY, Pose2


class Degenerate(PollibotError):
    pass


class NoAlignment(PollibotError):
    pass


@dataclass(frozen=True)
class IcpResult:
    transform: Pose2
    match_fraction: float
    rms_error: float
    iterations: int


def _kabsch(src: np.ndarray, dst: np.ndarray) -> tuple[float, float, float]:
    """Least-squares rigid transform src -> dst as (x, y, theta). In 2D the
    SVD solution reduces to an atan2 of the cross-covariance terms."""
    n = len(src)
    cs, cd = src.sum(axis=0) / n, dst.sum(axis=0) / n
    a, b = src - cs, dst - cd
    sxx = float(a[:, 0] @ b[:, 0] + a[:, 1] @ b[:, 1])
    sxy = float(a[:, 0] @ b[:, 1] - a[:, 1] @ b[:, 0])
    th = math.atan2(sxy, sxx)
    c, s = math.cos(th), math.sin(th)
    return float(cd[0] - (c * cs[0] - s * cs[1])), float(cd[1] - (s * cs[0] + c * cs[1])), th


def icp_match(
    source,
    target,
    init: Pose2 = IDENTITY,
    max_iters: int = 50,
    d_corr: float = 0.5,
    tol: float = 1e-10,
    tree: Optional[cKDTree] = None,
) -> IcpResult:
    """Align ``source`` onto ``target``; the returned transform maps source into target."""
    src = np.asarray(source, dtype=float).reshape(-1, 2)
    tgt = np.asarray(target, dtype=float).reshape(-1, 2)
    if len(src) == 0 or len(tgt) == 0:
        raise ValueError("both clouds must be non-empty")
    if tree is None:
        tree = cKDTree(tgt)

    x, y, th = init.x, init.y, init.theta
    prev_cost = math.inf
    iterations = 0
    moved = np.empty_like(src)
    for iterations in range(1, max_iters + 1):
        c, s = math.cos(th), math.sin(th)
        moved[:, 0] = c * src[:, 0] - s * src[:, 1] + x
        moved[:, 1] = s * src[:, 0] + c * src[:, 1] + y
        d, idx = tree.query(moved, distance_upper_bound=d_corr)
        matched = d < math.inf
        dm = d[matched]
        if len(dm) < 3:
            raise Degenerate(f"only {len(dm)} correspondences within {d_corr} m")
        cost = float(dm @ dm) / len(dm)
        if abs(prev_cost - cost) < tol:
            break
        prev_cost = cost
        x, y, th = _kabsch(src[matched], tgt[idx[matched]])

    transform = Pose2(x, y, th)
    d, _ = tree.query(transform.transform_points(src), distance_upper_bound=d_corr)
    matched = np.isfinite(d)
    rms = float(np.sqrt(np.mean(d[matched] ** 2))) if matched.any() else math.inf
    return IcpResult(transform, float(matched.mean()), rms, iterations)


def target_normals(target, tree: Optional[cKDTree] = None, k: int = 5) -> np.ndarray:
    """Unit normals of a sampled outline from the principal axes of each
    point's k nearest neighbours."""
    tgt = np.asarray(target, dtype=float).reshape(-1, 2)
    tree = tree if tree is not None else cKDTree(tgt)
    _, idx = tree.query(tgt, k=min(k, len(tgt)))
    nb = tgt[np.atleast_2d(idx)] - tgt[np.atleast_2d(idx)].mean(axis=1, keepdims=True)
    cov = np.einsum("nki,nkj->nij", nb, nb)
    _, vecs = np.linalg.eigh(cov)
    return vecs[:, :, 0]


def polish_point_to_line(
    source, target, normals, init: Pose2, d_corr: float, tree: cKDTree, max_iters: int = 20, tol: float = 1e-9
) -> IcpResult:
    """Gauss-Newton on point-to-line distances. Removes the along-wall bias
    point-to-point matching has against a discretely sampled outline."""
    src = np.asarray(source, dtype=float).reshape(-1, 2)
    tgt = np.asarray(target, dtype=float).reshape(-1, 2)
    x = init.as_array()
    it = 0
    for it in range(1, max_iters + 1):
        pose = Pose2.from_array(x)
        moved = pose.transform_points(src)
        d, idx = tree.query(moved, distance_upper_bound=d_corr)
        ok = np.isfinite(d)
        if ok.sum() < 3:
            raise Degenerate(f"only {int(ok.sum())} correspondences within {d_corr} m")
        n = normals[idx[ok]]
        r = np.einsum("ij,ij->i", n, moved[ok] - tgt[idx[ok]])
        rel = moved[ok] - x[:2]
        dth = np.column_stack([-rel[:, 1], rel[:, 0]])
        jac = np.column_stack([n[:, 0], n[:, 1], np.einsum("ij,ij->i", n, dth)])
        step, *_ = np.linalg.lstsq(jac, -r, rcond=None)
        x = x + step
        if np.abs(step).max() < tol:
            break
    pose = Pose2.from_array(x)
    d, _ = tree.query(pose.transform_points(src), distance_upper_bound=d_corr)
    ok = np.isfinite(d)
    rms = float(np.sqrt(np.mean(d[ok] ** 2))) if ok.any() else math.inf
    return IcpResult(pose, float(ok.mean()), rms, it)


def loop_closure_check(result: IcpResult, threshold: float) -> bool:
    return result.match_fraction >= threshold


def estimate_initial_offset(
    local,
    prior_map,
    n_starts: int = 12,
    threshold: float = 0.8,
    grid_step: float = 1.0,
    d_corr: float = 0.1,
    coarse_d_corr: float = 0.8,
    coarse_iters: int = 12,
    refine_top: int = 6,
    coarse_points: int = 200,
    tree: Optional[cKDTree] = None,
) -> Pose2:
    """Pose of the local frame in the prior-map frame.

    Coarse ICP runs from ``n_starts`` evenly spaced headings times a translation
    grid over the map's bounding box; the best few are refined at ``d_corr``.
    """
    local = np.asarray(local, dtype=float).reshape(-1, 2)
    prior_map = np.asarray(prior_map, dtype=float).reshape(-1, 2)
    if len(prior_map) == 0:
        raise ValueError("prior map is empty")
    if len(local) < 3:
        raise NoAlignment("local cloud has fewer than three points")
    if tree is None:
        tree = cKDTree(prior_map)

    lo, hi = prior_map.min(axis=0), prior_map.max(axis=0)
    xs = np.arange(lo[0] + grid_step / 2, hi[0], grid_step)
    ys = np.arange(lo[1] + grid_step / 2, hi[1], grid_step)
    if len(xs) == 0:
        xs = np.array([(lo[0] + hi[0]) / 2])
    if len(ys) == 0:
        ys = np.array([(lo[1] + hi[1]) / 2])
    coarse_pts = local[:: max(1, len(local) // coarse_points)]
    centroid = coarse_pts.mean(axis=0)

    coarse = []
    for k in range(n_starts):
        th = -math.pi + 2.0 * math.pi * k / n_starts
        c, s = math.cos(th), math.sin(th)
        rc = np.array([c * centroid[0] - s * centroid[1], s * centroid[0] + c * centroid[1]])
        for gx in xs:
            for gy in ys:
                init = Pose2(gx - rc[0], gy - rc[1], th)
                try:
                    res = icp_match(coarse_pts, prior_map, init, coarse_iters, coarse_d_corr, 1e-8, tree)
                except Degenerate:
                    continue
                d, _ = tree.query(res.transform.transform_points(coarse_pts), distance_upper_bound=d_corr)
                frac = float(np.isfinite(d).mean())
                coarse.append((-frac, res.rms_error, len(coarse), res.transform))
    if not coarse:
        raise NoAlignment("no start produced enough correspondences")
    coarse.sort(key=lambda c: c[:3])

    best = None
    normals = target_normals(prior_map, tree)
    for _, _, _, t0 in coarse[:refine_top]:
        try:
            res = icp_match(local, prior_map, t0, 50, d_corr, 1e-12, tree)
            res = polish_point_to_line(local, prior_map, normals, res.transform, d_corr, tree)
        except Degenerate:
            continue
        if best is None or (res.match_fraction, -res.rms_error) > (best.match_fraction, -best.rms_error):
            best = res
    if best is None or not loop_closure_check(best, threshold):
        frac = 0.0 if best is None else best.match_fraction
        raise NoAlignment(f"best match fraction {frac:.3f} below threshold {threshold}")
    return best.transform

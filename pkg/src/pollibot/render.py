"""Plain-text SVG rendering of a finished run."""

from __future__ import annotations

from typing import Iterable, Optional
from xml.sax.saxutils import escape

import numpy as np

from .world import FlowerState, World, cell_corners

SCALE = 80.0  # px per metre
MARGIN = 20.0

PHASE_COLORS = {
    "Init": "#7f7f7f",
    "Inspect": "#1f77b4",
    "SelectCell": "#9467bd",
    "Drive": "#2ca02c",
    "WorkspaceSurvey": "#ff7f0e",
    "PollinateSequence": "#d62728",
    "Done": "#000000",
}
FLOWER_COLORS = {
    FlowerState.BUD: "#8fbc8f",
    FlowerState.READY: "#ffd700",
    FlowerState.POLLINATED: "#8b4513",
    FlowerState.WILTED: "#a9a9a9",
}


def _fmt(v: float) -> str:
    return f"{v:.2f}"


class _Canvas:
    def __init__(self, width_m: float, height_m: float):
        self.h = height_m
        self.width = width_m * SCALE + 2 * MARGIN
        self.height = height_m * SCALE + 2 * MARGIN
        self.items: list[str] = []

    def xy(self, x, y) -> tuple[str, str]:
        # y up in the world, down in SVG
        return _fmt(MARGIN + x * SCALE), _fmt(MARGIN + (self.h - y) * SCALE)

    def line(self, x0, y0, x1, y1, color, width=1.0, cls=None):
        a, b = self.xy(x0, y0)
        c, d = self.xy(x1, y1)
        extra = f' class="{cls}"' if cls else ""
        self.items.append(f'<line x1="{a}" y1="{b}" x2="{c}" y2="{d}" stroke="{color}" stroke-width="{width}"{extra}/>')

    def polyline(self, pts, color, width=1.0, cls=None):
        if len(pts) < 2:
            return
        coords = " ".join(",".join(self.xy(x, y)) for x, y in pts)
        extra = f' class="{cls}"' if cls else ""
        self.items.append(f'<polyline points="{coords}" fill="none" stroke="{color}" stroke-width="{width}"{extra}/>')

    def polygon(self, pts, fill, stroke, cls=None):
        coords = " ".join(",".join(self.xy(x, y)) for x, y in pts)
        extra = f' class="{cls}"' if cls else ""
        self.items.append(f'<polygon points="{coords}" fill="{fill}" stroke="{stroke}"{extra}/>')

    def circle(self, x, y, r_px, fill, cls=None, title=None):
        a, b = self.xy(x, y)
        extra = f' class="{cls}"' if cls else ""
        body = f"<title>{escape(title)}</title>" if title else ""
        self.items.append(f'<circle cx="{a}" cy="{b}" r="{_fmt(r_px)}" fill="{fill}"{extra}>{body}</circle>')

    def svg(self) -> str:
        head = (
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{_fmt(self.width)}" height="{_fmt(self.height)}" '
            f'viewBox="0 0 {_fmt(self.width)} {_fmt(self.height)}">'
        )
        return "\n".join([head, '<rect width="100%" height="100%" fill="white"/>', *self.items, "</svg>"]) + "\n"


def render_svg(
    world: World,
    trajectory: Iterable = (),
    ridge: Optional[np.ndarray] = None,
) -> str:
    """Walls, rows with cell boundaries, the Voronoi ridge, the driven path
    coloured by phase and the flowers coloured by state.

    ``trajectory`` holds samples with ``x``, ``y`` and ``phase`` attributes.
    """
    c = _Canvas(world.config.room_width, world.config.room_length)
    for s in world.wall_segments:
        c.line(*s, color="#000000", width=3.0, cls="wall")
    for row in world.rows:
        c.polygon(row.corners(), fill="#e8f5e9", stroke="#2e7d32", cls="row")
        for cell in (x for x in world.cells if x.row_id == row.id):
            a, b = cell_corners(world, cell)
            # boundary ticks across the face at both cell ends
            for p in (a, b):
                q = p + 0.5 * row.half_width * cell.side.sign * row.normal
                c.line(p[0], p[1], q[0], q[1], color="#2e7d32", width=1.0, cls="cell-boundary")
    if ridge is not None and len(ridge):
        for x, y in np.asarray(ridge):
            c.circle(x, y, 1.0, "#b0b0ff", cls="ridge")

    samples = list(trajectory)
    run: list = []
    phase = None
    for s in samples:
        ph = getattr(s.phase, "value", s.phase)
        if ph != phase and run:
            c.polyline(run, PHASE_COLORS.get(phase, "#000000"), 1.5, cls=f"trajectory phase-{phase}")
            run = run[-1:]
        phase = ph
        run.append((s.x, s.y))
    if run:
        c.polyline(run, PHASE_COLORS.get(phase, "#000000"), 1.5, cls=f"trajectory phase-{phase}")

    for f in world.flowers:
        c.circle(f.position[0], f.position[1], 4.0, FLOWER_COLORS[f.state], cls=f"flower {f.state.value}", title=f"{f.id} {f.state.value}")
    return c.svg()

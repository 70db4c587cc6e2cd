"""Self-contained SVG plots of logged trajectories.

Top-down view: the arena square, the dotted road grid, obstacle footprints
to scale with their heights annotated, and the UAV / target paths with start
and end markers. Side view: UAV altitude against step index. No external
assets; the output is a single valid SVG document.
"""

from __future__ import annotations

from .environment import EnvConfig

_SCALE = 5.0  # pixels per world unit
_MARGIN = 40.0

_UAV_COLOR = "#27649c"
_TARGET_COLOR = "#d97218"
_OBSTACLE_FILL = "#b9bfc4"
_OBSTACLE_EDGE = "#6e7478"
_ROAD_COLOR = "#999999"


def _fmt(v: float) -> str:
    return f"{v:.2f}".rstrip("0").rstrip(".")


def _header(width: float, height: float, title: str) -> list[str]:
    return [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_fmt(width)}" height="{_fmt(height)}" '
        f'viewBox="0 0 {_fmt(width)} {_fmt(height)}">',
        f"<title>{title}</title>",
        f'<rect x="0" y="0" width="{_fmt(width)}" height="{_fmt(height)}" fill="#ffffff"/>',
    ]


def _path_markers(points: list[tuple[float, float]], color: str, label: str) -> list[str]:
    parts = []
    if not points:
        return parts
    coords = " ".join(f"{_fmt(px)},{_fmt(py)}" for px, py in points)
    parts.append(
        f'<polyline class="{label}-path" points="{coords}" fill="none" '
        f'stroke="{color}" stroke-width="1.6"/>'
    )
    sx, sy = points[0]
    parts.append(
        f'<rect class="{label}-start" x="{_fmt(sx - 4)}" y="{_fmt(sy - 4)}" width="8" height="8" '
        f'fill="{color}" stroke="none"/>'
    )
    ex, ey = points[-1]
    parts.append(
        f'<path class="{label}-end" d="M {_fmt(ex - 5)} {_fmt(ey - 5)} L {_fmt(ex + 5)} {_fmt(ey + 5)} '
        f'M {_fmt(ex - 5)} {_fmt(ey + 5)} L {_fmt(ex + 5)} {_fmt(ey - 5)}" '
        f'stroke="{color}" stroke-width="2.5" fill="none"/>'
    )
    return parts


def render_topdown(env: EnvConfig, records: list[dict]) -> str:
    """Bird's-eye SVG of one episode; an empty record list draws the arena only."""
    size = env.side * _SCALE + 2 * _MARGIN

    def px(x: float) -> float:
        return _MARGIN + x * _SCALE

    def py(y: float) -> float:
        # World y grows north, SVG y grows down.
        return _MARGIN + (env.side - y) * _SCALE

    parts = _header(size, size, "arena top-down view")
    parts.append(
        f'<rect class="arena" x="{_fmt(px(0))}" y="{_fmt(py(env.side))}" '
        f'width="{_fmt(env.side * _SCALE)}" height="{_fmt(env.side * _SCALE)}" '
        f'fill="none" stroke="#444444" stroke-width="1.5"/>'
    )
    for rail in env.road_network().rails:
        parts.append(
            f'<line class="road" x1="{_fmt(px(rail))}" y1="{_fmt(py(0))}" '
            f'x2="{_fmt(px(rail))}" y2="{_fmt(py(env.side))}" '
            f'stroke="{_ROAD_COLOR}" stroke-width="0.8" stroke-dasharray="3,4"/>'
        )
        parts.append(
            f'<line class="road" x1="{_fmt(px(0))}" y1="{_fmt(py(rail))}" '
            f'x2="{_fmt(px(env.side))}" y2="{_fmt(py(rail))}" '
            f'stroke="{_ROAD_COLOR}" stroke-width="0.8" stroke-dasharray="3,4"/>'
        )
    for obstacle in env.obstacles:
        cx, cy = px(obstacle.center.x), py(obstacle.center.y)
        parts.append(
            f'<circle class="obstacle" cx="{_fmt(cx)}" cy="{_fmt(cy)}" '
            f'r="{_fmt(obstacle.radius * _SCALE)}" fill="{_OBSTACLE_FILL}" '
            f'stroke="{_OBSTACLE_EDGE}" stroke-width="1"/>'
        )
        parts.append(
            f'<text class="obstacle-height" x="{_fmt(cx)}" y="{_fmt(cy + 3)}" '
            f'font-family="sans-serif" font-size="9" text-anchor="middle" '
            f'fill="#333333">h={_fmt(obstacle.height)}</text>'
        )

    uav_points = [(px(r["uav_x"]), py(r["uav_y"])) for r in records]
    target_points = [(px(r["target_x"]), py(r["target_y"])) for r in records]
    parts.extend(_path_markers(target_points, _TARGET_COLOR, "target"))
    parts.extend(_path_markers(uav_points, _UAV_COLOR, "uav"))
    parts.append("</svg>")
    return "\n".join(parts)


def render_sideview(env: EnvConfig, records: list[dict]) -> str:
    """Altitude profile SVG: UAV z against step index, with level gridlines."""
    width = max(400.0, len(records) * 2.0 + 2 * _MARGIN)
    z_top = env.h_max * 1.1
    height = 300.0

    def px(t: float) -> float:
        span = max(len(records) - 1, 1)
        return _MARGIN + t / span * (width - 2 * _MARGIN)

    def py(z: float) -> float:
        return height - _MARGIN - z / z_top * (height - 2 * _MARGIN)

    parts = _header(width, height, "uav altitude profile")
    parts.append(
        f'<line class="axis" x1="{_fmt(_MARGIN)}" y1="{_fmt(py(0))}" '
        f'x2="{_fmt(width - _MARGIN)}" y2="{_fmt(py(0))}" stroke="#444444" stroke-width="1"/>'
    )
    for level in range(env.n_h + 1):
        z = env.altitude(level)
        parts.append(
            f'<line class="level" x1="{_fmt(_MARGIN)}" y1="{_fmt(py(z))}" '
            f'x2="{_fmt(width - _MARGIN)}" y2="{_fmt(py(z))}" '
            f'stroke="#cccccc" stroke-width="0.6" stroke-dasharray="2,3"/>'
        )
        parts.append(
            f'<text class="level-label" x="{_fmt(_MARGIN - 6)}" y="{_fmt(py(z) + 3)}" '
            f'font-family="sans-serif" font-size="9" text-anchor="end" '
            f'fill="#666666">{_fmt(z)}</text>'
        )
    if records:
        pts = " ".join(f"{_fmt(px(i))},{_fmt(py(r['uav_z']))}" for i, r in enumerate(records))
        parts.append(
            f'<polyline class="uav-altitude" points="{pts}" fill="none" '
            f'stroke="{_UAV_COLOR}" stroke-width="1.6"/>'
        )
    parts.append("</svg>")
    return "\n".join(parts)

"""Collision, occlusion and field-of-view predicates for a UAV above a flat arena.

Obstacles are solid upright cylinders resting on the ground plane (base at
z = 0, axis vertical). The downward camera sees an axis-aligned square
footprint on the ground whose side grows linearly with altitude. All
predicates use inclusive boundary comparisons on 64-bit floats; there is no
epsilon slack anywhere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class Point2:
    x: float
    y: float


@dataclass(frozen=True)
class Point3:
    x: float
    y: float
    z: float

    def ground(self) -> Point2:
        return Point2(self.x, self.y)


@dataclass(frozen=True)
class Cylinder:
    """Solid finite cylinder: ``{(x, y, z) : |((x, y)) - center| <= radius, 0 <= z <= height}``."""

    center: Point2
    radius: float
    height: float


@dataclass(frozen=True)
class FovSpec:
    """Downward camera aperture, configured as a half-angle in degrees."""

    theta_deg: float


def _tan_deg(theta: float) -> float:
    # Exact at the 45-degree symmetry point: the radian detour rounds the
    # tangent just below one, which would flip inclusive boundary comparisons
    # at exactly half the footprint width.
    reduced = theta % 180.0
    if reduced == 45.0:
        return 1.0
    if reduced == 135.0:
        return -1.0
    return math.tan(math.radians(theta))


def fov_diameter(z: float, fov: FovSpec) -> float:
    """Side length of the square ground footprint seen from altitude ``z``.

    Args:
        z: UAV altitude, must be non-negative.
        fov: camera aperture settings.

    Returns:
        ``2 * z * tan(theta)``; zero at ground level.
    """
    if z < 0:
        raise ValueError(f"altitude must be non-negative, got {z}")
    # Degrees -> tangent happens here and only here.
    return 2.0 * z * _tan_deg(fov.theta_deg)


def check_collision(uav: Point3, obstacle: Cylinder) -> bool:
    """True when the UAV is inside or on the obstacle cylinder.

    Horizontal distance to the axis at most the radius, and altitude at most
    the obstacle height; both bounds inclusive.
    """
    dx = uav.x - obstacle.center.x
    dy = uav.y - obstacle.center.y
    return dx * dx + dy * dy <= obstacle.radius * obstacle.radius and uav.z <= obstacle.height


def _point_in_cylinder(p: Point3, obstacle: Cylinder) -> bool:
    dx = p.x - obstacle.center.x
    dy = p.y - obstacle.center.y
    if dx * dx + dy * dy > obstacle.radius * obstacle.radius:
        return False
    return 0.0 <= p.z <= obstacle.height


def segment_cylinder_intersect(a: Point3, b: Point3, obstacle: Cylinder) -> bool:
    """True when the closed segment ``a -> b`` meets the solid cylinder.

    The solid is the product of the footprint disc and the altitude slab
    ``[0, height]``, so the segment hits it exactly when some parameter
    ``t in [0, 1]`` keeps the point inside the slab while its horizontal
    distance to the axis stays within the radius. The slab clips the
    parameter range; the squared horizontal distance is a convex quadratic
    in ``t`` and is minimized in closed form over the clipped interval.
    Wall and both end discs are covered by the same test.

    Raises:
        ValueError: when ``a == b`` (degenerate segment).
    """
    if a == b:
        raise ValueError("degenerate segment: endpoints coincide")
    # Canonical endpoint order makes the predicate exactly symmetric in (a, b).
    if (b.x, b.y, b.z) < (a.x, a.y, a.z):
        a, b = b, a

    dz = b.z - a.z
    if dz == 0.0:
        if not 0.0 <= a.z <= obstacle.height:
            return False
        t_lo, t_hi = 0.0, 1.0
    else:
        t0 = (0.0 - a.z) / dz
        t1 = (obstacle.height - a.z) / dz
        if t0 > t1:
            t0, t1 = t1, t0
        t_lo = max(0.0, t0)
        t_hi = min(1.0, t1)
        if t_lo > t_hi:
            return False

    ax = a.x - obstacle.center.x
    ay = a.y - obstacle.center.y
    dx = b.x - a.x
    dy = b.y - a.y
    qa = dx * dx + dy * dy
    qb = 2.0 * (ax * dx + ay * dy)
    qc = ax * ax + ay * ay

    def sq_dist(t: float) -> float:
        return (qa * t + qb) * t + qc

    best = min(sq_dist(t_lo), sq_dist(t_hi))
    if qa > 0.0:
        t_star = -qb / (2.0 * qa)
        if t_lo < t_star < t_hi:
            best = min(best, sq_dist(t_star))
    return best <= obstacle.radius * obstacle.radius


def check_occlusion(
    uav: Point3,
    target: Point2,
    obstacle: Cylinder,
    *,
    use_line_formula: bool = False,
) -> bool:
    """True when the sight line from the UAV to the ground target is blocked.

    The sight line is the segment from the UAV to ``(target.x, target.y, 0)``.
    The exact segment test is authoritative; ``use_line_formula`` switches to
    the closed-form variant kept for comparison only.

    Raises:
        ValueError: when the UAV sits exactly at the target point on the
            ground (degenerate sight line).
    """
    if use_line_formula:
        return check_occlusion_line_formula(uav, target, obstacle)
    return segment_cylinder_intersect(uav, Point3(target.x, target.y, 0.0), obstacle)


def check_occlusion_line_formula(uav: Point3, target: Point2, obstacle: Cylinder) -> bool:
    """Closed-form sight-line test, retained for comparison only.

    Combines a height bound on the line above the obstacle center with a
    perpendicular-offset bound on the footprint. Undefined when the UAV and
    target share an x coordinate or coincide on the ground; treated as not
    blocked there. Prefer :func:`check_occlusion`.
    """
    run_x = target.x - uav.x
    run_y = target.y - uav.y
    norm = math.hypot(run_x, run_y)
    if run_x == 0.0 or norm == 0.0:
        return False
    height_at_obstacle = uav.z * (uav.x - obstacle.center.x) / run_x + uav.z
    offset = (run_x * obstacle.center.y + run_y * obstacle.center.x) / norm
    return height_at_obstacle <= obstacle.height and offset <= obstacle.radius


def check_visibility(uav: Point3, target: Point2, fov: FovSpec) -> bool:
    """True when the target lies inside the square camera footprint.

    The footprint is centered under the UAV; both half-width bounds are
    inclusive. Ignores obstacles.
    """
    half = fov_diameter(uav.z, fov) / 2.0
    return abs(target.x - uav.x) <= half and abs(target.y - uav.y) <= half


@dataclass(frozen=True)
class VisibilityReport:
    """Outcome of the full sight check: footprint containment plus occlusion."""

    visible: bool
    occluded_by: int | None


def _sight_blocked(uav: Point3, target: Point2, obstacle: Cylinder) -> bool:
    # Total variant: a degenerate sight line (UAV at the target point on the
    # ground) collapses to a point-in-solid test instead of raising.
    ground = Point3(target.x, target.y, 0.0)
    if uav == ground:
        return _point_in_cylinder(uav, obstacle)
    return segment_cylinder_intersect(uav, ground, obstacle)


def target_visible(
    uav: Point3,
    target: Point2,
    obstacles: list[Cylinder],
    fov: FovSpec,
) -> VisibilityReport:
    """Combined visibility verdict over every obstacle.

    ``occluded_by`` is the lowest index whose cylinder blocks the sight line,
    or None when the line is clear. ``visible`` requires a clear line and the
    target inside the camera footprint.
    """
    occluded_by: int | None = None
    for i, obstacle in enumerate(obstacles):
        if _sight_blocked(uav, target, obstacle):
            occluded_by = i
            break
    visible = occluded_by is None and check_visibility(uav, target, fov)
    return VisibilityReport(visible=visible, occluded_by=occluded_by)

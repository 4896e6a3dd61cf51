"""Closed-form geometry of the upper half-plane and its volatility images.

The half-plane {(x, y): y > 0} with metric (dx^2 + dy^2)/y^2 is the geometry
induced by a log-price whose local volatility equals the second coordinate
(unit vol-of-vol, zero correlation).  Geodesics are half-circles centered on
the horizontal axis, plus vertical lines.  The correlated/scaled variant with
vol-of-vol sigma_vol and correlation rho is isometric to the half-plane, up to
an overall factor, through the linear map

    A = [[1/rb, -rho/(sigma_vol*rb)],
         [0,    1/sigma_vol        ]],      rb = sqrt(1 - rho^2),

and distances pull back as  d_vol(p, q) = poincare_distance(A p, A q) / sigma_vol.
That scaling was checked two ways: pulling the half-plane metric back through A
reproduces sigma_vol^2 times the inverse diffusion matrix, and the resulting
distances match the generic path-energy minimizer (see tests).  A tempting
shear substitution (x, y) -> (rb*x + rho*y, y) does NOT have this property;
it is kept below only so tests can demonstrate the failure.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    CoincidentPoints,
    DegenerateCorrelation,
    EndpointsStraddleBarrier,
    PointNotOnArc,
)
from .paths import DiscretePath

__all__ = [
    "poincare_distance",
    "GeodesicArc",
    "geodesic_arc",
    "sample_arc",
    "reflect_across_vertical",
    "barrier_infimum_vertical",
    "hw_transform",
    "hw_transform_inverse",
    "hw_distance",
    "shear_image_distance",
    "HwGeodesicImage",
    "hw_geodesic_image",
    "arc_to_csv",
    "arc_from_csv",
]

# Series fallback threshold for acosh(1 + u); below this the log form loses
# roughly half the significant digits to cancellation.
_ACOSH_SERIES_CUTOFF = 1e-8


def _check_half_plane(p, name: str) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if p.shape != (2,):
        raise ValueError(f"{name} must be a point of the plane, got shape {p.shape}")
    if not np.all(np.isfinite(p)):
        raise ValueError(f"{name} must be finite")
    if p[1] <= 0.0:
        raise ValueError(f"{name} must have positive second coordinate, got {p[1]}")
    return p


def _acosh1p(u: float) -> float:
    """acosh(1 + u) for u >= 0 without forming 1 + u - 1.

    Uses log(w + sqrt(w^2 - 1)) written as log1p(u + sqrt(u*(u + 2))), with a
    square-root series below _ACOSH_SERIES_CUTOFF where even the log1p form
    has nothing left to work with.
    """
    if u < 0.0:
        raise ValueError("acosh argument below 1")
    if u < _ACOSH_SERIES_CUTOFF:
        return np.sqrt(2.0 * u) * (1.0 - u / 12.0 + 3.0 * u * u / 160.0)
    return float(np.log1p(u + np.sqrt(u * (u + 2.0))))


def poincare_distance(p, q) -> float:
    """Hyperbolic distance between two points of the upper half-plane.

    d(p, q) = acosh(1 + |p - q|^2 / (2 p_y q_y)), with |.| Euclidean.
    The argument of acosh is assembled directly from the squared Euclidean
    distance so no cancellation occurs for nearby points.
    """
    p = _check_half_plane(p, "p")
    q = _check_half_plane(q, "q")
    dx = q[0] - p[0]
    dy = q[1] - p[1]
    u = (dx * dx + dy * dy) / (2.0 * p[1] * q[1])
    return _acosh1p(u)


@dataclass(frozen=True)
class GeodesicArc:
    """A complete geodesic, restricted to the range between two sample angles.

    kind "circle": half-circle centered at (center_x, 0) with the given
    radius; theta_a/theta_b are the endpoint angles in (0, pi) measured from
    the positive horizontal axis.  kind "vertical": the line x = center_x;
    theta_a/theta_b then hold the endpoint heights instead.
    """

    kind: str
    center_x: float
    radius: float
    theta_a: float
    theta_b: float

    def point_at_angle(self, theta: float) -> np.ndarray:
        if self.kind == "circle":
            return np.array(
                [self.center_x + self.radius * np.cos(theta), self.radius * np.sin(theta)]
            )
        return np.array([self.center_x, theta])


def geodesic_arc(p, q) -> GeodesicArc:
    """Geodesic through two distinct points of the half-plane.

    For p_x != q_x the unique half-circle centered on the axis through both
    points has center_x = (|q|^2 - |p|^2) / (2 (q_x - p_x)).  Equal abscissae
    give the vertical line.
    """
    p = _check_half_plane(p, "p")
    q = _check_half_plane(q, "q")
    if np.array_equal(p, q):
        raise CoincidentPoints("geodesic through a single point is not defined")
    if p[0] == q[0]:
        return GeodesicArc("vertical", p[0], np.inf, p[1], q[1])
    cx = (q[0] ** 2 + q[1] ** 2 - p[0] ** 2 - p[1] ** 2) / (2.0 * (q[0] - p[0]))
    r = float(np.hypot(p[0] - cx, p[1]))
    ta = float(np.arctan2(p[1], p[0] - cx))
    tb = float(np.arctan2(q[1], q[0] - cx))
    return GeodesicArc("circle", cx, r, ta, tb)


def _angle_on_arc(arc: GeodesicArc, p, tol: float = 1e-9) -> float:
    """Angle (or height, for vertical arcs) of p on arc; PointNotOnArc otherwise."""
    p = _check_half_plane(p, "p")
    if arc.kind == "vertical":
        if abs(p[0] - arc.center_x) > tol * max(1.0, abs(arc.center_x)):
            raise PointNotOnArc(f"{p} is not on the vertical line x = {arc.center_x}")
        return float(p[1])
    r = np.hypot(p[0] - arc.center_x, p[1])
    if abs(r - arc.radius) > tol * max(1.0, arc.radius):
        raise PointNotOnArc(f"{p} is not on the circle ({arc.center_x}, r={arc.radius})")
    return float(np.arctan2(p[1], p[0] - arc.center_x))


def sample_arc(arc: GeodesicArc, p, q, n: int) -> DiscretePath:
    """n+1 points from p to q along arc, equally spaced in hyperbolic length.

    On a circle the arclength parameter is lam(theta) = log(tan(theta/2)); on
    a vertical line it is log(y).  Linear interpolation in lam therefore gives
    constant-speed samples exactly.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if arc.kind == "vertical":
        ya = _angle_on_arc(arc, p)
        yb = _angle_on_arc(arc, q)
        lam = np.linspace(np.log(ya), np.log(yb), n + 1)
        ys = np.exp(lam)
        pts = np.column_stack([np.full(n + 1, arc.center_x), ys])
    else:
        ta = _angle_on_arc(arc, p)
        tb = _angle_on_arc(arc, q)
        lam = np.linspace(np.log(np.tan(ta / 2.0)), np.log(np.tan(tb / 2.0)), n + 1)
        theta = 2.0 * np.arctan(np.exp(lam))
        pts = np.column_stack(
            [arc.center_x + arc.radius * np.cos(theta), arc.radius * np.sin(theta)]
        )
    # Pin the endpoints exactly; the interior came through transcendentals.
    pts[0] = p
    pts[-1] = q
    return DiscretePath(pts)


def reflect_across_vertical(p, x0: float) -> np.ndarray:
    """Mirror image of p across the vertical line x = x0 (a hyperbolic isometry)."""
    p = _check_half_plane(p, "p")
    return np.array([2.0 * x0 - p[0], p[1]])


def barrier_infimum_vertical(x, y, x0: float):
    """Minimize d(x, z) + d(z, y) over the vertical line z = (x0, .).

    Both endpoints must lie strictly on the same side.  Reflecting y across
    the line turns the broken path into a single geodesic, so the minimum is
    d(x, reflect(y)) and the minimizer is where that geodesic meets the line.

    Returns (z_star, path_sum).
    """
    x = _check_half_plane(x, "x")
    y = _check_half_plane(y, "y")
    sx = x[0] - x0
    sy = y[0] - x0
    if sx == 0.0 or sy == 0.0 or (sx > 0) != (sy > 0):
        raise EndpointsStraddleBarrier(
            f"endpoints must lie strictly on one side of x = {x0}"
        )
    y_ref = reflect_across_vertical(y, x0)
    path_sum = poincare_distance(x, y_ref)
    arc = geodesic_arc(x, y_ref)
    # The endpoints sit on opposite sides of the line, so the circle crosses it.
    h2 = arc.radius**2 - (x0 - arc.center_x) ** 2
    z_star = np.array([x0, np.sqrt(h2)])
    return z_star, path_sum


# ---- Correlated / scaled volatility plane ---- #


def _check_vol_params(sigma_vol: float, rho: float) -> float:
    if not np.isfinite(sigma_vol) or sigma_vol <= 0.0:
        raise ValueError(f"sigma_vol must be positive, got {sigma_vol}")
    if not np.isfinite(rho) or abs(rho) >= 1.0:
        raise DegenerateCorrelation(f"need |rho| < 1, got {rho}")
    return float(np.sqrt(1.0 - rho * rho))


def hw_transform(sigma_vol: float, rho: float) -> np.ndarray:
    """Linear map taking the (sigma_vol, rho) geometry onto the half-plane."""
    rb = _check_vol_params(sigma_vol, rho)
    return np.array([[1.0 / rb, -rho / (sigma_vol * rb)], [0.0, 1.0 / sigma_vol]])


def hw_transform_inverse(sigma_vol: float, rho: float) -> np.ndarray:
    rb = _check_vol_params(sigma_vol, rho)
    return np.array([[rb, rho], [0.0, sigma_vol]])


def hw_distance(sigma_vol: float, rho: float, p, q) -> float:
    """Exact distance for the correlated log-price/volatility geometry.

    Equals poincare_distance(A p, A q) / sigma_vol with A = hw_transform(...).
    The 1/sigma_vol factor is forced by the pullback: A carries the inverse
    diffusion matrix onto sigma_vol^2 times the half-plane metric.
    """
    A = hw_transform(sigma_vol, rho)
    p = _check_half_plane(p, "p")
    q = _check_half_plane(q, "q")
    return poincare_distance(A @ p, A @ q) / sigma_vol


def shear_image_distance(rho: float, p, q) -> float:
    """Distance of the shear images (rb*x + rho*y, y); NOT the metric distance.

    This substitution looks plausible but fails the pullback consistency
    check whenever rho != 0, and misses the 1/sigma_vol scaling entirely.
    Retained so the comparison test can pin the failure down.
    """
    rb = _check_vol_params(1.0, rho)
    p = _check_half_plane(p, "p")
    q = _check_half_plane(q, "q")
    pi = np.array([rb * p[0] + rho * p[1], p[1]])
    qi = np.array([rb * q[0] + rho * q[1], q[1]])
    return poincare_distance(pi, qi)


@dataclass(frozen=True)
class HwGeodesicImage:
    """Geodesic of the (sigma_vol, rho) geometry as a state-space object.

    path samples it at constant speed.  For kind "circle" the points satisfy
    (u - alpha)^2 + w^2 = radius^2 where (u, w) = A z; in state coordinates
    that locus is an ellipse.  kind "line" (image of a vertical half-plane
    geodesic) has alpha = radius = nan.
    """

    path: DiscretePath
    kind: str
    alpha: float
    radius: float
    sigma_vol: float
    rho: float

    def implicit_residual(self, z) -> float:
        if self.kind != "circle":
            raise ValueError("implicit equation only exists for the circle kind")
        A = hw_transform(self.sigma_vol, self.rho)
        u, w = A @ np.asarray(z, dtype=float)
        return (u - self.alpha) ** 2 + w**2 - self.radius**2


def hw_geodesic_image(sigma_vol: float, rho: float, p, q, n: int = 200) -> HwGeodesicImage:
    """Sampled geodesic between p and q for the (sigma_vol, rho) geometry."""
    A = hw_transform(sigma_vol, rho)
    Ainv = hw_transform_inverse(sigma_vol, rho)
    p = _check_half_plane(p, "p")
    q = _check_half_plane(q, "q")
    arc = geodesic_arc(A @ p, A @ q)
    upper = sample_arc(arc, A @ p, A @ q, n)
    pts = upper.points @ Ainv.T
    pts[0] = p
    pts[-1] = q
    if arc.kind == "circle":
        return HwGeodesicImage(DiscretePath(pts), "circle", arc.center_x, arc.radius,
                               sigma_vol, rho)
    return HwGeodesicImage(DiscretePath(pts), "line", np.nan, np.nan, sigma_vol, rho)


# ---- Serialization ---- #


def arc_to_csv(arc: GeodesicArc) -> str:
    from .paths import format_sig

    if arc.kind == "circle":
        return "kind,center_x,radius\ncircle,{},{}\n".format(
            format_sig(arc.center_x), format_sig(arc.radius)
        )
    return "kind,x\nvertical,{}\n".format(format_sig(arc.center_x))


def arc_from_csv(text: str) -> GeodesicArc:
    lines = [ln for ln in text.strip().splitlines() if ln.strip()]
    if len(lines) != 2:
        raise ValueError("arc CSV must have a header line and one data line")
    header = lines[0].split(",")
    cells = lines[1].split(",")
    if header == ["kind", "center_x", "radius"] and cells[0] == "circle":
        return GeodesicArc("circle", float(cells[1]), float(cells[2]), np.nan, np.nan)
    if header == ["kind", "x"] and cells[0] == "vertical":
        return GeodesicArc("vertical", float(cells[1]), np.inf, np.nan, np.nan)
    raise ValueError(f"unrecognized arc CSV layout: {lines[0]!r}")

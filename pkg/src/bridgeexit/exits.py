"""Exit exponents for pinned diffusions, and frozen-coefficient comparators.

For a diffusion conditioned to run from x to y over a short horizon t, the
probability of touching a boundary piece decays like exp(-J/t) with

    J = inf_z  (1/2) * ((d(x,z) + d(z,y))^2 - d(x,y)^2),    z on the boundary,

where d is the distance induced by the diffusion matrix.  The infimum is over
the boundary of the domain the bridge is supposed to stay in; J = 0 exactly
when the x-to-y geodesic already meets the boundary.  The crossing, when it
happens, concentrates at the minimizing point z_star and at the time fraction
u_bar = d(x,z*) / (d(x,z*) + d(z*,y)).

Both endpoints inside the domain and a complete metric are preconditions:
for an incomplete metric (boundary at finite distance) the exponent would be
meaningless, and such models are refused outright.  Whether the boundary is
reached at the open or closed exit time makes no difference at this level of
precision; the two exponents are treated as equal throughout.

Backends: a vertical barrier under the log-price/volatility geometry reduces
to a half-plane reflection (uncorrelated) or a one-dimensional minimization
along the barrier in closed-form distances (correlated); a hyperplane under a
constant metric is a Mahalanobis reflection; everything else is a coarse scan
plus golden-section refinement over a one-dimensional boundary chart with
solver distances, warm-starting each solve from its neighbor.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from .errors import BothZero, EndpointsStraddleBarrier, IncompleteModel, NotSPD, OutsideDomain
from .geodesic import SolverOptions, path_energy, solve_geodesic
from .hyperbolic import (
    barrier_infimum_vertical,
    hw_distance,
    hw_geodesic_image,
    hw_transform,
    poincare_distance,
)
from .model import ConstantGeometry, DiffusionModel, HullWhiteGeometry, inverse_metric
from .paths import DiscretePath

__all__ = [
    "Hyperplane",
    "VerticalBarrier",
    "ParametricCurve",
    "ExitAsymptotics",
    "FreezingRow",
    "FreezingComparison",
    "time_profile",
    "optimal_crossing_time",
    "exit_probability_equivalent",
    "model_distance",
    "pointwise_exit_cost",
    "bridge_rate",
    "exit_asymptotics",
    "frozen_exit_asymptotics",
    "compare_freezing",
]

GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0
# Bracket width at which golden-section refinement stops.
GOLDEN_BRACKET = 1e-10
# J at or below this times max(1, d_xy^2) is reported as "geodesic exits".
EXIT_TOL = 1e-12


# ---- Boundary descriptions ---- #


@dataclass(frozen=True)
class Hyperplane:
    """Affine hyperplane {z : normal . z = offset}; normalized on construction.

    exit_side, when given, is the sign of normal . z - offset on the exit
    region; None means "whichever side x does not lie on".
    """

    normal: np.ndarray
    offset: float
    exit_side: int | None = None

    def __post_init__(self):
        n = np.asarray(self.normal, dtype=float)
        norm = float(np.linalg.norm(n))
        if not np.isfinite(norm) or norm == 0.0:
            raise ValueError("hyperplane normal must be nonzero and finite")
        object.__setattr__(self, "normal", n / norm)
        object.__setattr__(self, "offset", float(self.offset) / norm)
        if self.exit_side is not None and self.exit_side not in (-1, 1):
            raise ValueError("exit_side must be -1, +1, or None")


@dataclass(frozen=True)
class VerticalBarrier:
    """The line {first coordinate = x0} in a two-dimensional state space."""

    x0: float


@dataclass(frozen=True)
class ParametricCurve:
    """One-dimensional boundary piece given by a chart theta -> point."""

    chart: Callable[[float], np.ndarray]
    theta_min: float
    theta_max: float
    samples: int = 256

    def __post_init__(self):
        if not self.theta_min < self.theta_max:
            raise ValueError("need theta_min < theta_max")
        if self.samples < 3:
            raise ValueError("need at least 3 boundary samples")


Boundary = Hyperplane | VerticalBarrier | ParametricCurve


@dataclass(frozen=True)
class ExitAsymptotics:
    """Exit exponent and the geometry of the minimizing crossing."""

    J: float
    z_star: np.ndarray
    u_bar: float
    d_xy: float
    d_xz: float
    d_zy: float
    method: str
    geodesic_exits: bool = False
    degenerate: bool = False


# ---- Scalar pieces ---- #


def time_profile(u, d_xz: float, d_zy: float, d_xy: float = 0.0):
    """Cost of crossing at time fraction u: (d_xz^2/u + d_zy^2/(1-u) - d_xy^2)/2.

    u may be a scalar or an array of fractions, all strictly inside (0, 1).
    """
    u = np.asarray(u, dtype=float)
    if not ((u > 0.0) & (u < 1.0)).all():
        raise ValueError("u must lie in (0, 1)")
    out = 0.5 * (d_xz**2 / u + d_zy**2 / (1.0 - u) - d_xy**2)
    return float(out) if out.ndim == 0 else out


def optimal_crossing_time(d_xz: float, d_zy: float) -> float:
    """Minimizer of the time profile: d_xz / (d_xz + d_zy)."""
    if d_xz < 0.0 or d_zy < 0.0:
        raise ValueError("leg distances must be nonnegative")
    if d_xz == 0.0 and d_zy == 0.0:
        raise BothZero("crossing time is undefined when both legs are zero")
    return d_xz / (d_xz + d_zy)


def exit_probability_equivalent(J: float, t: float) -> float:
    """Log-scale probability equivalent exp(-J/t)."""
    if J < 0.0:
        raise ValueError("exponent must be nonnegative")
    if t <= 0.0:
        raise ValueError("horizon must be positive")
    return float(np.exp(-J / t))


# ---- Distances with closed-form dispatch ---- #


def _mahalanobis(G: np.ndarray, p, q) -> float:
    delta = np.asarray(q, dtype=float) - np.asarray(p, dtype=float)
    return float(np.sqrt(max(delta @ G @ delta, 0.0)))


def model_distance(model: DiffusionModel, p, q,
                   opts: SolverOptions | None = None) -> float:
    """Distance induced by the model's diffusion matrix.

    Closed form for the volatility and constant geometries, path optimizer
    otherwise.
    """
    g = model.geometry
    if isinstance(g, HullWhiteGeometry):
        return hw_distance(g.sigma_vol, g.rho, p, q)
    if isinstance(g, ConstantGeometry):
        return _mahalanobis(g.inv_metric, p, q)
    return solve_geodesic(model, p, q, opts).distance


def pointwise_exit_cost(model: DiffusionModel, x, y, z,
                        opts: SolverOptions | None = None) -> float:
    """Cost of forcing the bridge through z: ((d_xz + d_zy)^2 - d_xy^2)/2."""
    d_xz = model_distance(model, x, z, opts)
    d_zy = model_distance(model, z, y, opts)
    d_xy = model_distance(model, x, y, opts)
    return max(0.5 * ((d_xz + d_zy) ** 2 - d_xy**2), 0.0)


def bridge_rate(model: DiffusionModel, path: DiscretePath, x, y,
                opts: SolverOptions | None = None) -> float:
    """Bridge rate of a path pinned at x: path energy minus the geodesic energy.

    +inf when the path does not end at y.  The geodesic energy is computed at
    the path's own resolution so that discretization bias cancels: a converged
    geodesic scores zero up to solver tolerance, not up to O(1/N^2).
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    scale = 1.0 + float(np.abs(y).max()) + float(np.abs(x).max())
    if float(np.abs(path.points[0] - x).max()) > 1e-9 * scale:
        raise ValueError("path must start at x")
    energy = path_energy(model, path)
    if float(np.abs(path.points[-1] - y).max()) > 1e-9 * scale:
        return np.inf
    base = opts or SolverOptions()
    eff = replace(base, n=path.n_segments)
    d = solve_geodesic(model, x, y, eff).distance
    return energy - 0.5 * d * d


# ---- 1-D minimization: coarse grid then golden section ---- #


def _golden(f, lo: float, hi: float):
    """Golden-section minimum of f on [lo, hi]; ties drift to the left."""
    a, b = lo, hi
    m1 = b - GOLDEN * (b - a)
    m2 = a + GOLDEN * (b - a)
    f1, f2 = f(m1), f(m2)
    while b - a > GOLDEN_BRACKET:
        if f1 <= f2:
            b, m2, f2 = m2, m1, f1
            m1 = b - GOLDEN * (b - a)
            f1 = f(m1)
        else:
            a, m1, f1 = m1, m2, f2
            m2 = a + GOLDEN * (b - a)
            f2 = f(m2)
    theta = a if f1 <= f2 else m2
    return theta, f(theta)


def _grid_then_golden(f, thetas: np.ndarray):
    vals = np.array([f(th) for th in thetas])
    j = int(np.argmin(vals))
    lo = thetas[max(j - 1, 0)]
    hi = thetas[min(j + 1, len(thetas) - 1)]
    if hi <= lo:
        return float(thetas[j]), float(vals[j])
    theta, val = _golden(f, float(lo), float(hi))
    if vals[j] < val:
        return float(thetas[j]), float(vals[j])
    return theta, val


# ---- Boundary normalization ---- #


def _as_plane(boundary: Boundary, dim: int) -> Hyperplane | None:
    if isinstance(boundary, VerticalBarrier):
        if dim != 2:
            raise ValueError("a vertical barrier needs a two-dimensional state")
        n = np.zeros(dim)
        n[0] = 1.0
        return Hyperplane(n, boundary.x0)
    if isinstance(boundary, Hyperplane):
        if boundary.normal.shape != (dim,):
            raise ValueError(
                f"hyperplane normal has dimension {boundary.normal.shape[0]}, "
                f"model has {dim}"
            )
        return boundary
    return None


def _geodesic_plane_crossing(model, x, y, plane: Hyperplane,
                             opts: SolverOptions | None):
    """Point where the x-to-y geodesic meets the plane (straddle case)."""
    n, c = plane.normal, plane.offset
    g = model.geometry
    if isinstance(g, ConstantGeometry):
        sx = float(n @ x - c)
        sy = float(n @ y - c)
        t = sx / (sx - sy)
        return x + t * (y - x)
    if isinstance(g, HullWhiteGeometry):
        pts = hw_geodesic_image(g.sigma_vol, g.rho, x, y, n=4096).path.points
    else:
        pts = solve_geodesic(model, x, y, opts).path.points
    s = pts @ n - c
    idx = np.nonzero(s[:-1] * s[1:] <= 0.0)[0]
    i = int(idx[0]) if len(idx) else int(np.argmin(np.abs(s)))
    if i + 1 >= len(pts) or s[i] == s[i + 1]:
        return pts[i]
    w = s[i] / (s[i] - s[i + 1])
    return pts[i] + w * (pts[i + 1] - pts[i])


# ---- Result assembly ---- #


def _assemble(dfun, x, y, z_star, J, method, geodesic_exits=False,
              degenerate=False) -> ExitAsymptotics:
    d_xy = dfun(x, y)
    d_xz = dfun(x, z_star)
    d_zy = dfun(z_star, y)
    try:
        u_bar = optimal_crossing_time(d_xz, d_zy)
    except BothZero:
        u_bar = np.nan
    J = max(float(J), 0.0)
    if J <= EXIT_TOL * max(1.0, d_xy**2):
        geodesic_exits = True
    return ExitAsymptotics(
        J=J,
        z_star=np.asarray(z_star, dtype=float),
        u_bar=u_bar,
        d_xy=d_xy,
        d_xz=d_xz,
        d_zy=d_zy,
        method=method,
        geodesic_exits=geodesic_exits,
        degenerate=degenerate,
    )


def _side_checks(plane: Hyperplane, x, y):
    """Returns (s_x, s_y); raises if x sits in the declared exit region."""
    s_x = float(plane.normal @ x - plane.offset)
    s_y = float(plane.normal @ y - plane.offset)
    if plane.exit_side is not None and s_x * plane.exit_side > 0.0:
        raise ValueError("x lies strictly on the declared exit side")
    return s_x, s_y


# ---- Hull-White vertical barrier backend ---- #


def _hw_vertical(model, x, y, x0: float, opts, geom: HullWhiteGeometry):
    sv, rho = geom.sigma_vol, geom.rho

    def dfun(p, q):
        return hw_distance(sv, rho, p, q)

    d_xy = dfun(x, y)
    if rho == 0.0:
        A = hw_transform(sv, rho)
        zs_img, path_sum = barrier_infimum_vertical(A @ x, A @ y, x0)
        d_img = poincare_distance(A @ x, A @ y)
        J = (path_sum**2 - d_img**2) / (2.0 * sv**2)
        z_star = np.array([x0, sv * zs_img[1]])
        return _assemble(dfun, x, y, z_star, J, "closed_form")

    # Correlated: the barrier is no longer a geodesic mirror in any
    # transformed picture, but the restriction of the distance sum to the
    # barrier is a smooth one-variable function of log v.
    lam_x, lam_y = np.log(x[1]), np.log(y[1])
    lam0 = 0.5 * (lam_x + lam_y)
    anchor = np.array([x0, float(np.exp(lam0))])
    f0 = dfun(x, anchor) + dfun(anchor, y)
    half = sv * f0 + max(abs(lam_x - lam0), abs(lam_y - lam0)) + 1.0

    def f(lam):
        z = np.array([x0, float(np.exp(lam))])
        return dfun(x, z) + dfun(z, y)

    lam_grid = np.linspace(lam0 - half, lam0 + half, 256)
    lam_star, path_sum = _grid_then_golden(f, lam_grid)
    J = 0.5 * (path_sum**2 - d_xy**2)
    z_star = np.array([x0, float(np.exp(lam_star))])
    return _assemble(dfun, x, y, z_star, J, "numeric_1d")


# ---- Constant-metric hyperplane backend ---- #


def _sym_sqrt(G: np.ndarray):
    w, V = np.linalg.eigh(G)
    if np.any(w <= 0.0):
        raise NotSPD("metric is not positive definite")
    s = np.sqrt(w)
    return (V * s) @ V.T, (V / s) @ V.T


def _constant_hyperplane(G, x, y, plane: Hyperplane, method: str):
    W, Winv = _sym_sqrt(G)
    xw = W @ x
    yw = W @ y
    m = Winv @ plane.normal
    scale = float(np.linalg.norm(m))
    mhat = m / scale
    chat = plane.offset / scale
    delta_x = float(mhat @ xw - chat)
    delta_y = float(mhat @ yw - chat)
    y_ref = yw - 2.0 * (mhat @ yw - chat) * mhat
    S = float(np.linalg.norm(xw - y_ref))
    d_xy = float(np.linalg.norm(xw - yw))
    J = 0.5 * (S * S - d_xy * d_xy)
    tstar = delta_x / (delta_x + delta_y)
    zw = xw + tstar * (y_ref - xw)
    z_star = Winv @ zw

    def dfun(p, q):
        return float(np.linalg.norm(W @ (np.asarray(q) - np.asarray(p))))

    return _assemble(dfun, x, y, z_star, J, method)


# ---- Generic one-dimensional boundary scan ---- #


def _arclength_window(model, x, y, plane: Hyperplane, d_xy: float,
                      truncation_factor: float, samples: int):
    """Chart and sample grid for a plane boundary, truncated by path length.

    The plane (d = 2 only) is parametrized by arclength in the model metric,
    marching out from the projection of the chord midpoint until the
    accumulated length exceeds truncation_factor * d(x, y) on each side:
    boundary points farther away than that cost more than any candidate the
    window already contains.
    """
    if model.dim != 2:
        raise ValueError("the numeric boundary scan supports two-dimensional states only")
    n, c = plane.normal, plane.offset
    tangent = np.array([-n[1], n[0]])
    mid = 0.5 * (np.asarray(x, dtype=float) + np.asarray(y, dtype=float))
    anchor = mid - (float(n @ mid) - c) * n
    if not model.domain_test(anchor):
        raise OutsideDomain(
            "the chord midpoint projects outside the domain; supply a parametric "
            "boundary chart instead"
        )
    radius = truncation_factor * max(d_xy, 1e-12)
    step_len = radius / (samples * 2.0)

    def march(direction: float) -> float:
        theta = 0.0
        acc = 0.0
        guard = 0
        while acc < radius and guard < 16 * samples:
            z = anchor + theta * tangent
            rate = float(np.sqrt(tangent @ inverse_metric(model, z) @ tangent))
            dth = step_len / max(rate, 1e-300)
            znext = anchor + (theta + direction * dth) * tangent
            shrink = 0
            while not model.domain_test(znext) and shrink < 60:
                dth *= 0.5
                znext = anchor + (theta + direction * dth) * tangent
                shrink += 1
            if shrink >= 60:
                break
            theta += direction * dth
            acc += step_len if shrink == 0 else rate * dth
            guard += 1
        return theta

    lo = march(-1.0)
    hi = march(+1.0)
    thetas = np.linspace(lo, hi, samples)

    def chart(theta: float) -> np.ndarray:
        return anchor + theta * tangent

    return thetas, chart


def _numeric_scan(model, x, y, thetas, chart, opts: SolverOptions, workers: int):
    """Warm-started solver scan over the boundary chart.

    Each worker sweeps a contiguous block of samples, reusing the previous
    converged paths as initialization.  The reduction over samples is a plain
    argmin with first-index tie-break, so the minimizer selection does not
    depend on thread scheduling.  Ranking boundary points needs far less
    accuracy than the reported exponent, so the sweep runs at a coarse
    resolution and loose tolerance; the legs at the winning point are then
    re-solved with the caller's options.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    final_opts = replace(opts, multi_start=1)
    opts = replace(
        opts,
        n=min(opts.n, 50),
        grad_tol_rel=max(opts.grad_tol_rel, 1e-6) if opts.grad_tol is None
        else opts.grad_tol_rel,
        max_iter=min(opts.max_iter, 2000),
        multi_start=1,
        strict=False,
    )

    def make_leg_solver():
        state = {"xz": None, "zy": None}

        def legs(z):
            init_xz = state["xz"]
            init_zy = state["zy"]
            if init_xz is not None:
                pts = init_xz.points.copy()
                pts[-1] = z
                init_xz = DiscretePath(pts) if np.isfinite(
                    _finite_energy(model, pts)) else None
            if init_zy is not None:
                pts = init_zy.points.copy()
                pts[0] = z
                init_zy = DiscretePath(pts) if np.isfinite(
                    _finite_energy(model, pts)) else None
            r_xz = solve_geodesic(model, x, z, opts, init=init_xz)
            r_zy = solve_geodesic(model, z, y, opts, init=init_zy)
            state["xz"] = r_xz.path
            state["zy"] = r_zy.path
            return r_xz.distance, r_zy.distance

        return legs

    def sweep(block):
        legs = make_leg_solver()
        out = []
        for th in block:
            z = np.asarray(chart(float(th)), dtype=float)
            if not model.domain_test(z):
                out.append(np.inf)
                continue
            d_xz, d_zy = legs(z)
            out.append(d_xz + d_zy)
        return out

    blocks = np.array_split(np.arange(len(thetas)), max(1, min(workers, len(thetas))))
    vals = np.empty(len(thetas))
    if len(blocks) == 1:
        vals[:] = sweep(thetas)
    else:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=len(blocks)) as pool:
            futs = [pool.submit(sweep, thetas[b]) for b in blocks]
            for b, fut in zip(blocks, futs):
                vals[b] = fut.result()

    j = int(np.argmin(vals))
    legs = make_leg_solver()

    def f(theta):
        z = np.asarray(chart(float(theta)), dtype=float)
        if not model.domain_test(z):
            return np.inf
        d_xz, d_zy = legs(z)
        return d_xz + d_zy

    lo = float(thetas[max(j - 1, 0)])
    hi = float(thetas[min(j + 1, len(thetas) - 1)])
    f(float(thetas[j]))  # seed the warm caches near the minimum
    theta, val = _golden(f, lo, hi) if hi > lo else (float(thetas[j]), float(vals[j]))
    if vals[j] < val:
        theta = float(thetas[j])
    z_star = np.asarray(chart(theta), dtype=float)
    d_xz = solve_geodesic(model, x, z_star, final_opts).distance
    d_zy = solve_geodesic(model, z_star, y, final_opts).distance
    return z_star, d_xz + d_zy


def _finite_energy(model, pts) -> float:
    from .geodesic import _energy_of

    return _energy_of(model, pts)


def _closed_form_scan(dfun, x, y, thetas, chart, domain_test):
    def f(theta):
        z = np.asarray(chart(float(theta)), dtype=float)
        if not domain_test(z):
            return np.inf
        return dfun(x, z) + dfun(z, y)

    theta, val = _grid_then_golden(f, thetas)
    return np.asarray(chart(theta), dtype=float), val


# ---- Public entry points ---- #


def exit_asymptotics(
    model: DiffusionModel,
    x,
    y,
    boundary: Boundary,
    opts: SolverOptions | None = None,
    workers: int = 1,
    truncation_factor: float = 4.0,
    force_numeric: bool = False,
) -> ExitAsymptotics:
    """Exit exponent for the bridge from x to y against the given boundary.

    force_numeric skips the closed-form dispatch and runs the solver-based
    boundary scan even when an exact backend exists (used for cross-checks).
    """
    if not model.complete:
        raise IncompleteModel(
            "the model declares an incomplete metric (boundary at finite "
            "distance); exit exponents are not defined for it"
        )
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    for name, z in (("x", x), ("y", y)):
        if not model.domain_test(z):
            raise OutsideDomain(f"{name} = {z} is outside the model domain")

    plane = _as_plane(boundary, model.dim)
    geom = model.geometry if not force_numeric else None

    if plane is not None:
        s_x, s_y = _side_checks(plane, x, y)
        method = "closed_form" if geom is not None else "numeric_1d"
        if s_x == 0.0 or s_y == 0.0:
            z_star = x.copy() if s_x == 0.0 else y.copy()
            dfun = _plain_distance(model, opts, force_numeric)
            return _assemble(dfun, x, y, z_star, 0.0, method,
                             geodesic_exits=True, degenerate=True)
        if (s_x > 0.0) != (s_y > 0.0):
            z_star = _geodesic_plane_crossing(model, x, y, plane, opts)
            dfun = _plain_distance(model, opts, force_numeric)
            return _assemble(dfun, x, y, z_star, 0.0, method, geodesic_exits=True)

        if isinstance(geom, HullWhiteGeometry) and abs(plane.normal[0]) == 1.0:
            x0 = plane.offset / plane.normal[0]
            return _hw_vertical(model, x, y, x0, opts, geom)
        if isinstance(geom, ConstantGeometry):
            return _constant_hyperplane(geom.inv_metric, x, y, plane, "closed_form")
        if isinstance(geom, HullWhiteGeometry):
            # Non-vertical plane under the volatility geometry: scan the
            # plane in closed-form distances.
            sv, rho = geom.sigma_vol, geom.rho

            def dfun(p, q):
                return hw_distance(sv, rho, p, q)

            d_xy = dfun(x, y)
            thetas, chart = _arclength_window(
                model, x, y, plane, d_xy, truncation_factor, 256
            )
            z_star, S = _closed_form_scan(dfun, x, y, thetas, chart, model.domain_test)
            return _assemble(dfun, x, y, z_star, 0.5 * (S * S - d_xy * d_xy),
                             "numeric_1d")

        sopts = opts or SolverOptions()
        d_xy = solve_geodesic(model, x, y, sopts).distance
        thetas, chart = _arclength_window(model, x, y, plane, d_xy,
                                          truncation_factor, 256)
        z_star, S = _numeric_scan(model, x, y, thetas, chart, sopts, workers)
        dfun = _plain_distance(model, sopts, force_numeric)
        return _assemble(dfun, x, y, z_star, 0.5 * (S * S - d_xy * d_xy),
                         "numeric_1d")

    curve: ParametricCurve = boundary  # type: ignore[assignment]
    thetas = np.linspace(curve.theta_min, curve.theta_max, curve.samples)
    if geom is not None:
        dfun = _plain_distance(model, opts, force_numeric=False)
        d_xy = dfun(x, y)
        z_star, S = _closed_form_scan(dfun, x, y, thetas, curve.chart,
                                      model.domain_test)
        return _assemble(dfun, x, y, z_star, 0.5 * (S * S - d_xy * d_xy),
                         "numeric_1d")
    sopts = opts or SolverOptions()
    d_xy = solve_geodesic(model, x, y, sopts).distance
    z_star, S = _numeric_scan(model, x, y, thetas, curve.chart, sopts, workers)
    dfun = _plain_distance(model, sopts, force_numeric)
    return _assemble(dfun, x, y, z_star, 0.5 * (S * S - d_xy * d_xy), "numeric_1d")


def _plain_distance(model, opts, force_numeric: bool):
    if force_numeric or model.geometry is None:
        sopts = opts or SolverOptions()

        def dfun(p, q):
            return solve_geodesic(model, p, q, sopts).distance

        return dfun

    def dfun(p, q):
        return model_distance(model, p, q, opts)

    return dfun


def frozen_exit_asymptotics(
    model: DiffusionModel,
    x,
    y,
    boundary: Boundary,
    z0,
    opts: SolverOptions | None = None,
) -> ExitAsymptotics:
    """Exit exponent with the metric frozen at z0: a(z)^{-1} := a(z0)^{-1}.

    The frozen geometry is flat, so hyperplanes reduce to a whitened
    reflection and curves to a closed-form scan.  For a genuinely constant
    model this coincides with exit_asymptotics for every z0.
    """
    if not model.complete:
        raise IncompleteModel(
            "the model declares an incomplete metric (boundary at finite "
            "distance); exit exponents are not defined for it"
        )
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    z0 = np.asarray(z0, dtype=float)
    for name, z in (("x", x), ("y", y), ("z0", z0)):
        if not model.domain_test(z):
            raise OutsideDomain(f"{name} = {z} is outside the model domain")
    if isinstance(model.geometry, ConstantGeometry):
        # same matrix at every state; reusing it keeps frozen == true
        # bit for bit on constant models
        G = model.geometry.inv_metric
    else:
        G = inverse_metric(model, z0)

    plane = _as_plane(boundary, model.dim)
    if plane is not None:
        s_x, s_y = _side_checks(plane, x, y)
        W, _ = _sym_sqrt(G)

        def dfun(p, q):
            return float(np.linalg.norm(W @ (np.asarray(q) - np.asarray(p))))

        if s_x == 0.0 or s_y == 0.0:
            z_star = x.copy() if s_x == 0.0 else y.copy()
            return _assemble(dfun, x, y, z_star, 0.0, "frozen",
                             geodesic_exits=True, degenerate=True)
        if (s_x > 0.0) != (s_y > 0.0):
            t = s_x / (s_x - s_y)
            z_star = x + t * (y - x)
            return _assemble(dfun, x, y, z_star, 0.0, "frozen",
                             geodesic_exits=True)
        out = _constant_hyperplane(G, x, y, plane, "frozen")
        return out

    curve: ParametricCurve = boundary  # type: ignore[assignment]
    W, _ = _sym_sqrt(G)

    def dfun(p, q):
        return float(np.linalg.norm(W @ (np.asarray(q) - np.asarray(p))))

    thetas = np.linspace(curve.theta_min, curve.theta_max, curve.samples)
    d_xy = dfun(x, y)
    z_star, S = _closed_form_scan(dfun, x, y, thetas, curve.chart,
                                  model.domain_test)
    return _assemble(dfun, x, y, z_star, 0.5 * (S * S - d_xy * d_xy), "frozen")


# ---- Freezing comparison ---- #


@dataclass(frozen=True)
class FreezingRow:
    label: str
    result: ExitAsymptotics
    probabilities: tuple[float, ...]


@dataclass(frozen=True)
class FreezingComparison:
    t_list: tuple[float, ...]
    rows: tuple[FreezingRow, ...]


def compare_freezing(
    model: DiffusionModel,
    x,
    y,
    boundary: Boundary,
    freeze_points,
    t_list=(),
    opts: SolverOptions | None = None,
    workers: int = 1,
) -> FreezingComparison:
    """True exit exponent next to frozen-coefficient surrogates.

    One row per freeze point, after a first row for the true model.  Each row
    carries exp(-J/t) for every requested horizon.  Where to freeze is the
    caller's problem: there is no canonical choice, and the candidates can
    disagree among themselves by more than their distance to the true value.
    """
    t_list = tuple(float(t) for t in t_list)
    rows = []

    def probs(J):
        return tuple(exit_probability_equivalent(J, t) for t in t_list)

    true = exit_asymptotics(model, x, y, boundary, opts=opts, workers=workers)
    rows.append(FreezingRow("true", true, probs(true.J)))
    for z0 in freeze_points:
        z0 = np.asarray(z0, dtype=float)
        # space-separated coordinates: the label must stay a single CSV cell
        label = "frozen@(" + " ".join(format(v, ".6g") for v in z0) + ")"
        res = frozen_exit_asymptotics(model, x, y, boundary, z0, opts=opts)
        rows.append(FreezingRow(label, res, probs(res.J)))
    return FreezingComparison(t_list, tuple(rows))

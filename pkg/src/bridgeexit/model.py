"""Diffusion models and the Riemannian structure their coefficients induce.

A model is its state dimension, a drift field, a diffusion field sigma, a
domain membership test, and a completeness declaration.  Everything geometric
derives from a(z) = sigma(z) sigma(z)^T alone: the drift never enters any
distance, geodesic, or exit exponent computed here (tests pin that down to
bitwise identity).  The completeness flag is a declaration by the model
author that the metric boundary lies at infinite distance; exit exponents
are only meaningful when it holds, and the exit module refuses models that
declare complete=False.  Nothing here verifies the declaration.

Built-in models expose optional vectorized hooks (batch_inverse_metric,
batch_domain_test) that the path optimizer uses to evaluate a whole path's
midpoints in one call.  Custom callback models work without them, just
slower.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .errors import DegenerateCorrelation, NotSPD, OutsideDomain

__all__ = [
    "DiffusionModel",
    "HullWhiteGeometry",
    "ConstantGeometry",
    "diffusion_matrix",
    "inverse_metric",
    "inverse_metric_batch",
    "domain_test_batch",
    "constant_model",
    "hull_white_model",
    "grid_model",
    "grid_model_from_csv",
]


@dataclass(frozen=True)
class HullWhiteGeometry:
    """Tag: the model's metric is the correlated log-price/volatility geometry."""

    sigma_vol: float
    rho: float


@dataclass(frozen=True)
class ConstantGeometry:
    """Tag: the model's coefficients are state independent."""

    inv_metric: np.ndarray


@dataclass(frozen=True)
class DiffusionModel:
    """Immutable bundle of coefficient callbacks.

    drift and sigma map a state vector to a vector / d x m matrix; both must
    be pure.  domain_test returns True iff the state is inside the open
    domain.  geometry is an optional closed-form tag used for dispatch; the
    batch_* hooks are optional vectorized versions of the pointwise fields.
    """

    dim: int
    drift: Callable[[np.ndarray], np.ndarray]
    sigma: Callable[[np.ndarray], np.ndarray]
    domain_test: Callable[[np.ndarray], bool]
    complete: bool = True
    geometry: HullWhiteGeometry | ConstantGeometry | None = None
    batch_inverse_metric: Callable[[np.ndarray], np.ndarray] | None = field(
        default=None, repr=False
    )
    batch_domain_test: Callable[[np.ndarray], np.ndarray] | None = field(
        default=None, repr=False
    )


def _check_point(model: DiffusionModel, z) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    if z.shape != (model.dim,):
        raise ValueError(f"expected a point of dimension {model.dim}, got shape {z.shape}")
    if not np.all(np.isfinite(z)):
        raise ValueError("point must be finite")
    if not model.domain_test(z):
        raise OutsideDomain(f"point {z} is outside the model domain")
    return z


def diffusion_matrix(model: DiffusionModel, z) -> np.ndarray:
    """a(z) = sigma(z) sigma(z)^T, checked symmetric positive definite."""
    z = _check_point(model, z)
    s = np.asarray(model.sigma(z), dtype=float)
    if s.ndim != 2 or s.shape[0] != model.dim:
        raise ValueError(f"sigma(z) must be a {model.dim} x m matrix, got {s.shape}")
    a = s @ s.T
    a = 0.5 * (a + a.T)
    try:
        np.linalg.cholesky(a)
    except np.linalg.LinAlgError:
        raise NotSPD(f"diffusion matrix at {z} is not positive definite") from None
    return a


def inverse_metric(model: DiffusionModel, z) -> np.ndarray:
    """a(z)^{-1} via Cholesky solve, symmetrized against roundoff."""
    a = diffusion_matrix(model, z)
    inv = cho_solve(cho_factor(a, lower=True), np.eye(model.dim))
    return 0.5 * (inv + inv.T)


def inverse_metric_batch(model: DiffusionModel, pts: np.ndarray) -> np.ndarray:
    """a^{-1} at each row of pts, shape (n, d, d).

    Domain membership is NOT checked here; callers gate on domain_test_batch
    first (the optimizer wants out-of-domain trial steps to read as infinite
    energy, not as an exception).
    """
    pts = np.asarray(pts, dtype=float)
    if model.batch_inverse_metric is not None:
        return model.batch_inverse_metric(pts)
    out = np.empty((pts.shape[0], model.dim, model.dim))
    for i, z in enumerate(pts):
        a = np.asarray(model.sigma(z), dtype=float)
        a = a @ a.T
        try:
            c = cho_factor(0.5 * (a + a.T), lower=True)
        except np.linalg.LinAlgError:
            raise NotSPD(f"diffusion matrix at {z} is not positive definite") from None
        out[i] = cho_solve(c, np.eye(model.dim))
        out[i] = 0.5 * (out[i] + out[i].T)
    return out


def domain_test_batch(model: DiffusionModel, pts: np.ndarray) -> np.ndarray:
    pts = np.asarray(pts, dtype=float)
    if model.batch_domain_test is not None:
        return np.asarray(model.batch_domain_test(pts), dtype=bool)
    return np.fromiter((bool(model.domain_test(z)) for z in pts), dtype=bool,
                       count=pts.shape[0])


def _inv_2x2_batch(a: np.ndarray, what: str) -> np.ndarray:
    """Analytic SPD inverse of a batch of symmetric 2x2 matrices."""
    det = a[:, 0, 0] * a[:, 1, 1] - a[:, 0, 1] * a[:, 1, 0]
    bad = ~((a[:, 0, 0] > 0) & (det > 0))
    if np.any(bad):
        raise NotSPD(f"{what}: non-SPD diffusion matrix in batch")
    inv = np.empty_like(a)
    inv[:, 0, 0] = a[:, 1, 1] / det
    inv[:, 1, 1] = a[:, 0, 0] / det
    off = -0.5 * (a[:, 0, 1] + a[:, 1, 0]) / det
    inv[:, 0, 1] = off
    inv[:, 1, 0] = off
    return inv


# ---- Built-in models ---- #


def constant_model(sigma, complete: bool = True) -> DiffusionModel:
    """Model with state-independent diffusion matrix and zero drift."""
    s = np.atleast_2d(np.asarray(sigma, dtype=float))
    d = s.shape[0]
    a = s @ s.T
    a = 0.5 * (a + a.T)
    try:
        np.linalg.cholesky(a)
    except np.linalg.LinAlgError:
        raise NotSPD("constant sigma gives a singular diffusion matrix") from None
    inv = np.linalg.inv(a)
    inv = 0.5 * (inv + inv.T)
    zero = np.zeros(d)
    return DiffusionModel(
        dim=d,
        drift=lambda z: zero,
        sigma=lambda z: s,
        domain_test=lambda z: True,
        complete=complete,
        geometry=ConstantGeometry(inv),
        batch_inverse_metric=lambda pts: np.broadcast_to(
            inv, (pts.shape[0], d, d)
        ).copy(),
        batch_domain_test=lambda pts: np.ones(pts.shape[0], dtype=bool),
    )


def hull_white_model(
    b: float = 0.0, mu: float = 0.0, sigma_vol: float = 1.0, rho: float = 0.0
) -> DiffusionModel:
    """Log-price with lognormal stochastic volatility on R x R_+.

    State z = (xi, v).  dxi = (b - v^2/2) dt + v rho dB1 + v rb dB2,
    dv = mu v dt + sigma_vol v dB1, rb = sqrt(1 - rho^2).  The induced
    a(z) = [[v^2, rho sigma_vol v^2], [rho sigma_vol v^2, sigma_vol^2 v^2]]
    has inverse C / v^2 with a constant matrix C; the metric boundary v = 0
    sits at infinite distance, so the model is complete.
    """
    if sigma_vol <= 0.0 or not np.isfinite(sigma_vol):
        raise ValueError(f"sigma_vol must be positive, got {sigma_vol}")
    if abs(rho) >= 1.0 or not np.isfinite(rho):
        raise DegenerateCorrelation(f"need |rho| < 1, got {rho}")
    rb = np.sqrt(1.0 - rho * rho)
    cmat = np.array([[sigma_vol**2, -rho * sigma_vol], [-rho * sigma_vol, 1.0]])
    cmat /= sigma_vol**2 * (1.0 - rho * rho)

    def drift(z):
        return np.array([b - 0.5 * z[1] ** 2, mu * z[1]])

    def sigma(z):
        v = z[1]
        return np.array([[v * rho, v * rb], [sigma_vol * v, 0.0]])

    def batch_inv(pts):
        v = pts[:, 1]
        return cmat[None, :, :] / (v * v)[:, None, None]

    return DiffusionModel(
        dim=2,
        drift=drift,
        sigma=sigma,
        domain_test=lambda z: z[1] > 0.0,
        complete=True,
        geometry=HullWhiteGeometry(float(sigma_vol), float(rho)),
        batch_inverse_metric=batch_inv,
        batch_domain_test=lambda pts: pts[:, 1] > 0.0,
    )


def grid_model(x_nodes, v_nodes, entries, complete: bool = True) -> DiffusionModel:
    """Two-dimensional model with sigma bilinearly interpolated on a lattice.

    entries has shape (len(x_nodes), len(v_nodes), 2, 2) and holds sigma at
    each lattice node.  The domain is the closed bounding box of the nodes.
    Completeness cannot be inferred from samples, so the caller declares it.
    """
    from scipy.interpolate import RegularGridInterpolator

    x_nodes = np.asarray(x_nodes, dtype=float)
    v_nodes = np.asarray(v_nodes, dtype=float)
    entries = np.asarray(entries, dtype=float)
    if x_nodes.ndim != 1 or v_nodes.ndim != 1 or len(x_nodes) < 2 or len(v_nodes) < 2:
        raise ValueError("need at least a 2 x 2 lattice of sigma samples")
    if np.any(np.diff(x_nodes) <= 0) or np.any(np.diff(v_nodes) <= 0):
        raise ValueError("lattice nodes must be strictly increasing")
    if entries.shape != (len(x_nodes), len(v_nodes), 2, 2):
        raise ValueError(f"entries shape {entries.shape} does not match the lattice")
    if not np.all(np.isfinite(entries)):
        raise ValueError("sigma samples must be finite")

    interp = RegularGridInterpolator(
        (x_nodes, v_nodes), entries, method="linear", bounds_error=True
    )
    lo = np.array([x_nodes[0], v_nodes[0]])
    hi = np.array([x_nodes[-1], v_nodes[-1]])

    def inside(z):
        return bool(np.all(z >= lo) and np.all(z <= hi))

    def batch_inside(pts):
        return np.all(pts >= lo, axis=1) & np.all(pts <= hi, axis=1)

    def sigma(z):
        return interp(np.asarray(z, dtype=float)[None, :])[0]

    def batch_inv(pts):
        s = interp(pts)
        a = np.einsum("nij,nkj->nik", s, s)
        return _inv_2x2_batch(a, "grid model")

    zero = np.zeros(2)
    return DiffusionModel(
        dim=2,
        drift=lambda z: zero,
        sigma=sigma,
        domain_test=inside,
        complete=complete,
        geometry=None,
        batch_inverse_metric=batch_inv,
        batch_domain_test=batch_inside,
    )


def grid_model_from_csv(text: str, complete: bool = True) -> DiffusionModel:
    """Build a grid model from CSV with header x,v,s11,s12,s21,s22.

    Rows must cover a full rectangular lattice (any order).
    """
    lines = [ln.strip() for ln in text.strip().splitlines() if ln.strip()]
    if not lines or lines[0].replace(" ", "") != "x,v,s11,s12,s21,s22":
        raise ValueError("grid CSV must start with header 'x,v,s11,s12,s21,s22'")
    rows = []
    for ln in lines[1:]:
        cells = [float(c) for c in ln.split(",")]
        if len(cells) != 6:
            raise ValueError(f"grid CSV row has {len(cells)} cells, expected 6")
        rows.append(cells)
    data = np.asarray(rows, dtype=float)
    x_nodes = np.unique(data[:, 0])
    v_nodes = np.unique(data[:, 1])
    if len(x_nodes) * len(v_nodes) != len(rows):
        raise ValueError("grid CSV rows do not form a full rectangular lattice")
    entries = np.full((len(x_nodes), len(v_nodes), 2, 2), np.nan)
    xi = np.searchsorted(x_nodes, data[:, 0])
    vi = np.searchsorted(v_nodes, data[:, 1])
    entries[xi, vi] = data[:, 2:6].reshape(-1, 2, 2)
    if np.any(np.isnan(entries)):
        raise ValueError("grid CSV has duplicate or missing lattice nodes")
    return grid_model(x_nodes, v_nodes, entries, complete=complete)

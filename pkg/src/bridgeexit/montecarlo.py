"""Monte Carlo validation of exit exponents on pinned diffusions.

Constant-covariance bridges are sampled exactly (sequential Gaussian
conditioning), so the only bias in the crossing estimate is the discrete
monitoring of the barrier, and that is removed to leading order by a per-step
Brownian-bridge correction: between consecutive points with signed barrier
distances u, u' the bridge crosses with probability exp(-2 u u' N / (t q))
where q is the variance rate along the barrier normal.  The correction is
realized as one Bernoulli draw per step, not averaged in, which keeps the
estimator a plain mean of indicators.

Determinism contract: every batch of paths owns a counter-based generator
keyed by (seed, stream, batch index), all random numbers for a batch are
drawn up front in a fixed order, and batches are merged by summing counts.
Estimates are therefore bitwise identical for any number of worker threads.

Volatility-model bridges have no exact sampler here; they are produced by
forward simulation (exact lognormal volatility, Euler log-price) and
rejection onto an endpoint ball of radius eps, which biases results at
O(eps) and is priced accordingly: a fixed attempt budget is spent in full,
and the estimate reports how many paths were actually accepted.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateCorrelation,
    DegenerateEstimate,
    NotSPD,
    RejectionBudgetExceeded,
)
from .exits import Hyperplane, VerticalBarrier, _as_plane
from .paths import DiscretePath, format_sig

__all__ = [
    "RngSpec",
    "CrossingEstimate",
    "LdFit",
    "sample_gaussian_bridge",
    "crossing_probability",
    "crossing_curve",
    "brownian_crossing_exact",
    "ld_slope",
    "sample_hw_bridge_rejection",
    "hw_crossing_probability",
    "estimates_to_csv",
]

DEFAULT_BATCH = 16384
CI_FACTOR = 1.96


@dataclass(frozen=True)
class RngSpec:
    """Root of the deterministic stream tree: (seed, stream, batch) -> Philox."""

    seed: int
    stream: int = 0

    def __post_init__(self):
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must fit in 64 bits")
        if not 0 <= int(self.stream) < 2**32:
            raise ValueError("stream must fit in 32 bits")

    def batch_generator(self, batch_index: int) -> np.random.Generator:
        if not 0 <= int(batch_index) < 2**32:
            raise ValueError("batch index must fit in 32 bits")
        key = np.array(
            [int(self.seed), (int(self.stream) << 32) | int(batch_index)],
            dtype=np.uint64,
        )
        return np.random.Generator(np.random.Philox(key=key))

    def with_stream(self, stream: int) -> "RngSpec":
        return RngSpec(self.seed, stream)


@dataclass(frozen=True)
class CrossingEstimate:
    t: float
    n_paths: int
    p_hat: float
    ci_half_width: float
    exponent: float
    seed: int


@dataclass(frozen=True)
class LdFit:
    """Linear fit of -t log p against t: intercept is the t -> 0 exponent."""

    intercept: float
    slope: float
    max_residual: float


def _finish_estimate(t, n_paths, hits, seed) -> CrossingEstimate:
    p_hat = hits / n_paths
    ci = CI_FACTOR * math.sqrt(max(p_hat * (1.0 - p_hat), 0.0) / n_paths)
    exponent = -t * math.log(p_hat) if p_hat > 0.0 else math.inf
    return CrossingEstimate(
        t=float(t),
        n_paths=int(n_paths),
        p_hat=float(p_hat),
        ci_half_width=float(ci),
        exponent=float(exponent),
        seed=int(seed),
    )


def _batch_sizes(n_total: int, batch_size: int):
    out = []
    done = 0
    idx = 0
    while done < n_total:
        b = min(batch_size, n_total - done)
        out.append((idx, b))
        done += b
        idx += 1
    return out


# ---- Exact Gaussian bridge ---- #


def _plane_for(boundary, dim: int) -> Hyperplane:
    plane = _as_plane(boundary, dim)
    if plane is None:
        raise ValueError("Monte Carlo barriers must be hyperplanes")
    return plane


def _chol(cov: np.ndarray) -> np.ndarray:
    cov = np.asarray(cov, dtype=float)
    cov = 0.5 * (cov + cov.T)
    try:
        return np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        raise NotSPD("covariance is not positive definite") from None


def _bridge_batch_crossings(x, y, t, L, normal, offset, var_rate, n_steps,
                            n_batch, gen, per_step):
    """Crossing count for one batch; all draws happen up front in fixed order."""
    d = len(x)
    ds = 1.0 / n_steps
    xi = gen.standard_normal((n_steps, n_batch, d))
    uni = gen.random((n_steps, n_batch)) if per_step else None

    z = np.broadcast_to(x, (n_batch, d)).copy()
    delta_prev = np.full(n_batch, float(normal @ x - offset))
    crossed = np.zeros(n_batch, dtype=bool)
    lam = -2.0 * n_steps / (t * var_rate)
    for i in range(n_steps):
        s_i = i * ds
        frac = ds / (1.0 - s_i)
        z = z + frac * (y - z)
        if i == n_steps - 1:
            z = np.broadcast_to(y, (n_batch, d)).copy()
        else:
            step_var = t * ds * (1.0 - (i + 1) * ds) / (1.0 - s_i)
            z = z + math.sqrt(max(step_var, 0.0)) * (xi[i] @ L.T)
        delta = z @ normal - offset
        if per_step:
            arg = np.minimum(lam * delta_prev * delta, 0.0)
            crossed |= uni[i] < np.exp(arg)
        else:
            crossed |= delta_prev * delta <= 0.0
        delta_prev = delta
    return int(crossed.sum())


def sample_gaussian_bridge(x, y, t: float, cov, n_steps: int,
                           rng: RngSpec) -> DiscretePath:
    """One exact bridge path from x to y over horizon t with covariance cov."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if t <= 0.0:
        raise ValueError("horizon must be positive")
    if n_steps < 1:
        raise ValueError("need at least one step")
    L = _chol(cov)
    d = len(x)
    gen = rng.batch_generator(0)
    xi = gen.standard_normal((n_steps, d))
    pts = np.empty((n_steps + 1, d))
    pts[0] = x
    ds = 1.0 / n_steps
    z = x.copy()
    for i in range(n_steps):
        s_i = i * ds
        z = z + (ds / (1.0 - s_i)) * (y - z)
        if i == n_steps - 1:
            z = y.copy()
        else:
            step_var = t * ds * (1.0 - (i + 1) * ds) / (1.0 - s_i)
            z = z + math.sqrt(max(step_var, 0.0)) * (L @ xi[i])
        pts[i + 1] = z
    return DiscretePath(pts)


def crossing_probability(
    x,
    y,
    t: float,
    cov,
    boundary,
    n_paths: int,
    n_steps: int,
    rng: RngSpec,
    workers: int = 1,
    batch_size: int = DEFAULT_BATCH,
    per_step_correction: bool = True,
) -> CrossingEstimate:
    """Probability that the bridge from x to y touches the barrier before t."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if t <= 0.0:
        raise ValueError("horizon must be positive")
    if n_paths < 1 or n_steps < 1:
        raise ValueError("need n_paths >= 1 and n_steps >= 1")
    if batch_size < 1:
        raise ValueError("batch_size must be positive")
    plane = _plane_for(boundary, len(x))
    s_x = float(plane.normal @ x - plane.offset)
    s_y = float(plane.normal @ y - plane.offset)
    if s_x * s_y <= 0.0:
        # An endpoint touches or the endpoints straddle: every path crosses.
        return CrossingEstimate(float(t), int(n_paths), 1.0, 0.0, 0.0,
                                int(rng.seed))
    cov = np.asarray(cov, dtype=float)
    L = _chol(cov)
    var_rate = float(plane.normal @ cov @ plane.normal)
    if var_rate <= 0.0:
        raise DegenerateCorrelation(
            "covariance has no variance along the barrier normal"
        )

    batches = _batch_sizes(n_paths, batch_size)

    def run(batch):
        idx, nb = batch
        gen = rng.batch_generator(idx)
        return _bridge_batch_crossings(
            x, y, t, L, plane.normal, plane.offset, var_rate, n_steps, nb,
            gen, per_step_correction,
        )

    if workers <= 1 or len(batches) == 1:
        hits = sum(run(b) for b in batches)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            hits = sum(pool.map(run, batches))
    return _finish_estimate(t, n_paths, hits, rng.seed)


def crossing_curve(
    x,
    y,
    t_list,
    cov,
    boundary,
    n_paths: int,
    n_steps: int,
    rng: RngSpec,
    workers: int = 1,
    batch_size: int = DEFAULT_BATCH,
    per_step_correction: bool = True,
) -> list[CrossingEstimate]:
    """One estimate per horizon; horizon k uses stream rng.stream + k."""
    out = []
    for k, t in enumerate(t_list):
        spec = rng.with_stream(rng.stream + k)
        out.append(
            crossing_probability(
                x, y, float(t), cov, boundary, n_paths, n_steps, spec,
                workers=workers, batch_size=batch_size,
                per_step_correction=per_step_correction,
            )
        )
    return out


def brownian_crossing_exact(x, y, t: float, cov, boundary) -> float:
    """Exact barrier-touch probability for the constant-covariance bridge."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if t <= 0.0:
        raise ValueError("horizon must be positive")
    plane = _plane_for(boundary, len(x))
    s_x = float(plane.normal @ x - plane.offset)
    s_y = float(plane.normal @ y - plane.offset)
    if s_x * s_y <= 0.0:
        return 1.0
    cov = np.asarray(cov, dtype=float)
    var_rate = float(plane.normal @ cov @ plane.normal)
    if var_rate <= 0.0:
        raise DegenerateCorrelation(
            "covariance has no variance along the barrier normal"
        )
    return float(np.exp(-2.0 * s_x * s_y / (t * var_rate)))


# ---- Slope extraction ---- #


def ld_slope(estimates) -> LdFit:
    """Fit -t log p_hat = J + slope * t over a family of shrinking horizons.

    Needs at least three distinct horizons.  Refuses empty-count estimates
    with a hint about the largest exponent resolvable at that horizon.
    """
    ests = sorted(estimates, key=lambda e: -e.t)
    if len(ests) < 3:
        raise ValueError("need at least three horizons to fit a slope")
    ts = np.array([e.t for e in ests])
    if len(np.unique(ts)) != len(ts):
        raise ValueError("horizons must be distinct")
    for e in ests:
        if e.p_hat <= 0.0 or not math.isfinite(e.exponent):
            cap = e.t * math.log(max(e.n_paths, 2))
            raise DegenerateEstimate(
                f"no crossings observed at t = {e.t:g}: with {e.n_paths} paths "
                f"the largest resolvable exponent there is about {cap:.3g}; "
                "drop that horizon or increase n_paths"
            )
    zs = np.array([e.exponent for e in ests])
    slope, intercept = np.polyfit(ts, zs, 1)
    fit = intercept + slope * ts
    return LdFit(
        intercept=float(intercept),
        slope=float(slope),
        max_residual=float(np.max(np.abs(fit - zs))),
    )


# ---- Volatility-model bridges by rejection ---- #


def _hw_forward_batch(sigma_vol, rho, b, mu, x, t, n_steps, n_batch, gen,
                      x0, per_step, keep_paths):
    """Forward volatility-model paths; returns (crossed, accepted-ready state).

    The volatility factor is advanced by its exact lognormal solution on each
    step, the log-price by Euler with the step-initial volatility; the same
    normal increment drives both, which preserves the instantaneous
    correlation.
    """
    rho_bar = math.sqrt(1.0 - rho * rho)
    dt = t / n_steps
    sdt = math.sqrt(dt)
    xi = gen.standard_normal((n_steps, n_batch, 2))
    uni = gen.random((n_steps, n_batch)) if (per_step and x0 is not None) else None

    X = np.full(n_batch, float(x[0]))
    v = np.full(n_batch, float(x[1]))
    paths = None
    if keep_paths:
        paths = np.empty((n_steps + 1, n_batch, 2))
        paths[0, :, 0] = X
        paths[0, :, 1] = v
    crossed = np.zeros(n_batch, dtype=bool)
    delta_prev = X - x0 if x0 is not None else None
    vol_drift = (mu - 0.5 * sigma_vol * sigma_vol) * dt
    for i in range(n_steps):
        dW = sdt * xi[i, :, 0]
        dZ = sdt * xi[i, :, 1]
        X_new = X + (b - 0.5 * v * v) * dt + v * (rho * dW + rho_bar * dZ)
        v_new = v * np.exp(sigma_vol * dW + vol_drift)
        if x0 is not None:
            delta = X_new - x0
            if per_step:
                arg = np.minimum(-2.0 * delta_prev * delta / (v * v * dt), 0.0)
                crossed |= uni[i] < np.exp(arg)
            else:
                crossed |= delta_prev * delta <= 0.0
            delta_prev = delta
        X, v = X_new, v_new
        if keep_paths:
            paths[i + 1, :, 0] = X
            paths[i + 1, :, 1] = v
    return X, v, crossed, paths


def sample_hw_bridge_rejection(
    sigma_vol: float,
    rho: float,
    b: float,
    mu: float,
    x,
    y,
    t: float,
    n_steps: int,
    rng: RngSpec,
    eps: float,
    max_attempts: int = 200000,
    batch_size: int = 2048,
) -> DiscretePath:
    """One approximate volatility-model bridge: forward paths, accept the
    first whose endpoint lands within eps of y.  Endpoint bias is O(eps)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if eps <= 0.0:
        raise ValueError("eps must be positive")
    attempts = 0
    idx = 0
    while attempts < max_attempts:
        nb = min(batch_size, max_attempts - attempts)
        gen = rng.batch_generator(idx)
        X, v, _, paths = _hw_forward_batch(
            sigma_vol, rho, b, mu, x, t, n_steps, nb, gen,
            x0=None, per_step=False, keep_paths=True,
        )
        hit = (X - y[0]) ** 2 + (v - y[1]) ** 2 <= eps * eps
        if hit.any():
            j = int(np.argmax(hit))
            return DiscretePath(paths[:, j, :].copy())
        attempts += nb
        idx += 1
    raise RejectionBudgetExceeded(
        f"no endpoint landed within eps = {eps:g} of y after {max_attempts} "
        "attempts; widen eps or raise the budget"
    )


def hw_crossing_probability(
    sigma_vol: float,
    rho: float,
    b: float,
    mu: float,
    x,
    y,
    t: float,
    boundary,
    n_attempts: int,
    n_steps: int,
    rng: RngSpec,
    eps: float,
    min_accepted: int = 100,
    workers: int = 1,
    batch_size: int = 8192,
    per_step_correction: bool = True,
) -> CrossingEstimate:
    """Barrier-touch probability for the approximate volatility-model bridge.

    Spends the full attempt budget (deterministic for any worker count) and
    estimates over the accepted paths; n_paths in the result is the accepted
    count.  Raises when fewer than min_accepted paths land in the endpoint
    ball.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if eps <= 0.0:
        raise ValueError("eps must be positive")
    plane = _plane_for(boundary, 2)
    if abs(plane.normal[0]) != 1.0:
        raise ValueError("volatility-model barriers must be vertical")
    x0 = plane.offset / plane.normal[0]
    s_x = x[0] - x0
    s_y = y[0] - x0
    if s_x * s_y <= 0.0:
        return CrossingEstimate(float(t), int(n_attempts), 1.0, 0.0, 0.0,
                                int(rng.seed))

    batches = _batch_sizes(n_attempts, batch_size)

    def run(batch):
        idx, nb = batch
        gen = rng.batch_generator(idx)
        X, v, crossed, _ = _hw_forward_batch(
            sigma_vol, rho, b, mu, x, t, n_steps, nb, gen,
            x0=x0, per_step=per_step_correction, keep_paths=False,
        )
        hit = (X - y[0]) ** 2 + (v - y[1]) ** 2 <= eps * eps
        return int(hit.sum()), int((hit & crossed).sum())

    if workers <= 1 or len(batches) == 1:
        results = [run(bt) for bt in batches]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, batches))
    accepted = sum(r[0] for r in results)
    hits = sum(r[1] for r in results)
    if accepted < min_accepted:
        raise RejectionBudgetExceeded(
            f"only {accepted} of {n_attempts} attempts landed within "
            f"eps = {eps:g} of y (need {min_accepted}); widen eps or raise "
            "the budget"
        )
    return _finish_estimate(t, accepted, hits, rng.seed)


# ---- Serialization ---- #


def estimates_to_csv(estimates, extrapolated: float | None = None,
                     analytic_J: float | None = None) -> str:
    """CSV table of estimates; fit and reference columns repeat per row."""
    lines = ["t,n_paths,p_hat,ci_half_width,exponent,seed,"
             "extrapolated_exponent,analytic_J"]
    ex = format_sig(extrapolated) if extrapolated is not None else ""
    aj = format_sig(analytic_J) if analytic_J is not None else ""
    for e in estimates:
        lines.append(
            ",".join(
                [
                    format_sig(e.t),
                    str(e.n_paths),
                    format_sig(e.p_hat),
                    format_sig(e.ci_half_width),
                    format_sig(e.exponent) if math.isfinite(e.exponent) else "inf",
                    str(e.seed),
                    ex,
                    aj,
                ]
            )
        )
    return "\n".join(lines) + "\n"

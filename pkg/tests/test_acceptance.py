"""End-to-end acceptance run: one test (one pass/fail line under -v) per
advertised claim, each at its stated tolerance, with runtime ceilings where
the claim names one.
"""

import math
import pathlib
import time

import numpy as np
import pytest

from bridgeexit import (
    Hyperplane,
    RngSpec,
    SolverOptions,
    VerticalBarrier,
    constant_model,
    crossing_curve,
    crossing_probability,
    distance,
    energy_gradient,
    exit_asymptotics,
    exit_probability_equivalent,
    frozen_exit_asymptotics,
    geodesic_arc,
    hull_white_model,
    hw_distance,
    ld_slope,
    optimal_crossing_time,
    path_energy,
    pointwise_exit_cost,
    poincare_distance,
    time_profile,
)
from bridgeexit.paths import DiscretePath

import refvalues as ref

HW = hull_white_model()


def test_01_far_configuration_exponents_and_runtime():
    t0 = time.perf_counter()
    res = exit_asymptotics(HW, ref.A_X, ref.A_Y, VerticalBarrier(ref.A_BARRIER))
    first_call = time.perf_counter() - t0
    assert 3.78 <= res.J <= 3.83, f"true exponent {res.J} outside [3.78, 3.83]"

    frozen = frozen_exit_asymptotics(
        HW, ref.A_X, ref.A_Y, VerticalBarrier(ref.A_BARRIER), ref.A_Y
    )
    assert abs(frozen.J - 6.0) <= 1e-6, f"frozen exponent {frozen.J} != 6.0"

    # closed-form timing: best of five warm calls
    best = first_call
    for _ in range(5):
        t0 = time.perf_counter()
        exit_asymptotics(HW, ref.A_X, ref.A_Y, VerticalBarrier(ref.A_BARRIER))
        best = min(best, time.perf_counter() - t0)
    assert best < 1e-3, f"closed-form call took {best * 1e3:.2f} ms"

    t0 = time.perf_counter()
    num = exit_asymptotics(
        HW, ref.A_X, ref.A_Y, VerticalBarrier(ref.A_BARRIER),
        opts=SolverOptions(n=200), force_numeric=True,
    )
    elapsed = time.perf_counter() - t0
    assert elapsed < 30.0, f"numeric backend took {elapsed:.1f} s"
    assert 3.78 <= num.J <= 3.83


def test_02_far_configuration_crossing_geometry():
    res = exit_asymptotics(HW, ref.A_X, ref.A_Y, VerticalBarrier(ref.A_BARRIER))
    assert res.z_star[0] == pytest.approx(2.5, abs=1e-12)
    assert abs(res.z_star[1] - 0.9733961) <= 1e-3

    # the crossing lies on the same circle as the leg leaving x
    arc = geodesic_arc(ref.A_X, res.z_star)
    assert abs(arc.center_x - 2.0525) <= 1e-3

    frozen = frozen_exit_asymptotics(
        HW, ref.A_X, ref.A_Y, VerticalBarrier(ref.A_BARRIER), ref.A_Y
    )
    assert frozen.z_star[0] == pytest.approx(2.5, abs=1e-12)
    assert abs(frozen.z_star[1] - 0.425) <= 1e-6


def test_03_close_configuration_exponents_and_geometry():
    res = exit_asymptotics(HW, ref.B_X, ref.B_Y, VerticalBarrier(ref.B_BARRIER))
    assert abs(res.J - 0.1191) <= 5e-4, f"true exponent {res.J}"
    assert abs(res.z_star[1] - 0.1086) <= 5e-4

    frozen = frozen_exit_asymptotics(
        HW, ref.B_X, ref.B_Y, VerticalBarrier(ref.B_BARRIER), ref.B_Y
    )
    # target is the exact frozen-reflection value 1/12 = 0.0833...; the
    # two-decimal rounding 0.083 quoted alongside it is 3.3e-6 away and
    # cannot carry a 1e-6 tolerance
    assert abs(frozen.J - 1.0 / 12.0) <= 1e-6, f"frozen exponent {frozen.J}"
    assert abs(frozen.z_star[1] - 0.104) <= 1e-6


def test_04_probability_equivalents_at_one_twentieth():
    res = exit_asymptotics(HW, ref.B_X, ref.B_Y, VerticalBarrier(ref.B_BARRIER))
    frozen = frozen_exit_asymptotics(
        HW, ref.B_X, ref.B_Y, VerticalBarrier(ref.B_BARRIER), ref.B_Y
    )
    p_true = exit_probability_equivalent(res.J, 0.05)
    p_frozen = exit_probability_equivalent(frozen.J, 0.05)
    assert abs(p_true - 0.0925) <= 1e-3, f"true equivalent {p_true}"
    assert abs(p_frozen - 0.1889) <= 1e-3, f"frozen equivalent {p_frozen}"


def test_05_solver_reproduces_the_closed_form_distance():
    rng = np.random.default_rng(20240817)
    t0 = time.perf_counter()
    worst = 0.0
    opts = SolverOptions(n=200)
    for _ in range(100):
        x = np.array([rng.uniform(-3, 3), rng.uniform(0.05, 5.0)])
        y = np.array([rng.uniform(-3, 3), rng.uniform(0.05, 5.0)])
        exact = poincare_distance(x, y)
        got = distance(HW, x, y, opts)
        worst = max(worst, abs(got - exact) / exact)
    elapsed = time.perf_counter() - t0
    assert worst <= 1e-3, f"max relative error {worst:.2e}"
    assert elapsed <= 300.0, f"100 solves took {elapsed:.1f} s"


def test_06_flat_model_large_deviation_validation():
    model = constant_model(np.eye(2))
    x = np.array([0.0, 0.5])
    y = np.array([1.0, 0.3])
    plane = Hyperplane(np.array([0.0, 1.0]), 0.0)
    res = exit_asymptotics(model, x, y, plane)
    assert res.J == pytest.approx(0.3, rel=1e-12)

    t0 = time.perf_counter()
    ests = crossing_curve(
        x, y, [0.2, 0.1, 0.05], np.eye(2), plane, 10**6, 50,
        RngSpec(20240817), workers=4,
    )
    elapsed = time.perf_counter() - t0
    assert elapsed <= 120.0, f"three million bridges took {elapsed:.1f} s"

    at_tenth = ests[1]
    exact = math.exp(-0.3 / 0.1)
    assert abs(at_tenth.p_hat - exact) <= 3 * at_tenth.ci_half_width, (
        f"p_hat {at_tenth.p_hat} vs {exact} "
        f"(ci {at_tenth.ci_half_width})"
    )
    fit = ld_slope(ests)
    assert abs(fit.intercept - 0.3) <= 0.05 * 0.3, f"intercept {fit.intercept}"


def test_07a_energy_gradient_matches_finite_differences():
    rng = np.random.default_rng(31)
    models = [
        hull_white_model(),
        hull_white_model(sigma_vol=2.0, rho=-0.6),
        hull_white_model(sigma_vol=0.7, rho=0.3),
        constant_model(np.array([[1.0, 0.3], [0.0, 0.8]])),
    ]
    for k in range(100):
        model = models[k % len(models)]
        x = np.array([rng.uniform(-1, 1), rng.uniform(0.3, 2.0)])
        y = x + np.array([rng.uniform(0.5, 1.5), rng.uniform(-0.1, 0.8)])
        n = 6
        pts = np.linspace(x, y, n + 1)
        pts[1:-1, 0] += 0.05 * rng.standard_normal(n - 1)
        pts[1:-1, 1] += 0.05 * rng.standard_normal(n - 1)
        pts[:, 1] = np.maximum(pts[:, 1], 0.15)
        path = DiscretePath(pts)
        g = energy_gradient(model, path)
        fd = np.zeros_like(g)
        h = 1e-6
        for i in range(1, n):
            for c in range(2):
                up = pts.copy()
                up[i, c] += h
                dn = pts.copy()
                dn[i, c] -= h
                fd[i - 1, c] = (
                    path_energy(model, DiscretePath(up))
                    - path_energy(model, DiscretePath(dn))
                ) / (2 * h)
        err = np.abs(fd - g).max() / max(np.abs(g).max(), 1e-12)
        assert err <= 1e-5, f"instance {k}: gradient error {err:.2e}"


def test_07b_symmetry_and_triangle_inequality_on_random_triples():
    rng = np.random.default_rng(32)
    for _ in range(100):
        pts = [
            np.array([rng.uniform(-3, 3), rng.uniform(0.05, 5.0)])
            for _ in range(3)
        ]
        p, q, r = pts
        d_pq = poincare_distance(p, q)
        assert abs(d_pq - poincare_distance(q, p)) <= 1e-10 * max(d_pq, 1.0)
        assert poincare_distance(p, r) <= d_pq + poincare_distance(q, r) + 1e-9


def test_07c_crossing_time_agrees_with_grid_search():
    rng = np.random.default_rng(33)
    for _ in range(50):
        x = np.array([rng.uniform(-2, 2), rng.uniform(0.1, 3.0)])
        y = np.array([rng.uniform(-2, 2), rng.uniform(0.1, 3.0)])
        z = np.array([rng.uniform(-2, 2), rng.uniform(0.1, 3.0)])
        d_xz = poincare_distance(x, z)
        d_zy = poincare_distance(z, y)
        u_bar = optimal_crossing_time(d_xz, d_zy)
        us = np.linspace(1e-4, 1.0 - 1e-4, 1000)
        vals = time_profile(us, d_xz, d_zy)
        j = int(np.argmin(vals))
        # parabolic refinement of the three-point bracket around the grid
        # argmin; the raw grid only localizes to half a cell (5e-4)
        if 0 < j < len(us) - 1:
            y0, y1, y2 = vals[j - 1], vals[j], vals[j + 1]
            denom = y0 - 2.0 * y1 + y2
            shift = 0.5 * (y0 - y2) / denom if denom != 0.0 else 0.0
            u_grid = us[j] + shift * (us[1] - us[0])
        else:
            u_grid = us[j]
        assert abs(u_grid - u_bar) <= 1e-4


def test_07d_scan_backend_agrees_with_closed_form_on_both_configurations():
    for x, y, x0 in (
        (ref.A_X, ref.A_Y, ref.A_BARRIER),
        (ref.B_X, ref.B_Y, ref.B_BARRIER),
    ):
        closed = exit_asymptotics(HW, x, y, VerticalBarrier(x0))
        numeric = exit_asymptotics(
            HW, x, y, VerticalBarrier(x0), opts=SolverOptions(n=200),
            force_numeric=True,
        )
        rel = abs(numeric.J - closed.J) / closed.J
        assert rel <= 1e-3, f"backend gap {rel:.2e} at barrier {x0}"
        assert np.linalg.norm(numeric.z_star - closed.z_star) <= 1e-2


def test_07e_monte_carlo_is_bitwise_reproducible_across_worker_counts():
    x = np.array([0.0, 0.5])
    y = np.array([1.0, 0.3])
    plane = Hyperplane(np.array([0.0, 1.0]), 0.0)
    base = None
    for workers in range(1, 9):
        est = crossing_probability(
            x, y, 0.1, np.eye(2), plane, 80_000, 25, RngSpec(77), workers=workers
        )
        if base is None:
            base = est
        assert est.p_hat == base.p_hat
        assert est.ci_half_width == base.ci_half_width
        assert est.exponent == base.exponent


def test_08_midpoint_freezing_value_and_discrepancy_note():
    frozen = frozen_exit_asymptotics(
        HW, ref.B_X, ref.B_Y, VerticalBarrier(ref.B_BARRIER), ref.B_MIDPOINT
    )
    assert abs(frozen.J - 0.12) <= 1e-9, f"midpoint-frozen exponent {frozen.J}"
    readme = pathlib.Path(__file__).resolve().parent.parent / "README.md"
    text = readme.read_text(encoding="utf-8")
    assert "0.1200" in text, "README must state the midpoint-freezing value"
    assert "0.090" in text, "README must mention the unreproduced quote"

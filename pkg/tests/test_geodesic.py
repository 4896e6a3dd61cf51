import math
from dataclasses import replace

import numpy as np
import pytest

from bridgeexit import (
    DiscretePath,
    NoConvergence,
    OutsideDomain,
    SolverOptions,
    constant_model,
    distance,
    energy_gradient,
    geodesic_between,
    hull_white_model,
    hw_distance,
    path_energy,
    refine,
    solve_geodesic,
)
from bridgeexit.paths import path_from_csv, path_to_csv

import refvalues as ref


def wiggly_path(rng, x, y, n=8, amp=0.05, floor=0.05):
    pts = np.linspace(x, y, n + 1)
    bump = np.sin(np.pi * np.linspace(0, 1, n + 1))[:, None]
    pts[1:-1] += amp * bump[1:-1] * rng.standard_normal((n - 1, len(x)))
    pts[:, 1] = np.maximum(pts[:, 1], floor)
    return DiscretePath(pts)


# ---- energy and gradient ---- #


def test_energy_of_chord_in_constant_metric_is_exact():
    s = np.array([[1.0, 0.0], [0.5, 2.0]])
    model = constant_model(s)
    G = np.linalg.inv(s @ s.T)
    x = np.array([0.0, 0.0])
    y = np.array([3.0, -1.0])
    for n in (2, 7, 50):
        chord = DiscretePath(np.linspace(x, y, n + 1))
        E = path_energy(model, chord)
        expect = 0.5 * float((y - x) @ G @ (y - x))
        assert E == pytest.approx(expect, rel=1e-12)


def test_gradient_matches_finite_differences():
    rng = np.random.default_rng(11)
    models = [hull_white_model(), hull_white_model(sigma_vol=2.0, rho=-0.6),
              constant_model(np.array([[1.0, 0.3], [0.0, 0.8]]))]
    for k in range(20):
        model = models[k % len(models)]
        x = np.array([rng.uniform(-1, 1), rng.uniform(0.3, 2.0)])
        y = np.array([rng.uniform(-1, 1) + 1.5, rng.uniform(0.3, 2.0)])
        path = wiggly_path(rng, x, y, floor=0.1)
        g = energy_gradient(model, path)
        pts = path.points
        fd = np.zeros_like(g)
        h = 1e-6
        for i in range(1, pts.shape[0] - 1):
            for c in range(pts.shape[1]):
                up = pts.copy()
                up[i, c] += h
                dn = pts.copy()
                dn[i, c] -= h
                fd[i - 1, c] = (
                    path_energy(model, DiscretePath(up))
                    - path_energy(model, DiscretePath(dn))
                ) / (2 * h)
        denom = max(np.abs(g).max(), 1e-12)
        assert np.abs(fd - g).max() / denom <= 1e-5


def test_gradient_vanishes_on_straight_line_in_flat_metric():
    model = constant_model(np.eye(2))
    chord = DiscretePath(np.linspace([0.0, 0.0], [1.0, 2.0], 11))
    assert np.abs(energy_gradient(model, chord)).max() < 1e-12


# ---- solutions in closed-form geometries ---- #


def test_flat_geodesic_is_the_chord_at_every_resolution():
    s = np.array([[2.0, 0.0], [1.0, 1.0]])
    model = constant_model(s)
    G = np.linalg.inv(s @ s.T)
    x = np.array([0.0, 1.0])
    y = np.array([4.0, -2.0])
    expect = math.sqrt(float((y - x) @ G @ (y - x)))
    for n in (2, 10, 64):
        path, d = geodesic_between(model, x, y, SolverOptions(n=n))
        assert d == pytest.approx(expect, rel=1e-9)
        chord = np.linspace(x, y, n + 1)
        assert np.abs(path.points - chord).max() < 1e-6


def test_identity_metric_distance_is_euclidean():
    model = constant_model(np.eye(2))
    assert distance(model, [0.0, 0.0], [3.0, 4.0]) == pytest.approx(5.0, rel=1e-12)


def test_two_segment_vertical_geodesic_passes_through_geometric_mean():
    # On a vertical line the discrete optimizer with midpoint metric puts the
    # single interior node of a 2-segment path exactly at the geometric mean.
    model = hull_white_model()
    res = solve_geodesic(model, [0.0, 1.0], [0.0, 4.0], SolverOptions(n=2))
    assert res.path.points[1][0] == pytest.approx(0.0, abs=1e-10)
    assert res.path.points[1][1] == pytest.approx(2.0, rel=1e-8)


def test_reference_pair_matches_closed_form():
    model = hull_white_model()
    d = distance(model, ref.A_X, ref.A_Y, SolverOptions(n=200))
    assert d == pytest.approx(ref.A_D_XY, rel=1e-3)


def test_correlated_model_matches_closed_form():
    sv, rho = 2.0, -0.7
    model = hull_white_model(sigma_vol=sv, rho=rho)
    x = np.array([0.2, 0.6])
    y = np.array([1.1, 1.4])
    d = distance(model, x, y, SolverOptions(n=200))
    assert d == pytest.approx(hw_distance(sv, rho, x, y), rel=1e-3)


def test_endpoints_are_never_moved():
    model = hull_white_model()
    res = solve_geodesic(model, ref.A_X, ref.A_Y, SolverOptions(n=50))
    assert (res.path.points[0] == ref.A_X).all()
    assert (res.path.points[-1] == ref.A_Y).all()


def test_converged_path_has_constant_speed_segments():
    model = hull_white_model()
    res = solve_geodesic(model, ref.A_X, ref.A_Y, SolverOptions(n=100))
    lengths = res.segment_lengths
    assert lengths.max() - lengths.min() <= 0.01 * lengths.mean()


def test_distance_is_symmetric():
    model = hull_white_model()
    rng = np.random.default_rng(12)
    for _ in range(5):
        x = np.array([rng.uniform(-1, 1), rng.uniform(0.2, 2.0)])
        y = np.array([rng.uniform(-1, 1), rng.uniform(0.2, 2.0)])
        opts = SolverOptions(n=60)
        d1 = distance(model, x, y, opts)
        d2 = distance(model, y, x, opts)
        assert abs(d1 - d2) <= 1e-6 * max(d1, 1e-12)


def test_drift_never_affects_the_distance():
    opts = SolverOptions(n=80)
    d1 = distance(hull_white_model(b=0.0, mu=0.0), ref.A_X, ref.A_Y, opts)
    d2 = distance(hull_white_model(b=5.0, mu=-2.0), ref.A_X, ref.A_Y, opts)
    assert d1 == d2


# ---- refinement ---- #


def test_refine_does_not_increase_energy():
    model = hull_white_model()
    res = solve_geodesic(model, ref.A_X, ref.A_Y, SolverOptions(n=50))
    fine, d_fine = refine(model, res.path, 100)
    assert fine.n_segments == 100
    interp_E = path_energy(
        model,
        DiscretePath(
            np.column_stack(
                [
                    np.interp(
                        np.linspace(0, 1, 101),
                        np.linspace(0, 1, 51),
                        res.path.points[:, c],
                    )
                    for c in range(2)
                ]
            )
        ),
    )
    assert 0.5 * d_fine**2 <= interp_E + 1e-12


def test_refinement_differences_shrink():
    model = hull_white_model()
    res = solve_geodesic(model, ref.A_X, ref.A_Y, SolverOptions(n=100))
    d100 = res.distance
    path200, d200 = refine(model, res.path, 200)
    _, d400 = refine(model, path200, 400)
    assert abs(d400 - d200) < abs(d200 - d100)


def test_refine_to_same_resolution_is_a_no_op():
    model = hull_white_model()
    res = solve_geodesic(model, ref.A_X, ref.A_Y, SolverOptions(n=50))
    again, d = refine(model, res.path, 50)
    assert d == pytest.approx(res.distance, rel=1e-6)
    assert np.abs(again.points - res.path.points).max() < 1e-4


def test_refine_of_flat_chord_is_exact_at_every_resolution():
    model = constant_model(np.eye(2))
    path, d = geodesic_between(model, [0.0, 0.0], [3.0, 4.0], SolverOptions(n=4))
    for n in (8, 32):
        path, d = refine(model, path, n)
        assert d == pytest.approx(5.0, rel=1e-10)


def test_refine_validates_segment_count():
    model = constant_model(np.eye(2))
    path, _ = geodesic_between(model, [0.0, 0.0], [1.0, 1.0], SolverOptions(n=4))
    with pytest.raises(ValueError):
        refine(model, path, 1)


# ---- options, failure modes, diagnostics ---- #


def test_option_validation():
    with pytest.raises(ValueError):
        SolverOptions(n=1)
    with pytest.raises(ValueError):
        SolverOptions(max_iter=0)
    with pytest.raises(ValueError):
        SolverOptions(multi_start=0)
    with pytest.raises(ValueError):
        SolverOptions(grad_tol_rel=0.0)


def test_strict_mode_raises_when_budget_is_too_small():
    model = hull_white_model()
    opts = SolverOptions(n=200, max_iter=2, coarse_init=False)
    with pytest.raises(NoConvergence):
        solve_geodesic(model, ref.A_X, ref.A_Y, opts)


def test_relaxed_mode_returns_best_effort():
    model = hull_white_model()
    opts = SolverOptions(n=200, max_iter=2, coarse_init=False, strict=False)
    res = solve_geodesic(model, ref.A_X, ref.A_Y, opts)
    assert res.iterations == 2
    assert res.distance > 0.0
    assert np.isfinite(res.energy)


def test_endpoint_outside_domain_is_rejected():
    model = hull_white_model()
    with pytest.raises(OutsideDomain):
        solve_geodesic(model, [0.0, -1.0], [1.0, 1.0])


def test_multi_start_reports_spread_and_keeps_the_best():
    model = hull_white_model()
    single = solve_geodesic(model, ref.A_X, ref.A_Y, SolverOptions(n=60))
    multi = solve_geodesic(
        model, ref.A_X, ref.A_Y, SolverOptions(n=60, multi_start=3)
    )
    assert multi.multistart_spread >= 0.0
    assert multi.distance <= single.distance * (1.0 + 1e-8)


def test_warm_start_from_supplied_path():
    model = hull_white_model()
    res = solve_geodesic(model, ref.A_X, ref.A_Y, SolverOptions(n=60))
    warm = solve_geodesic(
        model, ref.A_X, ref.A_Y, SolverOptions(n=60), init=res.path
    )
    assert warm.iterations <= 3
    assert warm.distance == pytest.approx(res.distance, rel=1e-10)


# ---- serialization ---- #


def test_path_csv_round_trip():
    rng = np.random.default_rng(13)
    path = wiggly_path(rng, np.array([0.0, 1.0]), np.array([2.0, 0.5]), n=6)
    text = path_to_csv(path)
    assert text.splitlines()[0] == "s,coord_0,coord_1"
    back = path_from_csv(text)
    assert back.n_segments == 6
    assert np.abs(back.points - path.points).max() < 1e-10

import numpy as np
import pytest

from bridgeexit import (
    ConstantGeometry,
    DegenerateCorrelation,
    HullWhiteGeometry,
    NotSPD,
    OutsideDomain,
    constant_model,
    diffusion_matrix,
    grid_model,
    grid_model_from_csv,
    hull_white_model,
    inverse_metric,
)
from bridgeexit.model import domain_test_batch, inverse_metric_batch

from conftest import random_half_plane_points


def random_models(seed=0):
    rng = np.random.default_rng(seed)
    out = [hull_white_model(), hull_white_model(sigma_vol=2.0, rho=-0.7),
           hull_white_model(b=0.3, mu=-0.1, sigma_vol=0.8, rho=0.4)]
    for _ in range(3):
        m = rng.standard_normal((2, 2))
        out.append(constant_model(m + 2.0 * np.eye(2)))
    return out


def test_diffusion_matrix_is_symmetric_on_random_states():
    rng = np.random.default_rng(1)
    for model in random_models():
        for z in random_half_plane_points(rng, 20):
            a = diffusion_matrix(model, z)
            assert np.abs(a - a.T).max() <= 1e-12 * np.abs(a).max()


def test_inverse_metric_inverts_the_diffusion_matrix():
    rng = np.random.default_rng(2)
    for model in random_models():
        for z in random_half_plane_points(rng, 20):
            prod = inverse_metric(model, z) @ diffusion_matrix(model, z)
            assert np.abs(prod - np.eye(model.dim)).max() <= 1e-10


def test_drift_does_not_enter_the_metric():
    quiet = hull_white_model(b=0.0, mu=0.0, sigma_vol=1.5, rho=0.3)
    loud = hull_white_model(b=7.0, mu=-4.0, sigma_vol=1.5, rho=0.3)
    rng = np.random.default_rng(3)
    for z in random_half_plane_points(rng, 50):
        a = inverse_metric(quiet, z)
        b = inverse_metric(loud, z)
        assert (a == b).all()


def test_volatility_metric_closed_form():
    # sigma_vol=2, rho=0 at v=1: a = diag(1, 4), inverse diag(1, 1/4)
    model = hull_white_model(sigma_vol=2.0, rho=0.0)
    z = np.array([0.3, 1.0])
    np.testing.assert_allclose(diffusion_matrix(model, z),
                               np.diag([1.0, 4.0]), atol=1e-14)
    np.testing.assert_allclose(inverse_metric(model, z),
                               np.diag([1.0, 0.25]), atol=1e-14)
    # the whole field is the v=1 matrix divided by v^2
    z2 = np.array([-1.0, 0.37])
    np.testing.assert_allclose(
        inverse_metric(model, z2) * 0.37**2,
        inverse_metric(model, z), rtol=1e-13,
    )


def test_correlated_inverse_metric_entries():
    sv, rho = 2.0, 0.5
    model = hull_white_model(sigma_vol=sv, rho=rho)
    v = 0.8
    got = inverse_metric(model, np.array([0.0, v]))
    expect = np.array([[sv**2, -rho * sv], [-rho * sv, 1.0]]) / (
        sv**2 * (1 - rho**2) * v**2
    )
    np.testing.assert_allclose(got, expect, rtol=1e-12)


def test_volatility_domain_is_the_open_upper_half_plane():
    model = hull_white_model()
    assert model.domain_test(np.array([5.0, 1e-9]))
    assert not model.domain_test(np.array([0.0, 0.0]))
    assert not model.domain_test(np.array([0.0, -1.0]))
    with pytest.raises(OutsideDomain):
        diffusion_matrix(model, np.array([0.0, -1.0]))


def test_volatility_parameter_validation():
    with pytest.raises(ValueError):
        hull_white_model(sigma_vol=0.0)
    with pytest.raises(ValueError):
        hull_white_model(sigma_vol=-2.0)
    with pytest.raises(DegenerateCorrelation):
        hull_white_model(rho=1.0)
    with pytest.raises(DegenerateCorrelation):
        hull_white_model(rho=-1.3)


def test_geometry_tags():
    assert isinstance(hull_white_model().geometry, HullWhiteGeometry)
    assert isinstance(constant_model(np.eye(2)).geometry, ConstantGeometry)


def test_constant_model_rejects_singular_sigma():
    with pytest.raises(NotSPD):
        constant_model(np.array([[1.0, 2.0], [2.0, 4.0]]))


def test_constant_model_matrices():
    s = np.array([[2.0, 0.0], [1.0, 1.0]])
    model = constant_model(s)
    a = s @ s.T
    z = np.array([9.0, -9.0])
    np.testing.assert_allclose(diffusion_matrix(model, z), a, rtol=1e-14)
    np.testing.assert_allclose(inverse_metric(model, z), np.linalg.inv(a),
                               rtol=1e-12)
    assert model.domain_test(z)


def test_incomplete_flag_is_carried():
    model = constant_model(np.eye(2), complete=False)
    assert model.complete is False


def test_batch_hooks_match_pointwise_evaluation():
    rng = np.random.default_rng(4)
    pts = random_half_plane_points(rng, 30)
    for model in random_models():
        batch = inverse_metric_batch(model, pts)
        # batch path may use the analytic form where pointwise factorizes,
        # so agreement is to rounding, not bitwise
        for k, z in enumerate(pts):
            np.testing.assert_allclose(batch[k], inverse_metric(model, z),
                                       rtol=1e-12, atol=0.0)
        mask = domain_test_batch(model, pts)
        assert mask.all()
    neg = pts.copy()
    neg[3, 1] = -1.0
    mask = domain_test_batch(hull_white_model(), neg)
    assert not mask[3] and mask.sum() == 29


def test_batch_fallback_without_hooks():
    base = hull_white_model()
    from dataclasses import replace

    stripped = replace(base, batch_inverse_metric=None, batch_domain_test=None)
    rng = np.random.default_rng(5)
    pts = random_half_plane_points(rng, 10)
    np.testing.assert_allclose(
        inverse_metric_batch(stripped, pts),
        inverse_metric_batch(base, pts), rtol=1e-13,
    )
    np.testing.assert_array_equal(
        domain_test_batch(stripped, pts), domain_test_batch(base, pts)
    )


# ---- gridded coefficient field ---- #


def sample_field(xs, vs):
    # smooth anisotropic field, SPD everywhere on the grid
    entries = np.zeros((len(xs), len(vs), 2, 2))
    for i, xx in enumerate(xs):
        for j, vv in enumerate(vs):
            entries[i, j] = np.array(
                [[1.0 + 0.1 * xx * xx, 0.2 * vv], [0.0, 0.5 + 0.3 * vv]]
            )
    return entries


def test_grid_model_reproduces_nodes_and_interpolates():
    xs = np.linspace(-1.0, 1.0, 5)
    vs = np.linspace(0.5, 2.0, 4)
    entries = sample_field(xs, vs)
    model = grid_model(xs, vs, entries)
    s = entries[2, 1]
    np.testing.assert_allclose(
        diffusion_matrix(model, np.array([xs[2], vs[1]])), s @ s.T, rtol=1e-12
    )
    # bilinear blend at a cell midpoint
    mid = np.array([0.5 * (xs[1] + xs[2]), 0.5 * (vs[2] + vs[3])])
    blend = 0.25 * (entries[1, 2] + entries[1, 3] + entries[2, 2] + entries[2, 3])
    np.testing.assert_allclose(
        diffusion_matrix(model, mid), blend @ blend.T, rtol=1e-12
    )
    # outside the rectangle is outside the domain
    assert not model.domain_test(np.array([5.0, 1.0]))
    assert model.geometry is None


def test_grid_model_csv_round_trip():
    xs = np.linspace(-1.0, 1.0, 3)
    vs = np.linspace(0.5, 1.5, 3)
    entries = sample_field(xs, vs)
    direct = grid_model(xs, vs, entries)
    lines = ["x,v,s11,s12,s21,s22"]
    for i, xx in enumerate(xs):
        for j, vv in enumerate(vs):
            s = entries[i, j]
            lines.append(
                f"{xx},{vv},{s[0,0]},{s[0,1]},{s[1,0]},{s[1,1]}"
            )
    parsed = grid_model_from_csv("\n".join(lines) + "\n")
    z = np.array([0.3, 0.9])
    np.testing.assert_allclose(
        diffusion_matrix(parsed, z), diffusion_matrix(direct, z), rtol=1e-12
    )


def test_grid_model_csv_rejects_ragged_grids():
    text = "x,v,s11,s12,s21,s22\n0,1,1,0,0,1\n1,2,1,0,0,1\n"
    with pytest.raises(ValueError):
        grid_model_from_csv(text)

"""Sampled landscape diagnostics against closed-form constants."""

import math

import numpy as np
import pytest

from momentumlab import (
    RegionSpec,
    check_projection_monotonicity,
    curvature_range,
    diagnose,
    get_objective,
    line_probe,
    oscillatory_constants,
    probe_negative_curvature,
    random_tube_curves,
)
from momentumlab.csvio import read_table
from momentumlab.objectives import oscillatory_second_derivative

LOG_REGION = RegionSpec("log_grid", 1e-4, 10.0)


# ---------------------------------------------------------------------------
# regions
# ---------------------------------------------------------------------------


def test_region_validation():
    with pytest.raises(ValueError):
        RegionSpec("disk", 0.0, 1.0)
    with pytest.raises(ValueError):
        RegionSpec("box", [0.0, 0.0], [1.0])
    with pytest.raises(ValueError):
        RegionSpec("box", [0.0], [0.0])
    with pytest.raises(ValueError):
        RegionSpec("log_grid", [1e-4, 1e-4], [1.0, 1.0])
    with pytest.raises(ValueError):
        RegionSpec("log_grid", 0.0, 1.0)
    with pytest.raises(ValueError):
        LOG_REGION.sample(0)


def test_region_sampling():
    pts = LOG_REGION.sample(100)
    assert pts.shape == (100, 1)
    assert pts[0, 0] == pytest.approx(1e-4) and pts[-1, 0] == pytest.approx(10.0)
    assert np.array_equal(pts, LOG_REGION.sample(100, seed=5))  # grid ignores the seed
    box = RegionSpec("box", [-1.0, 0.0], [1.0, 2.0])
    a = box.sample(50, seed=3)
    assert a.shape == (50, 2)
    assert np.all((a >= box.low) & (a <= box.high))
    assert np.array_equal(a, box.sample(50, seed=3))
    assert not np.array_equal(a, box.sample(50, seed=4))
    assert box.describe() == "box([-1, 1], [0, 2])"
    assert LOG_REGION.describe() == "log_grid[0.0001, 10]"


# ---------------------------------------------------------------------------
# diagnose against closed forms
# ---------------------------------------------------------------------------


def test_diagnose_well_conditioned_oscillatory():
    osc = get_objective("oscillatory1d{eps=0.05,R=2}")
    c = oscillatory_constants(0.05, 2.0)
    rep = diagnose(osc, LOG_REGION)
    # empirical infima are one-sided: at or above the closed form, and the
    # strong-convexity quotient is attained on the grid to high accuracy
    assert rep.sc_wrt_min_emp == pytest.approx(c["sc_mu"], rel=1e-6)
    assert rep.sc_wrt_min_emp >= c["sc_mu"] * (1.0 - 1e-12)
    assert c["pl_constant"] <= rep.pl_constant_emp <= 1.10 * c["pl_constant"]
    assert rep.quasar_gamma == pytest.approx(1.7997495302712965, rel=1e-6)
    assert rep.neg_eig_bound == pytest.approx(1.0 - c["smoothness_gap"], rel=1e-6)
    assert rep.n_samples == 4096
    assert rep.sample_region == "log_grid[0.0001, 10]"


def test_diagnose_ill_conditioned_oscillatory():
    # eps sqrt(1+R^2) > 1: spurious minimizers, so no positive quasar constant
    bad = get_objective("oscillatory1d{eps=0.5,R=2}")
    rep = diagnose(bad, LOG_REGION)
    assert rep.quasar_gamma is None
    assert rep.pl_constant_emp <= 1e-4
    assert rep.neg_eig_bound < -1.0


def test_diagnose_validation():
    osc = get_objective("oscillatory1d{eps=0.05,R=2}")
    with pytest.raises(ValueError):
        diagnose(osc, LOG_REGION, n_samples=999)
    with pytest.raises(ValueError):
        diagnose(osc, RegionSpec("box", [-1.0, -1.0], [1.0, 1.0]))  # dim mismatch
    circle = get_objective("sqdist-circle{r=1,mu=1}")
    with pytest.raises(ValueError, match="projection is valid"):
        # the box reaches past the far side of the tube (|x| >= 2)
        diagnose(circle, RegionSpec("box", [1.5, -0.1], [2.5, 0.1]))


def test_curvature_range_quadratic():
    quad = get_objective("quad{eigs=0.01,1}")
    box = RegionSpec("box", [-2.0, -2.0], [2.0, 2.0])
    lo, hi = curvature_range(quad, box)
    # directional curvature of a diagonal quadratic spans the eigenvalue range
    assert lo == pytest.approx(0.01, rel=1e-3)
    assert hi == pytest.approx(1.0, rel=1e-3)
    assert 0.01 <= lo + 1e-9 and hi <= 1.0 + 1e-9


# ---------------------------------------------------------------------------
# line probe
# ---------------------------------------------------------------------------


def test_line_probe_second_difference_converges_quadratically():
    osc = get_objective("oscillatory1d{eps=0.2,R=2}")
    exact = float(oscillatory_second_derivative(0.2, 2.0, np.array([1.5]))[0])
    errs = []
    for h in (0.02, 0.01, 0.005):
        probe = line_probe(osc, [1.0], [1.0], [0.5], h=h)
        errs.append(abs(float(probe.second_diff[0]) - exact))
    assert errs[0] / errs[1] >= 3.0
    assert errs[1] / errs[2] >= 3.0


def test_line_probe_mu_estimator_on_quadratic():
    quad = get_objective("quad{eigs=1}")
    t = np.linspace(-2.0, 2.0, 81)
    probe = line_probe(quad, [0.0], [1.0], t, h=0.01)
    # 2 (phi' t - phi + inf) / t^2 recovers the curvature exactly here
    near_zero = np.abs(t) < 0.1
    assert np.all(np.isnan(probe.mu_estimate[near_zero]))
    good = probe.mu_estimate[~near_zero]
    assert np.allclose(good, 1.0, atol=1e-10)
    assert np.allclose(probe.phi, 0.5 * t ** 2, atol=1e-15)


def test_line_probe_validation():
    quad = get_objective("quad{eigs=1}")
    with pytest.raises(ValueError):
        line_probe(quad, [0.0], [1.0], [0.5], h=0.0)
    with pytest.raises(ValueError):
        line_probe(quad, [0.0], [0.0], [0.5])
    with pytest.raises(ValueError):
        line_probe(quad, [0.0, 0.0], [1.0], [0.5])


# ---------------------------------------------------------------------------
# projection monotonicity along curves
# ---------------------------------------------------------------------------


def test_monotonicity_radial_and_tangential():
    proj = get_objective("sqdist-circle{r=1,mu=1}").projection
    t = np.arange(501) * 1e-3
    radial = np.stack([0.6 + 0.5 * t, np.zeros_like(t)], axis=-1)
    rep = check_projection_monotonicity(proj, radial)
    assert rep.passed
    # moving straight at the circle leaves the projection still
    assert abs(rep.min_inner) <= 1e-6
    theta = 2.0 * t
    tangential = 0.8 * np.stack([np.cos(theta), np.sin(theta)], axis=-1)
    rep2 = check_projection_monotonicity(proj, tangential)
    assert rep2.passed
    assert rep2.min_inner > 0.0
    assert rep2.n_points == 501


def test_monotonicity_validation():
    proj = get_objective("sqdist-circle{r=1,mu=1}").projection
    curve = np.stack([np.linspace(0.5, 1.5, 11), np.zeros(11)], axis=-1)
    with pytest.raises(ValueError):
        check_projection_monotonicity(proj, curve, dt=0.01)  # spacing too coarse
    with pytest.raises(ValueError):
        check_projection_monotonicity(proj, curve[:2])
    through_center = np.stack([np.linspace(-0.5, 0.5, 11), np.zeros(11)], axis=-1)
    with pytest.raises(ValueError, match="projection is valid"):
        check_projection_monotonicity(proj, through_center)


def test_tube_curves_deterministic_and_in_band():
    a = list(random_tube_curves(3, seed=1))
    b = list(random_tube_curves(3, seed=1))
    assert len(a) == 3
    for ca, cb in zip(a, b):
        assert np.array_equal(ca, cb)
        assert ca.shape == (1001, 2)
        r = np.linalg.norm(ca, axis=-1)
        assert np.all((r >= 0.7 - 1e-12) & (r <= 1.3 + 1e-12))
        # closed curve
        assert np.allclose(ca[0], ca[-1], atol=1e-9)
    c = list(random_tube_curves(3, seed=2))
    assert not np.array_equal(a[0], c[0])
    with pytest.raises(ValueError):
        list(random_tube_curves(0))
    with pytest.raises(ValueError):
        list(random_tube_curves(1, band=(1.3, 0.7)))


def test_tube_curves_satisfy_monotonicity():
    proj = get_objective("sqdist-circle{r=1,mu=1}").projection
    for curve in random_tube_curves(3, seed=0):
        assert check_projection_monotonicity(proj, curve).passed


# ---------------------------------------------------------------------------
# mild nonconvexity probe
# ---------------------------------------------------------------------------


def test_negative_curvature_probe():
    quad = get_objective("quad{eigs=0.01,1}")
    box = RegionSpec("box", [-2.0, -2.0], [2.0, 2.0])
    assert probe_negative_curvature(quad, box) == 0.0
    osc = get_objective("oscillatory1d{eps=0.2,R=2}")
    closed = oscillatory_constants(0.2, 2.0)["neg_curvature_eps"]
    emp = probe_negative_curvature(osc, LOG_REGION)
    # secant sampling approaches the true bound from below
    assert emp <= closed * (1.0 + 1e-9)
    assert emp == pytest.approx(closed, rel=1e-2)
    with pytest.raises(ValueError):
        probe_negative_curvature(osc, LOG_REGION, n_samples=10)
    with pytest.raises(ValueError):
        probe_negative_curvature(osc, LOG_REGION, delta_range=(0.1, 0.01))


def test_report_round_trips_through_csv(tmp_path):
    osc = get_objective("oscillatory1d{eps=0.05,R=2}")
    rep = diagnose(osc, LOG_REGION, n_samples=1000)
    path = tmp_path / "geometry.csv"
    rep.to_csv(path)
    header, rows = read_table(path)
    assert header == ["field", "value"]
    table = dict(rows)
    assert float(table["pl_constant_emp"]) == rep.pl_constant_emp
    assert float(table["sc_wrt_min_emp"]) == rep.sc_wrt_min_emp
    assert float(table["quasar_gamma"]) == rep.quasar_gamma
    assert int(table["n_samples"]) == 1000
    assert table["sample_region"] == "log_grid[0.0001, 10]"

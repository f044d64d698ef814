"""Energy certificates: contraction checks, endpoint bounds, noise floors."""

import dataclasses
import math

import numpy as np
import pytest

from momentumlab import (
    NoiseModel,
    StatisticalPowerError,
    agnes_params,
    certify_descent_lemma,
    continuous_headline_ok,
    continuous_lyapunov,
    discrete_lyapunov_agnes,
    discrete_lyapunov_decreasing,
    discrete_lyapunov_nag,
    flow_integration_allowance,
    get_objective,
    heavy_ball_params,
    linear_recursion_bound,
    nag_decreasing_params,
    nag_lyapunov_coefficient,
    nag_params,
    run_discrete,
    run_flow,
)

QUAD1 = get_objective("quad{eigs=1}")
QUAD3 = get_objective("quad{eigs=0,0.01,4}")
QUAD_DEC = get_objective("quad{eigs=0.04,1}")


# ---------------------------------------------------------------------------
# scalar helpers
# ---------------------------------------------------------------------------


def test_velocity_coefficient_frozen():
    # (1 + s)^2 / (1 - s) at s = 0.1
    assert nag_lyapunov_coefficient(1.0, 0.01) == 1.3444444444444446
    assert nag_lyapunov_coefficient(1.0, 1.0) == math.inf
    # tends to one as the step vanishes
    for eta in (1e-2, 1e-4, 1e-6):
        lam = nag_lyapunov_coefficient(1.0, eta)
        assert lam == pytest.approx(1.0, abs=4.0 * math.sqrt(eta))
        assert lam > 1.0


def test_linear_recursion_bound():
    a, b, y0 = 0.9, 0.1, 5.0
    y = y0
    for n in range(200):
        assert y <= linear_recursion_bound(a, b, y0, n) + 1e-12
        assert linear_recursion_bound(a, b, y0, n) == pytest.approx(
            a ** n * y0 + 1.0, rel=1e-12
        )
        y = a * y + b
    with pytest.raises(ValueError):
        linear_recursion_bound(1.0, 0.1, 1.0, 3)
    with pytest.raises(ValueError):
        linear_recursion_bound(-0.2, 0.1, 1.0, 3)


# ---------------------------------------------------------------------------
# deterministic discrete certificate
# ---------------------------------------------------------------------------


def nag_record(horizon=300):
    p = nag_params(mu=0.01, eta=0.25, horizon=horizon)
    return p, run_discrete(QUAD3, NoiseModel.zero(), p, x0=[2.0, -1.5, 0.5])


def test_discrete_certificate_passes():
    _, rec = nag_record()
    trace = discrete_lyapunov_nag(QUAD3, rec)
    assert trace.passed
    assert trace.violations == []
    assert trace.endpoint["ok"]
    assert trace.endpoint["value"] <= trace.endpoint["bound"] * (1.0 + 1e-9) + 1e-300
    # contraction factor 1 - sqrt(mu eta) = 0.95
    assert np.all(trace.contraction_target == 0.95)
    # measured ratios never exceed the target (first entry is undefined)
    r = trace.ratios()
    assert np.isnan(r[0])
    assert np.nanmax(r[1:]) <= 0.95 * (1.0 + 1e-9)


def test_discrete_certificate_rejects_tampered_run():
    _, rec = nag_record(horizon=50)
    f = rec.f.copy()
    f[20] *= 1.5  # break the energy decay at one step
    bad = dataclasses.replace(rec, f=f)
    trace = discrete_lyapunov_nag(QUAD3, bad)
    assert not trace.passed
    assert any(n == 20 for n, _ in trace.violations)


def test_discrete_certificate_input_validation():
    p, rec = nag_record(horizon=20)
    with pytest.raises(ValueError):
        discrete_lyapunov_nag(QUAD3, rec, mu=0.0)
    noisy = run_discrete(QUAD3, NoiseModel.gaussian(0.1, 0.0, seed=1), p, x0=[1.0, 1.0, 1.0])
    with pytest.raises(ValueError):
        discrete_lyapunov_nag(QUAD3, noisy)
    circle = get_objective("sqdist-circle{r=1,mu=1}")
    p2 = nag_params(mu=1.0, eta=0.5, horizon=10)
    rec2 = run_discrete(circle, NoiseModel.zero(), p2, x0=[0.8, 0.9])
    with pytest.raises(ValueError, match="affine"):
        discrete_lyapunov_nag(circle, rec2)


def test_critical_step_is_certifiable_when_tangential_velocity_vanishes():
    # mu*eta = 1 makes the velocity coefficient infinite; from rest the
    # tangential velocity stays zero on the unit quadratic, so the energy
    # is still finite and contracts in one step
    p = nag_params(mu=1.0, eta=1.0, horizon=5)
    rec = run_discrete(QUAD1, NoiseModel.zero(), p, x0=[3.0])
    trace = discrete_lyapunov_nag(QUAD1, rec)
    assert np.all(np.isfinite(trace.values))
    assert trace.passed


# ---------------------------------------------------------------------------
# continuous certificate
# ---------------------------------------------------------------------------


def test_continuous_certificate_passes():
    p = heavy_ball_params(mu=1.0, total_time=5.0, dt=1e-3)
    rec = run_flow(QUAD1, p, x0=[2.0], record_every=10)
    tol = flow_integration_allowance(QUAD1, p, [2.0])
    assert 0.0 < tol < 1e-8
    trace = continuous_lyapunov(QUAD1, rec, tol=tol)
    assert trace.passed
    assert continuous_headline_ok(QUAD1, rec)


def test_continuous_certificate_validation():
    p = heavy_ball_params(mu=1.0, total_time=1.0, dt=1e-3)
    rec = run_flow(QUAD1, p, x0=[2.0], record_every=10)
    with pytest.raises(ValueError):
        continuous_lyapunov(QUAD1, rec, mu=0.0)
    # a run that starts outside the region where the projection is single
    # valued must be refused until `start` skips the bad prefix
    eq = get_objective("ellipse-quartic")
    pf = heavy_ball_params(mu=0.25, total_time=0.5, dt=1e-3)
    rec_eq = run_flow(eq, pf, x0=[1.5, 1.5], record_every=10)
    with pytest.raises(ValueError, match="single valued"):
        continuous_lyapunov(eq, rec_eq, mu=0.25)


# ---------------------------------------------------------------------------
# stochastic ensemble certificates
# ---------------------------------------------------------------------------


def test_agnes_certificate_deterministic_ensemble():
    p = agnes_params(mu=1.0, eta=0.5, sigma_m=0.0, L=1.0, horizon=40)
    recs = [run_discrete(QUAD1, NoiseModel.zero(), p, x0=[2.0]) for _ in range(3)]
    trace = discrete_lyapunov_agnes(QUAD1, recs)
    assert trace.passed
    assert trace.noise_floor == 0.0
    assert np.all(trace.stderr == 0.0)


def test_agnes_certificate_needs_ensemble_power():
    p = agnes_params(mu=1.0, eta=0.5, sigma_m=1.0, L=1.0, horizon=10)
    recs = [
        run_discrete(QUAD1, NoiseModel.gaussian(0.3, 1.0, seed=s), p, x0=[2.0])
        for s in range(10)
    ]
    with pytest.raises(StatisticalPowerError):
        discrete_lyapunov_agnes(QUAD1, recs)


def test_agnes_certificate_small_ensemble():
    # relaxed min_ensemble for a fast structural check; draws are keyed, so
    # the outcome is deterministic
    p = agnes_params(mu=1.0, eta=0.5, sigma_m=1.0, L=1.0, horizon=40)
    recs = [
        run_discrete(QUAD1, NoiseModel.gaussian(0.3, 1.0, seed=s), p, x0=[2.0])
        for s in range(8)
    ]
    trace = discrete_lyapunov_agnes(QUAD1, recs, min_ensemble=8, check_at=[20, 40])
    assert trace.passed
    # additive floor sigma_a^2 sqrt(eta/c) / sqrt(mu)
    assert trace.noise_floor == pytest.approx(0.09 * math.sqrt(0.25), rel=1e-12)
    assert [c["n"] for c in trace.endpoint["checks"]] == [20, 40]
    assert all(c["stderr"] > 0.0 for c in trace.endpoint["checks"])
    # per-step allowance (L eta^2 + eta/c) sigma_a^2 / 2
    per = 0.5 * (1.0 * 0.25 + 0.25) * 0.09
    assert np.all(trace.per_step_noise == pytest.approx(per, rel=1e-12))


def test_decreasing_certificate_deterministic():
    p = nag_decreasing_params(mu=0.04, L=1.0, horizon=120)
    rec = run_discrete(QUAD_DEC, NoiseModel.zero(), p, x0=[2.0, -1.0])
    trace = discrete_lyapunov_decreasing(QUAD_DEC, [rec], check_at=[10, 60, 120])
    assert trace.passed
    assert [c["n"] for c in trace.endpoint["checks"]] == [10, 60, 120]
    # targets follow the schedule, not a constant factor
    assert len(set(np.round(trace.contraction_target, 12))) > 1
    assert np.all(np.diff(trace.contraction_target) > 0.0)  # 1 - sqrt(mu eta_n) grows


def test_decreasing_certificate_needs_ensemble_power():
    p = nag_decreasing_params(mu=0.04, L=1.0, horizon=10)
    recs = [
        run_discrete(QUAD_DEC, NoiseModel.gaussian(0.2, 0.0, seed=s), p, x0=[2.0, -1.0])
        for s in range(5)
    ]
    with pytest.raises(StatisticalPowerError):
        discrete_lyapunov_decreasing(QUAD_DEC, recs)


# ---------------------------------------------------------------------------
# descent lemma
# ---------------------------------------------------------------------------


def test_descent_lemma_fuzz():
    rng = np.random.default_rng(0)
    for _ in range(50):
        x = rng.normal(size=3)
        g = rng.normal(size=3)
        eta = float(rng.uniform(0.01, 0.5))
        assert certify_descent_lemma(QUAD3, x, g, eta)


def test_descent_lemma_exact_equality():
    # on the unit quadratic the lemma holds with equality for every direction
    x = np.array([1.0])
    g = np.array([0.7])
    assert certify_descent_lemma(QUAD1, x, g, 0.3)


def test_descent_lemma_detects_understated_smoothness():
    weak = dataclasses.replace(QUAD3, smoothness_L=0.5)
    x = np.array([0.0, 0.0, 1.0])
    g = QUAD3.gradient(x)
    assert not certify_descent_lemma(weak, x, g, 0.1)
    none = dataclasses.replace(QUAD3, smoothness_L=None)
    with pytest.raises(ValueError):
        certify_descent_lemma(none, x, g, 0.1)

"""Certify convergence-rate guarantees along recorded trajectories.

Each certifier evaluates an energy (Lyapunov) sequence along a trajectory or
an ensemble of trajectories and checks the per-step contraction plus the
endpoint bound of the matching guarantee.  Deterministic checks use a
relative slack of 1e-12; stochastic checks compare ensemble means within a
z-score budget (4 standard errors by default).

For a flow the energy is
    f(x) - f(pi(x)) + |v + sqrt(mu) (x - pi(x))|^2 / 2,
and for the discrete schemes, with Pi the projection onto the tangent
(kernel) directions of an affine minimizer manifold and b the derived
extrapolation constant (b = 1 for plain accelerated gradient),
    f(x_n) - inf f
      + |b Pi_perp v_n + sqrt(mu) (x'_n - pi(x'_n))|^2 / 2
      + lambda |Pi v_n|^2 / 2.
"""

from __future__ import annotations

import dataclasses
import math
from typing import Iterable, Optional, Sequence

import numpy as np

from .objectives import AFFINE, ObjectiveSpec
from .noise import NoiseModel
from .optimizers import OptimizerParams, TrajectoryRecord, decreasing_schedule, run_flow

__all__ = [
    "StatisticalPowerError",
    "LyapunovTrace",
    "nag_lyapunov_coefficient",
    "linear_recursion_bound",
    "continuous_lyapunov",
    "continuous_headline_ok",
    "flow_integration_allowance",
    "discrete_lyapunov_nag",
    "discrete_lyapunov_agnes",
    "discrete_lyapunov_decreasing",
    "certify_descent_lemma",
]

REL_SLACK = 1e-12
_TINY = 1e-300


class StatisticalPowerError(ValueError):
    """The ensemble is too small to resolve a stochastic bound."""


@dataclasses.dataclass
class LyapunovTrace:
    """Energy values along a run plus the result of the contraction check.

    ``values[n]`` is the energy at step n (ensemble mean for stochastic
    certificates), ``contraction_target[n]`` the factor allowed on the step
    n -> n+1, ``per_step_noise[n]`` the additive noise allowance of that
    step, and ``violations`` the list of (index, measured ratio) pairs where
    the check failed.  ``endpoint`` carries the endpoint-bound results.
    """

    values: np.ndarray
    contraction_target: np.ndarray
    noise_floor: float
    violations: list
    passed: bool
    per_step_noise: np.ndarray = None
    stderr: Optional[np.ndarray] = None
    endpoint: dict = dataclasses.field(default_factory=dict)

    def __post_init__(self):
        if self.per_step_noise is None:
            self.per_step_noise = np.zeros(len(self.contraction_target))

    def ratios(self) -> np.ndarray:
        out = np.full(len(self.values), np.nan)
        prev = self.values[:-1]
        with np.errstate(divide="ignore", invalid="ignore"):
            out[1:] = np.where(prev > 0.0, self.values[1:] / prev, np.nan)
        return out

    def to_csv(self, path) -> None:
        from .csvio import write_lyapunov_csv

        write_lyapunov_csv(path, self)


def nag_lyapunov_coefficient(mu: float, eta: float) -> float:
    """Velocity-term coefficient (1 + sqrt(mu eta))^2 / (1 - sqrt(mu eta)).

    Tends to 1 as the step vanishes; infinite at the critical step
    mu*eta = 1, where the tangential velocity must vanish identically.
    """
    s = math.sqrt(mu * eta)
    if s >= 1.0:
        return math.inf
    return (1.0 + s) ** 2 / (1.0 - s)


def linear_recursion_bound(a: float, b: float, y0: float, n: int) -> float:
    """Bound y_n <= a^n y0 + b/(1-a) for y_{k+1} <= a y_k + b, 0 <= a < 1."""
    if not 0.0 <= a < 1.0:
        raise ValueError(f"need 0 <= a < 1, got {a}")
    return a ** n * y0 + b / (1.0 - a)


# ---------------------------------------------------------------------------
# shared evaluation helpers
# ---------------------------------------------------------------------------


def _require_projection(objective: ObjectiveSpec):
    if objective.projection is None:
        raise ValueError("objective carries no projection onto its minimizers")
    if objective.inf_value is None:
        raise ValueError("objective carries no infimum value")
    return objective.projection


def _require_affine(objective: ObjectiveSpec):
    proj = _require_projection(objective)
    if proj.kind != AFFINE:
        raise ValueError(
            "discrete certification requires an affine minimizer manifold "
            f"(projection kind {proj.kind!r})"
        )
    return proj.pi_matrix, proj.x_star


def _quadratic_coefficient(mu: float, alpha: float, b: float, gamma_lyap: float) -> float:
    """Tangential-velocity coefficient lambda of the discrete energy."""
    root = math.sqrt(mu * alpha)
    if b - root <= 0.0:
        return math.inf
    return (b + root) ** 2 / (b - root) * (gamma_lyap / math.sqrt(alpha))


def _discrete_energy(
    objective: ObjectiveSpec, record: TrajectoryRecord, mu: float, b: float, lam: float
) -> np.ndarray:
    """Per-step discrete energy values of one trajectory."""
    pi_m, x_star = _require_affine(objective)
    v, xp = record.v, record.xp
    pv = v @ pi_m.T
    pv_sq = np.sum(pv * pv, axis=-1)
    perp_v = v - pv
    offset = xp - (xp @ pi_m.T + x_star)
    w = b * perp_v + math.sqrt(mu) * offset
    quad = 0.5 * np.sum(w * w, axis=-1)
    # lambda can be infinite at the critical step; then the tangential
    # velocity must vanish and the term is zero by convention
    if math.isinf(lam):
        tang = np.where(pv_sq == 0.0, 0.0, np.inf)
    else:
        tang = 0.5 * lam * pv_sq
    return (record.f - objective.inf_value) + quad + tang


def _deterministic_violations(
    values: np.ndarray,
    targets: np.ndarray,
    allowance,
    rel_slack: float,
):
    allowance = np.broadcast_to(np.asarray(allowance, dtype=float), targets.shape)
    violations = []
    for n in range(len(targets)):
        lhs = values[n + 1]
        rhs = targets[n] * values[n] * (1.0 + rel_slack) + allowance[n] + _TINY
        if lhs > rhs:
            ratio = lhs / values[n] if values[n] > 0.0 else math.inf
            violations.append((n + 1, float(ratio)))
    return violations


# ---------------------------------------------------------------------------
# continuous-time certification
# ---------------------------------------------------------------------------


def continuous_lyapunov(
    objective: ObjectiveSpec,
    record: TrajectoryRecord,
    mu: Optional[float] = None,
    tol: float = 0.0,
    rel_slack: float = 1e-9,
    start: int = 0,
) -> LyapunovTrace:
    """Certify exponential energy decay along a damped-flow trajectory.

    Checks L(t_{k+1}) <= exp(-sqrt(mu) dt) L(t_k) up to ``tol`` (an absolute
    integration allowance, see flow_integration_allowance) plus relative
    slack.  ``start`` skips initial samples, e.g. before the trajectory has
    entered the region where the projection is valid.
    """
    proj = _require_projection(objective)
    if mu is None:
        mu = record.params.mu
    if mu <= 0.0:
        raise ValueError(f"mu must be positive, got {mu}")
    x = record.x[start:]
    v = record.v[start:]
    t = record.times[start:]
    if not np.all(proj.valid(x)):
        raise ValueError(
            "trajectory leaves the region where the projection is single valued; "
            "certify a later segment (start index)"
        )
    z = proj(x)
    w = v + math.sqrt(mu) * (x - z)
    values = (record.f[start:] - objective.value(z)) + 0.5 * np.sum(w * w, axis=-1)
    targets = np.exp(-math.sqrt(mu) * np.diff(t))
    violations = _deterministic_violations(values, targets, tol, rel_slack)
    return LyapunovTrace(
        values=values,
        contraction_target=targets,
        noise_floor=0.0,
        violations=violations,
        passed=not violations,
    )


def continuous_headline_ok(
    objective: ObjectiveSpec,
    record: TrajectoryRecord,
    mu: Optional[float] = None,
    slack: float = 1e-8,
) -> bool:
    """Check f(x_t) - inf f <= exp(-sqrt(mu) t) (f(x_0) - inf f + mu dist^2/2)."""
    proj = _require_projection(objective)
    if mu is None:
        mu = record.params.mu
    x0 = record.x[0]
    dist_sq = float(np.sum((x0 - proj(x0)) ** 2))
    l0 = (record.f[0] - objective.inf_value) + 0.5 * mu * dist_sq
    bound = np.exp(-math.sqrt(mu) * record.times) * l0 + slack
    return bool(np.all(record.f - objective.inf_value <= bound))


def flow_integration_allowance(
    objective: ObjectiveSpec,
    params: OptimizerParams,
    x0,
    v0=None,
    mu: Optional[float] = None,
    record: Optional[TrajectoryRecord] = None,
) -> float:
    """Absolute energy tolerance from a Richardson comparison at dt and 2 dt.

    ``record`` lets a caller reuse an already-integrated dt run; it must be
    sampled at every step, else a fresh run replaces it.
    """
    proj = _require_projection(objective)
    if mu is None:
        mu = params.mu
    if (
        record is not None
        and record.steps.size >= 3
        and bool(np.all(np.diff(record.steps) == 1))
    ):
        rec1 = record
    else:
        rec1 = run_flow(objective, params, x0, v0=v0)
    params_coarse = dataclasses.replace(params, dt=params.dt * 2.0)
    rec2 = run_flow(objective, params_coarse, x0, v0=v0)
    n = min((len(rec1.times) + 1) // 2, len(rec2.times))

    def energy(rec, stride):
        x, v = rec.x[::stride][:n], rec.v[::stride][:n]
        z = proj(x)
        w = v + math.sqrt(mu) * (x - z)
        return (rec.f[::stride][:n] - objective.value(z)) + 0.5 * np.sum(w * w, axis=-1)

    # doubling dt grows the RK4 sample error ~16x, so the gap on the shared
    # grid is ~15x the dt error; a quarter of it still overstates the dt
    # error about fourfold
    gap = float(np.max(np.abs(energy(rec1, 2) - energy(rec2, 1))))
    return 0.25 * gap + 1e-14


# ---------------------------------------------------------------------------
# discrete deterministic certification
# ---------------------------------------------------------------------------


def discrete_lyapunov_nag(
    objective: ObjectiveSpec,
    record: TrajectoryRecord,
    mu: Optional[float] = None,
    rel_slack: float = REL_SLACK,
) -> LyapunovTrace:
    """Certify per-step contraction of the accelerated-gradient energy.

    Requires an affine minimizer manifold and a noise-free trajectory.
    Checks L_{n+1} <= (1 - sqrt(mu eta)) L_n at relative slack, and the
    endpoint bound f(x_n) - inf f <= (1 - sqrt(mu eta))^n L_0.
    """
    params = record.params
    if record.noise is not None and not record.noise.deterministic:
        raise ValueError("deterministic certification needs a noise-free trajectory")
    if mu is None:
        mu = params.mu
    eta = params.eta
    if mu <= 0.0 or eta <= 0.0:
        raise ValueError(f"mu and eta must be positive, got mu={mu}, eta={eta}")
    s = math.sqrt(mu * eta)
    lam = nag_lyapunov_coefficient(mu, eta)
    values = _discrete_energy(objective, record, mu, 1.0, lam)
    target = 1.0 - s
    targets = np.full(len(values) - 1, target)
    violations = _deterministic_violations(values, targets, 0.0, rel_slack)

    gaps = record.f - objective.inf_value
    powers = target ** np.arange(len(values))
    endpoint_ok = bool(np.all(gaps <= powers * values[0] * (1.0 + 1e-9) + _TINY))
    return LyapunovTrace(
        values=values,
        contraction_target=targets,
        noise_floor=0.0,
        violations=violations,
        passed=(not violations) and endpoint_ok,
        endpoint={
            "ok": endpoint_ok,
            "bound": float(powers[-1] * values[0]),
            "value": float(gaps[-1]),
        },
    )


# ---------------------------------------------------------------------------
# stochastic ensemble certification
# ---------------------------------------------------------------------------


def _collect_ensemble(
    objective: ObjectiveSpec,
    records: Iterable[TrajectoryRecord],
    energy_fn,
):
    ell_rows, f_rows = [], []
    for rec in records:
        ell_rows.append(energy_fn(rec))
        f_rows.append(rec.f - objective.inf_value)
    if not ell_rows:
        raise ValueError("empty ensemble")
    return np.array(ell_rows), np.array(f_rows)


def _ensemble_checks(
    ell: np.ndarray,
    f_gap: np.ndarray,
    targets: np.ndarray,
    per_step_noise: np.ndarray,
    endpoint_bounds: dict,
    z_max: float,
    deterministic: bool,
):
    n_seeds = ell.shape[0]
    values = ell.mean(axis=0)
    scale = max(1.0, float(values[0]))
    abs_slack = REL_SLACK * scale

    diffs = ell[:, 1:] - targets[None, :] * ell[:, :-1]
    mean_d = diffs.mean(axis=0)
    if deterministic or n_seeds == 1:
        se = np.zeros_like(mean_d)
    else:
        se = diffs.std(axis=0, ddof=1) / math.sqrt(n_seeds)
    violations = []
    for n in range(len(targets)):
        if mean_d[n] > per_step_noise[n] + z_max * se[n] + abs_slack:
            prev = values[n]
            ratio = values[n + 1] / prev if prev > 0.0 else math.inf
            violations.append((n + 1, float(ratio)))

    endpoint = {"ok": True, "checks": []}
    for n, bound in sorted(endpoint_bounds.items()):
        fn = f_gap[:, n]
        se_f = (
            0.0
            if deterministic or n_seeds == 1
            else float(fn.std(ddof=1)) / math.sqrt(n_seeds)
        )
        val = float(fn.mean())
        ok = val <= bound + z_max * se_f + abs_slack
        endpoint["checks"].append(
            {"n": int(n), "mean_f": val, "bound": float(bound), "stderr": se_f, "ok": ok}
        )
        endpoint["ok"] = endpoint["ok"] and ok
    return values, se, violations, endpoint


def discrete_lyapunov_agnes(
    objective: ObjectiveSpec,
    records,
    params: Optional[OptimizerParams] = None,
    noise: Optional[NoiseModel] = None,
    check_at: Optional[Sequence[int]] = None,
    z_max: float = 4.0,
    min_ensemble: int = 1000,
) -> LyapunovTrace:
    """Certify the expectation contraction of the noise-adapted scheme.

    ``records`` is an ensemble of trajectories run with identical parameters
    and distinct seeds.  Checks, within ``z_max`` standard errors,
        E L_{n+1} <= (1 - sqrt(mu eta / (1+sigma_m^2))) E L_n + per-step noise
    and the endpoint bound at each index in ``check_at`` (default: the final
    step), whose additive noise floor is sigma_a^2 sqrt(eta/(1+sigma_m^2)) /
    sqrt(mu).  Stochastic runs need at least ``min_ensemble`` seeds; a
    noise-free ensemble is certified exactly.  Covers plain accelerated
    gradient as the sigma_m = 0 special case.
    """
    records = list(records)
    if params is None:
        params = records[0].params
    if noise is None:
        noise = records[0].noise or NoiseModel.zero()
    deterministic = noise.deterministic
    if not deterministic and len(records) < min_ensemble:
        raise StatisticalPowerError(
            f"need at least {min_ensemble} seeds to resolve the stochastic bound, "
            f"got {len(records)}"
        )

    mu, eta = params.mu, params.eta
    alpha = params.alpha_agnes
    b = params.agnes_b
    gamma_lyap = params.gamma_lyap
    c = 1.0 + params.sigma_m ** 2
    lam = _quadratic_coefficient(mu, alpha, b, gamma_lyap)
    target = 1.0 - math.sqrt(mu) * gamma_lyap  # = 1 - sqrt(mu eta / c)

    sigma_a = noise.sigma_a
    if sigma_a > 0.0:
        L = params.L if params.L is not None else objective.smoothness_L
        if L is None:
            raise ValueError("additive noise certification needs the smoothness bound L")
        per_step = 0.5 * (L * eta * eta + eta / c) * sigma_a ** 2
        floor = sigma_a ** 2 * math.sqrt(eta / c) / math.sqrt(mu)
    else:
        per_step = 0.0
        floor = 0.0

    ell, f_gap = _collect_ensemble(
        objective, records, lambda rec: _discrete_energy(objective, rec, mu, b, lam)
    )
    n_steps = ell.shape[1] - 1
    targets = np.full(n_steps, target)
    per_step_arr = np.full(n_steps, per_step)
    if check_at is None:
        check_at = [n_steps]
    l0 = float(ell.mean(axis=0)[0])
    bounds = {int(n): target ** int(n) * l0 + floor for n in check_at}

    values, se, violations, endpoint = _ensemble_checks(
        ell, f_gap, targets, per_step_arr, bounds, z_max, deterministic
    )
    return LyapunovTrace(
        values=values,
        contraction_target=targets,
        noise_floor=floor,
        violations=violations,
        passed=(not violations) and endpoint["ok"],
        per_step_noise=per_step_arr,
        stderr=se,
        endpoint=endpoint,
    )


def discrete_lyapunov_decreasing(
    objective: ObjectiveSpec,
    records,
    params: Optional[OptimizerParams] = None,
    noise: Optional[NoiseModel] = None,
    check_at: Optional[Sequence[int]] = None,
    z_max: float = 4.0,
    min_ensemble: int = 1000,
) -> LyapunovTrace:
    """Certify the decreasing-step schedule: per-step contraction and the
    O(log n / n) endpoint bound.

    Per step n the energy uses the time-varying coefficient
    lambda_n = (1 + sqrt(mu eta_n))^2 / (1 - sqrt(mu eta_n)) and must satisfy
        E L_{n+1} <= (1 - sqrt(mu eta_n)) E L_n + sigma_a^2 eta_n
    within ``z_max`` standard errors; the endpoint bound at index n is
        [sqrt(L/mu) E(f(x_0) - inf f + |x_0 - pi(x_0)|^2 / 2)
         + (sigma_a^2/mu) log(1 + n sqrt(mu/L))] / (n + sqrt(L/mu)).
    """
    records = list(records)
    if params is None:
        params = records[0].params
    if noise is None:
        noise = records[0].noise or NoiseModel.zero()
    deterministic = noise.deterministic
    if not deterministic and len(records) < min_ensemble:
        raise StatisticalPowerError(
            f"need at least {min_ensemble} seeds to resolve the stochastic bound, "
            f"got {len(records)}"
        )
    mu, L_sm, form = params.mu, params.L, params.schedule_form
    if L_sm is None:
        raise ValueError("decreasing certification needs the smoothness bound L")
    n_steps = len(records[0].f) - 1
    etas = np.array(
        [decreasing_schedule(mu, L_sm, n, form)[0] for n in range(n_steps + 1)]
    )
    s = np.sqrt(mu * etas)
    lams = (1.0 + s) ** 2 / (1.0 - s)

    pi_m, x_star = _require_affine(objective)
    sqrt_mu = math.sqrt(mu)

    def energy(rec):
        v, xp = rec.v, rec.xp
        pv = v @ pi_m.T
        perp_v = v - pv
        offset = xp - (xp @ pi_m.T + x_star)
        w = perp_v + sqrt_mu * offset
        return (
            (rec.f - objective.inf_value)
            + 0.5 * np.sum(w * w, axis=-1)
            + 0.5 * lams * np.sum(pv * pv, axis=-1)
        )

    ell, f_gap = _collect_ensemble(objective, records, energy)
    targets = 1.0 - s[:-1]
    per_step_arr = noise.sigma_a ** 2 * etas[:-1]

    if check_at is None:
        check_at = [n_steps]
    x0 = records[0].x[0]
    z0 = x0 - (x0 @ pi_m.T + x_star)
    l0_thm = float(
        np.mean([rec.f[0] - objective.inf_value for rec in records])
        + 0.5 * float(z0 @ z0)
    )
    n0 = math.sqrt(L_sm / mu)
    bounds = {}
    for n in check_at:
        n = int(n)
        bounds[n] = (
            n0 * l0_thm + (noise.sigma_a ** 2 / mu) * math.log(1.0 + n / n0)
        ) / (n + n0)

    values, se, violations, endpoint = _ensemble_checks(
        ell, f_gap, targets, per_step_arr, bounds, z_max, deterministic
    )
    return LyapunovTrace(
        values=values,
        contraction_target=targets,
        noise_floor=0.0,
        violations=violations,
        passed=(not violations) and endpoint["ok"],
        per_step_noise=per_step_arr,
        stderr=se,
        endpoint=endpoint,
    )


# ---------------------------------------------------------------------------
# smoothness (descent) inequality
# ---------------------------------------------------------------------------


def certify_descent_lemma(
    objective: ObjectiveSpec,
    x,
    g,
    eta: float,
    rel_slack: float = REL_SLACK,
) -> bool:
    """Check f(x - eta g) <= f(x) - eta <grad f(x), g> + L eta^2 |g|^2 / 2.

    Holds for any direction g when f is L-smooth along the segment; the
    objective must declare ``smoothness_L``.
    """
    L = objective.smoothness_L
    if L is None:
        raise ValueError("objective declares no smoothness bound L")
    x = np.asarray(x, dtype=float)
    g = np.asarray(g, dtype=float)
    lhs = objective.f(x - eta * g)
    rhs = (
        objective.f(x)
        - eta * float(objective.gradient(x) @ g)
        + 0.5 * L * eta * eta * float(g @ g)
    )
    return lhs <= rhs + rel_slack * (1.0 + abs(rhs))

"""Momentum optimizers: accelerated gradient steps and the damped-flow limit.

Discrete schemes share one update template

    x'_n    = x_n + sqrt(alpha) v_n
    x_{n+1} = x'_n - eta g_n
    v_{n+1} = rho (v_n - sqrt(alpha) g_n)

with g_n the (possibly stochastic) gradient at x'_n.  Plain accelerated
gradient uses alpha = eta; the noise-adapted variant shortens the
extrapolation step (alpha < eta) as multiplicative noise grows; the
decreasing-step variant re-derives (eta_n, rho_n) every iteration.  The
continuous-time limit is the damped second-order flow
x'' + gamma x' = -grad f(x), integrated with classical fixed-step RK4.
"""

from __future__ import annotations

import dataclasses
import math
from typing import Iterable, Optional

import numpy as np

from .objectives import ObjectiveSpec
from .noise import ZERO, NoiseModel, KeyedNormals, estimate_gradient

__all__ = [
    "GD",
    "NAG",
    "NAG_DECREASING",
    "AGNES",
    "HEAVY_BALL_FLOW",
    "SCHEMES",
    "DivergenceError",
    "OptimizerParams",
    "TrajectoryRecord",
    "gd_params",
    "nag_params",
    "agnes_params",
    "decreasing_schedule",
    "nag_decreasing_params",
    "heavy_ball_params",
    "run_discrete",
    "run_flow",
]

GD = "GD"
NAG = "NAG"
NAG_DECREASING = "NAGDecreasing"
AGNES = "AGNES"
HEAVY_BALL_FLOW = "HeavyBallFlow"
SCHEMES = (GD, NAG, NAG_DECREASING, AGNES, HEAVY_BALL_FLOW)

# runs abort once f exceeds 1e6 * (f(x0) + 1)
DIVERGENCE_FACTOR = 1e6


class DivergenceError(RuntimeError):
    """Raised when an iterate's value blows past the divergence guard."""


@dataclasses.dataclass(frozen=True)
class OptimizerParams:
    """Parameters of a single optimizer configuration.

    ``horizon`` is the number of steps for discrete schemes and the final
    time for the flow.  For the noise-adapted scheme ``alpha_agnes`` is the
    extrapolation step and ``agnes_b``/``gamma_lyap`` are the derived
    constants consumed by the certification module.  ``n0`` is the offset of
    the decreasing step schedule.
    """

    scheme: str
    eta: float = 0.0
    rho: float = 0.0
    alpha_agnes: float = 0.0
    gamma: float = 0.0
    mu: float = 0.0
    L: Optional[float] = None
    sigma_m: float = 0.0
    n0: float = 0.0
    dt: float = 1e-3
    horizon: float = 100
    schedule_form: str = "appendix"
    agnes_b: float = 1.0
    gamma_lyap: float = 0.0

    def steps(self) -> int:
        n = int(round(self.horizon))
        if n < 1:
            raise ValueError(f"horizon must be at least one step, got {self.horizon}")
        return n


def gd_params(eta: float, horizon: int = 100) -> OptimizerParams:
    if eta <= 0.0:
        raise ValueError(f"eta must be positive, got {eta}")
    return OptimizerParams(scheme=GD, eta=eta, horizon=horizon)


def nag_params(mu: float, eta: float, horizon: int = 100) -> OptimizerParams:
    """Accelerated gradient with the strongly-convex momentum factor.

    rho = (1 - sqrt(mu eta)) / (1 + sqrt(mu eta)); requires 0 <= mu*eta <= 1.
    mu = 0 is the undamped limit rho = 1: the scheme still runs but carries
    no contraction guarantee, so the certifiers reject it.
    """
    if mu < 0.0 or eta <= 0.0:
        raise ValueError(f"need mu >= 0 and eta > 0, got mu={mu}, eta={eta}")
    s = math.sqrt(mu * eta)
    if s > 1.0:
        raise ValueError(f"need mu*eta <= 1, got mu*eta={mu * eta}")
    rho = (1.0 - s) / (1.0 + s)
    return OptimizerParams(
        scheme=NAG,
        eta=eta,
        rho=rho,
        alpha_agnes=eta,
        gamma=2.0 * math.sqrt(mu),
        mu=mu,
        horizon=horizon,
        agnes_b=1.0,
        gamma_lyap=math.sqrt(eta),
    )


def agnes_params(
    mu: float,
    eta: float,
    sigma_m: float,
    L: Optional[float] = None,
    horizon: int = 100,
) -> OptimizerParams:
    """Noise-adapted accelerated gradient for multiplicative noise level sigma_m.

    With c = 1 + sigma_m^2:
        rho   = (1 - sqrt(mu eta / c)) / (1 + sqrt(mu eta / c))
        alpha = eta (1 - sqrt(mu c eta)) / (1 - sqrt(mu c eta) + sigma_m^2)
        b     = sqrt(c alpha / eta)
        gamma_lyap = sqrt(mu) (eta - alpha) + b sqrt(alpha)  ( = sqrt(alpha)/b )
    Requires 0 < mu c eta <= 1, and eta <= 1/(L c) when L is known.
    At sigma_m = 0 this reduces exactly to plain accelerated gradient.
    """
    if mu <= 0.0 or eta <= 0.0:
        raise ValueError(f"mu and eta must be positive, got mu={mu}, eta={eta}")
    if sigma_m < 0.0:
        raise ValueError(f"sigma_m must be nonnegative, got {sigma_m}")
    c = 1.0 + sigma_m * sigma_m
    if mu * c * eta > 1.0 + 1e-15:
        raise ValueError(f"need mu*(1+sigma_m^2)*eta <= 1, got {mu * c * eta}")
    if L is not None and eta > 1.0 / (L * c) * (1.0 + 1e-12):
        raise ValueError(
            f"eta={eta} exceeds the stable step 1/(L*(1+sigma_m^2))={1.0 / (L * c)}"
        )
    s = math.sqrt(mu * eta / c)
    rho = (1.0 - s) / (1.0 + s)
    if sigma_m == 0.0:
        alpha = eta
    else:
        root = math.sqrt(mu * c * eta)
        alpha = eta * (1.0 - root) / (1.0 - root + sigma_m * sigma_m)
    b = math.sqrt(c * alpha / eta)
    gamma_lyap = math.sqrt(mu) * (eta - alpha) + b * math.sqrt(alpha)
    return OptimizerParams(
        scheme=AGNES,
        eta=eta,
        rho=rho,
        alpha_agnes=alpha,
        gamma=2.0 * math.sqrt(mu),
        mu=mu,
        L=L,
        sigma_m=sigma_m,
        horizon=horizon,
        agnes_b=b,
        gamma_lyap=gamma_lyap,
    )


def decreasing_schedule(mu: float, L: float, n: int, form: str = "appendix"):
    """Step size and momentum factor of the decreasing schedule at step n.

    ``appendix`` form: eta_n = 1 / (mu (n + n0 + 1)^2) with n0 = sqrt(L/mu),
    so that sqrt(mu eta_n) = 1/(n + n0 + 1) exactly and eta_0 <= 1/L.
    ``maintext`` form: eta_n = mu / (n + sqrt(L mu) + 1)^2.  The two coincide
    only when mu = 1.  Defined for n >= -1 (the -1 entry seeds the first
    extrapolation step).
    """
    if mu <= 0.0 or L <= 0.0:
        raise ValueError(f"mu and L must be positive, got mu={mu}, L={L}")
    if mu > L:
        raise ValueError(f"need mu <= L, got mu={mu} > L={L}")
    if n < -1:
        raise ValueError(f"schedule index must be >= -1, got {n}")
    if form == "appendix":
        n0 = math.sqrt(L / mu)
        eta = 1.0 / (mu * (n + n0 + 1.0) ** 2)
    elif form == "maintext":
        eta = mu / (n + math.sqrt(L * mu) + 1.0) ** 2
    else:
        raise ValueError(f"unknown schedule form {form!r}")
    s = math.sqrt(mu * eta)
    rho = (1.0 - s) / (1.0 + s)
    return eta, rho


def nag_decreasing_params(
    mu: float, L: float, horizon: int = 100, form: str = "appendix"
) -> OptimizerParams:
    """Accelerated gradient with the decreasing step schedule."""
    eta0, rho0 = decreasing_schedule(mu, L, 0, form)  # validates arguments
    return OptimizerParams(
        scheme=NAG_DECREASING,
        eta=eta0,
        rho=rho0,
        gamma=2.0 * math.sqrt(mu),
        mu=mu,
        L=L,
        n0=math.sqrt(L / mu),
        horizon=horizon,
        schedule_form=form,
    )


def heavy_ball_params(
    mu: float,
    total_time: float,
    dt: Optional[float] = None,
    gamma: Optional[float] = None,
    L: Optional[float] = None,
) -> OptimizerParams:
    """Damped flow x'' + gamma x' = -grad f with critical damping by default."""
    if mu <= 0.0:
        raise ValueError(f"mu must be positive, got {mu}")
    if total_time <= 0.0:
        raise ValueError(f"total_time must be positive, got {total_time}")
    if gamma is None:
        gamma = 2.0 * math.sqrt(mu)
    if dt is None:
        dt = min(1e-3, 0.1 / math.sqrt(L)) if L else 1e-3
    if dt <= 0.0:
        raise ValueError(f"dt must be positive, got {dt}")
    return OptimizerParams(
        scheme=HEAVY_BALL_FLOW,
        gamma=gamma,
        mu=mu,
        L=L,
        dt=dt,
        horizon=total_time,
    )


@dataclasses.dataclass
class TrajectoryRecord:
    """Iterates of a single run.

    Arrays are indexed 0..N (inclusive of the initial state).  For discrete
    schemes ``xp`` holds the extrapolated points x'_n, ``g`` the gradient
    estimates used at each step (the final entries are evaluated but unused),
    and ``times`` the accumulated discretization time sum of sqrt(eta_k) (for
    plain gradient descent: n*eta).  For the flow, ``times`` is integration
    time and ``energy`` the mechanical energy f + |v|^2/2.
    """

    objective_id: str
    params: OptimizerParams
    seed: int
    steps: np.ndarray
    times: np.ndarray
    x: np.ndarray
    v: np.ndarray
    f: np.ndarray
    xp: Optional[np.ndarray] = None
    g: Optional[np.ndarray] = None
    energy: Optional[np.ndarray] = None
    noise: Optional[NoiseModel] = None

    @property
    def dim(self) -> int:
        return self.x.shape[1]

    def final_x(self) -> np.ndarray:
        return self.x[-1]

    def final_f(self) -> float:
        return float(self.f[-1])

    def to_csv(self, path, lyap: Optional[np.ndarray] = None) -> None:
        from .csvio import write_trajectory_csv

        write_trajectory_csv(path, self, lyap=lyap)


def _check_divergence(fval: float, guard: float, n, scheme: str):
    if not np.isfinite(fval) or fval > guard:
        raise DivergenceError(
            f"{scheme} diverged at step {n}: f = {fval:g} exceeded the guard {guard:g}; "
            "reduce the step size"
        )


def run_discrete(
    objective: ObjectiveSpec,
    noise: NoiseModel,
    params: OptimizerParams,
    x0,
    v0=None,
) -> TrajectoryRecord:
    """Run a discrete scheme for ``params.steps()`` iterations.

    The trajectory is a pure function of (objective, noise, params, x0, v0):
    stochastic draws are keyed by (noise.seed, step index).  Raises
    DivergenceError when the objective value explodes.
    """
    if params.scheme not in (GD, NAG, AGNES, NAG_DECREASING):
        raise ValueError(f"run_discrete cannot run scheme {params.scheme!r}")
    x = np.array(x0, dtype=float).reshape(-1)
    if x.size != objective.dim:
        raise ValueError(f"x0 has dimension {x.size}, objective needs {objective.dim}")
    v = (
        np.zeros(objective.dim)
        if v0 is None
        else np.array(v0, dtype=float).reshape(-1)
    )
    if v.size != objective.dim:
        raise ValueError(f"v0 has dimension {v.size}, objective needs {objective.dim}")

    n_steps = params.steps()
    d = objective.dim
    xs = np.empty((n_steps + 1, d))
    vs = np.empty((n_steps + 1, d))
    xps = np.empty((n_steps + 1, d))
    gs = np.empty((n_steps + 1, d))
    fs = np.empty(n_steps + 1)
    times = np.empty(n_steps + 1)

    pool = None if noise.kind == ZERO else KeyedNormals(noise.seed)

    guard = DIVERGENCE_FACTOR * (objective.f(x) + 1.0)
    times[0] = 0.0

    scheme = params.scheme
    if scheme == NAG_DECREASING:
        mu, L, form = params.mu, params.L, params.schedule_form
        if L is None:
            raise ValueError("decreasing schedule needs the smoothness bound L")
        eta_prev, _ = decreasing_schedule(mu, L, -1, form)
    else:
        eta = params.eta
        rho = params.rho
        alpha = params.alpha_agnes if scheme in (NAG, AGNES) else 0.0
        sqrt_alpha = math.sqrt(alpha)

    for n in range(n_steps + 1):
        xs[n] = x
        vs[n] = v
        fs[n] = objective.f(x)
        _check_divergence(fs[n], guard, n, scheme)

        if scheme == GD:
            xp = x
        elif scheme == NAG_DECREASING:
            xp = x + math.sqrt(eta_prev) * v
        else:
            xp = x + sqrt_alpha * v
        g = estimate_gradient(objective, noise, xp, n, _pool=pool)
        xps[n] = xp
        gs[n] = g
        if n == n_steps:
            break

        if scheme == GD:
            x = x - eta * g
            times[n + 1] = times[n] + eta
        elif scheme == NAG_DECREASING:
            eta_n, rho_n = decreasing_schedule(mu, L, n, form)
            se = math.sqrt(eta_n)
            x = xp - eta_n * g
            v = rho_n * (v - se * g)
            eta_prev = eta_n
            times[n + 1] = times[n] + se
        else:
            x = xp - eta * g
            v = rho * (v - sqrt_alpha * g)
            times[n + 1] = times[n] + math.sqrt(eta)

    return TrajectoryRecord(
        objective_id=objective.objective_id,
        params=params,
        seed=noise.seed,
        steps=np.arange(n_steps + 1),
        times=times,
        x=xs,
        v=vs,
        f=fs,
        xp=xps,
        g=gs,
        noise=noise,
    )


def run_flow(
    objective: ObjectiveSpec,
    params: OptimizerParams,
    x0,
    v0=None,
    record_every: int = 1,
) -> TrajectoryRecord:
    """Integrate x'' + gamma x' = -grad f(x) with classical fixed-step RK4.

    Starts at rest unless ``v0`` is given; records every ``record_every``-th
    step (always including the initial and final states).
    """
    if params.scheme != HEAVY_BALL_FLOW:
        raise ValueError(f"run_flow needs the flow scheme, got {params.scheme!r}")
    x = np.array(x0, dtype=float).reshape(-1)
    if x.size != objective.dim:
        raise ValueError(f"x0 has dimension {x.size}, objective needs {objective.dim}")
    v = (
        np.zeros(objective.dim)
        if v0 is None
        else np.array(v0, dtype=float).reshape(-1)
    )
    gamma, dt, total = params.gamma, params.dt, float(params.horizon)
    if total <= 0.0:
        raise ValueError(f"final time must be positive, got {total}")
    n_steps = max(1, int(math.ceil(total / dt - 1e-12)))
    grad = objective.gradient

    def accel(x_, v_):
        return -gamma * v_ - grad(x_)

    sample_idx = list(range(0, n_steps + 1, max(1, int(record_every))))
    if sample_idx[-1] != n_steps:
        sample_idx.append(n_steps)
    xs, vs, ts = [], [], []

    f0 = objective.f(x)
    guard = DIVERGENCE_FACTOR * (f0 + 1.0)
    t = 0.0
    k = 0
    ptr = 0
    while True:
        if ptr < len(sample_idx) and k == sample_idx[ptr]:
            xs.append(x.copy())
            vs.append(v.copy())
            ts.append(t)
            ptr += 1
            _check_divergence(objective.f(x), guard, f"t={t:g}", HEAVY_BALL_FLOW)
        if k == n_steps:
            break
        h = min(dt, total - t)
        k1x = v
        k1v = accel(x, v)
        k2x = v + 0.5 * h * k1v
        k2v = accel(x + 0.5 * h * k1x, k2x)
        k3x = v + 0.5 * h * k2v
        k3v = accel(x + 0.5 * h * k2x, k3x)
        k4x = v + h * k3v
        k4v = accel(x + h * k3x, k4x)
        x = x + (h / 6.0) * (k1x + 2.0 * k2x + 2.0 * k3x + k4x)
        v = v + (h / 6.0) * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)
        t = t + h
        k += 1

    xs = np.array(xs)
    vs = np.array(vs)
    ts = np.array(ts)
    fs = objective.value(xs)
    energy = fs + 0.5 * np.sum(vs * vs, axis=-1)
    return TrajectoryRecord(
        objective_id=objective.objective_id,
        params=params,
        seed=0,
        steps=np.array(sample_idx),
        times=ts,
        x=xs,
        v=vs,
        f=np.asarray(fs, dtype=float),
        energy=energy,
        noise=None,
    )

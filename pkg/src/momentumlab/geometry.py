"""Landscape diagnostics for the geometric condition hierarchy.

Estimates, by sampling, the constants of the conditions the convergence
guarantees rest on: the gradient-domination (PL) constant, first-order
strong convexity measured against the closest minimizer, quasar convexity,
and the most negative directional curvature.  Also provides the 1-d line
probe used to inspect loss landscapes through finite differences, and a
finite-difference check that projections onto the minimizer manifold move
along the curve, never against it.

All estimators are one-sided: empirical infima over finite samples are
upper bounds on the true infima, so a sampled constant can overestimate
but never underestimate how well conditioned the landscape is.  Sharpness
is asserted in tests only where a closed form is known to be attained.
"""

from __future__ import annotations

import dataclasses
import math
from typing import Iterable, List, Optional, Tuple

import numpy as np
from scipy.interpolate import CubicSpline

from .objectives import ObjectiveSpec, ProjectionSpec

__all__ = [
    "RegionSpec",
    "GeometryReport",
    "MonotonicityReport",
    "LineProbe",
    "diagnose",
    "curvature_range",
    "line_probe",
    "check_projection_monotonicity",
    "random_tube_curves",
    "probe_negative_curvature",
]

# quotient estimators skip points this close to the minimum value (0/0 guard)
GAP_FLOOR = 1e-12


@dataclasses.dataclass(frozen=True)
class RegionSpec:
    """Sampling region: a deterministic log grid or a uniform box.

    ``log_grid`` is one-dimensional and log-spaced on [low, high] with
    low > 0; it resolves scale-free landscapes whose features repeat in
    log coordinates.  ``box`` draws uniform samples from the product of
    [low_i, high_i] intervals.
    """

    kind: str
    low: np.ndarray
    high: np.ndarray

    def __init__(self, kind: str, low, high):
        low = np.atleast_1d(np.asarray(low, dtype=float))
        high = np.atleast_1d(np.asarray(high, dtype=float))
        if kind not in ("log_grid", "box"):
            raise ValueError(f"unknown region kind {kind!r}")
        if low.shape != high.shape:
            raise ValueError("low and high must have matching shapes")
        if np.any(high <= low):
            raise ValueError("region needs high > low componentwise")
        if kind == "log_grid":
            if low.size != 1:
                raise ValueError("log_grid regions are one-dimensional")
            if low[0] <= 0.0:
                raise ValueError("log_grid needs low > 0")
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "low", low)
        object.__setattr__(self, "high", high)

    @property
    def dim(self) -> int:
        return self.low.size

    def extent(self) -> float:
        return float(np.max(self.high - self.low))

    def sample(self, n: int, seed: int = 0) -> np.ndarray:
        if n < 1:
            raise ValueError(f"need at least one sample, got {n}")
        if self.kind == "log_grid":
            pts = np.geomspace(self.low[0], self.high[0], n)
            return pts[:, None]
        rng = np.random.default_rng(seed)
        u = rng.uniform(size=(n, self.dim))
        return self.low[None, :] + u * (self.high - self.low)[None, :]

    def describe(self) -> str:
        if self.kind == "log_grid":
            return f"log_grid[{self.low[0]:g}, {self.high[0]:g}]"
        pairs = ", ".join(
            f"[{lo:g}, {hi:g}]" for lo, hi in zip(self.low, self.high)
        )
        return f"box({pairs})"


@dataclasses.dataclass
class GeometryReport:
    """Sampled constants of the geometric condition hierarchy.

    ``pl_constant_emp``: inf of |grad f|^2 / (2 (f - inf f));
    ``sc_wrt_min_emp``: inf of 2 (<grad f, x - pi(x)> - (f - inf f)) / |x - pi(x)|^2;
    ``quasar_gamma``: largest gamma passing <grad f, x - pi(x)> >= gamma (f - inf f)
    on the sample, None when no positive gamma passes;
    ``neg_eig_bound``: most negative sampled directional curvature.
    """

    pl_constant_emp: float
    sc_wrt_min_emp: float
    quasar_gamma: Optional[float]
    neg_eig_bound: float
    sample_region: str
    n_samples: int

    def to_rows(self) -> List[Tuple[str, object]]:
        return [
            ("pl_constant_emp", self.pl_constant_emp),
            ("sc_wrt_min_emp", self.sc_wrt_min_emp),
            ("quasar_gamma", "" if self.quasar_gamma is None else self.quasar_gamma),
            ("neg_eig_bound", self.neg_eig_bound),
            ("sample_region", self.sample_region),
            ("n_samples", self.n_samples),
        ]

    def to_csv(self, path) -> None:
        from .csvio import write_table

        write_table(path, ["field", "value"], self.to_rows())


def _require_projection(objective: ObjectiveSpec) -> ProjectionSpec:
    if objective.projection is None:
        raise ValueError(
            f"objective {objective.objective_id!r} carries no projection onto its minimizers"
        )
    return objective.projection


def _check_validity(projection: ProjectionSpec, x: np.ndarray, what: str) -> None:
    ok = projection.valid(x)
    if not np.all(ok):
        bad = np.asarray(x)[~np.asarray(ok)]
        raise ValueError(
            f"{what} leaves the region where the projection is valid "
            f"(first offending point: {bad[0]})"
        )


def _unit_directions(rng: np.random.Generator, n: int, d: int) -> np.ndarray:
    if d == 1:
        return rng.choice([-1.0, 1.0], size=(n, 1))
    v = rng.standard_normal((n, d))
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


def _point_scales(x: np.ndarray, region: RegionSpec) -> np.ndarray:
    # relative probe lengths: proportional to |x| on scale-free landscapes,
    # floored by a fraction of the region so points near the origin still move
    norms = np.linalg.norm(x, axis=-1)
    return np.maximum(norms, 1e-2 * region.extent())


def curvature_range(
    objective: ObjectiveSpec,
    region: RegionSpec,
    n_samples: int = 4096,
    seed: int = 0,
    h_rel: float = 1e-4,
) -> Tuple[float, float]:
    """Min and max sampled directional curvature via second differences.

    The probe length is h_rel times the per-point scale, so log-periodic
    landscapes are resolved uniformly across scales.
    """
    x = region.sample(n_samples, seed)
    rng = np.random.default_rng(seed + 1)
    v = _unit_directions(rng, x.shape[0], x.shape[1])
    h = h_rel * _point_scales(x, region)
    hv = h[:, None] * v
    second = (objective.value(x + hv) - 2.0 * objective.value(x) + objective.value(x - hv)) / h**2
    return float(second.min()), float(second.max())


def diagnose(
    objective: ObjectiveSpec,
    region: RegionSpec,
    n_samples: int = 4096,
    seed: int = 0,
) -> GeometryReport:
    """Estimate the condition-hierarchy constants on a sampled region.

    Requires an objective with a projection valid on the whole region and
    n_samples >= 1000.  Points within GAP_FLOOR of the minimum value are
    excluded from the quotient estimators.
    """
    if n_samples < 1000:
        raise ValueError(f"need n_samples >= 1000, got {n_samples}")
    projection = _require_projection(objective)
    if objective.inf_value is None:
        raise ValueError(
            f"objective {objective.objective_id!r} declares no infimum value"
        )
    x = region.sample(n_samples, seed)
    if x.shape[1] != objective.dim:
        raise ValueError(
            f"region dimension {x.shape[1]} does not match objective dimension {objective.dim}"
        )
    _check_validity(projection, x, "sample region")

    fx = objective.value(x)
    gx = objective.gradient(x)
    z = projection(x)
    gap = fx - objective.inf_value
    mask = gap > GAP_FLOOR

    if not np.any(mask):
        raise ValueError("every sampled point sits at the minimum value; widen the region")

    grad_sq = np.sum(gx * gx, axis=-1)
    offset = x - z
    dist_sq = np.sum(offset * offset, axis=-1)
    inner = np.sum(gx * offset, axis=-1)

    pl = float(np.min(grad_sq[mask] / (2.0 * gap[mask])))

    sc_mask = mask & (dist_sq > 0.0)
    sc = float(np.min(2.0 * (inner[sc_mask] - gap[sc_mask]) / dist_sq[sc_mask]))

    q = float(np.min(inner[mask] / gap[mask]))
    quasar = q if q > 0.0 else None

    neg_eig, _ = curvature_range(objective, region, n_samples=n_samples, seed=seed)

    return GeometryReport(
        pl_constant_emp=pl,
        sc_wrt_min_emp=sc,
        quasar_gamma=quasar,
        neg_eig_bound=neg_eig,
        sample_region=region.describe(),
        n_samples=n_samples,
    )


@dataclasses.dataclass
class LineProbe:
    """Finite-difference table along a ray: phi(t) = f(w + t * direction)."""

    t: np.ndarray
    phi: np.ndarray
    first_diff: np.ndarray
    second_diff: np.ndarray
    mu_estimate: np.ndarray
    h: float

    def to_csv(self, path) -> None:
        from .csvio import write_table

        rows = zip(self.t, self.phi, self.first_diff, self.second_diff, self.mu_estimate)
        write_table(path, ["t", "phi", "first_diff", "second_diff", "mu_estimate"], rows)


def line_probe(
    objective: ObjectiveSpec,
    w,
    direction,
    t_grid,
    h: float = 0.01,
    inf_phi: Optional[float] = None,
) -> LineProbe:
    """Probe the landscape along a line through w by finite differences.

    Per grid point: phi, central first difference, second difference (the
    curvature estimate), and the strong-convexity estimator
    2 (phi'(t) t - phi(t) + inf phi) / t^2.  The estimator divides by t^2,
    so it is NaN wherever |t| < 10 h.  ``inf_phi`` defaults to the
    objective's declared infimum, falling back to the smallest probed value
    (including phi at t = 0) when no infimum is declared.
    """
    if h <= 0.0:
        raise ValueError(f"difference step h must be positive, got {h}")
    w = np.asarray(w, dtype=float).reshape(-1)
    direction = np.asarray(direction, dtype=float).reshape(-1)
    if w.size != objective.dim or direction.size != objective.dim:
        raise ValueError(
            f"w and direction must have dimension {objective.dim}, "
            f"got {w.size} and {direction.size}"
        )
    norm = np.linalg.norm(direction)
    if norm == 0.0:
        raise ValueError("direction must be nonzero")
    direction = direction / norm

    t = np.asarray(t_grid, dtype=float).reshape(-1)
    line = w[None, :] + t[:, None] * direction[None, :]
    phi = objective.value(line)
    phi_plus = objective.value(line + h * direction[None, :])
    phi_minus = objective.value(line - h * direction[None, :])
    first = (phi_plus - phi_minus) / (2.0 * h)
    second = (phi_plus - 2.0 * phi + phi_minus) / h**2

    if inf_phi is None:
        if objective.inf_value is not None:
            inf_phi = objective.inf_value
        else:
            inf_phi = float(min(phi.min(), objective.f(w)))

    with np.errstate(divide="ignore", invalid="ignore"):
        mu_est = 2.0 * (first * t - phi + inf_phi) / t**2
    mu_est = np.where(np.abs(t) < 10.0 * h, np.nan, mu_est)

    return LineProbe(t=t, phi=phi, first_diff=first, second_diff=second,
                     mu_estimate=mu_est, h=h)


@dataclasses.dataclass
class MonotonicityReport:
    """Result of the parallel-movement check along one curve."""

    min_inner: float
    scale: float
    passed: bool
    n_points: int


def check_projection_monotonicity(
    projection: ProjectionSpec,
    curve,
    dt: float = 1e-3,
) -> MonotonicityReport:
    """Check <xdot, zdot> >= 0 along a sampled curve, z = pi(x).

    The curve must stay inside the projection's valid region and be sampled
    at parameter spacing dt <= 1e-3 so central differences stand in for the
    derivatives.  Passes iff the minimum inner product is no smaller than
    -1e-6 times the largest |xdot| |zdot| over the curve.
    """
    if dt <= 0.0 or dt > 1e-3 * (1.0 + 1e-9):
        raise ValueError(f"need sample spacing 0 < dt <= 1e-3, got {dt}")
    x = np.asarray(curve, dtype=float)
    if x.ndim != 2 or x.shape[0] < 3:
        raise ValueError("curve must be an (m, d) array with m >= 3")
    _check_validity(projection, x, "curve")

    z = projection(x)
    xdot = (x[2:] - x[:-2]) / (2.0 * dt)
    zdot = (z[2:] - z[:-2]) / (2.0 * dt)
    inner = np.sum(xdot * zdot, axis=-1)
    norms = np.linalg.norm(xdot, axis=-1) * np.linalg.norm(zdot, axis=-1)
    scale = float(norms.max()) if norms.size else 0.0
    min_inner = float(inner.min())
    passed = min_inner >= -1e-6 * max(scale, 1e-300)
    return MonotonicityReport(
        min_inner=min_inner, scale=scale, passed=passed, n_points=x.shape[0]
    )


def random_tube_curves(
    n_curves: int,
    seed: int = 0,
    radius: float = 1.0,
    band: Tuple[float, float] = (0.7, 1.3),
    n_points: int = 1001,
) -> Iterable[np.ndarray]:
    """Random smooth closed curves inside the tube around a circle manifold.

    Each curve is a periodic cubic spline in polar coordinates: the radial
    component wanders inside ``band`` times the circle radius, the angular
    component makes one full turn plus a smooth wobble.  Curves are sampled
    at n_points uniformly spaced parameters (spacing 1/(n_points - 1)).
    """
    if n_curves < 1:
        raise ValueError(f"need at least one curve, got {n_curves}")
    lo, hi = band
    if not 0.0 < lo < hi:
        raise ValueError(f"need 0 < band[0] < band[1], got {band}")
    knots = np.linspace(0.0, 1.0, 9)
    t = np.linspace(0.0, 1.0, n_points)
    for i in range(n_curves):
        rng = np.random.default_rng([seed, i])
        r_ctrl = rng.uniform(lo * radius, hi * radius, size=knots.size)
        w_ctrl = rng.uniform(-0.3, 0.3, size=knots.size)
        r_ctrl[-1] = r_ctrl[0]
        w_ctrl[-1] = w_ctrl[0]
        r_spline = CubicSpline(knots, r_ctrl, bc_type="periodic")
        w_spline = CubicSpline(knots, w_ctrl, bc_type="periodic")
        theta = 2.0 * math.pi * t + w_spline(t)
        # splines overshoot their control points; clamp to keep the band honest
        r = np.clip(r_spline(t), lo * radius, hi * radius)
        yield np.stack([r * np.cos(theta), r * np.sin(theta)], axis=-1)


def probe_negative_curvature(
    objective: ObjectiveSpec,
    region: RegionSpec,
    n_samples: int = 4096,
    seed: int = 0,
    delta_range: Tuple[float, float] = (1e-4, 3e-2),
) -> float:
    """Empirical mild-nonconvexity bound from sampled secant pairs.

    Samples pairs (x, x + v) and returns the largest violation of

        <grad f(x + v), v> >= f(x + v) - f(x) - (eps / 2) |v|^2,

    i.e. the smallest eps making the inequality hold on the sample, clamped
    at zero.  Displacement lengths are log-uniform in ``delta_range`` times
    the per-point scale.  The check needs only values and gradients (no
    projection), so the region may cover points the projection cannot
    handle; pairs yielding non-finite values are skipped.
    """
    if n_samples < 1000:
        raise ValueError(f"need n_samples >= 1000, got {n_samples}")
    lo, hi = delta_range
    if not 0.0 < lo < hi:
        raise ValueError(f"need 0 < delta_range[0] < delta_range[1], got {delta_range}")
    x = region.sample(n_samples, seed)
    rng = np.random.default_rng(seed + 1)
    v = _unit_directions(rng, x.shape[0], x.shape[1])
    delta = np.exp(rng.uniform(math.log(lo), math.log(hi), size=x.shape[0]))
    step = (delta * _point_scales(x, region))[:, None] * v
    y = x + step

    lhs = np.sum(objective.gradient(y) * step, axis=-1)
    rhs = objective.value(y) - objective.value(x)
    step_sq = np.sum(step * step, axis=-1)
    with np.errstate(invalid="ignore", divide="ignore"):
        violation = 2.0 * (rhs - lhs) / step_sq
    violation = violation[np.isfinite(violation)]
    if violation.size == 0:
        raise ValueError("no sampled pair produced finite values; check the region")
    return float(max(0.0, violation.max()))

"""Benchmark objectives with analytic gradients and minimizer-manifold data.

Every objective carries, besides its value and gradient, the geometric
constants that the certifiers consume: a smoothness bound, a strong-convexity
constant measured toward the nearest minimizer, a lower bound on negative
curvature, and a closest-point projection onto the set of minimizers together
with the sublevel set on which that projection is single valued.

Conventions: points are numpy arrays whose last axis has length ``dim``;
``value`` maps shape ``(..., dim)`` to ``(...,)`` and ``gradient`` maps
``(..., dim)`` to ``(..., dim)``, so batch evaluation is free.
"""

from __future__ import annotations

import dataclasses
import math
import re
from typing import Callable, Optional, Sequence

import numpy as np

__all__ = [
    "ObjectiveDomainError",
    "ProjectionSpec",
    "ObjectiveSpec",
    "Circle",
    "Ellipse",
    "make_oscillatory_1d",
    "make_product_structure",
    "make_squared_distance",
    "make_ellipse_quartic",
    "make_degenerate_quadratic",
    "oscillatory_constants",
    "oscillatory_second_derivative",
    "nearest_point_on_ellipse",
    "get_objective",
    "AFFINE",
    "ANALYTIC",
    "NEAREST",
]


class ObjectiveDomainError(ValueError):
    """Evaluation outside the region where an objective or projection is defined."""


# projection kinds
AFFINE = "affine"
ANALYTIC = "analytic"
NEAREST = "nearest"


@dataclasses.dataclass(frozen=True)
class ProjectionSpec:
    """Closest-point projection onto the manifold of minimizers.

    kind is one of:
      * ``affine``:   pi(x) = Pi x + x_star, with ``pi_matrix`` an orthogonal
                      projection matrix (rank equal to ``manifold_dim``) and
                      ``x_star`` orthogonal to its range;
      * ``analytic``: a closed-form map supplied in ``func``;
      * ``nearest``:  a numeric nearest-point solve supplied in ``func``.

    ``sublevel_alpha`` is the objective level below which the projection is
    certified single valued; ``domain`` (when present) is a vectorized
    validity mask for ambient points.
    """

    kind: str
    manifold_dim: int
    sublevel_alpha: float
    pi_matrix: Optional[np.ndarray] = None
    x_star: Optional[np.ndarray] = None
    func: Optional[Callable[[np.ndarray], np.ndarray]] = None
    domain: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def __call__(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.kind == AFFINE:
            return x @ self.pi_matrix.T + self.x_star
        return self.func(x)

    def valid(self, x: np.ndarray) -> np.ndarray:
        """Boolean mask of points where the projection may be evaluated."""
        x = np.asarray(x, dtype=float)
        if self.domain is None:
            return np.ones(x.shape[:-1], dtype=bool)
        return self.domain(x)


@dataclasses.dataclass(frozen=True)
class ObjectiveSpec:
    """An objective together with the constants certifiers rely on.

    Optional fields are ``None`` when no analytic value is available; the
    geometry module can estimate them empirically in that case.
    ``neg_curvature_eps`` is an upper bound on how far the Hessian quadratic
    form can dip below zero (0 for convex objectives).
    """

    dim: int
    value: Callable[[np.ndarray], np.ndarray]
    gradient: Callable[[np.ndarray], np.ndarray]
    inf_value: Optional[float] = None
    smoothness_L: Optional[float] = None
    sc_mu: Optional[float] = None
    neg_curvature_eps: Optional[float] = None
    projection: Optional[ProjectionSpec] = None
    objective_id: str = ""

    def f(self, x) -> float:
        return float(self.value(np.asarray(x, dtype=float)))


# ---------------------------------------------------------------------------
# oscillatory one-dimensional family
# ---------------------------------------------------------------------------


def oscillatory_constants(eps_osc: float, R: float) -> dict:
    """Closed-form constants of the oscillatory family.

    Returns thresholds and the resulting smoothness / strong-convexity / PL
    constants.  ``sc_mu`` is ``None`` when the strong-convexity threshold
    fails, ``pl_constant`` is ``None`` when the PL threshold fails; the PL
    value is a one-sided lower bound, not sharp.
    """
    t_pl = eps_osc * math.sqrt(1.0 + R * R)
    t_sc = eps_osc * math.sqrt(1.0 + 4.0 * R * R)
    t_sm = eps_osc * math.sqrt(1.0 + 5.0 * R * R + 4.0 * R ** 4)
    return {
        "pl_threshold": t_pl,
        "sc_threshold": t_sc,
        "smoothness_gap": t_sm,
        "smoothness_L": 1.0 + t_sm,
        "sc_mu": (1.0 - t_sc) if t_sc < 1.0 else None,
        "pl_constant": ((1.0 - t_pl) ** 2 / (1.0 + eps_osc)) if t_pl < 1.0 else None,
        "convexity_mu": (1.0 - t_sm) if t_sm < 1.0 else None,
        "neg_curvature_eps": max(0.0, t_sm - 1.0),
        "quasar_exists": t_pl < 1.0,
    }


def oscillatory_second_derivative(eps_osc: float, R: float, x: np.ndarray) -> np.ndarray:
    """Analytic second derivative of the oscillatory objective, for x != 0."""
    x = np.asarray(x, dtype=float)
    ax = np.abs(x)
    xi = 2.0 * R * np.log(np.where(ax > 0.0, ax, 1.0))
    return 1.0 + eps_osc * (1.0 - 2.0 * R * R) * np.sin(xi) + 3.0 * R * eps_osc * np.cos(xi)


def make_oscillatory_1d(eps_osc: float, R: float) -> ObjectiveSpec:
    """Even one-dimensional objective (1 + eps*sin(2R log|x|))/2 * x^2.

    A log-periodic perturbation of x^2/2 with a single minimizer at 0.  The
    amplitude ``eps_osc`` must lie in (0, 1) and the log-frequency ``R`` must
    be positive.  The smoothness constant and (when the threshold permits) the
    strong-convexity constant toward the minimizer are sharp; the PL constant
    implied by them is only a lower bound.
    """
    if not (0.0 < eps_osc < 1.0):
        raise ValueError(f"eps_osc must lie in (0, 1), got {eps_osc}")
    if R <= 0.0:
        raise ValueError(f"R must be positive, got {R}")

    consts = oscillatory_constants(eps_osc, R)

    def value(x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        x0 = x[..., 0]
        ax = np.abs(x0)
        xi = 2.0 * R * np.log(np.where(ax > 0.0, ax, 1.0))
        return np.where(ax > 0.0, 0.5 * (1.0 + eps_osc * np.sin(xi)) * x0 * x0, 0.0)

    def gradient(x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        x0 = x[..., 0]
        ax = np.abs(x0)
        xi = 2.0 * R * np.log(np.where(ax > 0.0, ax, 1.0))
        slope = 1.0 + eps_osc * np.sin(xi) + R * eps_osc * np.cos(xi)
        return np.where(ax > 0.0, slope * x0, 0.0)[..., None]

    projection = ProjectionSpec(
        kind=ANALYTIC,
        manifold_dim=0,
        sublevel_alpha=math.inf,
        func=lambda x: np.zeros_like(np.asarray(x, dtype=float)),
    )
    return ObjectiveSpec(
        dim=1,
        value=value,
        gradient=gradient,
        inf_value=0.0,
        smoothness_L=consts["smoothness_L"],
        sc_mu=consts["sc_mu"],
        neg_curvature_eps=consts["neg_curvature_eps"],
        projection=projection,
        objective_id=f"oscillatory1d{{eps={_fmt(eps_osc)},R={_fmt(R)}}}",
    )


# ---------------------------------------------------------------------------
# product structure: positive scale factor times a degenerate quadratic
# ---------------------------------------------------------------------------


def make_product_structure(
    k: int,
    scale_fn: Callable[[np.ndarray], np.ndarray],
    scale_grad: Callable[[np.ndarray], np.ndarray],
    quad_mu: float,
    dim: int,
    scale_min: float,
) -> ObjectiveSpec:
    """f(x) = scale_fn(x_1..x_k) * (quad_mu/2) * |(x_{k+1}..x_d)|^2.

    The minimizers form the affine subspace where the trailing block
    vanishes; the scale factor must be bounded below by ``scale_min`` > 0, and
    the objective is then (scale_min * quad_mu)-strongly convex toward its
    nearest minimizer even though it is not convex in general.

    ``scale_fn`` maps ``(..., k)`` to ``(...,)`` and ``scale_grad`` maps
    ``(..., k)`` to ``(..., k)``; both must be vectorized.
    """
    if scale_min <= 0.0:
        raise ValueError(f"scale_min must be positive, got {scale_min}")
    if quad_mu <= 0.0:
        raise ValueError(f"quad_mu must be positive, got {quad_mu}")
    if not (1 <= k < dim):
        raise ValueError(f"need 1 <= k < dim, got k={k}, dim={dim}")

    def value(x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        head, tail = x[..., :k], x[..., k:]
        return scale_fn(head) * 0.5 * quad_mu * np.sum(tail * tail, axis=-1)

    def gradient(x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        head, tail = x[..., :k], x[..., k:]
        q = 0.5 * quad_mu * np.sum(tail * tail, axis=-1)
        g_head = scale_grad(head) * q[..., None]
        g_tail = (scale_fn(head) * quad_mu)[..., None] * tail
        return np.concatenate([g_head, g_tail], axis=-1)

    pi = np.zeros((dim, dim))
    pi[:k, :k] = np.eye(k)
    projection = ProjectionSpec(
        kind=AFFINE,
        manifold_dim=k,
        sublevel_alpha=math.inf,
        pi_matrix=pi,
        x_star=np.zeros(dim),
    )
    return ObjectiveSpec(
        dim=dim,
        value=value,
        gradient=gradient,
        inf_value=0.0,
        smoothness_L=None,
        sc_mu=scale_min * quad_mu,
        neg_curvature_eps=None,
        projection=projection,
        objective_id=f"product{{k={k},d={dim},mu={_fmt(quad_mu)}}}",
    )


def _default_product(k: int, dim: int, mu: float) -> ObjectiveSpec:
    # canonical instance: scale factor 2 + sin of the first coordinate, min 1
    return make_product_structure(
        k=k,
        scale_fn=lambda h: 2.0 + np.sin(h[..., 0]),
        scale_grad=lambda h: np.concatenate(
            [np.cos(h[..., 0])[..., None], np.zeros_like(h[..., 1:])], axis=-1
        ),
        quad_mu=mu,
        dim=dim,
        scale_min=1.0,
    )


# ---------------------------------------------------------------------------
# squared distance to a circle or ellipse
# ---------------------------------------------------------------------------


@dataclasses.dataclass(frozen=True)
class Circle:
    radius: float


@dataclasses.dataclass(frozen=True)
class Ellipse:
    a: float
    b: float


def nearest_point_on_ellipse(p: np.ndarray, a: float, b: float) -> np.ndarray:
    """Nearest point on the ellipse (a cos t, b sin t) for each row of p.

    Newton iteration on the stationarity condition <p - E(t), E'(t)> = 0 from
    a ring of starting angles; the candidate with the smallest distance wins,
    ties broken by the smallest angle in [0, 2pi).
    """
    p = np.asarray(p, dtype=float)
    single = p.ndim == 1
    pts = np.atleast_2d(p)
    px, py = pts[..., 0], pts[..., 1]

    starts = [np.arctan2(a * py, b * px)]
    for j in range(8):
        starts.append(np.full_like(px, j * math.pi / 4.0))
    theta = np.stack(starts)  # (n_starts, n_points)

    for _ in range(80):
        ct, st = np.cos(theta), np.sin(theta)
        ex, ey = a * ct, b * st
        dx, dy = px - ex, py - ey
        # h(t) = <p - E, E'>, E' = (-a sin t, b cos t), E'' = -E
        h = -dx * a * st + dy * b * ct
        hp = -(a * a * st * st + b * b * ct * ct) - (dx * ex + dy * ey)
        step = np.divide(h, hp, out=np.zeros_like(h), where=np.abs(hp) > 1e-300)
        theta = theta - step

    ct, st = np.cos(theta), np.sin(theta)
    d2 = (px - a * ct) ** 2 + (py - b * st) ** 2
    theta = np.mod(theta, 2.0 * math.pi)
    # order candidates by (distance, angle); small angle wins near-ties
    scale = max(a, b)
    rank = d2 + theta * (1e-12 * scale * scale / (2.0 * math.pi))
    best = np.argmin(rank, axis=0)
    idx = np.arange(pts.shape[0])
    out = np.stack([a * ct[best, idx], b * st[best, idx]], axis=-1)
    return out[0] if single else out.reshape(p.shape)


def make_squared_distance(manifold, mu: float) -> ObjectiveSpec:
    """f(x) = (mu/2) * dist(x, M)^2 for M a circle or an ellipse in the plane.

    Inside the tubular neighborhood of M (distance below the reach) this is
    exactly mu-strongly convex toward the nearest minimizer; evaluation
    outside the tube (for the circle: at or beyond the center) raises
    ObjectiveDomainError because the nearest point is no longer unique.
    """
    if mu <= 0.0:
        raise ValueError(f"mu must be positive, got {mu}")

    if isinstance(manifold, Circle):
        r = float(manifold.radius)
        if r <= 0.0:
            raise ValueError(f"radius must be positive, got {r}")

        def norm(x):
            return np.sqrt(np.sum(np.asarray(x, dtype=float) ** 2, axis=-1))

        def domain(x):
            n = norm(x)
            return (n > 0.0) & (n < 2.0 * r)

        def check(x):
            if not np.all(domain(x)):
                raise ObjectiveDomainError(
                    "point outside the tubular neighborhood of the circle "
                    f"(need 0 < |x| < {2.0 * r})"
                )

        def value(x):
            check(x)
            return 0.5 * mu * (norm(x) - r) ** 2

        def gradient(x):
            x = np.asarray(x, dtype=float)
            check(x)
            n = norm(x)[..., None]
            return mu * (1.0 - r / n) * x

        def project(x):
            x = np.asarray(x, dtype=float)
            check(x)
            return r * x / norm(x)[..., None]

        projection = ProjectionSpec(
            kind=ANALYTIC,
            manifold_dim=1,
            sublevel_alpha=0.5 * mu * r * r,
            func=project,
            domain=domain,
        )
        return ObjectiveSpec(
            dim=2,
            value=value,
            gradient=gradient,
            inf_value=0.0,
            # smoothness and curvature bounds hold on the half tube
            # dist(x, M) <= r/2, i.e. on the sublevel set f < mu r^2 / 8
            smoothness_L=mu,
            sc_mu=mu,
            neg_curvature_eps=mu,
            projection=projection,
            objective_id=f"sqdist-circle{{r={_fmt(r)},mu={_fmt(mu)}}}",
        )

    if isinstance(manifold, Ellipse):
        a, b = float(manifold.a), float(manifold.b)
        if a <= 0.0 or b <= 0.0:
            raise ValueError(f"ellipse semi-axes must be positive, got a={a}, b={b}")
        reach = min(a, b) ** 2 / max(a, b)

        def project(x):
            return nearest_point_on_ellipse(x, a, b)

        def dist(x):
            x = np.asarray(x, dtype=float)
            return np.sqrt(np.sum((x - project(x)) ** 2, axis=-1))

        def domain(x):
            return dist(x) < reach

        def check(x):
            if not np.all(domain(x)):
                raise ObjectiveDomainError(
                    f"point outside the tubular neighborhood of the ellipse (reach {reach:g})"
                )

        def value(x):
            check(x)
            return 0.5 * mu * dist(x) ** 2

        def gradient(x):
            x = np.asarray(x, dtype=float)
            check(x)
            return mu * (x - project(x))

        projection = ProjectionSpec(
            kind=NEAREST,
            manifold_dim=1,
            sublevel_alpha=0.5 * mu * reach * reach,
            func=project,
            domain=domain,
        )
        return ObjectiveSpec(
            dim=2,
            value=value,
            gradient=gradient,
            inf_value=0.0,
            smoothness_L=None,
            sc_mu=mu,
            neg_curvature_eps=None,
            projection=projection,
            objective_id=f"sqdist-ellipse{{a={_fmt(a)},b={_fmt(b)},mu={_fmt(mu)}}}",
        )

    raise ValueError(f"unsupported manifold {manifold!r}; expected Circle or Ellipse")


# ---------------------------------------------------------------------------
# quartic with an ellipse of minimizers
# ---------------------------------------------------------------------------

_QUARTIC_A = math.sqrt(2.0)
_QUARTIC_B = 1.0 / math.sqrt(3.0)


def make_ellipse_quartic() -> ObjectiveSpec:
    """f(x, y) = (x^2/2 + 3 y^2 - 1)^2, minimized on an ellipse.

    A smooth nonconvex benchmark whose minimizers form the curve
    x^2/2 + 3 y^2 = 1; the origin is a strict local maximum.  The projection
    is a numeric nearest-point solve, valid in a tube around the curve.
    """

    def level(x):
        x = np.asarray(x, dtype=float)
        return 0.5 * x[..., 0] ** 2 + 3.0 * x[..., 1] ** 2 - 1.0

    def value(x):
        return level(x) ** 2

    def gradient(x):
        x = np.asarray(x, dtype=float)
        u = level(x)[..., None]
        return 2.0 * u * np.stack([x[..., 0], 6.0 * x[..., 1]], axis=-1)

    reach = _QUARTIC_B ** 2 / _QUARTIC_A

    def project(x):
        return nearest_point_on_ellipse(x, _QUARTIC_A, _QUARTIC_B)

    def domain(x):
        x = np.asarray(x, dtype=float)
        d = np.sqrt(np.sum((x - project(x)) ** 2, axis=-1))
        return d < reach

    projection = ProjectionSpec(
        kind=NEAREST,
        manifold_dim=1,
        sublevel_alpha=0.04,
        func=project,
        domain=domain,
    )
    return ObjectiveSpec(
        dim=2,
        value=value,
        gradient=gradient,
        inf_value=0.0,
        smoothness_L=None,
        sc_mu=None,
        neg_curvature_eps=None,
        projection=projection,
        objective_id="ellipse-quartic",
    )


# ---------------------------------------------------------------------------
# degenerate quadratic
# ---------------------------------------------------------------------------


def make_degenerate_quadratic(A: np.ndarray) -> ObjectiveSpec:
    """f(x) = x^T A x / 2 for symmetric positive semidefinite A.

    The kernel of A is the manifold of minimizers (it may be trivial, in
    which case the projection matrix is zero and the minimizer is unique).
    Non-symmetric or indefinite matrices are rejected.
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"A must be square, got shape {A.shape}")
    scale = float(np.max(np.abs(A))) if A.size else 0.0
    if scale == 0.0:
        raise ValueError("A must be nonzero")
    if not np.allclose(A, A.T, rtol=0.0, atol=1e-12 * scale):
        raise ValueError("A must be symmetric")
    A = 0.5 * (A + A.T)

    w, V = np.linalg.eigh(A)
    tol = 1e-12 * float(np.max(np.abs(w)))
    if float(w.min()) < -tol:
        raise ValueError(f"A must be positive semidefinite, found eigenvalue {w.min():g}")
    kernel = np.abs(w) <= tol
    positive = w[~kernel]
    if positive.size == 0:
        raise ValueError("A must have at least one positive eigenvalue")

    d = A.shape[0]
    Vk = V[:, kernel]
    pi = Vk @ Vk.T if Vk.size else np.zeros((d, d))

    def value(x):
        x = np.asarray(x, dtype=float)
        return 0.5 * np.sum((x @ A) * x, axis=-1)

    def gradient(x):
        x = np.asarray(x, dtype=float)
        return x @ A

    projection = ProjectionSpec(
        kind=AFFINE,
        manifold_dim=int(kernel.sum()),
        sublevel_alpha=math.inf,
        pi_matrix=pi,
        x_star=np.zeros(d),
    )
    eig_id = ",".join(_fmt(v) for v in w)
    return ObjectiveSpec(
        dim=d,
        value=value,
        gradient=gradient,
        inf_value=0.0,
        smoothness_L=float(positive.max()),
        sc_mu=float(positive.min()),
        neg_curvature_eps=0.0,
        projection=projection,
        objective_id=f"quad{{eigs={eig_id}}}",
    )


# ---------------------------------------------------------------------------
# registry: string identifiers for CLI and config use
# ---------------------------------------------------------------------------


def _fmt(v: float) -> str:
    s = f"{float(v):.12g}"
    return s


_ID_RE = re.compile(r"^([a-z0-9-]+)(\{(.*)\})?$")


def _parse_id(objective_id: str):
    m = _ID_RE.match(objective_id.strip())
    if not m:
        raise ValueError(f"malformed objective id {objective_id!r}")
    name = m.group(1)
    params: dict[str, list[float]] = {}
    body = m.group(3)
    if body:
        current = None
        for token in body.split(","):
            token = token.strip()
            if not token:
                continue
            if "=" in token:
                key, val = token.split("=", 1)
                current = key.strip()
                params[current] = [float(val)]
            elif current is not None:
                params[current].append(float(token))
            else:
                raise ValueError(f"malformed objective id {objective_id!r}")
    return name, params


def get_objective(objective_id: str) -> ObjectiveSpec:
    """Build an objective from its string identifier.

    Supported forms:
      * ``oscillatory1d{eps=0.05,R=2}``
      * ``product{k=1,d=2,mu=1}``       (scale factor 2 + sin x_1)
      * ``sqdist-circle{r=1,mu=1}``
      * ``sqdist-ellipse{a=2,b=1,mu=1}``
      * ``ellipse-quartic``
      * ``quad{eigs=0,0.01,4}``         (diagonal eigenvalues)
    """
    name, params = _parse_id(objective_id)

    def scalar(key, default=None):
        if key not in params:
            if default is None:
                raise ValueError(f"objective {objective_id!r}: missing parameter {key!r}")
            return default
        vals = params[key]
        if len(vals) != 1:
            raise ValueError(f"objective {objective_id!r}: parameter {key!r} must be scalar")
        return vals[0]

    if name == "oscillatory1d":
        return make_oscillatory_1d(scalar("eps"), scalar("R"))
    if name == "product":
        return _default_product(
            k=int(scalar("k", 1)), dim=int(scalar("d", 2)), mu=scalar("mu", 1.0)
        )
    if name == "sqdist-circle":
        return make_squared_distance(Circle(scalar("r", 1.0)), scalar("mu", 1.0))
    if name == "sqdist-ellipse":
        return make_squared_distance(
            Ellipse(scalar("a"), scalar("b")), scalar("mu", 1.0)
        )
    if name == "ellipse-quartic":
        return make_ellipse_quartic()
    if name == "quad":
        if "eigs" not in params:
            raise ValueError(f"objective {objective_id!r}: missing parameter 'eigs'")
        return make_degenerate_quadratic(np.diag(params["eigs"]))
    raise ValueError(f"unknown objective {name!r}")

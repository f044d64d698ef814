"""Stochastic gradient models with counter-based, replayable randomness.

The gradient estimate at draw ``n`` is a pure function of ``(seed, n)``: each
draw keys its own Philox stream, so ensemble members and replays are
bit-identical regardless of evaluation order, and no mutable RNG state is
shared between runs.
"""

from __future__ import annotations

import dataclasses
import math
from typing import Optional

import numpy as np

from .objectives import ObjectiveSpec

__all__ = [
    "ZERO",
    "GAUSSIAN",
    "NoiseModel",
    "KeyedNormals",
    "estimate_gradient",
    "IdentityCheck",
    "StochasticIdentityReport",
    "verify_stochastic_identities",
]

ZERO = "zero"
GAUSSIAN = "gaussian"

_MASK64 = (1 << 64) - 1


@dataclasses.dataclass(frozen=True)
class NoiseModel:
    """Gradient oracle parameters.

    ``gaussian`` draws g = (1 + sigma_m N1) grad f(x) + sigma_a N2 with N1 a
    scalar standard normal and N2 an isotropic normal with unit total
    variance (components have variance 1/dim), so that
    E|g - grad f|^2 = sigma_a^2 + sigma_m^2 |grad f|^2 holds with equality in
    every dimension.  ``zero`` returns the exact gradient.
    """

    kind: str = ZERO
    sigma_a: float = 0.0
    sigma_m: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.kind not in (ZERO, GAUSSIAN):
            raise ValueError(f"unknown noise kind {self.kind!r}")
        if self.sigma_a < 0.0 or self.sigma_m < 0.0:
            raise ValueError("sigma_a and sigma_m must be nonnegative")
        if self.kind == ZERO and (self.sigma_a != 0.0 or self.sigma_m != 0.0):
            raise ValueError("zero noise cannot carry nonzero sigmas")

    @property
    def deterministic(self) -> bool:
        return self.kind == ZERO or (self.sigma_a == 0.0 and self.sigma_m == 0.0)

    @classmethod
    def zero(cls) -> "NoiseModel":
        return cls(kind=ZERO)

    @classmethod
    def gaussian(cls, sigma_a: float, sigma_m: float, seed: int = 0) -> "NoiseModel":
        return cls(kind=GAUSSIAN, sigma_a=sigma_a, sigma_m=sigma_m, seed=seed)


class KeyedNormals:
    """Per-(seed, draw) normal variates from keyed Philox streams.

    A fresh logical stream is keyed by ``(seed, draw_index)`` for every call,
    which makes draws independent across indices and reproducible in any
    order.  One Philox instance is recycled internally per KeyedNormals
    object; callers that must not share state simply construct their own.
    """

    def __init__(self, seed: int):
        self._seed = int(seed) & _MASK64
        self._bg = np.random.Philox(key=[self._seed, 0])
        self._gen = np.random.Generator(self._bg)
        self._template = self._bg.state

    def pair(self, draw_index: int, dim: int):
        """Return (scalar N1, vector N2 of length dim) for this draw index."""
        st = self._template
        st["state"]["counter"][:] = 0
        st["state"]["key"][0] = self._seed
        st["state"]["key"][1] = int(draw_index) & _MASK64
        st["buffer_pos"] = 4
        st["has_uint32"] = 0
        st["uinteger"] = 0
        self._bg.state = st
        n1 = self._gen.standard_normal()
        n2 = self._gen.standard_normal(dim)
        return n1, n2


def estimate_gradient(
    objective: ObjectiveSpec,
    model: NoiseModel,
    x: np.ndarray,
    draw_index: int,
    _pool: Optional[KeyedNormals] = None,
) -> np.ndarray:
    """Stochastic gradient estimate at ``x`` for the given draw index.

    Deterministic: the same (model.seed, draw_index) always yields the same
    estimate.  ``_pool`` lets a hot loop reuse a KeyedNormals instance; the
    returned values are bit-identical either way.
    """
    x = np.asarray(x, dtype=float)
    g = objective.gradient(x)
    if model.kind == ZERO:
        return g
    pool = _pool if _pool is not None else KeyedNormals(model.seed)
    n1, n2 = pool.pair(draw_index, objective.dim)
    out = g
    if model.sigma_m != 0.0:
        out = (1.0 + model.sigma_m * n1) * out
    if model.sigma_a != 0.0:
        out = out + (model.sigma_a / math.sqrt(objective.dim)) * n2
    return out


# ---------------------------------------------------------------------------
# identity verification
# ---------------------------------------------------------------------------


@dataclasses.dataclass(frozen=True)
class IdentityCheck:
    name: str
    lhs: float
    rhs: float
    z_score: float
    passed: bool


@dataclasses.dataclass(frozen=True)
class StochasticIdentityReport:
    checks: tuple
    n_draws: int
    passed: bool

    def __iter__(self):
        return iter(self.checks)


def _z(samples: np.ndarray, target: float) -> float:
    n = samples.size
    mean = float(np.mean(samples))
    sd = float(np.std(samples, ddof=1)) if n > 1 else 0.0
    if sd == 0.0:
        scale = 1.0 + abs(target)
        return 0.0 if abs(mean - target) <= 1e-12 * scale else math.inf
    return (mean - target) / (sd / math.sqrt(n))


def verify_stochastic_identities(
    objective: ObjectiveSpec,
    model: NoiseModel,
    x: np.ndarray,
    v: np.ndarray,
    n_draws: int = 10_000,
    z_max: float = 4.0,
) -> StochasticIdentityReport:
    """Check the unbiasedness identities of the gradient oracle by z-score.

    At a fixed point the estimate must be unbiased against the true gradient,
    against an arbitrary velocity vector, against the offset from the nearest
    minimizer, and must split its second moment into signal plus noise power.
    Needs at least 1000 draws for the normal approximation to be meaningful.
    """
    if n_draws < 1000:
        raise ValueError(f"n_draws must be at least 1000, got {n_draws}")
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    grad = objective.gradient(x)
    pool = KeyedNormals(model.seed)
    draws = np.stack(
        [estimate_gradient(objective, model, x, i, _pool=pool) for i in range(n_draws)]
    )

    checks = []

    def add(name, samples, lhs, rhs):
        z = _z(samples, rhs)
        checks.append(IdentityCheck(name, lhs, rhs, z, abs(z) <= z_max))

    s = draws @ grad
    add("mean against gradient", s, float(np.mean(s)), float(grad @ grad))
    s = draws @ v
    add("mean against velocity", s, float(np.mean(s)), float(grad @ v))
    if objective.projection is not None:
        w = x - objective.projection(x)
        s = draws @ w
        add("mean against offset from minimizer", s, float(np.mean(s)), float(grad @ w))
    # second moment split: |g|^2 - |grad|^2 - |g - grad|^2 = 2 <grad, g - grad>,
    # which must average to zero
    resid = draws - grad
    s = np.sum(draws * draws, axis=1) - grad @ grad - np.sum(resid * resid, axis=1)
    z = _z(s, 0.0)
    checks.append(
        IdentityCheck(
            "second moment split",
            float(np.mean(np.sum(draws * draws, axis=1))),
            float(grad @ grad + np.mean(np.sum(resid * resid, axis=1))),
            z,
            abs(z) <= z_max,
        )
    )

    checks = tuple(checks)
    return StochasticIdentityReport(
        checks=checks, n_draws=n_draws, passed=all(c.passed for c in checks)
    )

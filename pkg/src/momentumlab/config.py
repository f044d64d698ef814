"""Experiment configuration: a flat key-value text format.

One `key = value` pair per line, `#` starts a comment, keys are dotted
paths (`opt.eta`, `noise.sigma_a`).  Lists are comma-separated; seed
ranges accept `lo..hi` (inclusive).  Unknown keys are rejected by name so
a typo cannot silently fall back to a default.  Serialization writes
floats with 17 significant digits, so configs round-trip losslessly.
"""

from __future__ import annotations

import dataclasses
from typing import Optional, Tuple

from .csvio import format_float

__all__ = ["ExperimentConfig", "parse_config_text", "load_config"]

_SCHEMES = ("GD", "NAG", "NAGDecreasing", "AGNES", "HeavyBallFlow")
_NOISE_KINDS = ("zero", "gaussian")
_TARGETS = ("fig2", "fig4", "example1-table")

# every accepted key, with the parser/serializer type tag
_KNOWN_KEYS = {
    "objective.id": "str",
    "opt.scheme": "str",
    "opt.eta": "float",
    "opt.mu": "float",
    "opt.sigma_m": "float",
    "opt.horizon": "float",
    "opt.dt": "float",
    "opt.x0": "floats",
    "noise.kind": "str",
    "noise.sigma_a": "float",
    "noise.sigma_m": "float",
    "seeds": "seeds",
    "output.dir": "str",
    "target": "str",
}


@dataclasses.dataclass(frozen=True)
class ExperimentConfig:
    """One experiment: objective, optimizer, noise, seeds, output."""

    objective_id: str
    scheme: str
    x0: Tuple[float, ...]
    horizon: float
    eta: Optional[float] = None
    mu: Optional[float] = None
    sigma_m: Optional[float] = None
    dt: Optional[float] = None
    noise_kind: str = "zero"
    sigma_a: float = 0.0
    noise_sigma_m: float = 0.0
    seeds: Tuple[int, ...] = (0,)
    out_dir: str = "out"
    target: Optional[str] = None

    def to_text(self) -> str:
        lines = [
            f"objective.id = {self.objective_id}",
            f"opt.scheme = {self.scheme}",
            f"opt.x0 = {', '.join(format_float(v) for v in self.x0)}",
            f"opt.horizon = {format_float(self.horizon)}",
        ]
        for key, val in (
            ("opt.eta", self.eta),
            ("opt.mu", self.mu),
            ("opt.sigma_m", self.sigma_m),
            ("opt.dt", self.dt),
        ):
            if val is not None:
                lines.append(f"{key} = {format_float(val)}")
        lines.append(f"noise.kind = {self.noise_kind}")
        lines.append(f"noise.sigma_a = {format_float(self.sigma_a)}")
        lines.append(f"noise.sigma_m = {format_float(self.noise_sigma_m)}")
        lines.append(f"seeds = {_format_seeds(self.seeds)}")
        lines.append(f"output.dir = {self.out_dir}")
        if self.target is not None:
            lines.append(f"target = {self.target}")
        return "\n".join(lines) + "\n"

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as handle:
            handle.write(self.to_text())


def _format_seeds(seeds: Tuple[int, ...]) -> str:
    if len(seeds) > 2 and seeds == tuple(range(seeds[0], seeds[-1] + 1)):
        return f"{seeds[0]}..{seeds[-1]}"
    return ", ".join(str(s) for s in seeds)


def _parse_seeds(raw: str, key: str) -> Tuple[int, ...]:
    raw = raw.strip()
    if ".." in raw:
        lo, _, hi = raw.partition("..")
        try:
            lo_i, hi_i = int(lo), int(hi)
        except ValueError:
            raise ValueError(f"{key}: malformed seed range {raw!r}") from None
        if hi_i < lo_i:
            raise ValueError(f"{key}: empty seed range {raw!r}")
        return tuple(range(lo_i, hi_i + 1))
    try:
        return tuple(int(tok.strip()) for tok in raw.split(",") if tok.strip())
    except ValueError:
        raise ValueError(f"{key}: seeds must be integers, got {raw!r}") from None


def _parse_value(key: str, raw: str):
    kind = _KNOWN_KEYS[key]
    raw = raw.strip()
    if kind == "str":
        return raw
    if kind == "float":
        try:
            return float(raw)
        except ValueError:
            raise ValueError(f"{key}: expected a number, got {raw!r}") from None
    if kind == "floats":
        try:
            vals = tuple(float(tok.strip()) for tok in raw.split(",") if tok.strip())
        except ValueError:
            raise ValueError(f"{key}: expected numbers, got {raw!r}") from None
        if not vals:
            raise ValueError(f"{key}: expected at least one number")
        return vals
    return _parse_seeds(raw, key)


def parse_config_text(text: str) -> ExperimentConfig:
    """Parse the flat key-value format; unknown keys are rejected by path."""
    values = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ValueError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, _, raw = stripped.partition("=")
        key = key.strip()
        if key not in _KNOWN_KEYS:
            known = ", ".join(sorted(_KNOWN_KEYS))
            raise ValueError(f"unknown config key {key!r} (known keys: {known})")
        if key in values:
            raise ValueError(f"duplicate config key {key!r}")
        values[key] = _parse_value(key, raw)

    for required in ("objective.id", "opt.scheme", "opt.x0", "opt.horizon"):
        if required not in values:
            raise ValueError(f"missing required config key {required!r}")

    scheme = values["opt.scheme"]
    if scheme not in _SCHEMES:
        raise ValueError(
            f"opt.scheme: unknown scheme {scheme!r} (one of {', '.join(_SCHEMES)})"
        )
    noise_kind = values.get("noise.kind", "zero")
    if noise_kind not in _NOISE_KINDS:
        raise ValueError(
            f"noise.kind: unknown kind {noise_kind!r} (one of {', '.join(_NOISE_KINDS)})"
        )
    target = values.get("target")
    if target is not None and target not in _TARGETS and not target.startswith("certify:"):
        raise ValueError(
            f"target: unknown target {target!r} "
            f"(one of {', '.join(_TARGETS)} or certify:<theorem>)"
        )

    return ExperimentConfig(
        objective_id=values["objective.id"],
        scheme=scheme,
        x0=values["opt.x0"],
        horizon=values["opt.horizon"],
        eta=values.get("opt.eta"),
        mu=values.get("opt.mu"),
        sigma_m=values.get("opt.sigma_m"),
        dt=values.get("opt.dt"),
        noise_kind=noise_kind,
        sigma_a=values.get("noise.sigma_a", 0.0),
        noise_sigma_m=values.get("noise.sigma_m", 0.0),
        seeds=values.get("seeds", (0,)),
        out_dir=values.get("output.dir", "out"),
        target=target,
    )


def load_config(path) -> ExperimentConfig:
    with open(path, "r", encoding="utf-8") as handle:
        return parse_config_text(handle.read())

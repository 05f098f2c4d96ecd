"""Shared domain types: simulation parameters, force fields, particle state."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = ["SimParams", "ForceField", "ParticleState", "validate_params"]


@dataclass(frozen=True)
class SimParams:
    """Physical constants and the simulation interval, in reduced units.

    epsilon is the thermal velocity variance (k_B T / m collapsed into one
    number), gamma the friction rate, dt the integration time step.
    """

    epsilon: float
    gamma: float
    dt: float
    domain_lo: float = 0.0
    domain_hi: float = 1.0

    @property
    def length(self) -> float:
        return self.domain_hi - self.domain_lo

    @property
    def diffusion(self) -> float:
        """Diffusion coefficient epsilon/gamma."""
        return self.epsilon / self.gamma

    @property
    def step_sigma(self) -> float:
        """Standard deviation of one free Brownian step, sqrt(2*eps*dt/gamma)."""
        return float(np.sqrt(2.0 * self.epsilon * self.dt / self.gamma))


def validate_params(params: SimParams) -> SimParams:
    """Check all SimParams invariants; return the params unchanged if valid.

    Raises ValueError naming the first violated invariant.
    """
    if not (params.epsilon > 0.0):
        raise ValueError("epsilon must be positive")
    if not (params.gamma > 0.0):
        raise ValueError("gamma must be positive")
    if not (params.dt > 0.0):
        raise ValueError("dt must be positive")
    if not (params.domain_lo < params.domain_hi):
        raise ValueError("empty domain")
    return params


class ForceField:
    """Scalar acceleration field f(x) on the simulation interval.

    Three variants: identically zero, constant, or a tabulated field with
    linear interpolation (clamped to the end values outside the table).
    """

    def __init__(self, tag: str, fn, is_zero: bool = False):
        self.tag = tag
        self._fn = fn
        self.is_zero = is_zero

    @classmethod
    def zero(cls) -> "ForceField":
        return cls("zero", lambda x: 0.0 * x if isinstance(x, np.ndarray) else 0.0, is_zero=True)

    @classmethod
    def constant(cls, c: float) -> "ForceField":
        c = float(c)
        if c == 0.0:
            return cls.zero()
        return cls(f"constant({c:g})", lambda x: c + 0.0 * x if isinstance(x, np.ndarray) else c)

    @classmethod
    def from_table(cls, xs, fs) -> "ForceField":
        xs = np.asarray(xs, dtype=float)
        fs = np.asarray(fs, dtype=float)
        if xs.ndim != 1 or xs.size < 2 or not np.all(np.diff(xs) > 0):
            raise ValueError("force table abscissae must be strictly increasing")
        if fs.shape != xs.shape:
            raise ValueError("force table values must match abscissae")
        return cls("table", lambda x: np.interp(x, xs, fs))

    def __call__(self, x):
        return self._fn(x)

    def __repr__(self) -> str:
        return f"ForceField({self.tag})"


@dataclass
class ParticleState:
    """State of one live trajectory: position, optional velocity, birth time."""

    x: float
    v: float | None = None
    birth_time: float = 0.0
    alive: bool = True

    def copy(self) -> "ParticleState":
        return ParticleState(self.x, self.v, self.birth_time, self.alive)

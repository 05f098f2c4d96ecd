"""Boundary sources: strength formulas, injection scheduling, particle entry.

A source imitates an implicit bath at concentration C: it injects new
trajectories at the unidirectional-flux rate sqrt(eps/(pi*gamma*dt))*C,
optionally corrected by half the net flux, with entry positions drawn from
the configured entry law.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import ParticleState, SimParams
from .dynamics import DynamicsKind
from .sampling import EntryDistribution, RngStream, maxwellian_speed, sample_entry

__all__ = [
    "SourceSpec",
    "InjectionScheduler",
    "source_strength",
    "schedule_injections",
    "inject_particle",
]

POLICIES = ("poisson", "fixed-interval", "bernoulli-per-step")


@dataclass(frozen=True)
class SourceSpec:
    """One boundary source: side, bath concentration, rate, schedule, entry law."""

    side: str
    concentration: float
    rate: float
    policy: str = "poisson"
    entry: EntryDistribution = field(default_factory=lambda: EntryDistribution("residual", 1.0))

    def __post_init__(self):
        if self.side not in ("lo", "hi"):
            raise ValueError(f"source side must be 'lo' or 'hi', got {self.side!r}")
        if self.rate < 0.0:
            raise ValueError("source rate must be nonnegative")
        if self.concentration < 0.0:
            raise ValueError("source concentration must be nonnegative")
        if self.policy not in POLICIES:
            raise ValueError(f"unknown injection policy: {self.policy!r}")


def source_strength(
    concentration: float,
    params: SimParams,
    j_net: float = 0.0,
    side: str = "lo",
) -> float:
    """Injection rate maintaining a bath concentration at one interface.

    sqrt(eps/(pi*gamma*dt))*C plus half the net flux, signed + for the lo
    side and - for the hi side.  With j_net = 0 this is the leading-order
    unidirectional flux of a flat bath profile.
    """
    if concentration < 0.0:
        raise ValueError("concentration must be nonnegative")
    coef = math.sqrt(params.epsilon / (math.pi * params.gamma * params.dt))
    sign = 0.5 if side == "lo" else -0.5
    return coef * concentration + sign * j_net


class InjectionScheduler:
    """Generates injection times for one source, carrying phase across windows.

    poisson: exponential inter-arrivals with mean 1/rate.  fixed-interval:
    times on the grid t0 + k/rate; the fractional accumulator (the pending
    next-due time) carries across consecutive windows.  bernoulli-per-step:
    one candidate per dt with probability rate*dt (requires rate*dt <= 1).
    """

    def __init__(self, spec: SourceSpec, stream: RngStream, dt: float | None = None):
        self.spec = spec
        self.stream = stream
        self.dt = dt
        self._next_due: float | None = None
        if spec.policy == "bernoulli-per-step":
            if dt is None:
                raise ValueError("bernoulli-per-step policy requires dt")
            if spec.rate * dt > 1.0:
                raise ValueError("bernoulli-per-step requires rate*dt <= 1")

    def times_in(self, t_start: float, t_end: float) -> np.ndarray:
        if not (t_start < t_end):
            raise ValueError("t_start must precede t_end")
        rate = self.spec.rate
        if rate == 0.0:
            return np.empty(0)
        if self.spec.policy == "poisson":
            return self._poisson(t_start, t_end, rate)
        if self.spec.policy == "fixed-interval":
            return self._fixed(t_start, t_end, rate)
        return self._bernoulli(t_start, t_end, rate)

    def _poisson(self, t_start: float, t_end: float, rate: float) -> np.ndarray:
        t = self._next_due
        if t is None:
            t = t_start + self.stream.exponential(1.0 / rate)
        out = []
        while t < t_end:
            out.append(t)
            t += self.stream.exponential(1.0 / rate)
        self._next_due = t
        return np.asarray(out)

    def _fixed(self, t_start: float, t_end: float, rate: float) -> np.ndarray:
        spacing = 1.0 / rate
        t = self._next_due
        if t is None:
            t = t_start + spacing
        out = []
        while t < t_end:
            out.append(t)
            t += spacing
        self._next_due = t
        return np.asarray(out)

    def _bernoulli(self, t_start: float, t_end: float, rate: float) -> np.ndarray:
        dt = self.dt
        n = int(math.floor((t_end - t_start) / dt + 1e-12))
        if n <= 0:
            return np.empty(0)
        hits = self.stream.random(n) < rate * dt
        return t_start + dt * np.nonzero(hits)[0]


def schedule_injections(
    spec: SourceSpec,
    t_start: float,
    t_end: float,
    stream: RngStream,
    dt: float | None = None,
) -> np.ndarray:
    """Injection times for one window; expected count is rate*(t_end - t_start).

    Cross-window phase carry is the job of a persistent InjectionScheduler;
    this convenience covers the single-window case.
    """
    return InjectionScheduler(spec, stream, dt).times_in(t_start, t_end)


def inject_particle(
    spec: SourceSpec,
    t: float,
    params: SimParams,
    stream: RngStream,
    mode: DynamicsKind = DynamicsKind.BROWNIAN,
) -> ParticleState:
    """Construct a newly injected particle at time t.

    The entry offset from the boundary is drawn from the source's entry law;
    in Langevin mode the velocity is an inward-pointing half-Maxwellian.
    """
    offset = sample_entry(spec.entry, stream)
    if spec.side == "lo":
        x = params.domain_lo + offset
        sign = 1.0
    else:
        x = params.domain_hi - offset
        sign = -1.0
    v = None
    if mode is DynamicsKind.LANGEVIN:
        v = sign * maxwellian_speed(stream, params.epsilon)
    return ParticleState(x=x, v=v, birth_time=t, alive=True)

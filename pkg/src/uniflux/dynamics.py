"""Time stepping for overdamped Brownian and phase-space Langevin motion.

Both integrators are explicit Euler updates of the corresponding stochastic
differential equations.  Absorbing-boundary processing checks positions at
step ends only; there is no bridge correction for excursions inside a step.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from .core import ForceField, ParticleState, SimParams
from .sampling import RngStream, gaussian_increment

__all__ = [
    "DynamicsKind",
    "Event",
    "StepOutcome",
    "step_brownian",
    "step_langevin",
    "process_boundaries",
]

# Largest gamma*dt integrated as a single Euler update; coarser steps are
# internally subdivided (the update is first order and degrades for
# gamma*dt = O(1)).
MAX_GAMMA_DT_SUBSTEP = 0.1


class DynamicsKind(enum.Enum):
    BROWNIAN = "brownian"
    LANGEVIN = "langevin"

    @classmethod
    def parse(cls, text: str) -> "DynamicsKind":
        try:
            return cls(text.strip().lower())
        except ValueError:
            raise ValueError(f"unknown dynamics mode: {text!r}") from None


class Event(enum.Enum):
    SURVIVED = "survived"
    ABSORBED_LO = "absorbed_lo"
    ABSORBED_HI = "absorbed_hi"


@dataclass
class StepOutcome:
    state: ParticleState
    event: Event
    crossing_record: tuple[float, float] | None = None


def process_boundaries(x_before: float, x_after: float, params: SimParams) -> Event:
    """Classify one step end against the absorbing interval ends.

    x_before must lie inside the closed domain; x_after strictly outside an
    endpoint terminates the trajectory at that end.
    """
    if not (params.domain_lo <= x_before <= params.domain_hi):
        raise ValueError("x_before must lie inside the closed domain")
    if x_after < params.domain_lo:
        return Event.ABSORBED_LO
    if x_after > params.domain_hi:
        return Event.ABSORBED_HI
    return Event.SURVIVED


def step_brownian(
    state: ParticleState,
    params: SimParams,
    force: ForceField,
    stream: RngStream,
) -> StepOutcome:
    """One Euler step of the overdamped motion, then boundary processing.

    x <- x + (f(x)/gamma) dt + sqrt(2 eps/gamma) dw with dw ~ N(0, dt).
    """
    if not state.alive:
        raise ValueError("cannot step an absorbed particle")
    x0 = state.x
    dw = gaussian_increment(stream, params.dt)
    x1 = x0 + (force(x0) / params.gamma) * params.dt + math.sqrt(2.0 * params.epsilon / params.gamma) * dw
    event = process_boundaries(x0, x1, params)
    new = state.copy()
    new.x = x1
    if event is not Event.SURVIVED:
        new.alive = False
        return StepOutcome(new, event)
    return StepOutcome(new, event, crossing_record=(x0, x1))


def langevin_substeps(gamma: float, dt: float) -> int:
    """Number of equal internal subdivisions keeping gamma*dt_sub <= 0.1."""
    if gamma * dt <= MAX_GAMMA_DT_SUBSTEP:
        return 1
    return int(math.ceil(gamma * dt / MAX_GAMMA_DT_SUBSTEP))


def step_langevin(
    state: ParticleState,
    params: SimParams,
    force: ForceField,
    stream: RngStream,
) -> StepOutcome:
    """One step of the phase-space Euler update, then boundary processing.

    x <- x + v dt;  v <- v + [-gamma v + f(x)] dt + sqrt(2 eps gamma) dw,
    with dw ~ N(0, dt).  When the caller's dt has gamma*dt > 0.1 the step is
    divided into equal sub-steps so each satisfies gamma*dt_sub <= 0.1; the
    boundary is checked after every sub-step.
    """
    if not state.alive:
        raise ValueError("cannot step an absorbed particle")
    if state.v is None:
        raise ValueError("langevin mode requires a velocity component")
    n_sub = langevin_substeps(params.gamma, params.dt)
    dt = params.dt / n_sub
    amp = math.sqrt(2.0 * params.epsilon * params.gamma)
    x, v = state.x, state.v
    x_start = x
    for _ in range(n_sub):
        x_old, v_old = x, v
        dw = gaussian_increment(stream, dt)
        x = x_old + v_old * dt
        v = v_old + (-params.gamma * v_old + force(x_old)) * dt + amp * dw
        event = process_boundaries(x_old, x, params)
        if event is not Event.SURVIVED:
            new = state.copy()
            new.x, new.v, new.alive = x, v, False
            return StepOutcome(new, event)
    if not (math.isfinite(x) and math.isfinite(v)):
        raise FloatingPointError("langevin state became non-finite")
    new = state.copy()
    new.x, new.v = x, v
    return StepOutcome(new, Event.SURVIVED, crossing_record=(x_start, x))

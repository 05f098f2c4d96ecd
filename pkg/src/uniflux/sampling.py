"""Random-number streams, Gaussian increments, and the residual-normal entry law.

A particle hopping in from an implicit bath does not appear exactly at the
interface: its first recorded position is distributed like the overshoot of a
Gaussian step past the boundary.  That residual-normal density and its exact
inverse-CDF sampler live here, together with the reproducible keyed streams
used everywhere else.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erfc, erfcx, ndtr

from .core import SimParams

__all__ = [
    "RngStream",
    "EntryDistribution",
    "gaussian_increment",
    "residual_pdf",
    "residual_cdf",
    "sample_entry",
]

_SQRT2 = math.sqrt(2.0)
_SQRT_PI = math.sqrt(math.pi)
_SQRT_HALF_PI = math.sqrt(math.pi / 2.0)


class RngStream:
    """Reproducible random stream keyed by (master_seed, stream_id).

    Distinct keys give statistically independent sequences; replaying the
    same key replays the identical sequence, independent of how work is
    partitioned across workers.
    """

    def __init__(self, master_seed: int, stream_id: int = 0):
        self.master_seed = int(master_seed)
        self.stream_id = int(stream_id)
        seq = np.random.SeedSequence([self.master_seed, self.stream_id])
        self._gen = np.random.Generator(np.random.PCG64(seq))

    def standard_normal(self, size=None):
        return self._gen.standard_normal(size)

    def random(self, size=None):
        return self._gen.random(size)

    def exponential(self, scale: float, size=None):
        return self._gen.exponential(scale, size)

    def integers(self, low, high=None, size=None):
        return self._gen.integers(low, high, size)

    def choice_index(self, p: np.ndarray, size: int) -> np.ndarray:
        """Sample `size` indices with probabilities `p` (normalized weights)."""
        return self._gen.choice(p.size, size=size, p=p)

    def __repr__(self) -> str:
        return f"RngStream(master_seed={self.master_seed}, stream_id={self.stream_id})"


def gaussian_increment(stream: RngStream, variance: float, size=None):
    """Draw from a zero-mean normal with the given variance.

    Variance 0 returns exactly 0; a negative variance is a programming error.
    """
    if variance < 0.0:
        raise ValueError("variance must be nonnegative")
    if variance == 0.0:
        return 0.0 if size is None else np.zeros(size)
    return math.sqrt(variance) * stream.standard_normal(size)


@dataclass(frozen=True)
class EntryDistribution:
    """Entry law for injected particles.

    kind "point": the particle starts at the boundary and its first recorded
    position is one half-normal hop of scale sigma.  kind "residual": the
    position is drawn from the residual of the normal distribution, the
    overshoot law of a bath particle crossing the interface.  In both cases
    sigma^2 = 2*epsilon*dt/gamma of the simulation that uses the entry law.
    """

    kind: str
    sigma: float

    def __post_init__(self):
        if self.kind not in ("point", "residual"):
            raise ValueError(f"unknown entry kind: {self.kind!r}")
        if self.kind == "residual" and not (self.sigma > 0.0):
            raise ValueError("residual entry requires sigma > 0")
        if self.sigma < 0.0:
            raise ValueError("sigma must be nonnegative")

    @classmethod
    def for_params(cls, kind: str, params: SimParams) -> "EntryDistribution":
        return cls(kind, params.step_sigma)


def residual_pdf(x, sigma: float):
    """Residual-normal density (1/sigma)*sqrt(pi/2)*erfc(x/(sqrt(2)*sigma)).

    Supported on x >= 0 (returns 0 below); integrates to exactly 1.
    """
    if not (sigma > 0.0):
        raise ValueError("sigma must be positive")
    x = np.asarray(x, dtype=float)
    out = (_SQRT_HALF_PI / sigma) * erfc(x / (_SQRT2 * sigma))
    out = np.where(x < 0.0, 0.0, out)
    return float(out) if out.ndim == 0 else out


def residual_cdf(x, sigma: float):
    """Closed-form CDF of the residual-normal density.

    F(x) = sqrt(pi)*z*erfc(z) + 1 - exp(-z^2) with z = x/(sqrt(2)*sigma),
    using the antiderivative of erfc.  F(0) = 0 and F -> 1 as x -> inf.
    """
    if not (sigma > 0.0):
        raise ValueError("sigma must be positive")
    x = np.asarray(x, dtype=float)
    z = x / (_SQRT2 * sigma)
    # two algebraically equal forms: the direct antiderivative below z = 1
    # and one minus the survival function above, where the survival form
    # exp(-z^2)*(1 - sqrt(pi)*z*erfcx(z)) keeps full relative precision and
    # float monotonicity near saturation
    zc = np.minimum(z, 1.0)
    low = _SQRT_PI * zc * erfc(zc) + 1.0 - np.exp(-zc * zc)
    zt = np.maximum(z, 1.0)
    high = 1.0 - np.exp(-zt * zt) * (1.0 - _SQRT_PI * zt * erfcx(zt))
    out = np.where(z < 1.0, low, high)
    out = np.where(x < 0.0, 0.0, out)
    return float(out) if out.ndim == 0 else out


# Inverse-CDF table in the scale-free variable z = x/(sqrt(2)*sigma), where
# the CDF is g(z) = sqrt(pi)*z*erfc(z) + 1 - exp(-z^2) independent of sigma.
# g is concave increasing, so a table lookup followed by a few Newton steps
# (derivative sqrt(pi)*erfc(z)) converges quadratically.
_Z_KNOTS = np.linspace(0.0, 9.0, 4097)
_U_KNOTS = np.maximum.accumulate(
    _SQRT_PI * _Z_KNOTS * erfc(_Z_KNOTS) + 1.0 - np.exp(-_Z_KNOTS * _Z_KNOTS)
)


def _invert_residual_unit(u: np.ndarray) -> np.ndarray:
    """Invert g(z) = u for z >= 0 to absolute tolerance 1e-13 in z."""
    from scipy.special import erfcx

    u = np.asarray(u, dtype=float)
    z = np.interp(u, _U_KNOTS, _Z_KNOTS)
    for _ in range(8):
        ez = np.exp(-z * z)
        ec = erfc(z)
        g = _SQRT_PI * z * ec + 1.0 - ez
        step = (g - u) / np.maximum(_SQRT_PI * ec, 1e-300)
        z = np.maximum(z - step, 0.0)
        if np.all(np.abs(step) <= 1e-13):
            break
    # upper half: refine against the survival function in its
    # cancellation-free form exp(-z^2)*(1 - sqrt(pi)*z*erfcx(z)), where 1-u
    # is still exactly representable.  Newton runs on log(S), quadratically
    # convergent for this exponentially decaying target even from afar.
    tail = (u > 0.9) & (u < 1.0)
    if np.any(tail):
        zt = np.maximum(z[tail], 1.0)
        log_st = np.log(1.0 - u[tail])
        for _ in range(40):
            ecx = erfcx(zt)
            body = 1.0 - _SQRT_PI * zt * ecx
            log_s = -zt * zt + np.log(body)
            dlog_s = -_SQRT_PI * ecx / body  # d(log S)/dz
            step = (log_s - log_st) / dlog_s
            zt = np.maximum(zt - step, 0.0)
            if np.all(np.abs(step) <= 1e-13):
                break
        z[tail] = zt
    return z


def _invert_residual_cdf(u: np.ndarray, sigma: float) -> np.ndarray:
    """Positions x >= 0 with residual_cdf(x, sigma) = u, to 1e-12*sigma."""
    return _SQRT2 * sigma * _invert_residual_unit(np.asarray(u, dtype=float))


def _invert_residual_scalar(u: float, sigma: float) -> float:
    """Scalar fast path of the inverse CDF (same table + Newton iteration)."""
    from scipy.special import erfcx

    z = float(np.interp(u, _U_KNOTS, _Z_KNOTS))
    if u > 0.9:
        if u >= 1.0:
            return _SQRT2 * sigma * float(_invert_residual_unit(np.array([u]))[0])
        z = max(z, 1.0)
        log_st = math.log(1.0 - u)
        for _ in range(40):
            ecx = float(erfcx(z))
            body = 1.0 - _SQRT_PI * z * ecx
            log_s = -z * z + math.log(body)
            step = (log_s - log_st) / (-_SQRT_PI * ecx / body)
            z = max(z - step, 0.0)
            if abs(step) <= 1e-13:
                break
        return _SQRT2 * sigma * z
    for _ in range(8):
        ec = math.erfc(z)
        g = _SQRT_PI * z * ec + 1.0 - math.exp(-z * z)
        step = (g - u) / max(_SQRT_PI * ec, 1e-300)
        z = max(z - step, 0.0)
        if abs(step) <= 1e-13:
            break
    return _SQRT2 * sigma * z


def sample_entry(dist: EntryDistribution, stream: RngStream, size=None):
    """Sample nonnegative entry offsets from the boundary.

    point: |N(0, sigma^2)| (the half-normal first hop).  residual: exact
    inverse-CDF draw from the residual-normal density.
    """
    if dist.kind == "point":
        z = stream.standard_normal(1 if size is None else size)
        out = dist.sigma * np.abs(z)
    else:
        u = stream.random(1 if size is None else size)
        out = _invert_residual_cdf(np.atleast_1d(u), dist.sigma)
    return float(out[0]) if size is None else out


def maxwellian_speed(stream: RngStream, epsilon: float, size=None):
    """|N(0, epsilon)|: speed of an inward-pointing thermal entrant."""
    z = stream.standard_normal(1 if size is None else size)
    out = math.sqrt(epsilon) * np.abs(z)
    return float(out[0]) if size is None else out


def gaussian_cdf(x):
    """Standard normal CDF (vectorized), used by grid propagation."""
    return ndtr(x)

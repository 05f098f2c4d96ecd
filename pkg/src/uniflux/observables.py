"""Occupancy-time histograms, concentration profiles, and flux bookkeeping.

The concentration estimate credits each step's dwell time dt to the bin
containing the step's starting position; dividing the accumulated dwell by
(total simulated time * bin width) turns occupancy into concentration.
Per-bin standard errors come from the occupancy variance across the
trajectory ensemble.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "ConcentrationProfile",
    "AbsorptionLedger",
    "accumulate_occupancy",
    "normalize_profile",
    "merge_profiles",
    "fit_linear",
    "measured_net_flux",
]


class ConcentrationProfile:
    """Binned occupancy-time histogram over the simulation interval."""

    def __init__(self, domain_lo: float, domain_hi: float, n_bins: int):
        if n_bins < 1:
            raise ValueError("n_bins must be at least 1")
        if not (domain_lo < domain_hi):
            raise ValueError("empty domain")
        self.n_bins = int(n_bins)
        self.bin_edges = np.linspace(domain_lo, domain_hi, n_bins + 1)
        self.occupancy = np.zeros(n_bins)
        self.occupancy_sq = np.zeros(n_bins)  # sum over trajectories of occupancy^2
        self.n_trajectories = 0
        self.total_sim_time = 0.0

    @property
    def domain_lo(self) -> float:
        return float(self.bin_edges[0])

    @property
    def domain_hi(self) -> float:
        return float(self.bin_edges[-1])

    @property
    def bin_widths(self) -> np.ndarray:
        return np.diff(self.bin_edges)

    @property
    def bin_centers(self) -> np.ndarray:
        return 0.5 * (self.bin_edges[:-1] + self.bin_edges[1:])

    def bin_index(self, x: float) -> int:
        if not (self.domain_lo <= x <= self.domain_hi):
            raise ValueError(f"position {x} outside the domain")
        i = int(np.searchsorted(self.bin_edges, x, side="right")) - 1
        return min(max(i, 0), self.n_bins - 1)

    def add_trajectory(self, occupancy: np.ndarray) -> None:
        """Fold in one trajectory's per-bin dwell vector."""
        self.occupancy += occupancy
        self.occupancy_sq += occupancy * occupancy
        self.n_trajectories += 1

    @property
    def concentration(self) -> np.ndarray:
        """Occupancy / (total time * bin width); zeros for an empty profile."""
        if self.total_sim_time > 0.0:
            return self.occupancy / (self.total_sim_time * self.bin_widths)
        if np.any(self.occupancy != 0.0):
            raise ValueError("nonzero occupancy with zero total simulated time")
        return np.zeros(self.n_bins)

    @property
    def stderr(self) -> np.ndarray:
        """Per-bin standard error of the concentration estimate."""
        if self.total_sim_time <= 0.0 or self.n_trajectories < 2:
            return np.zeros(self.n_bins)
        n = self.n_trajectories
        var = (self.occupancy_sq - self.occupancy**2 / n) / (n - 1)
        var = np.maximum(var, 0.0)
        return np.sqrt(n * var) / (self.total_sim_time * self.bin_widths)

    def scaled(self, factor: float) -> "ConcentrationProfile":
        """Profile reporting concentration/factor (statistical oversampling scale)."""
        out = ConcentrationProfile(self.domain_lo, self.domain_hi, self.n_bins)
        out.occupancy = self.occupancy / factor
        out.occupancy_sq = self.occupancy_sq / factor**2
        out.n_trajectories = self.n_trajectories
        out.total_sim_time = self.total_sim_time
        return out


def accumulate_occupancy(profile: ConcentrationProfile, x: float, dwell: float) -> ConcentrationProfile:
    """Credit one dwell interval to the bin containing x; returns the profile."""
    if dwell < 0.0:
        raise ValueError("dwell must be nonnegative")
    profile.occupancy[profile.bin_index(x)] += dwell
    return profile


def normalize_profile(profile: ConcentrationProfile) -> tuple[np.ndarray, np.ndarray]:
    """Concentration and per-bin stderr; requires positive total simulated time."""
    if profile.total_sim_time <= 0.0:
        raise ValueError("total simulated time must be positive")
    return profile.concentration, profile.stderr


def merge_profiles(a: ConcentrationProfile, b: ConcentrationProfile) -> ConcentrationProfile:
    """Pool two profiles over the same binning (sum occupancy and time)."""
    if a.n_bins != b.n_bins or not np.array_equal(a.bin_edges, b.bin_edges):
        raise ValueError("profiles must share identical bin edges")
    out = ConcentrationProfile(a.domain_lo, a.domain_hi, a.n_bins)
    out.occupancy = a.occupancy + b.occupancy
    out.occupancy_sq = a.occupancy_sq + b.occupancy_sq
    out.n_trajectories = a.n_trajectories + b.n_trajectories
    out.total_sim_time = a.total_sim_time + b.total_sim_time
    return out


def fit_linear(profile: ConcentrationProfile, bins: slice | None = None) -> tuple[float, float, float]:
    """Ordinary least squares of concentration on bin centers.

    Returns (slope, intercept, r_squared); a constant profile reports
    r_squared = 1 by convention.  An optional bin slice restricts the fit.
    """
    x = profile.bin_centers
    y = profile.concentration
    if bins is not None:
        x, y = x[bins], y[bins]
    if x.size < 3:
        raise ValueError("linear fit requires at least 3 bins")
    xm, ym = x.mean(), y.mean()
    sxx = np.sum((x - xm) ** 2)
    sxy = np.sum((x - xm) * (y - ym))
    slope = sxy / sxx
    intercept = ym - slope * xm
    ss_tot = np.sum((y - ym) ** 2)
    # constant within float rounding: perfect fit by convention
    if ss_tot <= (1e-12 * max(float(np.max(np.abs(y))), 1e-300)) ** 2 * y.size:
        return float(slope), float(intercept), 1.0
    ss_res = np.sum((y - (slope * x + intercept)) ** 2)
    return float(slope), float(intercept), float(1.0 - ss_res / ss_tot)


def deviation_from_fit(
    profile: ConcentrationProfile,
    fit_bins: slice | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Per-bin deviation from the least-squares line and its standard error.

    The returned stderr accounts for both the bin noise and the noise of the
    fitted line itself (propagated through the OLS hat matrix, including the
    covariance between a bin and a fit that used it), so deviation/stderr is
    a calibrated z-score even where bin errors are strongly heteroscedastic.
    """
    x = profile.bin_centers
    y = profile.concentration
    se = profile.stderr
    slope, intercept, _ = fit_linear(profile, bins=fit_bins)
    fitted = slope * x + intercept
    xf = x[fit_bins] if fit_bins is not None else x
    sef = se[fit_bins] if fit_bins is not None else se
    n = xf.size
    xm = xf.mean()
    sxx = np.sum((xf - xm) ** 2)
    # hat coefficients of the prediction at x_i over the fitted bins j
    h = 1.0 / n + np.outer(x - xm, xf - xm) / sxx
    var_fit = h**2 @ sef**2
    var_dev = se**2 + var_fit
    if fit_bins is not None:
        in_fit = np.zeros(x.size, dtype=bool)
        in_fit[fit_bins] = True
    else:
        in_fit = np.ones(x.size, dtype=bool)
    # bins used by the fit are positively correlated with it
    idx = np.nonzero(in_fit)[0]
    pos = {j: k for k, j in enumerate(idx)}
    for i in np.nonzero(in_fit)[0]:
        var_dev[i] -= 2.0 * h[i, pos[i]] * se[i] ** 2
    return y - fitted, np.sqrt(np.maximum(var_dev, 0.0))


@dataclass
class AbsorptionLedger:
    """Boundary event counts over one measurement window."""

    absorbed_lo: int = 0
    absorbed_hi: int = 0
    injected_lo: int = 0
    injected_hi: int = 0
    elapsed: float = 0.0

    @property
    def live_population(self) -> int:
        return self.injected_lo + self.injected_hi - self.absorbed_lo - self.absorbed_hi

    def merge(self, other: "AbsorptionLedger") -> "AbsorptionLedger":
        return AbsorptionLedger(
            self.absorbed_lo + other.absorbed_lo,
            self.absorbed_hi + other.absorbed_hi,
            self.injected_lo + other.injected_lo,
            self.injected_hi + other.injected_hi,
            self.elapsed + other.elapsed,
        )


def measured_net_flux(ledger: AbsorptionLedger) -> float:
    """Net rightward transport from boundary throughputs.

    The rightward throughput is (injected_lo - absorbed_lo)/elapsed at the lo
    boundary and (absorbed_hi - injected_hi)/elapsed at the hi boundary; in
    steady state the two agree and their average is the net flux.
    """
    if ledger.elapsed <= 0.0:
        raise ValueError("elapsed time must be positive")
    thru_lo = (ledger.injected_lo - ledger.absorbed_lo) / ledger.elapsed
    thru_hi = (ledger.absorbed_hi - ledger.injected_hi) / ledger.elapsed
    return 0.5 * (thru_lo + thru_hi)


def boundary_throughputs(ledger: AbsorptionLedger) -> tuple[float, float]:
    """(lo, hi) rightward throughputs; steady state requires them to agree."""
    if ledger.elapsed <= 0.0:
        raise ValueError("elapsed time must be positive")
    return (
        (ledger.injected_lo - ledger.absorbed_lo) / ledger.elapsed,
        (ledger.absorbed_hi - ledger.injected_hi) / ledger.elapsed,
    )

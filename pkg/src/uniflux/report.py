"""Figure rendering for experiment outputs (PNG files next to the CSVs)."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .observables import ConcentrationProfile, fit_linear

DPI = 150

plt.rcParams.update(
    {
        "figure.figsize": (6.4, 4.2),
        "axes.grid": True,
        "grid.linewidth": 0.4,
        "grid.alpha": 0.5,
        "lines.linewidth": 1.4,
        "font.size": 10,
    }
)


def render_profile(profile: ConcentrationProfile, path: str, title: str = "") -> str:
    """Concentration vs position with error bars and the least-squares line."""
    fig, ax = plt.subplots()
    x = profile.bin_centers
    c = profile.concentration
    ax.errorbar(x, c, yerr=profile.stderr, fmt="o", ms=3, capsize=2, label="measured")
    slope, intercept, r2 = fit_linear(profile)
    ax.plot(x, slope * x + intercept, "--", color="tab:red",
            label=f"fit: {slope:.3g} x + {intercept:.3g} (r$^2$={r2:.4f})")
    ax.set_xlabel("position")
    ax.set_ylabel("concentration")
    if title:
        ax.set_title(title)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=DPI)
    plt.close(fig)
    return path


def render_profile_family(results: dict, path: str, title: str = "") -> str:
    """Overlayed concentration profiles for several time steps."""
    fig, ax = plt.subplots()
    for dt in sorted(results, reverse=True):
        profile = results[dt].profile
        ax.errorbar(profile.bin_centers, profile.concentration, yerr=profile.stderr,
                    fmt="o-", ms=2.5, lw=0.9, capsize=0, label=f"dt = {dt:g}")
    ax.set_xlabel("position")
    ax.set_ylabel("concentration")
    if title:
        ax.set_title(title)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=DPI)
    plt.close(fig)
    return path


def render_uf_validation(checks, path: str) -> str:
    """Measured/expected unidirectional flux ratio per counting window."""
    fig, ax = plt.subplots()
    windows = [c.window for c in checks]
    ratios = [c.ratio for c in checks]
    errs = [3.0 * c.ratio_stderr for c in checks]
    ax.errorbar(windows, ratios, yerr=errs, fmt="s", capsize=3, label="measured / expected (3 se)")
    ax.axhline(1.0, color="tab:red", ls="--", lw=1)
    ax.set_xscale("log")
    ax.set_xlabel("counting window dt")
    ax.set_ylabel("j_lr ratio to sqrt(eps/(pi gamma dt)) p")
    ax.set_title("Unidirectional flux law at equilibrium")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=DPI)
    plt.close(fig)
    return path


def render_msd(res, path: str) -> str:
    """Log-log MSD with ballistic and diffusive reference slopes."""
    fig, ax = plt.subplots()
    ax.loglog(res.short_t, res.short_msd, "o-", label=f"short times (slope {res.slope_short:.3f})")
    ax.loglog(res.long_t, res.long_msd, "s-", label=f"long times (slope {res.slope_long:.3f})")
    for t, m, s, style in (
        (res.short_t, res.short_msd, 2.0, ":"),
        (res.long_t, res.long_msd, 1.0, "--"),
    ):
        ref = m[0] * (np.asarray(t) / t[0]) ** s
        ax.loglog(t, ref, style, color="gray", lw=1, label=f"slope {s:g} reference")
    ax.set_xlabel("t")
    ax.set_ylabel("mean squared displacement")
    ax.set_title("Ballistic to diffusive crossover")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=DPI)
    plt.close(fig)
    return path


def render_calibration(profile: ConcentrationProfile, targets, path: str) -> str:
    """Final calibrated profile with the target boundary concentrations."""
    fig, ax = plt.subplots()
    ax.errorbar(profile.bin_centers, profile.concentration, yerr=profile.stderr,
                fmt="o", ms=3, capsize=2, label="calibrated profile")
    c_lo, c_hi = targets
    ax.plot([profile.domain_lo], [c_lo], "r*", ms=12, label="targets")
    ax.plot([profile.domain_hi], [c_hi], "r*", ms=12)
    ax.set_xlabel("position")
    ax.set_ylabel("concentration")
    ax.set_title("Shooting calibration")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=DPI)
    plt.close(fig)
    return path

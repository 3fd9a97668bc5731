"""Monitors: monotone and pinched quantities verified per step and surgery.

Every monitor is a pure function of immutable snapshots (or series of
scalar samples extracted from them), so re-running on persisted data
reproduces the live verdicts exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import WarpedMetric, arclength_ball, curvature_of, volume, volume_between


def pinching_phi(u):
    """Default pinching profile: decreasing, positive, ~1/log at infinity."""
    return 1.0 / (1.0 + np.log1p(np.maximum(u, 0.0)))


@dataclass(frozen=True)
class MonitorConfig:
    """Constants shared by all monitors."""

    eta: float = 10.0           # gradient-estimate constant, > 1
    kappa: float = 0.1          # noncollapsing constant, in (0, 1)
    tol: float = 1e-3           # relative tolerance per monitor
    phi: object = field(default=pinching_phi)

    def __post_init__(self):
        if not self.eta > 1:
            raise ValueError("eta must exceed 1")
        if not 0 < self.kappa < 1:
            raise ValueError("kappa must lie in (0, 1)")


def check_pinching(metric: WarpedMetric, t: float,
                   config: MonitorConfig = MonitorConfig()) -> dict:
    """Pointwise lower pinching: rm_min + phi(R (t+1)) R >= 0.

    The bound is asserted only where rm_min (t+1) < -1; elsewhere the
    pinching estimate carries no content (normalized data with |Rm| <= 1
    starts exactly on that borderline, so mild negative welds are exempt
    until the flow has contracted them).  Returns the worst value over
    the active set; pass iff >= -tol.
    """
    c = curvature_of(metric)
    val = c.rm_min + config.phi(c.R * (t + 1.0)) * c.R
    active = c.rm_min * (t + 1.0) < -1.0
    if not np.any(active):
        return {"monitor": "pinching", "ok": True, "worst": 0.0,
                "argmin": -1}
    vals = np.where(active, val, np.inf)
    worst = float(vals.min())
    scale = max(1.0, float(np.abs(c.R).max()))
    return {"monitor": "pinching", "ok": worst >= -config.tol * scale,
            "worst": worst, "argmin": int(vals.argmin())}


def check_rmin(metric: WarpedMetric, t: float,
               config: MonitorConfig = MonitorConfig()) -> dict:
    """R_min(t) >= -1.5/(t + 0.25) for normalized initial data."""
    rmin = float(curvature_of(metric).R.min())
    bound = -1.5 / (t + 0.25)
    return {"monitor": "rmin", "ok": rmin >= bound - config.tol,
            "R_min": rmin, "bound": bound}


def check_vhat(ts, vols, config: MonitorConfig = MonitorConfig()) -> dict:
    """V(t) (t + 1/4)^(-3/2) non-increasing along a sampled run.

    Accepts total-volume samples (summed over components) so surgery and
    extinction jumps, which strictly decrease V, are covered as well.
    """
    ts = np.asarray(ts, dtype=float)
    if ts.size and np.any(np.diff(ts) < 0):
        raise ValueError("time samples must be non-decreasing")
    vhat = np.asarray(vols, dtype=float) * (ts + 0.25) ** -1.5
    if vhat.size < 2:
        return {"monitor": "vhat", "ok": True, "worst_rise": 0.0}
    rise = np.diff(vhat) / np.maximum(vhat[:-1], 1e-300)
    worst = float(rise.max())
    return {"monitor": "vhat", "ok": worst <= config.tol, "worst_rise": worst}


def check_rhat(ts, rmins, vols, config: MonitorConfig = MonitorConfig()) -> dict:
    """Rhat = R_min V^(2/3) non-decreasing wherever R_min <= 0."""
    ts = np.asarray(ts, dtype=float)
    rmins = np.asarray(rmins, dtype=float)
    vols = np.asarray(vols, dtype=float)
    rhat = rmins * vols ** (2.0 / 3.0)
    worst = 0.0
    for i in range(len(ts) - 1):
        if rmins[i] <= 0:
            scale = max(1.0, abs(rhat[i]))
            worst = min(worst, (rhat[i + 1] - rhat[i]) / scale)
    return {"monitor": "rhat", "ok": worst >= -config.tol, "worst_drop": worst}


def ball_volume(metric: WarpedMetric, i: int, r0: float) -> float:
    """Volume of the geodesic ball B(p_i, r0), rotationally symmetric estimate.

    Along the axis the ball spans |s - s_i| <= r0; at axial offset u the
    sphere through p_i is reached within the ball up to polar angle
    beta(u) with distance d^2 = u^2 + (psi beta)^2 (exact on a cylinder,
    Euclidean limit 4 pi r0^3 / 3 on flat space).
    """
    s = metric.arclength()
    lo, hi = arclength_ball(metric, i, r0)
    u = np.abs(s[lo : hi + 1] - s[i])
    psi = metric.psi[lo : hi + 1]
    beta_r = np.sqrt(np.maximum(r0**2 - u**2, 0.0))
    beta = np.minimum(np.where(psi > 0, beta_r / np.maximum(psi, 1e-300), np.pi),
                      np.pi)
    # area of polar cap of angle beta on a sphere of radius psi
    area = 2.0 * np.pi * psi**2 * (1.0 - np.cos(beta))
    return float(np.trapezoid(area, s[lo : hi + 1]))


def check_noncollapse(metric: WarpedMetric, r_max: float,
                      config: MonitorConfig = MonitorConfig(),
                      n_centers: int = 24, n_scales: int = 4) -> dict:
    """vol B(x, r0) >= kappa r0^3 whenever |Rm| <= r0^-2 on B(x, r0).

    Samples centers along the axis and dyadic scales up to r_max; scales on
    which the curvature hypothesis fails are skipped.
    """
    c = curvature_of(metric)
    rm_abs = np.maximum(np.abs(c.K_sph), np.abs(c.K_mix))
    n = metric.n
    centers = np.unique(np.linspace(0, n - 1, n_centers).astype(int))
    worst = np.inf
    checked = 0
    for i in centers:
        for k in range(n_scales):
            r0 = r_max / 2.0**k
            lo, hi = arclength_ball(metric, i, r0)
            if rm_abs[lo : hi + 1].max() > 1.0 / r0**2:
                continue
            ratio = ball_volume(metric, i, r0) / r0**3
            worst = min(worst, ratio)
            checked += 1
    ok = (checked == 0) or worst >= config.kappa
    return {"monitor": "noncollapse", "ok": bool(ok),
            "worst_ratio": (None if checked == 0 else float(worst)),
            "n_checked": checked}


def run_all(metric: WarpedMetric, t: float,
            config: MonitorConfig = MonitorConfig(),
            noncollapse_r: float | None = None) -> list[dict]:
    """Pointwise monitors for one component snapshot."""
    reports = [check_pinching(metric, t, config), check_rmin(metric, t, config)]
    if noncollapse_r is not None:
        reports.append(check_noncollapse(metric, noncollapse_r, config))
    return reports

"""The standard solution: Ricci flow from the capped half-infinite cylinder.

The initial datum is a smoothed hemisphere glued to the psi = sqrt(2)
cylinder (scalar curvature 1); the flow is integrated on a truncated domain
with the far end pinned to the exactly shrinking cylinder.  The sampled
profiles serve as the model for glued surgery caps and as the comparison
target for post-surgery closeness checks.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, replace

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import NotComparable, StandardBlowUp
from .flow import FlowState, step
from .geometry import (
    CAP,
    OPEN,
    WarpedMetric,
    core_fields,
    curvature_of,
    read_snapshot,
    write_snapshot,
)

#: truncation length of the half-infinite domain (scaled units)
L_STD = 40.0
T_END_DEFAULT = 0.95


def smooth_step(u):
    """C^inf monotone step: 0 for u <= 0, 1 for u >= 1."""
    u = np.clip(u, 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        a = np.where(u > 0, np.exp(-1.0 / np.maximum(u, 1e-300)), 0.0)
        b = np.where(u < 1, np.exp(-1.0 / np.maximum(1.0 - u, 1e-300)), 0.0)
    return a / (a + b)


def build_initial_cap(smoothing: float, n: int = 2048,
                      L: float = L_STD) -> WarpedMetric:
    """Capped half-infinite cylinder with nonnegative sectional curvature.

    The slope profile is the hemisphere's cos(s/sqrt(2)) rolled off to zero
    by a smooth step over the last `smoothing` fraction of the quarter
    period, then the whole profile is homothetically rescaled so the tail
    radius is exactly sqrt(2) (scalar curvature 1).  Slope in [0, 1] and
    non-increasing => both sectional curvatures are nonnegative.
    """
    if not 0.0 < smoothing < 0.5:
        raise ValueError("smoothing must lie in (0, 1/2)")
    s = np.linspace(0.0, L, n)
    u = s / np.sqrt(2.0)
    u_end = np.pi / 2.0
    roll = 1.0 - smooth_step((u - (1.0 - smoothing) * u_end)
                             / (smoothing * u_end))
    slope = np.where(u < u_end, np.cos(np.minimum(u, u_end)) * roll, 0.0)
    psi = np.concatenate([[0.0], np.cumsum(0.5 * (slope[1:] + slope[:-1])
                                           * np.diff(s))])
    # homothety: scale lengths so the tail radius is exactly sqrt(2)
    c = np.sqrt(2.0) / psi[-1]
    s_new, psi_new = s * c, psi * c
    i_flat = int(np.searchsorted(slope <= 0, True))
    psi_new[i_flat:] = np.sqrt(2.0)  # exact cylinder tail
    grid = np.linspace(0.0, s_new[-1], n)
    psi_grid = CubicSpline(s_new, psi_new)(grid)
    psi_grid[0] = 0.0
    psi_grid[grid >= s_new[i_flat]] = np.sqrt(2.0)
    return WarpedMetric(grid_x=grid, phi=np.ones(n), psi=psi_grid,
                        bc_left=CAP, bc_right=OPEN)


@dataclass(frozen=True)
class StandardSolutionTable:
    """Sampled profiles of the standard solution on [0, t_end]."""

    times: np.ndarray
    profiles: list          # WarpedMetric per time
    c_std: float            # fitted floor of R_min(t) (1 - t)
    smoothing: float
    t_end: float

    @property
    def cap_center(self) -> int:
        return 0

    def profile_at(self, t: float) -> WarpedMetric:
        """Nearest-sample profile (times are densely sampled)."""
        i = int(np.clip(np.searchsorted(self.times, t), 0, len(self.times) - 1))
        if i > 0 and abs(self.times[i - 1] - t) < abs(self.times[i] - t):
            i -= 1
        return self.profiles[i]


def precompute(init: WarpedMetric, t_end: float = T_END_DEFAULT,
               sample_dt: float = 0.01, c_cfl: float = 0.4,
               smoothing: float = 0.2) -> StandardSolutionTable:
    """Integrate the standard solution to t_end, sampling every sample_dt.

    The far end is pinned to the exactly shrinking cylinder
    psi = sqrt(2(1 - t)); blow-up before t_end raises StandardBlowUp.
    """
    state = FlowState({"std": init})
    times, profiles = [0.0], [init]
    rmin_floor = np.inf
    next_sample = sample_dt
    while state.t < t_end:
        try:
            state = step(state, min(sample_dt, t_end - state.t), c_cfl=c_cfl)
        except Exception as exc:  # StepCollapse or profile collapse
            raise StandardBlowUp(f"standard solution lost at t={state.t:.4f}: {exc}")
        m = state.components["std"]
        psi = m.psi.copy()
        psi[-2:] = np.sqrt(2.0 * (1.0 - state.t))   # exact cylinder far end
        m = replace(m, psi=psi, time=state.t)
        state.components["std"] = m
        if not np.isfinite(m.psi).all() or m.psi[1:].min() <= 0:
            raise StandardBlowUp(f"standard solution lost at t={state.t:.4f}")
        if state.t >= next_sample or state.t >= t_end:
            R = curvature_of(m).R
            rmin_floor = min(rmin_floor, float(R.min()) * (1.0 - state.t))
            times.append(state.t)
            profiles.append(m)
            next_sample += sample_dt
    return StandardSolutionTable(times=np.array(times), profiles=profiles,
                                 c_std=rmin_floor, smoothing=smoothing,
                                 t_end=t_end)


def save_table(table: StandardSolutionTable, dirpath: str) -> None:
    os.makedirs(dirpath, exist_ok=True)
    for i, m in enumerate(table.profiles):
        write_snapshot(m, f"std-{i:05d}", os.path.join(dirpath, f"std-{i:05d}.dat"))
    index = {"times": [float(t) for t in table.times],
             "c_std": table.c_std, "smoothing": table.smoothing,
             "t_end": table.t_end}
    with open(os.path.join(dirpath, "index.json"), "w") as fh:
        json.dump(index, fh, indent=1)


def load_table(dirpath: str) -> StandardSolutionTable:
    with open(os.path.join(dirpath, "index.json")) as fh:
        index = json.load(fh)
    profiles = []
    for i in range(len(index["times"])):
        m, _ = read_snapshot(os.path.join(dirpath, f"std-{i:05d}.dat"))
        profiles.append(m)
    return StandardSolutionTable(times=np.array(index["times"]),
                                 profiles=profiles, c_std=index["c_std"],
                                 smoothing=index["smoothing"],
                                 t_end=index["t_end"])


def _cap_view(metric: WarpedMetric):
    """(s from the pole, psi, sign) with the cap pole at s = 0."""
    if metric.bc_left == CAP:
        s = metric.arclength()
        return s, metric.psi, +1
    if metric.bc_right == CAP:
        s = metric.arclength()
        return (s[-1] - s)[::-1], metric.psi[::-1], -1
    raise NotComparable("candidate has no cap pole")


def compare(table: StandardSolutionTable, candidate: WarpedMetric,
            h: float, A: float, theta: float | None = None) -> float:
    """Sup deviation of (psi, psi_s, R) from the standard solution.

    The candidate is rescaled by h^-2 (lengths by 1/h) and its pole aligned
    with the standard cap center; deviations are measured over the ball
    B(pole, A) in rescaled arclength against the table profile at rescaled
    time theta (default: the candidate's own rescaled time).
    """
    cand = candidate.rescaled(1.0 / h, shift_time=False)
    if theta is None:
        theta = candidate.time / h**2
    std = table.profile_at(theta)
    s_c, psi_c, _ = _cap_view(cand)
    s_t, psi_t, _ = _cap_view(std)
    span = min(A, s_c[-1], s_t[-1])
    grid = np.linspace(0.0, span, 257)
    f_c = core_fields(cand)
    f_t = core_fields(std)
    R_c = 2.0 * f_c["K_sph"] + 4.0 * f_c["K_mix"]
    R_t = 2.0 * f_t["K_sph"] + 4.0 * f_t["K_mix"]
    if cand.bc_left != CAP:   # reversed view flips psi_s sign
        order = slice(None, None, -1)
        ps_c = -f_c["psi_s"][order]
        R_cv = R_c[order]
    else:
        ps_c = f_c["psi_s"]
        R_cv = R_c
    dev = 0.0
    for val_c, val_t, rel in ((psi_c, psi_t, False),
                              (ps_c, f_t["psi_s"], False),
                              (R_cv, R_t, True)):
        a = np.interp(grid, s_c, val_c)
        b = np.interp(grid, s_t, val_t)
        d = np.abs(a - b)
        if rel:
            # R grows like (1 - theta)^-1 on the cap; an absolute sup there
            # would dwarf the O(1) profile deviations the score measures
            d = d / np.maximum(1.0, np.abs(b))
        dev = max(dev, float(d.max()))
    return dev

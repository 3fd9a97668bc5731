"""Time integration of Ricci flow in the reduced warped-product variables.

With g = phi^2 dx^2 + psi^2 g_{S^2} and the coordinate grid held fixed,
dg/dt = -2 Ric reduces to the coupled reaction-diffusion system

    psi_t = psi_ss - (1 - psi_s^2)/psi      (spherical factor)
    phi_t = 2 phi psi_ss / psi              (radial factor)

where s is arclength.  Both right-hand sides extend smoothly to cap ends:
psi stays pinned at zero and phi_t -> -2 phi K_mix there.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.interpolate import CubicSpline, PchipInterpolator

from .errors import InsufficientHistory, StepCollapse
from .geometry import CAP, WarpedMetric, core_fields, curvature_of, deriv_s, deriv_ss

EVOLVING = "evolving"
SINGULAR = "singular"
EXTINCT = "extinct"

#: curvature-CFL safety factor for the explicit stepper
C_CFL = 0.1
DT_MIN = 1e-14


def ricci_rhs(metric: WarpedMetric) -> tuple[np.ndarray, np.ndarray]:
    """(phi_t, psi_t) realizing dg/dt = -2 Ric on the fixed coordinate grid."""
    f = core_fields(metric)
    # (1 - psi_s^2)/psi = K_sph * psi stays finite and -> 0 at poles
    psi_t = f["psi_ss"] - f["K_sph"] * metric.psi
    phi_t = -2.0 * metric.phi * f["K_mix"]   # = 2 phi psi_ss / psi
    if metric.bc_left == CAP:
        psi_t[0] = 0.0
    if metric.bc_right == CAP:
        psi_t[-1] = 0.0
    return phi_t, psi_t


class History:
    """Recent raw snapshots plus a strided long-range ring buffer.

    The raw tail serves finite-difference self-checks; the strided buffer
    covers long rescaled-time windows (neck history checks) at bounded
    memory, doubling its stride whenever it fills.
    """

    def __init__(self, maxlen: int = 256):
        self.recent = deque(maxlen=4)
        self.samples: list[tuple[float, WarpedMetric]] = []
        self.maxlen = maxlen
        self.stride = 1
        self._count = 0

    def append(self, t: float, metric: WarpedMetric) -> None:
        self.recent.append((t, metric))
        if self._count % self.stride == 0:
            self.samples.append((t, metric))
            if len(self.samples) >= self.maxlen:
                self.samples = self.samples[::2]
                self.stride *= 2
        self._count += 1

    def span(self) -> float:
        if not self.samples:
            return 0.0
        return self.samples[-1][0] - self.samples[0][0]


@dataclass
class FlowState:
    """All components of the evolving manifold at a shared time."""

    components: dict[str, WarpedMetric]
    t: float = 0.0
    status: dict[str, str] = field(default_factory=dict)
    history: dict[str, History] = field(default_factory=dict)
    ledger: object = None

    def __post_init__(self):
        for cid in self.components:
            self.status.setdefault(cid, EVOLVING)
            self.history.setdefault(cid, History())

    def evolving(self) -> dict[str, WarpedMetric]:
        return {cid: m for cid, m in self.components.items()
                if self.status[cid] == EVOLVING}


@dataclass(frozen=True)
class SingularityReport:
    """A component whose curvature crossed the singular threshold."""

    component: str
    max_R: float
    locus: np.ndarray          # boolean mask: R >= threshold
    omega_mask: np.ndarray     # boolean mask: R below the bounded threshold
    threshold: float


def _rm_max(metric: WarpedMetric) -> float:
    f = core_fields(metric)
    return float(max(np.abs(f["K_sph"]).max(), np.abs(f["K_mix"]).max()))


def stable_dt(metric: WarpedMetric, dt_max: float, c_cfl: float = C_CFL) -> float:
    s = metric.arclength()
    ds_min = float(np.diff(s).min())
    rm = _rm_max(metric)
    dt = min(dt_max, c_cfl * ds_min**2)
    if rm > 0:
        dt = min(dt, c_cfl / rm)
    return dt


def _advance(metric: WarpedMetric, dt: float) -> WarpedMetric:
    """One Heun (RK2) step of the reduced system."""
    phi_t1, psi_t1 = ricci_rhs(metric)
    mid = replace(metric, phi=metric.phi + dt * phi_t1, psi=metric.psi + dt * psi_t1)
    if np.any(mid.phi <= 0) or np.any(mid.psi[1:-1] <= 0):
        raise FloatingPointError("intermediate profile collapsed")
    phi_t2, psi_t2 = ricci_rhs(mid)
    phi_new = metric.phi + 0.5 * dt * (phi_t1 + phi_t2)
    psi_new = metric.psi + 0.5 * dt * (psi_t1 + psi_t2)
    if np.any(phi_new <= 0) or np.any(psi_new[1:-1] <= 0):
        raise FloatingPointError("profile collapsed after step")
    return replace(metric, phi=phi_new, psi=psi_new, time=metric.time + dt)


def step(state: FlowState, dt_max: float, c_cfl: float = C_CFL) -> FlowState:
    """Advance all evolving components by one shared stable step.

    Halves dt and retries when an explicit step overshoots into a
    degenerate profile; raises StepCollapse below DT_MIN.
    """
    live = state.evolving()
    if not live:
        raise StepCollapse("no evolving components to step")
    dt = min(stable_dt(m, dt_max, c_cfl) for m in live.values())
    while True:
        if dt < DT_MIN:
            raise StepCollapse(f"dt underflow ({dt:.3e}) at t={state.t:.6g}")
        try:
            stepped = {cid: _advance(m, dt) for cid, m in live.items()}
            break
        except FloatingPointError:
            dt *= 0.5
    components = dict(state.components)
    components.update(stepped)
    t_new = state.t + dt
    new = FlowState(components=components, t=t_new, status=dict(state.status),
                    history=state.history, ledger=state.ledger)
    for cid, m in stepped.items():
        new.history[cid].append(t_new, m)
    return new


def detect_singularity(state: FlowState, r: float,
                       singularity_factor: float = 1e4,
                       omega_bound: float | None = None):
    """First evolving component with max R >= singularity_factor * r^-2.

    omega_mask marks where curvature stays below the bounded-curvature
    threshold (default: half the singular threshold).
    """
    threshold = singularity_factor / r**2
    bound = omega_bound if omega_bound is not None else 0.5 * threshold
    for cid, m in state.evolving().items():
        R = curvature_of(m).R
        mx = float(R.max())
        if mx >= threshold:
            return SingularityReport(component=cid, max_R=mx,
                                     locus=R >= threshold,
                                     omega_mask=R <= bound,
                                     threshold=threshold)
    return None


def regrid(metric: WarpedMetric, n_target: int | None = None,
           curvature_weight: float = 1.0) -> WarpedMetric:
    """Resample onto an arclength grid equidistributing length + curvature.

    The new coordinate is arclength itself (phi = 1), with nodes placed by
    inverting the monotone density  W(s) = s/L + w * C(s)/C(L),  where C
    accumulates sqrt(max(|K_sph|, |K_mix|)).  Monotone cubic (pchip)
    interpolation keeps psi positive and pole values exact.
    """
    n = n_target if n_target is not None else metric.n
    s = metric.arclength()
    f = core_fields(metric)
    dens = np.sqrt(np.maximum(np.abs(f["K_sph"]), np.abs(f["K_mix"])))
    C = np.concatenate([[0.0], np.cumsum(0.5 * (dens[1:] + dens[:-1]) * np.diff(s))])
    W = s / s[-1]
    if C[-1] > 0:
        W = (W + curvature_weight * C / C[-1]) / (1.0 + curvature_weight)
    W, uniq = np.unique(W, return_index=True)
    s_of_W = PchipInterpolator(W, s[uniq])
    s_new = s_of_W(np.linspace(0.0, 1.0, n))
    s_new[0], s_new[-1] = s[0], s[-1]
    # C^2 interpolation of psi: re-differentiated curvature keeps order 2,
    # which a C^1 (monotone-cubic) interpolant would destroy near poles
    psi_new = CubicSpline(s, metric.psi)(s_new)
    if np.any(psi_new[1:-1] <= 0):
        psi_new = PchipInterpolator(s, metric.psi)(s_new)  # positivity fallback
    # near caps interpolate the smooth even ratio psi/s instead: a direct
    # interpolant carries an end-slope error that (1 - psi_s^2)/psi^2
    # amplifies right next to the pole
    for end in ("left", "right"):
        bc = metric.bc_left if end == "left" else metric.bc_right
        if bc != CAP:
            continue
        s_loc = s if end == "left" else s[-1] - s[::-1]
        sn_loc = s_new if end == "left" else s_new[-1] - s_new[::-1]
        psi_loc = metric.psi if end == "left" else metric.psi[::-1]
        w = max(6, int(np.searchsorted(s_loc, 0.1 * s[-1])))
        w = min(w, metric.n // 3)
        y = np.empty(w)
        y[1:] = psi_loc[1:w] / s_loc[1:w]
        s1, s2 = s_loc[1], s_loc[2]
        y[0] = (y[1] * s2**2 - y[2] * s1**2) / (s2**2 - s1**2)  # even limit
        k = int(np.searchsorted(sn_loc, s_loc[w - 2]))
        spl = CubicSpline(s_loc[:w], y, bc_type=((1, 0.0), "not-a-knot"))
        vals = sn_loc[:k] * spl(sn_loc[:k])
        if end == "left":
            psi_new[:k] = vals
        else:
            psi_new[n - k:] = vals[::-1]
    if metric.bc_left == CAP:
        psi_new[0] = 0.0
    if metric.bc_right == CAP:
        psi_new[-1] = 0.0
    return replace(metric, grid_x=s_new, phi=np.ones(n), psi=psi_new)


def laplacian_radial(metric: WarpedMetric, u: np.ndarray) -> np.ndarray:
    """Laplace-Beltrami of a radial scalar: u_ss + 2 (psi_s/psi) u_s.

    At cap ends the limit is 3 u_ss (both u_s and psi vanish linearly).
    """
    f = core_fields(metric)
    u_s = deriv_s(metric, u)
    u_ss = deriv_ss(metric, u)
    with np.errstate(divide="ignore", invalid="ignore"):
        drift = 2.0 * f["psi_s"] / metric.psi * u_s
    lap = u_ss + drift
    if metric.bc_left == CAP:
        lap[0] = 3.0 * u_ss[0]
    if metric.bc_right == CAP:
        lap[-1] = 3.0 * u_ss[-1]
    return lap


def scalar_evolution_residual(history, point: int) -> float:
    """|R_t - (Delta R + 2 |Ric|^2)| at a grid point, from recent snapshots.

    Integrator self-check: the scalar curvature of any Ricci flow satisfies
    R_t = Delta R + 2 |Ric|^2.  Uses a centered difference in time over the
    last three raw snapshots (which must share one grid).
    """
    snaps = list(history.recent) if isinstance(history, History) else list(history)
    if len(snaps) < 3:
        raise InsufficientHistory("need at least 3 snapshots for the residual")
    (t0, m0), (t1, m1), (t2, m2) = snaps[-3:]
    R0 = curvature_of(m0).R
    c1 = curvature_of(m1)
    R2 = curvature_of(m2).R
    R_t = (R2[point] - R0[point]) / (t2 - t0)
    lap = laplacian_radial(m1, c1.R)[point]
    ric2 = (2.0 * c1.K_mix[point]) ** 2 + 2.0 * (c1.K_sph[point] + c1.K_mix[point]) ** 2
    return float(abs(R_t - lap - 2.0 * ric2))

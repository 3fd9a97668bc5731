"""Canonical-neighborhood classification and near-singular decomposition.

Classifies points of a rotationally symmetric component as necks, caps, or
round components by sup-norm comparison with the scaled model geometries,
and decomposes the bounded-curvature region at a singular time into typed
pieces (tubes, caps, horns, double horns, capped horns).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DecompositionIncomplete, NotApplicable
from .geometry import CAP, WarpedMetric, core_fields, curvature_of, volume_between

NECK = "Neck"
STRONG_NECK = "StrongNeck"
CAP_CLASS = "Cap"
ROUND = "RoundComponent"
TUBE = "Tube"
HORN = "Horn"
DOUBLE_HORN = "DoubleHorn"
CAPPED_HORN = "CappedHorn"
NONE = "None"

#: default canonical-neighborhood constants
EPS_DEFAULT = 0.1
C1_DEFAULT = 10.0


@dataclass(frozen=True)
class NeighborhoodClass:
    kind: str
    r: float
    center: int
    quality: float


def _neck_quality(metric: WarpedMetric, i: int, r: float, eps: float,
                  fields=None) -> float:
    """Sup deviation from the radius-r cylinder over arclength 2/eps*r.

    C^1-proxy norm: max of |psi/r - 1| and |psi_s| over the window; inf if
    the window leaves the component.
    """
    s = metric.arclength()
    half = r / eps
    if s[i] - half < s[0] - 1e-12 or s[i] + half > s[-1] + 1e-12:
        return np.inf
    lo = int(np.searchsorted(s, s[i] - half))
    hi = int(np.searchsorted(s, s[i] + half, side="right"))
    f = fields if fields is not None else core_fields(metric)
    dev_r = np.abs(metric.psi[lo:hi] / r - 1.0)
    dev_s = np.abs(f["psi_s"][lo:hi])
    return float(max(dev_r.max(), dev_s.max()))


def _round_quality(curv) -> float:
    """Relative oscillation of the sectional curvatures over the component."""
    k = np.concatenate([curv.K_sph, curv.K_mix])
    scale = max(abs(k.max()), abs(k.min()), 1e-300)
    return float((k.max() - k.min()) / scale)


def _strong_neck_quality(metric, history, i: int, r: float, eps: float) -> float:
    """Deviation of the backward history from the exactly shrinking cylinder.

    On the model, psi^2 grows backward in time as psi^2 + 2*dt.  Samples the
    neck's minimal radius at earlier times (over rescaled time 1, i.e. dt up
    to r^2) and compares with the model prediction, on top of the current
    spatial neck quality.
    """
    q = _neck_quality(metric, i, r, eps)
    if not np.isfinite(q):
        return np.inf
    samples = [hs for hs in getattr(history, "samples", []) or []]
    if not samples:
        return np.inf
    t_now = metric.time
    psi_now = metric.psi[i]
    center = float(metric.arclength()[i])
    got_depth = False
    for t_h, m_h in samples:
        dt = t_now - t_h
        if dt <= 0 or dt > r**2:
            continue
        if dt > 0.5 * r**2:
            got_depth = True
        model = np.sqrt(psi_now**2 + 2.0 * dt)
        # the neck radius at the earlier time: local minimum of psi near
        # the same arclength position (a component-wide minimum would pick
        # up the zeros at cap poles)
        s_h = m_h.arclength()
        win = np.abs(s_h - center) <= r / eps
        if not win.any():
            return np.inf
        q = max(q, float(abs(m_h.psi[win].min() / model - 1.0)))
    if not got_depth:
        return np.inf  # history does not reach one rescaled time unit back
    return q


def classify_point(metric: WarpedMetric, i: int, eps: float = EPS_DEFAULT,
                   history=None, C1: float = C1_DEFAULT) -> NeighborhoodClass:
    """Best canonical-neighborhood class at grid point i.

    Searches neck radii r in [C1^-1 R^-1/2, C1 R^-1/2]; cap = a pole within
    C1 R^-1/2 whose outward collar is a neck; round = componentwide relative
    curvature oscillation below eps.  Ties go to the smaller quality; among
    equals, Neck wins (surgery only ever cuts necks).  Raises NotApplicable
    when R(i) <= 0.
    """
    curv = curvature_of(metric)
    R_i = curv.R[i]
    if R_i <= 0:
        raise NotApplicable("canonical classes need R > 0 at the query point")
    r_canon = 1.0 / np.sqrt(R_i)
    f = core_fields(metric)

    rq = _round_quality(curv)
    if rq <= eps:
        return NeighborhoodClass(ROUND, r_canon, i, rq)

    # neck search over geometrically sampled radii; seed with the local psi
    best_kind, best_r, best_q = NONE, r_canon, np.inf
    radii = list(np.geomspace(r_canon / C1, r_canon * C1, 9))
    if metric.psi[i] > 0:
        radii.append(float(metric.psi[i]))
    for r in radii:
        q = _neck_quality(metric, i, r, eps, fields=f)
        if q < best_q:
            best_q, best_r = q, r
    if best_q <= eps:
        best_kind = NECK
        if history is not None:
            sq = _strong_neck_quality(metric, history, i, best_r, eps)
            if sq <= eps:
                return NeighborhoodClass(STRONG_NECK, best_r, i, sq)
        return NeighborhoodClass(best_kind, best_r, i, best_q)

    # cap test: a pole within C1 * canonical radius whose collar is a neck
    s = metric.arclength()
    for end, pole in (("left", 0), ("right", metric.n - 1)):
        bc = metric.bc_left if end == "left" else metric.bc_right
        if bc != CAP:
            continue
        d_pole = abs(s[i] - s[pole])
        if d_pole > C1 * r_canon:
            continue
        # collar center: clear of the polar cap (extent ~ pi/2 * r) plus one
        # neck half-window
        r_col = metric.psi[i] if metric.psi[i] > 0 else r_canon
        off = (np.pi / 2.0 + 1.0 + 1.0 / eps) * r_col
        s_col = s[pole] + off if end == "left" else s[pole] - off
        j = int(np.clip(np.searchsorted(s, s_col), 0, metric.n - 1))
        r_j = metric.psi[j] if metric.psi[j] > 0 else r_canon
        q = _neck_quality(metric, j, r_j, eps, fields=f)
        if q <= eps and q < best_q:
            return NeighborhoodClass(CAP_CLASS, r_canon, i, q)
    return NeighborhoodClass(NONE, best_r, i, best_q)


@dataclass(frozen=True)
class OmegaDecomposition:
    omega: np.ndarray        # boolean: bounded-curvature region
    omega_rho: np.ndarray    # boolean: R <= rho^-2
    pieces: list             # dicts: kind, i_lo, i_hi


def decompose_omega(metric: WarpedMetric, rho: float, eps: float = EPS_DEFAULT,
                    omega_bound: float | None = None,
                    verify_necks: bool = True) -> OmegaDecomposition:
    """Split the bounded-curvature region into typed pieces.

    omega = {R <= omega_bound} (default 10 * rho^-2), omega_rho =
    {R <= rho^-2}.  Each maximal omega interval is labeled from the types
    of its two ends (cap end / curvature blow-up end) and whether it meets
    omega_rho; horn ends are verified to carry an eps-neck near their deep
    end.  Raises DecompositionIncomplete when that verification fails.
    """
    R = curvature_of(metric).R
    bound = omega_bound if omega_bound is not None else 10.0 / rho**2
    omega = R <= bound
    omega_rho = R <= 1.0 / rho**2
    pieces = []
    n = metric.n
    idx = np.flatnonzero(omega)
    if idx.size == 0:
        return OmegaDecomposition(omega, omega_rho, [])
    # maximal runs of omega
    splits = np.flatnonzero(np.diff(idx) > 1)
    starts = np.concatenate([[idx[0]], idx[splits + 1]])
    ends = np.concatenate([idx[splits], [idx[-1]]])
    for i_lo, i_hi in zip(starts, ends):
        # an end is "hot" only when curvature blows up past it inside the
        # grid; cap ends and open domain boundaries are regular ends
        has_rho = bool(omega_rho[i_lo : i_hi + 1].any())
        hot_ends = int(i_lo > 0) + int(i_hi < n - 1)
        if hot_ends == 0:
            kind = TUBE if has_rho else ROUND
        elif hot_ends == 2:
            kind = TUBE if has_rho else DOUBLE_HORN
            if has_rho:
                # tube through omega_rho flanked by two horns
                pieces.append({"kind": HORN, "i_lo": int(i_lo),
                               "i_hi": int(np.flatnonzero(omega_rho[i_lo:i_hi + 1])[0] + i_lo)})
                pieces.append({"kind": HORN,
                               "i_lo": int(np.flatnonzero(omega_rho[i_lo:i_hi + 1])[-1] + i_lo),
                               "i_hi": int(i_hi)})
        else:
            kind = HORN if has_rho else CAPPED_HORN
        pieces.append({"kind": kind, "i_lo": int(i_lo), "i_hi": int(i_hi)})
    if verify_necks:
        for p in pieces:
            if p["kind"] not in (HORN, DOUBLE_HORN):
                continue
            ok = _verify_horn_neck(metric, p, eps)
            if not ok:
                raise DecompositionIncomplete(
                    "horn fails the eps-neck test near its deep end",
                    (p["i_lo"], p["i_hi"]))
    return OmegaDecomposition(omega, omega_rho, pieces)


def _verify_horn_neck(metric: WarpedMetric, piece: dict, eps: float) -> bool:
    """An eps-neck must bound the horn near its deep end.

    The neck may sit just past the bounded-curvature boundary (on the hot
    side): the search extends one neck window beyond the deep end.
    """
    f = core_fields(metric)
    s = metric.arclength()
    i_lo, i_hi = piece["i_lo"], piece["i_hi"]
    R = curvature_of(metric).R
    # deep end = side with larger curvature just outside the piece
    deep_first = R[max(i_lo - 1, 0)] > R[min(i_hi + 1, metric.n - 1)]
    if deep_first:
        ext = s[i_lo] - 2.0 * metric.psi[i_lo] / eps
        j0 = int(np.searchsorted(s, ext))
        order = range(j0, i_hi + 1)
    else:
        ext = s[i_hi] + 2.0 * metric.psi[i_hi] / eps
        j1 = min(int(np.searchsorted(s, ext)), metric.n - 1)
        order = range(j1, i_lo - 1, -1)
    for j in order:
        if metric.psi[j] <= 0:
            continue
        q = _neck_quality(metric, j, float(metric.psi[j]), eps, fields=f)
        if q <= eps:
            return True
    return False


def gradient_estimate_check(metric: WarpedMetric, history=None,
                            region=None, eta: float = 10.0,
                            r_threshold: float | None = None) -> dict:
    """max |R_s|/R^(3/2) and |R_t|/R^2 over the high-curvature region.

    Pass iff both ratios stay below eta.  The time ratio needs two recent
    same-grid snapshots; it is skipped (reported None) otherwise.
    """
    from .geometry import deriv_s

    R = curvature_of(metric).R
    mask = np.ones(metric.n, dtype=bool) if region is None else np.asarray(region)
    if r_threshold is not None:
        mask = mask & (R >= 1.0 / r_threshold**2)
    pos = mask & (R > 0)
    if not pos.any():
        return {"monitor": "gradient", "ok": True, "grad_ratio": 0.0,
                "time_ratio": None}
    R_s = deriv_s(metric, R)
    grad_ratio = float(np.max(np.abs(R_s[pos]) / R[pos] ** 1.5))
    time_ratio = None
    recent = list(getattr(history, "recent", []) or [])
    if len(recent) >= 2:
        (t0, m0), (t1, m1) = recent[-2], recent[-1]
        if m0.n == m1.n and np.array_equal(m0.grid_x, m1.grid_x) and t1 > t0:
            R0 = curvature_of(m0).R
            R1 = curvature_of(m1).R
            R_t = (R1 - R0) / (t1 - t0)
            time_ratio = float(np.max(np.abs(R_t[pos]) / R1[pos] ** 2))
    ok = grad_ratio < eta and (time_ratio is None or time_ratio < eta)
    return {"monitor": "gradient", "ok": bool(ok), "grad_ratio": grad_ratio,
            "time_ratio": time_ratio}

"""Cutoff surgery: cut a verified neck, glue a scaled standard cap.

A surgery removes the high-curvature middle of a pinching neck (or the tip
of a horn), rolls the retained side off with a conformal factor e^(-f), and
continues it with a slope-matched rescaling of the standard solution's
initial cap.  The topology ledger tracks the connected-sum word of the
initial manifold through splits and extinctions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from .canonical import EPS_DEFAULT, _neck_quality, _strong_neck_quality
from .errors import (
    GlueRejected,
    LedgerCorrupt,
    ResolutionExhausted,
    SurgeryImpossible,
)
from .geometry import CAP, OPEN, WarpedMetric, core_fields, curvature_of, volume
from .monitors import pinching_phi
from .standard import smooth_step

DELTA_DEFAULT = 0.02
#: arclength half-width of the removed neck middle, in units of h
CUT_HALF_WIDTH = 1.5


def delta_prime(delta: float) -> float:
    """Blend amplitude: a function of delta alone, vanishing with it.

    Kept well below delta: the conformal rolloff e^(-f) shrinks the collar
    radius by a factor e^(-delta'), and since the collar is flattened onto a
    round cylinder before the rolloff, that dip offsets the cap scale from
    the collar radius and is the dominant deviation from the standard
    solution near the glued cap.
    """
    return delta / 10.0


@dataclass
class SurgeryEvent:
    time: float
    parent: str
    cut_index: int
    h: float
    delta: float
    V_before: float
    V_after: float
    children: tuple
    lambda_before: float = math.nan
    lambda_after: float = math.nan
    post_R_positive: bool = False
    cap_scales: dict = None

    def to_dict(self) -> dict:
        return {"kind": "surgery", "time": self.time, "parent": self.parent,
                "cut_index": int(self.cut_index), "h": self.h,
                "delta": self.delta, "V_before": self.V_before,
                "V_after": self.V_after, "children": list(self.children),
                "lambda_before": self.lambda_before,
                "lambda_after": self.lambda_after,
                "post_R_positive": self.post_R_positive,
                "cap_scales": dict(self.cap_scales or {})}


# ---------------------------------------------------------------------------
# topology ledger

S3 = "S3"
UNKNOWN = "Unknown"


@dataclass
class TopologyLedger:
    """Connected-sum word of the initial manifold through surgeries.

    Every summand (live component or extinct piece) carries a tag; the word
    of the initial manifold is the connected sum of all of them.  Splitting
    a component substitutes the two children for the parent, which leaves
    the word invariant by construction.
    """

    tags: dict = field(default_factory=dict)
    live: set = field(default_factory=set)

    @classmethod
    def for_components(cls, component_ids) -> "TopologyLedger":
        led = cls()
        for cid in component_ids:
            led.tags[cid] = UNKNOWN
            led.live.add(cid)
        return led

    def split(self, parent: str, child_a: str, child_b: str) -> None:
        if parent not in self.live:
            raise LedgerCorrupt(f"split of non-live component {parent!r}")
        self.live.remove(parent)
        del self.tags[parent]
        for c in (child_a, child_b):
            if c in self.tags:
                raise LedgerCorrupt(f"duplicate component id {c!r}")
            self.tags[c] = UNKNOWN
            self.live.add(c)

    def cap(self, parent: str, child: str) -> None:
        """Capping a horn is a connected sum with S3: word unchanged."""
        if parent not in self.live:
            raise LedgerCorrupt(f"cap of non-live component {parent!r}")
        self.live.remove(parent)
        tag = self.tags.pop(parent)
        if child in self.tags:
            raise LedgerCorrupt(f"duplicate component id {child!r}")
        self.tags[child] = tag
        self.live.add(child)

    def extinct(self, cid: str, tag: str = S3) -> None:
        if cid not in self.live:
            raise LedgerCorrupt(f"extinction of non-live component {cid!r}")
        if tag != S3:
            raise LedgerCorrupt(
                f"tag {tag!r} cannot arise for capped rotationally "
                f"symmetric components")
        self.live.remove(cid)
        self.tags[cid] = tag

    def word(self) -> str:
        if not self.tags:
            raise LedgerCorrupt("empty ledger")
        parts = sorted(self.tags.values())
        if all(p == S3 for p in parts):
            return S3  # connected sum of spheres is a sphere
        return " # ".join(parts)


def update_ledger(ledger: TopologyLedger, event: SurgeryEvent | None = None,
                  extinctions=None) -> TopologyLedger:
    if event is not None:
        if len(event.children) == 2:
            ledger.split(event.parent, *event.children)
        elif len(event.children) == 1:
            ledger.cap(event.parent, event.children[0])
        else:
            raise LedgerCorrupt(
                f"surgery must leave 1 or 2 children, got {len(event.children)}")
    for cid in (extinctions or []):
        ledger.extinct(cid)
    return ledger


# ---------------------------------------------------------------------------
# cutoff radius

def cutoff_radius(metric: WarpedMetric, history, delta: float, rho: float,
                  region=None, samples: int = 8) -> float:
    """Largest admissible cutoff radius h < delta*rho.

    Downward search: a candidate h is accepted when every sampled point of
    the region with curvature scale R^(-1/2) <= h passes the strong
    delta-neck test against its backward history.  Deterministic given the
    state.  Raises ResolutionExhausted once h falls below four grid cells.
    """
    s = metric.arclength()
    R = curvature_of(metric).R
    mask = np.ones(metric.n, bool) if region is None else np.asarray(region)
    ds_local = float(np.diff(s).min())
    h = 0.9 * delta * rho
    while True:
        if h < 4.0 * ds_local:
            raise ResolutionExhausted(
                f"cutoff radius {h:.3e} below four grid cells ({ds_local:.3e})")
        hot = mask & (R > 0) & (R >= h**-2)
        # the delta-neck window must fit inside the component
        half = metric.psi / delta
        hot &= (s - half >= s[0]) & (s + half <= s[-1])
        idx = np.flatnonzero(hot)
        if idx.size:
            take = idx[np.unique(np.linspace(0, idx.size - 1,
                                             min(samples, idx.size)).astype(int))]
            ok = all(
                _strong_neck_quality(metric, history, int(i),
                                     float(metric.psi[i]), delta) <= delta
                for i in take)
            if ok:
                return h
        # fine steps: the admissible window can be narrow when the neck is
        # short (its ends fail the delta test while the scale floor
        # max(R)^(-1/2) sits just below the failing candidate)
        h *= 0.95


# ---------------------------------------------------------------------------
# the cut itself

def _bump_integral(u):
    return smooth_step(u)


def _cap_profile(std, slope0: float):
    """(s from pole, psi) of the standard initial cap up to slope slope0."""
    cap = std.profiles[0]
    s = cap.arclength()
    psi_s = core_fields(cap)["psi_s"]
    # slope decreases 1 -> 0 along the cap; junction at the last index with
    # slope >= slope0 so slopes match to within one grid cell
    slope0 = min(max(slope0, 1e-3), 0.999)
    j = int(np.flatnonzero(psi_s >= slope0)[-1])
    j = max(j, 4)
    return s[:j + 1], cap.psi[:j + 1]


def _blend_and_cap(s_ret, psi_ret, cut_at_right: bool, h: float,
                   dp: float, std, eps: float) -> WarpedMetric:
    """Retained arclength profile -> capped component.

    Applies the conformal rolloff e^(-f), f = dp * B over a collar of width
    2 h / eps inward from the cut, then appends the slope-matched scaled
    standard cap at the cut end.
    """
    if not cut_at_right:  # work with the cut at the right end, flip back later
        child, c = _blend_and_cap(s_ret[-1] - s_ret[::-1], psi_ret[::-1],
                                  True, h, dp, std, eps)
        L = child.grid_x[-1]
        return WarpedMetric(grid_x=L - child.grid_x[::-1],
                            phi=child.phi[::-1], psi=child.psi[::-1],
                            bc_left=child.bc_right, bc_right=child.bc_left,
                            time=child.time), c
    w = 2.0 * h / eps
    if np.count_nonzero(s_ret >= s_ret[-1] - 2.0 * w) < 4:
        raise GlueRejected(
            f"blend collar 2w={2.0 * w:.3e} spans fewer than 4 grid cells")
    # interpolate the collar onto the round cylinder the cap continues into:
    # the parent neck bulges a few percent away from a cylinder, and that
    # bulge (not the cap) dominates the closeness score near the ball edge.
    # q == 1 on the last 0.8 w, so the collar is an exact cylinder out past
    # the comparison ball and the release ramp (where flattening bends the
    # profile) sits outside it; the mix is a convex combination, keeping psi
    # positive.  Necks steep enough for the ramp to gouge the pinching
    # margin are caught by the caller's invariant check.  The flattening
    # happens before the rolloff so the target is the true neck radius, not
    # the conformally dipped one
    q = _bump_integral((s_ret - (s_ret[-1] - 1.8 * w)) / (1.0 * w))
    psi_ret = (1.0 - q) * psi_ret + q * psi_ret[-1]
    # only the rising (convex) half of the bump integral lies on the
    # retained side; f keeps growing past delta' on the glued cap, so the
    # blended profile stays concave and pinching is not degraded
    f = dp * _bump_integral((s_ret - s_ret[-1] + w) / (2.0 * w))
    fac = np.exp(-f)
    psi_b = psi_ret * fac
    # e^(-2f) g scales radial lengths too
    s_b = np.concatenate([[s_ret[0]], s_ret[0] + np.cumsum(
        0.5 * (fac[1:] + fac[:-1]) * np.diff(s_ret))])
    slope_cut = (psi_b[-1] - psi_b[-2]) / (s_b[-1] - s_b[-2])
    if slope_cut > 1e-8:
        raise SurgeryImpossible(
            f"profile expanding at the cut (slope {slope_cut:.3e})")
    u_cap, psi_cap = _cap_profile(std, max(-slope_cut, 0.0))
    c = psi_b[-1] / psi_cap[-1]
    u_cap, psi_cap = u_cap * c, psi_cap * c
    # resolve the cap on its own scale: pole regularity needs the spacing
    # small against the cap radius c, not against the parent grid
    ds_loc = min(s_b[-1] - s_b[-2], 0.05 * c)
    n_cap = max(8, int(np.ceil(u_cap[-1] / ds_loc)))
    u_new = np.linspace(u_cap[-1], 0.0, n_cap + 1)[1:]  # junction node excluded
    psi_new = CubicSpline(u_cap, psi_cap)(u_new)
    # near the pole interpolate the even ratio psi/u so the resampled
    # profile keeps |psi_s| = 1 there
    u1, u2 = u_cap[1], u_cap[2]
    r1, r2 = psi_cap[1] / u1, psi_cap[2] / u2
    ratio = psi_cap / np.where(u_cap > 0, u_cap, 1.0)
    ratio[0] = (r1 * u2**2 - r2 * u1**2) / (u2**2 - u1**2)
    rat_sp = CubicSpline(u_cap, ratio, bc_type=((1, 0.0), "not-a-knot"))
    near = u_new < 0.3 * u_cap[-1]
    psi_new[near] = rat_sp(u_new[near]) * u_new[near]
    psi_new[-1] = 0.0
    s_all = np.concatenate([s_b, s_b[-1] + (u_cap[-1] - u_new)])
    psi_all = np.concatenate([psi_b, psi_new])
    # smooth the C^1 junction: refit psi through nodes away from the seam
    j = len(s_b) - 1
    keep = np.ones(s_all.size, bool)
    keep[max(1, j - 2):min(s_all.size - 2, j + 3)] = False
    psi_all = np.where(keep, psi_all,
                       CubicSpline(s_all[keep], psi_all[keep])(s_all))
    m = WarpedMetric(grid_x=s_all - s_all[0], phi=np.ones(s_all.size),
                     psi=psi_all, bc_left=CAP if psi_all[0] == 0 else OPEN,
                     bc_right=CAP)
    # c is the factor the standard cap was scaled by; it is the natural
    # scale for comparing the glued region back to the standard solution
    return m, c


def _pinching_worst(metric: WarpedMetric, t: float, mask) -> float:
    """Worst pinching margin over the masked points where the bound binds.

    Matches the pointwise monitor: points with rm_min (t+1) >= -1 carry no
    content and report a zero margin.
    """
    curv = curvature_of(metric)
    active = np.asarray(mask, bool) & (curv.rm_min * (t + 1.0) < -1.0)
    if not np.any(active):
        return 0.0
    val = (curv.rm_min[active]
           + pinching_phi(curv.R[active] * (t + 1.0)) * curv.R[active])
    return float(min(val.min(), 0.0))


def _find_cuts(metric: WarpedMetric, h: float, i_lo: int, i_hi: int,
               mode: str):
    """Innermost indices where the curvature scale crosses h."""
    R = curvature_of(metric).R
    scale = np.where(R > 0, R, np.nan) ** -0.5
    hot = np.zeros(metric.n, bool)
    hot[i_lo:i_hi + 1] = np.nan_to_num(scale[i_lo:i_hi + 1], nan=np.inf) <= h
    idx = np.flatnonzero(hot)
    if idx.size == 0:
        raise SurgeryImpossible(f"no point with curvature scale <= h={h:.3e}")
    if mode == "split":
        return int(idx[0]), int(idx[-1])
    return (int(idx[-1]),) if mode == "cap_left" else (int(idx[0]),)


def perform_surgery(metric: WarpedMetric, h: float, delta: float, std,
                    *, parent_id: str = "c0", mode: str = "split",
                    history=None, i_lo: int | None = None,
                    i_hi: int | None = None, eps: float = EPS_DEFAULT,
                    pinching_tol: float = 1e-6):
    """Cut the component at curvature scale h and glue standard caps.

    mode "split" removes the neck middle (run of curvature scale <= h inside
    [i_lo, i_hi]) and returns two capped children; "cap_left"/"cap_right"
    removes everything on that side of the single cut and returns one child.
    The conformal blend amplitude delta' is halved and the glue retried when
    the pinching monitor worsens by more than pinching_tol.
    """
    n = metric.n
    i_lo = 0 if i_lo is None else i_lo
    i_hi = n - 1 if i_hi is None else i_hi
    t = metric.time
    cuts = _find_cuts(metric, h, i_lo, i_hi, mode)
    s = metric.arclength()
    for i in cuts:
        q = (_strong_neck_quality(metric, history, i, float(metric.psi[i]),
                                  delta) if history is not None
             else _neck_quality(metric, i, float(metric.psi[i]), delta))
        if q > delta:
            raise SurgeryImpossible(
                f"no admissible delta-neck at cut index {i} (quality {q:.3f})")
    V_before = volume(metric)
    w_need = 2.0 * h / eps

    def retained(side: str, i_cut: int):
        if side == "left":
            keep = s <= s[i_cut] + 1e-15
            return s[keep], metric.psi[keep], True
        keep = s >= s[i_cut] - 1e-15
        return s[keep], metric.psi[keep], False

    pieces = []
    if mode == "split":
        pieces = [retained("left", cuts[0]), retained("right", cuts[1])]
        child_ids = (f"{parent_id}.a", f"{parent_id}.b")
    else:
        side = "right" if mode == "cap_left" else "left"
        pieces = [retained(side, cuts[0])]
        child_ids = (f"{parent_id}.a",)
    for s_ret, _, _ in pieces:
        if s_ret[-1] - s_ret[0] < 2.0 * w_need:
            raise SurgeryImpossible("retained side shorter than the blend collar")

    dp = delta_prime(delta)
    # reference for the pinching check: the component-wide monitor minimum.
    # The glued material may sit below the removed neck's local value (the
    # neck is at curvature scale h^-2 where the monitor is huge), but must
    # never undercut the component minimum the run-level monitor tracks.
    pin_before = _pinching_worst(metric, t, np.ones(n, bool))
    last_err = None
    for _ in range(4):
        try:
            children, cap_masks, cap_scales = {}, {}, {}
            for cid, (s_ret, psi_ret, at_right) in zip(child_ids, pieces):
                child, cscale = _blend_and_cap(s_ret, psi_ret, at_right, h,
                                               dp, std, eps)
                child = child.with_time(t)
                cap_scales[cid] = float(cscale)
                child.validate()
                n_ret = s_ret.size
                mask = np.zeros(child.n, bool)
                if at_right:
                    mask[n_ret + 1:] = True   # strictly beyond the junction
                else:
                    mask[:child.n - n_ret - 1] = True
                children[cid] = child
                cap_masks[cid] = mask
            # invariants on the glued metrics
            for cid, child in children.items():
                curv = curvature_of(child)
                cm = cap_masks[cid]
                if cm.any() and curv.rm_min[cm].min() <= 0:
                    raise GlueRejected(
                        f"nonpositive sectional curvature on the glued cap "
                        f"of {cid} (min {curv.rm_min[cm].min():.3e})")
                s_c = child.arclength()
                cap_lo, cap_hi = s_c[cm].min(), s_c[cm].max()
                modified = ((s_c >= cap_lo - 2.0 * w_need)
                            & (s_c <= cap_hi + 2.0 * w_need))
                # slack scaled to the local value absorbs finite-difference
                # noise at curvature scale h^-2; the run-level monitor still
                # compares whole components at tolerance pinching_tol
                slack = pinching_tol + 1e-3 * max(1.0, abs(pin_before))
                if _pinching_worst(child, t, modified) < pin_before - slack:
                    raise GlueRejected(
                        f"pinching worsened on the modified region of {cid}")
            break
        except GlueRejected as exc:
            last_err = exc
            dp *= 0.5
    else:
        raise last_err
    V_after = sum(volume(c) for c in children.values())
    drop = V_before - V_after
    if drop < h**3:
        raise GlueRejected(
            f"volume drop {drop:.3e} below h^3 = {h**3:.3e}")
    post_R_positive = all(curvature_of(c).R.min() > 0
                          for c in children.values())
    event = SurgeryEvent(time=t, parent=parent_id, cut_index=int(cuts[0]),
                         h=h, delta=delta, V_before=V_before,
                         V_after=V_after, children=child_ids,
                         post_R_positive=post_R_positive,
                         cap_scales=cap_scales)
    return children, event

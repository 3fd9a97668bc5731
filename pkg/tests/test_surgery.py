"""Cutoff surgery: cutoff radius search, the cut itself, topology ledger."""

import numpy as np
import pytest

from ricciflow.errors import (
    LedgerCorrupt,
    ResolutionExhausted,
    SurgeryImpossible,
)
from ricciflow.flow import History
from ricciflow.geometry import CAP, OPEN, WarpedMetric, curvature_of, volume
from ricciflow.standard import build_initial_cap, precompute
from ricciflow.surgery import (
    SurgeryEvent,
    TopologyLedger,
    cutoff_radius,
    perform_surgery,
    update_ledger,
)


@pytest.fixture(scope="module")
def std_table():
    init = build_initial_cap(smoothing=0.2, n=768)
    return precompute(init, t_end=0.2, sample_dt=0.05, smoothing=0.2)


def make_cylinder(psi0: float, L: float, n: int) -> WarpedMetric:
    x = np.linspace(0.0, L, n)
    return WarpedMetric(grid_x=x, phi=np.ones(n), psi=np.full(n, psi0),
                        bc_left=OPEN, bc_right=OPEN)


def cylinder_history(psi0: float, L: float, n: int) -> History:
    # the exactly shrinking cylinder: psi^2 grows linearly backward in time
    hist = History()
    for k in range(12, 0, -1):
        dt = 0.1 * k * psi0**2
        hist.append(-dt, make_cylinder(np.sqrt(psi0**2 + 2 * dt), L, n))
    return hist


def smooth_ramp(u):
    return np.log1p(np.exp(4.0 * u)) / 4.0


def make_dumbbell_neck(psi_min=0.2, flat=3.0, b=30.0, n=4000):
    """Two round caps joined by a cylinder with a flat-bottomed neck.

    The shoulders rise gently (b large) so the neck is genuinely close to a
    round cylinder well past the cuts, as the surgery construction assumes.
    """
    a = np.pi * np.sqrt(2.0) / 2.0   # cap arclength at radius sqrt(2)
    L_mid = 80.0
    L = 2 * a + L_mid
    s = np.linspace(0.0, L, n)
    sm = L / 2.0
    g = np.tanh(smooth_ramp(np.abs(s - sm) - flat) / b)
    g /= np.tanh(smooth_ramp(sm - a - flat) / b)   # exactly sqrt(2) at the welds
    psi = np.sqrt(psi_min**2 + (2.0 - psi_min**2) * np.minimum(g, 1.0)**2)
    cap_l = s < a
    cap_r = s > L - a
    psi[cap_l] = np.sqrt(2.0) * np.sin(s[cap_l] / np.sqrt(2.0))
    psi[cap_r] = np.sqrt(2.0) * np.sin((L - s[cap_r]) / np.sqrt(2.0))
    psi[0] = psi[-1] = 0.0
    return WarpedMetric(grid_x=s, phi=np.ones(n), psi=psi,
                        bc_left=CAP, bc_right=CAP)


# ---------------------------------------------------------------------------
# cutoff radius

def test_cutoff_radius_cylinder_first_candidate():
    delta, rho = 0.3, 1.0
    h0 = 0.9 * delta * rho
    psi0 = 1.1 * h0          # curvature scale psi0/sqrt(2) < h0: hot everywhere
    L, n = 40 * h0, 1200
    m = make_cylinder(psi0, L, n)
    hist = cylinder_history(psi0, L, n)
    h = cutoff_radius(m, hist, delta, rho)
    assert h == h0
    assert h < delta * rho


def test_cutoff_radius_scales_linearly():
    delta, rho = 0.3, 1.0
    psi0, L, n = 1.1 * 0.9 * delta * rho, 40 * 0.9 * delta * rho, 1200
    h1 = cutoff_radius(make_cylinder(psi0, L, n),
                       cylinder_history(psi0, L, n), delta, rho)
    c = 2.5
    hist2 = History()
    for t, mm in cylinder_history(psi0, L, n).samples:
        hist2.append(t * c * c, mm.rescaled(c))
    h2 = cutoff_radius(make_cylinder(psi0, L, n).rescaled(c), hist2,
                       delta, rho * c)
    assert h2 == pytest.approx(c * h1, rel=1e-12)


def test_cutoff_radius_resolution_exhausted():
    delta, rho = 0.3, 1.0
    psi0 = 1.1 * 0.9 * delta * rho
    m = make_cylinder(psi0, 40 * 0.9 * delta * rho, 20)  # very coarse grid
    with pytest.raises(ResolutionExhausted):
        cutoff_radius(m, cylinder_history(psi0, 1.0, 20), delta, rho)


# ---------------------------------------------------------------------------
# the cut

def test_cylinder_cut_and_cap(std_table):
    delta = 0.4
    h = 0.1
    psi0 = np.sqrt(2.0) * h * 0.999          # curvature scale just below h
    L, n = 30 * h, 900
    m = make_cylinder(psi0, L, n)
    i_lo = int(np.searchsorted(m.grid_x, L - 3.8 * h))
    children, ev = perform_surgery(m, h, delta, std_table, mode="cap_right",
                                   i_lo=i_lo, eps=1.0, parent_id="c0")
    assert list(children) == ["c0.a"]
    child = children["c0.a"]
    child.validate()
    assert child.bc_right == CAP and child.bc_left == OPEN
    drop = ev.V_before - ev.V_after
    assert h**3 <= drop <= 100 * h**3
    # curvature on the transition zone and cap stays within [C^-1, C] h^-2
    s = child.arclength()
    zone = s > child.total_length() - 2.0 / 1.0 * h - 4.0 * h
    Rm = np.abs(curvature_of(child).R[zone])
    assert Rm.max() <= 10.0 / h**2
    assert Rm[Rm > 0].min() >= 0.1 / h**2


def test_split_dumbbell_neck(std_table):
    m = make_dumbbell_neck()
    m.validate()
    h = 0.16
    delta = 0.35
    children, ev = perform_surgery(m, h, delta, std_table, mode="split",
                                   eps=1.0, parent_id="c0")
    assert set(children) == {"c0.a", "c0.b"}
    for child in children.values():
        child.validate()
        assert child.bc_left == CAP and child.bc_right == CAP
    assert ev.V_before - ev.V_after >= h**3
    assert ev.V_after == pytest.approx(sum(volume(c)
                                           for c in children.values()))
    assert len(ev.children) == 2


def test_surgery_impossible_without_neck(std_table):
    # a round sphere has no admissible delta-neck anywhere
    n = 401
    s = np.linspace(0.0, np.pi, n)
    m = WarpedMetric(grid_x=s, phi=np.ones(n), psi=np.sin(s))
    with pytest.raises(SurgeryImpossible):
        perform_surgery(m, 1.0, 0.2, std_table, mode="split", eps=1.0)


def test_surgery_determinism(std_table):
    m = make_dumbbell_neck()
    a, ev_a = perform_surgery(m, 0.16, 0.35, std_table, mode="split", eps=1.0)
    b, ev_b = perform_surgery(m, 0.16, 0.35, std_table, mode="split", eps=1.0)
    assert ev_a.to_dict() == ev_b.to_dict()
    for cid in a:
        assert np.array_equal(a[cid].psi, b[cid].psi)
        assert np.array_equal(a[cid].grid_x, b[cid].grid_x)


# ---------------------------------------------------------------------------
# topology ledger

def test_ledger_split_and_extinction():
    led = TopologyLedger.for_components(["c0"])
    ev = SurgeryEvent(time=1.0, parent="c0", cut_index=10, h=0.1, delta=0.1,
                      V_before=2.0, V_after=1.5, children=("c0.a", "c0.b"))
    update_ledger(led, ev)
    assert led.live == {"c0.a", "c0.b"}
    assert led.word() == "Unknown # Unknown"
    update_ledger(led, extinctions=["c0.a"])
    assert led.word() == "S3 # Unknown"
    update_ledger(led, extinctions=["c0.b"])
    assert led.word() == "S3"


def test_ledger_cap_keeps_word():
    led = TopologyLedger.for_components(["c0"])
    ev = SurgeryEvent(time=1.0, parent="c0", cut_index=10, h=0.1, delta=0.1,
                      V_before=2.0, V_after=1.8, children=("c0.a",))
    update_ledger(led, ev)
    assert led.live == {"c0.a"}
    assert led.word() == "Unknown"


def test_ledger_corruption():
    led = TopologyLedger.for_components(["c0"])
    with pytest.raises(LedgerCorrupt):
        led.split("nope", "a", "b")
    with pytest.raises(LedgerCorrupt):
        led.extinct("c0", tag="RP3")
    led2 = TopologyLedger.for_components(["c0"])
    ev = SurgeryEvent(time=1.0, parent="c0", cut_index=0, h=0.1, delta=0.1,
                      V_before=1.0, V_after=0.9, children=())
    with pytest.raises(LedgerCorrupt):
        update_ledger(led2, ev)

"""Canonical-neighborhood classification and omega-decomposition tests."""

import numpy as np
import pytest

from ricciflow.canonical import (
    CAP_CLASS,
    DOUBLE_HORN,
    HORN,
    NECK,
    ROUND,
    STRONG_NECK,
    classify_point,
    decompose_omega,
    gradient_estimate_check,
)
from ricciflow.errors import DecompositionIncomplete, NotApplicable
from ricciflow.flow import FlowState, step
from ricciflow.geometry import OPEN, WarpedMetric, curvature_of


def exact_cylinder(n=801, r=1.0, L=30.0):
    x = np.linspace(0.0, L, n)
    return WarpedMetric(grid_x=x, phi=np.ones(n), psi=r * np.ones(n),
                        bc_left=OPEN, bc_right=OPEN)


def test_cylinder_interior_is_neck():
    m = exact_cylinder()
    nc = classify_point(m, 400, eps=0.1)
    assert nc.kind == NECK
    assert nc.quality < 1e-10
    assert nc.r == pytest.approx(1.0, rel=1e-6)


def test_cylinder_with_history_is_strong_neck():
    n = 801
    st = FlowState({"c": exact_cylinder(n, r=np.sqrt(2.0))})
    while st.t < 0.6:
        st = step(st, 0.6 - st.t, c_cfl=0.4)
    m = st.components["c"].with_time(st.t)
    nc = classify_point(m, n // 2, eps=0.1, history=st.history["c"])
    assert nc.kind == STRONG_NECK
    assert nc.quality < 1e-6


def test_round_sphere_everywhere_round():
    n = 201
    x = np.linspace(0.0, np.pi, n)
    m = WarpedMetric(grid_x=x, phi=np.ones(n), psi=np.sin(x))
    for i in (5, 60, 100, 195):
        assert classify_point(m, i, eps=0.1).kind == ROUND


def test_round_sphere_never_neck_interior():
    # invariant: no interior point of the round sphere classifies Neck for
    # small eps (it classifies RoundComponent instead)
    n = 201
    x = np.linspace(0.0, np.pi, n)
    m = WarpedMetric(grid_x=x, phi=np.ones(n), psi=np.sin(x))
    for i in range(10, 190, 20):
        assert classify_point(m, i, eps=0.15).kind != NECK


def test_capped_tube_pole_region_is_cap():
    a, L, n = 0.05, 3.0, 2001
    s = np.linspace(0.0, L, n)
    psi = np.where(s < a * np.pi / 2, a * np.sin(np.clip(s / a, 0, np.pi / 2)), a)
    m = WarpedMetric(grid_x=s, phi=np.ones(n), psi=psi, bc_right=OPEN)
    i = int(np.searchsorted(s, 2 * a))
    nc = classify_point(m, i, eps=0.2)
    assert nc.kind == CAP_CLASS
    # far from the pole the same tube is a plain neck
    assert classify_point(m, n // 2, eps=0.2).kind == NECK


def test_negative_r_not_applicable():
    # hyperboloid-like flare: R < 0 at the waist for a wide neck
    n = 1001
    x = np.linspace(0.0, 4.0, n)
    psi = 1.0 + (x - 2.0) ** 2
    m = WarpedMetric(grid_x=x, phi=np.ones(n), psi=psi, bc_left=OPEN,
                     bc_right=OPEN)
    assert curvature_of(m).R[500] < 0
    with pytest.raises(NotApplicable):
        classify_point(m, 500)


def test_classification_scale_equivariance():
    a, ell = 0.05, 5.0
    x = np.linspace(0.0, 4.0, 2001)
    psi = a * np.cosh((x - 2.0) / ell)
    m = WarpedMetric(grid_x=x, phi=np.ones(2001), psi=psi, bc_left=OPEN,
                     bc_right=OPEN)
    nc = classify_point(m, 1000, eps=0.2)
    nc_scaled = classify_point(m.rescaled(3.0), 1000, eps=0.2)
    assert nc.kind == nc_scaled.kind == NECK
    assert nc_scaled.r == pytest.approx(3.0 * nc.r, rel=1e-6)
    # quality agrees to window-quantization level (the discrete window edge
    # shifts by one node under rescaling)
    assert nc_scaled.quality == pytest.approx(nc.quality, rel=0.05)


def test_single_horn():
    x = np.linspace(0.0, 20.0, 2001)
    psi = 0.5 * np.exp(-x / 6.0) + 0.02
    m = WarpedMetric(grid_x=x, phi=np.ones(2001), psi=psi, bc_left=OPEN,
                     bc_right=OPEN)
    dec = decompose_omega(m, rho=0.3, verify_necks=False)
    kinds = [p["kind"] for p in dec.pieces]
    assert kinds == [HORN]
    assert dec.omega_rho.any()
    assert dec.omega_rho.sum() < dec.omega.sum()


def test_double_horn():
    x = np.linspace(0.0, 20.0, 2001)
    psi = 0.02 + 0.2 * np.exp(-(((x - 10.0) / 5.0) ** 2))
    m = WarpedMetric(grid_x=x, phi=np.ones(2001), psi=psi, bc_left=OPEN,
                     bc_right=OPEN)
    dec = decompose_omega(m, rho=0.2, verify_necks=False)
    assert [p["kind"] for p in dec.pieces] == [DOUBLE_HORN]
    assert not dec.omega_rho.any()


def test_horn_neck_verification():
    # the exponential horn has a genuine eps-neck near its thin end
    x = np.linspace(0.0, 20.0, 4001)
    psi = 0.5 * np.exp(-x / 6.0) + 0.02
    m = WarpedMetric(grid_x=x, phi=np.ones(4001), psi=psi, bc_left=OPEN,
                     bc_right=OPEN)
    dec = decompose_omega(m, rho=0.3, eps=0.2, verify_necks=True)
    assert [p["kind"] for p in dec.pieces] == [HORN]


def test_decomposition_incomplete_on_kinked_horn():
    # corrugated profile: no scale passes the neck test anywhere
    x = np.linspace(0.0, 20.0, 4001)
    psi = (0.5 * np.exp(-x / 6.0) + 0.02) * (1.0 + 0.45 * np.sin(25.0 * x))
    m = WarpedMetric(grid_x=x, phi=np.ones(4001), psi=psi, bc_left=OPEN,
                     bc_right=OPEN)
    with pytest.raises(DecompositionIncomplete):
        decompose_omega(m, rho=0.3, eps=0.1, verify_necks=True)


def test_gradient_estimate_cylinder():
    n = 801
    st = FlowState({"c": exact_cylinder(n, r=np.sqrt(2.0))})
    for _ in range(4):
        st = step(st, 1e-3)
    m = st.components["c"]
    rep = gradient_estimate_check(m, history=st.history["c"], eta=10.0)
    assert rep["ok"]
    assert rep["grad_ratio"] < 1e-6          # R spatially constant
    assert rep["time_ratio"] == pytest.approx(1.0, rel=1e-2)  # R_t = R^2


def test_gradient_estimate_round_sphere():
    n = 201
    x = np.linspace(0.0, np.pi, n)
    m = WarpedMetric(grid_x=x, phi=np.ones(n), psi=np.sin(x))
    rep = gradient_estimate_check(m, eta=10.0)
    assert rep["ok"]
    assert rep["grad_ratio"] < 1e-2

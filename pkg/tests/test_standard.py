"""Standard solution: initial cap, evolution table, closeness comparison."""

import numpy as np
import pytest

from ricciflow.errors import NotComparable
from ricciflow.geometry import CAP, OPEN, WarpedMetric, curvature_of
from ricciflow.standard import (
    build_initial_cap,
    compare,
    load_table,
    precompute,
    save_table,
)


@pytest.fixture(scope="module")
def table():
    init = build_initial_cap(smoothing=0.2, n=768)
    return precompute(init, t_end=0.6, sample_dt=0.02, smoothing=0.2)


def test_initial_cap_shape():
    m = build_initial_cap(smoothing=0.2, n=1024)
    m.validate()
    assert m.bc_left == CAP and m.bc_right == OPEN
    # exact cylinder tail of radius sqrt(2): scalar curvature 1
    tail = m.arclength() > 0.5 * m.total_length()
    assert np.abs(m.psi[tail] - np.sqrt(2.0)).max() == 0.0
    R = curvature_of(m).R
    assert np.abs(R[tail] - 1.0).max() <= 1e-6


def test_initial_cap_nonnegative_curvature():
    m = build_initial_cap(smoothing=0.3, n=1024)
    f = curvature_of(m)
    assert f.K_sph.min() >= -1e-8
    assert f.K_mix.min() >= -1e-8


def test_initial_cap_bad_smoothing():
    for bad in (0.0, 0.5, -0.1, 1.0):
        with pytest.raises(ValueError):
            build_initial_cap(smoothing=bad)


def test_precompute_far_field_cylinder(table):
    # far from the cap the solution is the shrinking cylinder R = 1/(1-t)
    m = table.profile_at(0.5)
    t = m.time
    R = curvature_of(m).R
    far = m.arclength() > 0.6 * m.total_length()
    assert abs(t - 0.5) < 0.02
    assert np.abs(R[far] * (1.0 - t) - 1.0).max() < 1e-3


def test_precompute_curvature_floor(table):
    assert table.c_std > 0.0
    for m in table.profiles[1:]:
        R = curvature_of(m).R
        assert R.min() * (1.0 - m.time) >= table.c_std - 1e-12


def test_table_roundtrip(tmp_path, table):
    save_table(table, str(tmp_path / "std"))
    back = load_table(str(tmp_path / "std"))
    assert np.array_equal(back.times, table.times)
    assert back.c_std == table.c_std
    for a, b in zip(back.profiles, table.profiles):
        assert np.array_equal(a.psi, b.psi)
        assert np.array_equal(a.phi, b.phi)


def test_compare_self_is_exact(table):
    h = 0.05
    std = table.profile_at(0.3)
    cand = std.rescaled(h, shift_time=False).with_time(std.time * h**2)
    score = compare(table, cand, h=h, A=10.0)
    assert score < 1e-8


def test_compare_flags_perturbation(table):
    h = 0.05
    std = table.profile_at(0.3)
    s = std.arclength()
    bump = 0.05 * np.exp(-((s - 3.0) ** 2))
    cand = WarpedMetric(grid_x=std.grid_x, phi=std.phi * h,
                        psi=(std.psi + bump) * h, bc_left=CAP, bc_right=OPEN,
                        time=std.time * h**2)
    clean = std.rescaled(h, shift_time=False).with_time(std.time * h**2)
    assert compare(table, cand, h=h, A=10.0) > 0.04
    assert compare(table, cand, h=h, A=10.0) > compare(table, clean, h=h, A=10.0)


def test_compare_right_cap_alignment(table):
    # a candidate whose cap sits at the right end must score identically
    h = 0.05
    std = table.profile_at(0.3)
    flipped = WarpedMetric(grid_x=std.grid_x, phi=std.phi[::-1] * h,
                           psi=std.psi[::-1] * h, bc_left=OPEN, bc_right=CAP,
                           time=std.time * h**2)
    score = compare(table, flipped, h=h, A=10.0)
    assert score < 1e-8


def test_compare_requires_pole(table):
    n = 101
    x = np.linspace(0.0, 5.0, n)
    cyl = WarpedMetric(grid_x=x, phi=np.ones(n), psi=np.full(n, 0.1),
                       bc_left=OPEN, bc_right=OPEN)
    with pytest.raises(NotComparable):
        compare(table, cyl, h=0.1, A=5.0)

"""First eigenvalue of -4 Laplacian + R on a closed rotationally symmetric
component, reduced to a weighted 1D Sturm-Liouville problem.

The first eigenfunction of a rotationally symmetric operator is itself
rotationally symmetric, so the quadratic form restricted to radial test
functions,

    lambda = min  int (4 |a_s|^2 + R a^2) dV   with  int a^2 dV = 1,
    dV = 4 pi psi^2 phi dx,

is discretized with piecewise-linear elements and a lumped (midpoint-rule)
mass so pole nodes keep positive weight.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .errors import NotApplicable, NotClosed
from .geometry import CAP, WarpedMetric, curvature_of, volume


@dataclass(frozen=True)
class EigenSample:
    """lambda and its normalized eigenfunction at one time."""

    t: float
    lam: float
    eigfn: np.ndarray
    V: float
    lambda_vol: float  # lam * V^(2/3)


def _assemble(metric: WarpedMetric, R: np.ndarray):
    """Tridiagonal stiffness+potential and lumped mass of the weak form."""
    x, phi, psi = metric.grid_x, metric.phi, metric.psi
    hx = np.diff(x)
    phi_m = 0.5 * (phi[1:] + phi[:-1])
    psi_m = 0.5 * (psi[1:] + psi[:-1])
    w_grad = 4.0 * np.pi * psi_m**2 / phi_m          # gradient weight / dx
    k_off = -4.0 * w_grad / hx                       # off-diagonal entries
    m_elem = 4.0 * np.pi * psi_m**2 * phi_m * hx     # element volume (midpoint)
    mass = np.zeros(metric.n)
    mass[:-1] += 0.5 * m_elem
    mass[1:] += 0.5 * m_elem
    diag = np.zeros(metric.n)
    diag[:-1] -= k_off
    diag[1:] -= k_off
    diag += R * mass
    return diag, k_off, mass


def lambda_min(metric: WarpedMetric, R: np.ndarray | None = None) -> EigenSample:
    """Smallest eigenvalue of -4 Delta + R with its positive eigenfunction.

    Raises NotClosed unless both ends are caps (closed component).
    """
    if metric.bc_left != CAP or metric.bc_right != CAP:
        raise NotClosed("lambda_min needs a closed component (two cap ends)")
    if R is None:
        R = curvature_of(metric).R
    diag, k_off, mass = _assemble(metric, R)
    # symmetrize the generalized problem with the diagonal mass
    inv_sqrt_m = 1.0 / np.sqrt(mass)
    d = diag * inv_sqrt_m**2
    e = k_off * inv_sqrt_m[:-1] * inv_sqrt_m[1:]
    vals, vecs = eigh_tridiagonal(d, e, select="i", select_range=(0, 0))
    lam = float(vals[0])
    a = vecs[:, 0] * inv_sqrt_m
    if a[np.abs(a).argmax()] < 0:
        a = -a
    # normalize int a^2 dV = 1
    a = a / np.sqrt(np.sum(mass * a * a))
    if np.any(a <= 0):
        raise NotApplicable("first eigenfunction lost positivity")
    # Rayleigh-quotient self-check
    num = float(np.sum(a * (diag * a)) + 2.0 * np.sum(k_off * a[:-1] * a[1:]))
    if abs(num - lam) > 1e-8 * max(1.0, abs(lam)):
        raise NotApplicable(f"Rayleigh quotient {num} disagrees with lambda {lam}")
    V = volume(metric)
    return EigenSample(t=metric.time, lam=lam, eigfn=a, V=V,
                       lambda_vol=lam * V ** (2.0 / 3.0))


def check_lambda_evolution(samples: list[EigenSample], tol: float = 1e-3) -> dict:
    """Differential and monotonicity checks on a lambda time series.

    - dlambda/dt >= (2/3) lambda^2 (up to relative tolerance),
    - lambda V^(2/3) non-decreasing on intervals where it is <= 0.

    The differential bound is checked in its exactly-integrated discrete
    form (lam_b - lam_a)/dt >= (2/3) lam_a lam_b, which the comparison ODE
    dlambda/dt = (2/3) lambda^2 satisfies with equality for any dt.
    """
    report = {"ok": True, "diff_margin": np.inf, "mono_margin": np.inf,
              "n_samples": len(samples)}
    for a, b in zip(samples, samples[1:]):
        dt = b.t - a.t
        if dt <= 0:
            continue
        dLdt = (b.lam - a.lam) / dt
        bound = (2.0 / 3.0) * a.lam * b.lam
        scale = max(1.0, abs(bound))
        margin = (dLdt - bound) / scale
        report["diff_margin"] = min(report["diff_margin"], margin)
        if margin < -tol:
            report["ok"] = False
        if a.lambda_vol <= 0:
            mscale = max(1.0, abs(a.lambda_vol))
            mmargin = (b.lambda_vol - a.lambda_vol) / mscale
            report["mono_margin"] = min(report["mono_margin"], mmargin)
            if mmargin < -tol:
                report["ok"] = False
    return report


def surgery_jump_check(event, xi: float = 1.0, tol: float = 1e-3) -> dict:
    """lambda may drop across a surgery by at most xi * (volume lost).

    Applies only when some post-surgery component has non-strictly-positive
    scalar curvature somewhere; returns {"applicable": False} otherwise.
    Pass criterion: lambda_after - lambda_before >= xi*(V_after - V_before) - tol.
    """
    if getattr(event, "post_R_positive", False):
        return {"applicable": False, "ok": True}
    lam_jump = event.lambda_after - event.lambda_before
    v_jump = event.V_after - event.V_before
    ok = lam_jump >= xi * v_jump - tol
    return {"applicable": True, "ok": bool(ok),
            "lambda_jump": float(lam_jump), "volume_jump": float(v_jump)}

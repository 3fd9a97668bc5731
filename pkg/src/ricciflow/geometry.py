"""Discretized rotationally symmetric 3-metrics and pointwise geometry.

A metric g = phi(x)^2 dx^2 + psi(x)^2 g_{S^2} lives on a fixed coordinate
grid.  All geometric quantities (curvatures, volumes, distances) are derived
from (grid_x, phi, psi) on demand; nothing here mutates its inputs.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import PoleRegularityError

CAP = "cap"
OPEN = "open"

#: tolerance for |psi_s| -> 1 at cap ends of freshly constructed data
POLE_TOL = 1e-3

#: looser tolerance applied when reading curvature off an evolved profile;
#: the explicit scheme tolerates a small persistent cone angle at glued
#: poles that leaves interior curvatures and integral quantities intact
POLE_TOL_EVOLVED = 5e-2


@dataclass(frozen=True)
class WarpedMetric:
    """One rotationally symmetric component at a fixed time."""

    grid_x: np.ndarray          # strictly increasing, starts at 0
    phi: np.ndarray             # radial factor, > 0
    psi: np.ndarray             # sphere radius, >= 0 (0 exactly at cap ends)
    bc_left: str = CAP
    bc_right: str = CAP
    time: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "grid_x", np.asarray(self.grid_x, dtype=float))
        object.__setattr__(self, "phi", np.asarray(self.phi, dtype=float))
        object.__setattr__(self, "psi", np.asarray(self.psi, dtype=float))

    @property
    def n(self) -> int:
        return self.grid_x.size

    def validate(self, pole_tol: float = POLE_TOL) -> None:
        if np.any(np.diff(self.grid_x) <= 0):
            raise ValueError("grid_x must be strictly increasing")
        if np.any(self.phi <= 0):
            raise ValueError("phi must be positive everywhere")
        interior = slice(1, -1)
        if np.any(self.psi[interior] <= 0):
            raise ValueError("psi must be positive at interior points")
        for side in ("left", "right"):
            kind = self.bc_left if side == "left" else self.bc_right
            idx = 0 if side == "left" else -1
            if kind == CAP:
                if abs(self.psi[idx]) > 1e-12 * max(1.0, self.psi.max()):
                    raise ValueError(f"psi must vanish at the {side} cap end")
            elif self.psi[idx] <= 0:
                raise ValueError(f"psi must be positive at the open {side} end")
        check_pole_regularity(self, pole_tol)

    def with_time(self, t: float) -> "WarpedMetric":
        return replace(self, time=t)

    def arclength(self) -> np.ndarray:
        """Cumulative arclength s(x) = int phi dx from the left end."""
        dx = np.diff(self.grid_x)
        mids = 0.5 * (self.phi[1:] + self.phi[:-1])
        return np.concatenate([[0.0], np.cumsum(mids * dx)])

    def total_length(self) -> float:
        return float(self.arclength()[-1])

    def rescaled(self, c: float, shift_time: bool = True) -> "WarpedMetric":
        """Scale the metric g -> c^2 g (lengths by c, curvature by c^-2)."""
        t = self.time * c * c if shift_time else self.time
        return replace(self, phi=self.phi * c, psi=self.psi * c, time=t)


@dataclass(frozen=True)
class CurvatureField:
    """Pointwise curvature data derived from one WarpedMetric."""

    K_sph: np.ndarray     # sectional curvature of S^2-tangent planes
    K_mix: np.ndarray     # mixed sectional curvature
    R: np.ndarray         # scalar curvature = 2 K_sph + 4 K_mix
    ric_eigs: np.ndarray  # shape (n, 2): radial and spherical Ricci eigenvalues
    rm_min: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.rm_min is None:
            object.__setattr__(self, "rm_min", np.minimum(self.K_sph, self.K_mix))


# ---------------------------------------------------------------------------
# ghost-point finite differences

def _ghost_coords(x: np.ndarray) -> tuple[float, float]:
    return 2.0 * x[0] - x[1], 2.0 * x[-1] - x[-2]


def _extend(u: np.ndarray, parity_left: int, parity_right: int) -> np.ndarray:
    """One ghost point per end; parity +1 mirrors the value, -1 reflects it."""
    left = u[1] if parity_left > 0 else 2.0 * u[0] - u[1]
    right = u[-2] if parity_right > 0 else 2.0 * u[-1] - u[-2]
    return np.concatenate([[left], u, [right]])


def _parities(metric: WarpedMetric, kind: str) -> tuple[int, int]:
    """Ghost parity for a field.

    Cap ends are reflection points: psi extends oddly (it vanishes there),
    phi and scalars evenly.  Open ends use linear extrapolation (parity -1
    about the end value), which continues the profile without bending it.
    """

    def one(bc: str) -> int:
        if bc == CAP:
            return -1 if kind == "psi" else +1
        return -1

    return one(metric.bc_left), one(metric.bc_right)


def _deriv_x(xe: np.ndarray, ue: np.ndarray) -> np.ndarray:
    """Second-order first derivative on a nonuniform grid (needs ghosts)."""
    hl = xe[1:-1] - xe[:-2]
    hr = xe[2:] - xe[1:-1]
    return (ue[2:] * hl**2 - ue[:-2] * hr**2 + ue[1:-1] * (hr**2 - hl**2)) / (
        hl * hr * (hl + hr)
    )


def deriv_s(metric: WarpedMetric, u: np.ndarray, kind: str = "scalar") -> np.ndarray:
    """du/ds = (du/dx)/phi with ghost-point extension at the ends."""
    gl, gr = _ghost_coords(metric.grid_x)
    xe = np.concatenate([[gl], metric.grid_x, [gr]])
    pl, pr = _parities(metric, kind)
    ue = _extend(u, pl, pr)
    return _deriv_x(xe, ue) / metric.phi


def deriv_ss(metric: WarpedMetric, u: np.ndarray, kind: str = "scalar") -> np.ndarray:
    """d^2u/ds^2 as nested arclength derivatives.

    At cap ends the intermediate field u_s has parity opposite to u.
    """
    us = deriv_s(metric, u, kind)
    gl, gr = _ghost_coords(metric.grid_x)
    xe = np.concatenate([[gl], metric.grid_x, [gr]])
    pl, pr = _parities(metric, kind)
    # cap reflections flip parity; open ends keep linear extrapolation
    pl = -pl if metric.bc_left == CAP else -1
    pr = -pr if metric.bc_right == CAP else -1
    ue = _extend(us, pl, pr)
    return _deriv_x(xe, ue) / metric.phi


def check_pole_regularity(metric: WarpedMetric, tol: float = POLE_TOL) -> None:
    """At cap ends |psi_s| must equal 1 within tol (smooth pole).

    Two independent estimates of the limit are formed: the ghost-point
    derivative (exact quadratic error in the coordinate spacing) and a
    Richardson extrapolation of the even ratio psi/s (cancels the
    O(ds^2 |Rm|) truncation term that dominates near a hot cap).  The
    pole is accepted if either agrees with 1, since their leading error
    terms differ while a genuinely broken slope fails both.
    """
    psi_s = deriv_s(metric, metric.psi, kind="psi")
    s = metric.arclength()
    for end, bc in (("left", metric.bc_left), ("right", metric.bc_right)):
        if bc != CAP:
            continue
        if end == "left":
            fd = psi_s[0]
            s1, s2 = s[1] - s[0], s[2] - s[0]
            y1, y2 = metric.psi[1] / s1, metric.psi[2] / s2
        else:
            fd = psi_s[-1]
            s1, s2 = s[-1] - s[-2], s[-1] - s[-3]
            y1, y2 = metric.psi[-2] / s1, metric.psi[-3] / s2
        ratio = (y1 * s2**2 - y2 * s1**2) / (s2**2 - s1**2)
        err = min(abs(abs(fd) - 1.0), abs(abs(ratio) - 1.0))
        if err > tol:
            raise PoleRegularityError(
                f"{end} pole |psi_s|={abs(fd):.6f} deviates from 1 beyond {tol}"
            )


#: fraction of a component's length treated as the cap zone at each pole
POLE_ZONE_FRAC = 0.15


def _cumint(x: np.ndarray, f: np.ndarray) -> np.ndarray:
    """Cumulative integral by the piecewise-parabolic (Simpson) rule.

    Each interval integrates the parabola through its three nearest nodes
    (valid on nonuniform grids); vectorized because this sits on the hot
    path of every curvature evaluation.
    """
    h = np.diff(x)
    h1, h2 = h[:-1], h[1:]
    # triple (i-1, i, i+1) integrated over its right sub-interval [x_i, x_i+1]
    den = 6.0 * h1 * (h1 + h2)
    est_r = (-f[:-2] * h2**3
             + f[1:-1] * (3*h1**2*h2 + 4*h1*h2**2 + h2**3)
             + f[2:] * (3*h1**2*h2 + 2*h1*h2**2)) / den
    # triple (i, i+1, i+2) integrated over its left sub-interval [x_i, x_i+1]
    den_l = 6.0 * h2 * (h1 + h2)
    est_l = (f[:-2] * (2*h1**2*h2 + 3*h1*h2**2)
             + f[1:-1] * (h1**3 + 4*h1**2*h2 + 3*h1*h2**2)
             - f[2:] * h1**3) / den_l
    parts = np.empty_like(h)
    parts[0] = est_l[0]
    parts[-1] = est_r[-1]
    parts[1:-1] = 0.5 * (est_l[1:] + est_r[:-1])
    out = np.empty_like(x)
    out[0] = 0.0
    out[1:] = np.cumsum(parts)
    return out


def core_fields(metric: WarpedMetric) -> dict:
    """psi_s, psi_ss, K_sph, K_mix with stable cap-end evaluation.

    The direct quotient (1 - psi_s^2)/psi^2 loses accuracy next to a pole:
    both numerator and denominator vanish like s^2, so the O(h^2) error in
    psi_s stops converging at any fixed index.  Near caps we instead use the
    exact identity 1 - psi_s^2 = -2 int_0^s psi_s psi_ss ds anchored at the
    pole (where psi_s^2 = 1), with a cumulative-Simpson integral of the
    integrand so the quotient stays uniformly second-order accurate.
    """
    n = metric.n
    psi, s = metric.psi, metric.arclength()
    psi_s = deriv_s(metric, psi, kind="psi")
    psi_ss = deriv_ss(metric, psi, kind="psi")
    with np.errstate(divide="ignore", invalid="ignore"):
        K_sph = (1.0 - psi_s**2) / psi**2
        q = psi_ss / psi                      # = -K_mix
    length = s[-1]
    for end in ("left", "right"):
        bc = metric.bc_left if end == "left" else metric.bc_right
        if bc != CAP or n < 8:
            continue
        if end == "left":
            s_loc = s.copy()
        else:
            s_loc = (s[-1] - s)[::-1]
        z = int(np.searchsorted(s_loc, POLE_ZONE_FRAC * length))
        z = max(3, min(z, n // 3))
        # under s -> L - s the first derivative flips sign, the second does not
        g = (psi_s * psi_ss) if end == "left" else -(psi_s * psi_ss)[::-1]
        one_m_ps2 = -2.0 * _cumint(s_loc[: z + 1], g[: z + 1])[1:]
        pv = psi if end == "left" else psi[::-1]
        Ks = np.empty(z + 1)
        Ks[1:] = one_m_ps2 / pv[1 : z + 1] ** 2
        # pole limits: K_sph = K_mix there; extrapolate the even field q
        s1, s2 = s_loc[1], s_loc[2]
        q_loc = q if end == "left" else q[::-1]
        q0 = (q_loc[1] * s2**2 - q_loc[2] * s1**2) / (s2**2 - s1**2)
        Ks[0] = -q0
        if end == "left":
            K_sph[: z + 1] = Ks
            q[0] = q0
        else:
            K_sph[n - z - 1 :] = Ks[::-1]
            q[-1] = q0
    K_mix = -q
    return {"psi_s": psi_s, "psi_ss": psi_ss, "K_sph": K_sph, "K_mix": K_mix}


def curvature_of(metric: WarpedMetric,
                 pole_tol: float = POLE_TOL_EVOLVED) -> CurvatureField:
    """Pointwise sectional/Ricci/scalar curvatures of a warped-product metric.

    Raises PoleRegularityError when a cap end is not smooth.
    """
    check_pole_regularity(metric, pole_tol)
    f = core_fields(metric)
    K_sph, K_mix = f["K_sph"], f["K_mix"]
    R = 2.0 * K_sph + 4.0 * K_mix
    ric = np.stack([2.0 * K_mix, K_sph + K_mix], axis=1)
    return CurvatureField(K_sph=K_sph, K_mix=K_mix, R=R, ric_eigs=ric)


def volume(metric: WarpedMetric) -> float:
    """V = int 4 pi psi^2 phi dx by composite trapezoid (O(grid^2))."""
    integrand = 4.0 * np.pi * metric.psi**2 * metric.phi
    return float(np.trapezoid(integrand, metric.grid_x))


def volume_between(metric: WarpedMetric, i_lo: int, i_hi: int) -> float:
    """Volume of the coordinate slab [x_{i_lo}, x_{i_hi}]."""
    sl = slice(i_lo, i_hi + 1)
    integrand = 4.0 * np.pi * metric.psi[sl] ** 2 * metric.phi[sl]
    return float(np.trapezoid(integrand, metric.grid_x[sl]))


def arclength_ball(metric: WarpedMetric, i: int, r: float) -> tuple[int, int]:
    """Indices (lo, hi) of the interval at arclength distance < r from x_i."""
    if r <= 0:
        raise ValueError("ball radius must be positive")
    s = metric.arclength()
    lo = int(np.searchsorted(s, s[i] - r, side="right"))
    hi = int(np.searchsorted(s, s[i] + r, side="left")) - 1
    return max(lo, 0), min(hi, metric.n - 1)


# ---------------------------------------------------------------------------
# snapshot serialization (bit-exact round trip via 17 significant digits)

def write_snapshot(metric: WarpedMetric, comp_id: str, path) -> None:
    with open(path, "w") as fh:
        fh.write(
            f"# t={metric.time:.17g} id={comp_id} left={metric.bc_left} "
            f"right={metric.bc_right} n={metric.n}\n"
        )
        for x, p, ps in zip(metric.grid_x, metric.phi, metric.psi):
            fh.write(f"{x:.17g} {p:.17g} {ps:.17g}\n")


def read_snapshot(path) -> tuple[WarpedMetric, str]:
    with open(path) as fh:
        header = fh.readline().strip()
        fields = dict(tok.split("=", 1) for tok in header.lstrip("# ").split())
        data = np.loadtxt(fh, ndmin=2)
    metric = WarpedMetric(
        grid_x=data[:, 0],
        phi=data[:, 1],
        psi=data[:, 2],
        bc_left=fields["left"],
        bc_right=fields["right"],
        time=float(fields["t"]),
    )
    assert metric.n == int(fields["n"])
    return metric, fields["id"]

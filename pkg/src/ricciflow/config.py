"""Run configuration: flat key = value files and initial-datum families."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields

import numpy as np

from .geometry import CAP, OPEN, WarpedMetric, curvature_of, read_snapshot


@dataclass
class RunConfig:
    # initial datum
    datum: str = "round_sphere"      # round_sphere | cylinder | dumbbell | file
    k: float = 1.0                   # round_sphere sectional curvature
    r0: float = 1.0                  # cylinder radius
    L: float = 10.0                  # cylinder length
    neck_radius: float = 1.0         # dumbbell
    bulb_radius: float = 4.0         # dumbbell
    neck_length: float = 10.0        # dumbbell tube length
    neck_taper: float = 2.5e-3       # relative psi^2 bow of the tube
    profile_file: str = ""           # datum = file
    n: int = 512                     # grid size

    # model constants
    eps: float = 0.1
    delta: float = 0.02
    r: float = 1.0                   # canonical scale
    kappa: float = 0.1
    eta: float = 10.0
    C1: float = 10.0
    singularity_factor: float = 1e4
    c_cfl: float = 0.1
    tol: float = 1e-3

    # run control
    t_max: float = 10.0
    seed: int = 0
    sample_every: int = 20           # CSV/monitor cadence in steps
    regrid_every: int = 50
    regrid_weight: float = 1.0       # curvature weight of the moving mesh
    max_surgeries: int = 64
    pinch_floor: float = 1e-2        # sphere radius below which a region
                                     # counts as degenerate (0 disables)
    normalize: bool = True
    out_dir: str = "out"
    std_table: str = ""              # directory; empty -> precompute in-run
    std_grid: int = 1024
    std_t_end: float = 0.6

    def validate(self) -> None:
        for name in ("k", "r0", "L", "neck_radius", "bulb_radius",
                     "neck_length", "n",
                     "eps", "delta", "r", "kappa", "eta", "C1",
                     "singularity_factor", "c_cfl", "t_max"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.pinch_floor < 0:
            raise ValueError("pinch_floor must be non-negative")
        if not self.eps < 0.2:
            raise ValueError("eps must be < 0.2")
        if not self.delta < self.eps:
            raise ValueError("delta must be < eps")
        if self.datum not in ("round_sphere", "cylinder", "dumbbell", "file"):
            raise ValueError(f"unknown datum family {self.datum!r}")
        if self.datum == "file" and not self.profile_file:
            raise ValueError("datum = file requires profile_file")


def parse_config(path: str) -> RunConfig:
    """Flat `key = value` lines; `#` starts a comment."""
    raw: dict[str, str] = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key = value")
            key, val = (part.strip() for part in line.split("=", 1))
            raw[key] = val
    cfg = RunConfig()
    types = {f.name: f.type for f in fields(RunConfig)}
    for key, val in raw.items():
        if key not in types:
            raise ValueError(f"unknown config key {key!r}")
        kind = types[key]
        if kind == "int":
            setattr(cfg, key, int(val))
        elif kind == "float":
            setattr(cfg, key, float(val))
        elif kind == "bool":
            setattr(cfg, key, val.lower() in ("1", "true", "yes"))
        else:
            setattr(cfg, key, val)
    cfg.validate()
    return cfg


# ---------------------------------------------------------------------------
# datum families

def round_sphere(k: float, n: int) -> WarpedMetric:
    a = 1.0 / math.sqrt(k)
    s = np.linspace(0.0, a * np.pi, n)
    return WarpedMetric(grid_x=s, phi=np.ones(n), psi=a * np.sin(s / a))


def cylinder(r0: float, L: float, n: int) -> WarpedMetric:
    x = np.linspace(0.0, L, n)
    return WarpedMetric(grid_x=x, phi=np.ones(n), psi=np.full(n, r0),
                        bc_left=OPEN, bc_right=OPEN)


def dumbbell(neck_radius: float, bulb_radius: float, neck_length: float,
             n: int, taper: float = 2.5e-3) -> WarpedMetric:
    """Two round bulbs joined by a long, nearly uniform tube.

    The tube carries a tiny quadratic bow in psi^2 (relative size `taper`
    at the welds) so the pinch localizes at its center; a smooth C^inf
    step blends the spherical bulb profiles into the tube.  The tube must
    be long so its middle shrinks like the homogeneous cylinder, decoupled
    from the bulbs, and the neck is radius-uniform when surgery triggers.
    """
    if not neck_radius < bulb_radius:
        raise ValueError("neck_radius must be below bulb_radius")
    rn, B, Ln = neck_radius, bulb_radius, neck_length
    from .standard import smooth_step
    s_c = B * (math.pi - math.asin(rn / B))  # bulb profile reaches psi = rn
    w = 3.0 * rn                             # weld blend width
    L = 2.0 * s_c + Ln
    s = np.linspace(0.0, L, n)
    tube = rn * np.sqrt(1.0 + taper * ((s - L / 2) / (Ln / 2)) ** 2)
    sig_l = smooth_step((s - (s_c - w)) / w)
    sig_r = smooth_step(((L - s) - (s_c - w)) / w)
    psi = (tube + (1.0 - sig_l) * (B * np.sin(s / B) - tube)
                + (1.0 - sig_r) * (B * np.sin((L - s) / B) - tube))
    psi[0] = psi[-1] = 0.0
    return WarpedMetric(grid_x=s, phi=np.ones(n), psi=psi)


def build_datum(cfg: RunConfig) -> tuple[WarpedMetric, float]:
    """Initial metric for the config, normalized to |sectional| <= 1.

    Returns (metric, scale factor c applied as g -> c^2 g); c = 1 when
    normalization is off or the datum already satisfies the bound.
    """
    if cfg.datum == "round_sphere":
        m = round_sphere(cfg.k, cfg.n)
    elif cfg.datum == "cylinder":
        m = cylinder(cfg.r0, cfg.L, cfg.n)
    elif cfg.datum == "dumbbell":
        m = dumbbell(cfg.neck_radius, cfg.bulb_radius, cfg.neck_length,
                     cfg.n, cfg.neck_taper)
    else:
        m, _ = read_snapshot(cfg.profile_file)
    m.validate()
    c = 1.0
    if cfg.normalize:
        curv = curvature_of(m)
        k_max = max(np.abs(curv.K_sph).max(), np.abs(curv.K_mix).max())
        if k_max > 1.0:
            c = math.sqrt(k_max)
            m = m.rescaled(c, shift_time=False)
    return m, c

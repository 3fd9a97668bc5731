"""Post-run analysis and surgery replay on a persisted run directory."""

from __future__ import annotations

import csv
import glob
import json
import math
import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from . import standard
from .errors import GlueRejected, PoleRegularityError, SurgeryImpossible
from .geometry import curvature_of, read_snapshot, volume
from .monitors import MonitorConfig, check_pinching, check_rmin
from .orchestrate import aggregate_series
from .surgery import _pinching_worst, perform_surgery


def _load_report(run_dir: str) -> dict:
    with open(os.path.join(run_dir, "report.json")) as fh:
        return json.load(fh)


def _load_series(run_dir: str) -> list[dict]:
    rows = []
    with open(os.path.join(run_dir, "series.csv"), newline="") as fh:
        for raw in csv.DictReader(fh):
            rows.append({k: (raw[k] if k == "component" else float(raw[k]))
                         for k in raw})
    return rows


def _load_events(run_dir: str) -> list[dict]:
    with open(os.path.join(run_dir, "events.jsonl")) as fh:
        return [json.loads(line) for line in fh if line.strip()]


def neck_radius_fit(rows: list[dict], component: str = "c0",
                    t_stop: float | None = None) -> dict:
    """Fit the pre-surgery neck radius against sqrt(2 (T - t)).

    The minimum sphere radius of a pinching neck is psi = sqrt(2 / R_max)
    on an exact shrinking cylinder.  psi^2 is fitted linearly in t to
    estimate the pinch time T, then the scaling exponent comes from the
    slope of log psi against log(T - t) over the last decade of curvature
    growth.
    """
    pts = [(r["t"], r["R_max"]) for r in rows
           if r["component"] == component
           and (t_stop is None or r["t"] < t_stop)]
    ts = np.array([p[0] for p in pts])
    rmax = np.array([p[1] for p in pts])
    keep = rmax >= 0.1 * rmax.max()   # last decade of curvature growth
    ts, rmax = ts[keep], rmax[keep]
    if ts.size < 5:
        return {"ok": False, "reason": "too few samples in the last decade"}
    psi2 = 2.0 / rmax
    a, b = np.polyfit(ts, psi2, 1)    # psi^2 ~ a t + b, T = -b/a
    T = -b / a
    good = T - ts > 0
    expo, _ = np.polyfit(np.log(T - ts[good]), np.log(np.sqrt(psi2[good])), 1)
    rate = -a  # d(psi^2)/dt, 2.0 on the exact shrinking cylinder
    return {"ok": True, "T_est": float(T), "exponent": float(expo),
            "rate": float(rate), "n_samples": int(ts.size)}


def _figures(run_dir: str, rows: list[dict]) -> list[str]:
    fig_dir = os.path.join(run_dir, "figures")
    os.makedirs(fig_dir, exist_ok=True)
    comps = sorted({r["component"] for r in rows})
    made = []

    def series(comp, key):
        sel = [r for r in rows if r["component"] == comp]
        return ([r["t"] for r in sel], [r[key] for r in sel])

    panels = [("curvature", ["R_min", "R_max"], "symlog"),
              ("volume", ["V"], "linear"),
              ("lambda", ["lambda"], "linear"),
              ("neck_radius", None, "log")]
    for name, keys, yscale in panels:
        fig, ax = plt.subplots(figsize=(6, 4))
        for comp in comps:
            if keys is None:
                t, rmax = series(comp, "R_max")
                ax.plot(t, np.sqrt(2.0 / np.asarray(rmax)),
                        label=f"{comp} psi_neck")
            else:
                for key in keys:
                    t, v = series(comp, key)
                    ax.plot(t, v, label=f"{comp} {key}")
        ax.set_xlabel("t")
        ax.set_yscale(yscale)
        ax.set_title(name)
        ax.legend(fontsize=7)
        path = os.path.join(fig_dir, f"{name}.png")
        fig.tight_layout()
        fig.savefig(path, dpi=110)
        plt.close(fig)
        made.append(path)
    return made


def analyze(run_dir: str) -> dict:
    """Recompute monitors from persisted outputs; render figures.

    Determinism check: the recomputed series verdicts and the snapshot
    pointwise monitors must agree with the live run's report.
    """
    report = _load_report(run_dir)
    rows = _load_series(run_dir)
    events = _load_events(run_dir)
    tol = float(report["config"]["tol"])
    mon_cfg = MonitorConfig(eta=float(report["config"]["eta"]),
                            kappa=float(report["config"]["kappa"]), tol=tol)

    series = aggregate_series(rows, tol)
    live = report["summary"]["series_checks"]
    series_match = all(series[k]["ok"] == live[k]["ok"]
                       for k in ("vhat", "rhat", "lambda_vol"))

    snap_reports = []
    for path in sorted(glob.glob(os.path.join(run_dir, "snapshots",
                                              "t*.dat"))):
        m, cid = read_snapshot(path)
        try:
            reps = (check_pinching(m, m.time, mon_cfg),
                    check_rmin(m, m.time, mon_cfg))
        except PoleRegularityError:
            # the live run skips these samples too (imminent event)
            continue
        for rep in reps:
            snap_reports.append({"snapshot": os.path.basename(path),
                                 "component": cid, **rep})
    snap_ok = all(r["ok"] for r in snap_reports)
    live_pointwise_ok = not report["summary"]["pointwise_violations"]

    surgeries = [e for e in events if e.get("kind") == "surgery"]
    fit = None
    if surgeries:
        first = surgeries[0]
        fit = neck_radius_fit(rows, component=first["parent"],
                              t_stop=first["time"])
    figures = _figures(run_dir, rows)

    out = {"series_checks": series,
           "series_match_live": bool(series_match),
           "snapshots_checked": len(snap_reports),
           "snapshot_monitors_ok": bool(snap_ok),
           "pointwise_match_live": bool(snap_ok == live_pointwise_ok),
           "neck_fit": fit,
           "n_surgeries": len(surgeries),
           "figures": figures,
           "word": report["summary"]["word"],
           "ok": bool(series["ok"] and snap_ok and series_match)}
    with open(os.path.join(run_dir, "analysis.json"), "w") as fh:
        json.dump(out, fh, indent=1, sort_keys=True, default=repr)
    return out


def replay_surgery(run_dir: str, event_id: str,
                   overrides: dict | None = None) -> dict:
    """Re-execute one persisted surgery, optionally with altered parameters.

    overrides keys: delta (neck threshold and blend amplitude), eps
    (collar width 2h/eps), h (cutoff radius).  With no overrides the glued
    children must match the persisted post-surgery snapshots bitwise.
    """
    overrides = overrides or {}
    events = _load_events(run_dir)
    sing = next((e for e in events if e.get("kind") == "singularity"
                 and e.get("event_id") == event_id), None)
    surg = next((e for e in events if e.get("kind") == "surgery"
                 and e.get("event_id") == event_id), None)
    if sing is None or surg is None:
        raise KeyError(f"event {event_id!r} not found in {run_dir}")
    pre_path = os.path.join(run_dir, "snapshots", f"pre-{event_id}.dat")
    metric, parent = read_snapshot(pre_path)
    report = _load_report(run_dir)
    std_dir = report["config"]["std_table"] or os.path.join(run_dir, "std")
    std = standard.load_table(std_dir)

    h = float(overrides.get("h", sing["h"]))
    delta = float(overrides.get("delta", surg["delta"]))
    eps = float(overrides.get("eps", report["config"]["eps"]))
    result = {"event_id": event_id, "h": h, "delta": delta, "eps": eps,
              "overridden": sorted(overrides)}
    try:
        children, event = perform_surgery(
            metric, h, delta, std, parent_id=parent, mode=sing["mode"],
            history=None, i_lo=sing["i_lo"], i_hi=sing["i_hi"], eps=eps)
    except (GlueRejected, SurgeryImpossible) as exc:
        return result | {"ok": False, "error": type(exc).__name__,
                         "message": str(exc)}

    result["volume_drop"] = event.V_before - event.V_after
    result["volume_drop_over_h3"] = result["volume_drop"] / h ** 3
    scores, pin_margins = [], []
    pin_parent = _pinching_worst(metric, metric.time,
                                 np.ones(metric.n, bool))
    for cid, ch in children.items():
        scale = (event.cap_scales or {}).get(cid, h)
        scores.append(standard.compare(std, ch, scale, A=10.0, theta=0.0))
        pin_margins.append(_pinching_worst(ch, ch.time,
                                           np.ones(ch.n, bool)) - pin_parent)
    result["compare_scores"] = scores
    result["pinching_margins"] = pin_margins

    if not overrides:
        bitwise = True
        for cid, ch in children.items():
            post, _ = read_snapshot(os.path.join(
                run_dir, "snapshots", f"post-{event_id}-{cid}.dat"))
            bitwise &= (np.array_equal(post.grid_x, ch.grid_x)
                        and np.array_equal(post.psi, ch.psi)
                        and np.array_equal(post.phi, ch.phi))
        result["bitwise_match"] = bool(bitwise)
    return result | {"ok": True}

"""Run orchestration: the integrate / detect / surger / monitor loop.

A run writes, under its output directory:
  series.csv     per-sample, per-component time series
  events.jsonl   singularities, surgeries, extinctions (JSON lines)
  snapshots/     periodic profiles plus pre/post-surgery pairs (for replay)
  report.json    config echo, ledger word, monitor summary, exit code
"""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import dataclass, field

import numpy as np

from . import standard
from .canonical import (
    CAPPED_HORN,
    DOUBLE_HORN,
    ROUND,
    TUBE,
    _round_quality,
    decompose_omega,
)
from .config import RunConfig, build_datum
from .errors import (
    DecompositionIncomplete,
    GlueRejected,
    NotApplicable,
    NotClosed,
    PoleRegularityError,
    ResolutionExhausted,
    StepCollapse,
    SurgeryImpossible,
)
from .flow import EVOLVING, EXTINCT, FlowState, History, regrid, step
from .geometry import (
    CAP,
    WarpedMetric,
    curvature_of,
    volume,
    volume_between,
    write_snapshot,
)
from .monitors import (
    MonitorConfig,
    check_pinching,
    check_rhat,
    check_rmin,
    check_vhat,
)
from .spectral import lambda_min
from .surgery import TopologyLedger, cutoff_radius, perform_surgery, update_ledger

EXIT_CLEAN = 0
EXIT_MONITOR = 2
EXIT_RESOLUTION = 3

# kept pieces are trimmed back to psi >= PINCH_TRIM * pinch_floor before the
# dome closure, so the new pole sits on cells whose curvature is resolved
PINCH_TRIM = 5.0
# the pinch trigger ignores a collar of PINCH_MARGIN * pinch_floor at each
# cap end: there psi < floor is the healthy psi ~ s pole behaviour
PINCH_MARGIN = 6.0

# extinction class for a closed component that shrank below the pinch floor
# as a whole (topology pinned to S^3 by its two cap ends)
COLLAPSED = "CollapsedComponent"

CSV_COLUMNS = ["sample", "t", "component", "V", "R_min", "R_max", "lambda",
               "lambda_V23", "Vhat", "Rhat"]


@dataclass
class RunResult:
    exit_code: int
    word: str
    out_dir: str
    summary: dict = field(default_factory=dict)


def _jsonl(fh, obj) -> None:
    fh.write(json.dumps(obj, sort_keys=True) + "\n")


def _runs(mask: np.ndarray) -> list[tuple[int, int]]:
    """Maximal index intervals [lo, hi] on which the mask is true."""
    idx = np.flatnonzero(mask)
    if idx.size == 0:
        return []
    brk = np.flatnonzero(np.diff(idx) > 1)
    starts = np.concatenate([[idx[0]], idx[brk + 1]])
    ends = np.concatenate([idx[brk], [idx[-1]]])
    return [(int(a), int(b)) for a, b in zip(starts, ends)]


def _complement(intervals: list[tuple[int, int]], n: int
                ) -> list[tuple[int, int]]:
    out = []
    prev = 0
    for lo, hi in intervals:
        if lo > prev:
            out.append((prev, lo - 1))
        prev = hi + 1
    if prev <= n - 1:
        out.append((prev, n - 1))
    return out


def _mirror(s: np.ndarray, psi: np.ndarray):
    return s[-1] - s[::-1], psi[::-1]


def _dome_close(s: np.ndarray, psi: np.ndarray):
    """Close the right end with a slope-matched spherical arc.

    psi(u) = rho sin((s_pole - u)/rho) with rho = psi_e / sqrt(1 - m_e^2)
    matches value and (inward, decreasing) slope m_e at the junction and
    reaches psi = 0 with |psi_s| = 1, so the result is a regular cap.
    """
    ds = s[-1] - s[-2]
    me = float(np.clip((psi[-2] - psi[-1]) / ds, 0.0, 0.9))
    rho = psi[-1] / math.sqrt(1.0 - me * me)
    delta = rho * math.asin(min(psi[-1] / rho, 1.0))
    npts = int(np.clip(math.ceil(delta / ds), 24, 96))
    sig = np.linspace(0.0, delta, npts + 1)[1:]
    dome = rho * np.sin((delta - sig) / rho)
    dome[-1] = 0.0
    return np.concatenate([s, s[-1] + sig]), np.concatenate([psi, dome])


def _closed_piece(m, lo: int, hi: int, left_open: bool, right_open: bool,
                  trim: float):
    """Slice [lo, hi] out of a component and dome-close any severed end.

    Severed sides are first trimmed back to psi >= trim; returns None when
    nothing usable remains (the sliver is then singular-scale debris).
    """
    s = m.arclength()
    psi = m.psi
    while right_open and hi > lo and psi[hi] < trim:
        hi -= 1
    while left_open and lo < hi and psi[lo] < trim:
        lo += 1
    if hi - lo + 1 < 8:
        return None
    sp = s[lo:hi + 1] - s[lo]
    pp = psi[lo:hi + 1].copy()
    if right_open:
        sp, pp = _dome_close(sp, pp)
    if left_open:
        sp, pp = _mirror(*_dome_close(*_mirror(sp, pp)))
    return WarpedMetric(grid_x=sp, phi=np.ones_like(sp), psi=pp,
                        bc_left=CAP, bc_right=CAP, time=m.time)


def _std_table(cfg: RunConfig, out_dir: str):
    if cfg.std_table and os.path.exists(
            os.path.join(cfg.std_table, "index.json")):
        return standard.load_table(cfg.std_table)
    init = standard.build_initial_cap(smoothing=0.2, n=cfg.std_grid)
    table = standard.precompute(init, t_end=cfg.std_t_end, smoothing=0.2)
    dest = cfg.std_table or os.path.join(out_dir, "std")
    standard.save_table(table, dest)
    return table


def _component_row(cid: str, m, t: float) -> dict:
    curv = curvature_of(m)
    V = volume(m)
    try:
        lam = lambda_min(m, R=curv.R).lam
    except (NotClosed, NotApplicable):
        # the ground state underflows along a deeply pinched neck; treat
        # the sample as unavailable rather than aborting the run
        lam = math.nan
    rmin = float(curv.R.min())
    return {"t": t, "component": cid, "V": V, "R_min": rmin,
            "R_max": float(curv.R.max()), "lambda": lam,
            "lambda_V23": lam * V ** (2.0 / 3.0),
            "Vhat": V * (t + 0.25) ** -1.5,
            "Rhat": rmin * V ** (2.0 / 3.0)}


def aggregate_series(rows: list[dict], tol: float) -> dict:
    """Monotone-quantity checks on summed-over-component samples.

    Surgery and extinction volume drops are covered because samples bracket
    each event.  The lambda check mirrors the Rhat one: lambda V^(2/3) must
    not decrease while it is non-positive.
    """
    by_batch: dict = {}
    for r in rows:
        by_batch.setdefault(r.get("sample", r["t"]), []).append(r)
    keys = sorted(by_batch)
    ts = [by_batch[k][0]["t"] for k in keys]
    vols = [sum(r["V"] for r in by_batch[k]) for k in keys]
    rmins = [min(r["R_min"] for r in by_batch[k]) for k in keys]
    lams = []
    for k in keys:
        fin = [r["lambda"] for r in by_batch[k] if np.isfinite(r["lambda"])]
        lams.append(min(fin) if fin else math.nan)
    mcfg = MonitorConfig(tol=tol)
    out = {"vhat": check_vhat(ts, vols, mcfg),
           "rhat": check_rhat(ts, rmins, vols, mcfg)}
    worst = 0.0
    for i in range(len(ts) - 1):
        a = lams[i] * vols[i] ** (2.0 / 3.0)
        b = lams[i + 1] * vols[i + 1] ** (2.0 / 3.0)
        if np.isfinite(a) and np.isfinite(b) and a <= 0:
            worst = min(worst, (b - a) / max(1.0, abs(a)))
    out["lambda_vol"] = {"monitor": "lambda_vol", "ok": worst >= -tol,
                         "worst_drop": worst}
    out["ok"] = all(v["ok"] for v in out.values())
    return out


class _Run:
    """Mutable state of one orchestrated run."""

    def __init__(self, cfg: RunConfig, out_dir: str):
        self.cfg = cfg
        self.out_dir = out_dir
        self.snap_dir = os.path.join(out_dir, "snapshots")
        os.makedirs(self.snap_dir, exist_ok=True)
        datum, self.scale = build_datum(cfg)
        self.len0 = datum.total_length()
        self.std = _std_table(cfg, out_dir)
        self.mon_cfg = MonitorConfig(eta=cfg.eta, kappa=cfg.kappa,
                                     tol=cfg.tol)
        self.state = FlowState(components={"c0": datum})
        self.state.history["c0"].append(0.0, datum)
        self.ledger = TopologyLedger.for_components(["c0"])
        self.rows: list[dict] = []
        self.pointwise: list[dict] = []
        # a fresh post-surgery child is disarmed until its curvature falls
        # well below the detection threshold, so a hot glued cap does not
        # immediately re-trigger detection
        self.armed: dict[str, bool] = {"c0": True}
        self.threshold = cfg.singularity_factor / cfg.r ** 2
        self.rho = cfg.delta * cfg.r
        self.V0 = volume(datum)
        self.n_steps = 0
        self.n_surgeries = 0
        self.n_decomps = 0
        self.n_samples = 0
        self.csv_fh = open(os.path.join(out_dir, "series.csv"), "w",
                           newline="")
        self.writer = csv.DictWriter(self.csv_fh, fieldnames=CSV_COLUMNS)
        self.writer.writeheader()
        self.ev_fh = open(os.path.join(out_dir, "events.jsonl"), "w")
        _jsonl(self.ev_fh, {"kind": "start", "scale": self.scale,
                            "V0": self.V0, "datum": cfg.datum,
                            "n": cfg.n, "eps": cfg.eps, "delta": cfg.delta,
                            "r": cfg.r, "seed": cfg.seed})

    def target_n(self, m) -> int:
        """Node count proportional to length at the initial density."""
        return int(np.clip(round(m.total_length() * self.cfg.n / self.len0),
                           192, self.cfg.n))

    def sample(self) -> None:
        # samples around an event share t; the batch index keeps the
        # pre- and post-event totals apart in the aggregate checks
        batch = self.n_samples
        self.n_samples += 1
        live = self.state.evolving()
        try:
            batch_rows = [{"sample": batch,
                           **_component_row(cid, live[cid], self.state.t)}
                          for cid in sorted(live)]
        except PoleRegularityError:
            # a component within a step or two of pinch decomposition can
            # defeat the pole estimators; drop the whole batch (a partial
            # one would fake a total-volume jump), the resolving event is
            # imminent
            return
        for row in batch_rows:
            self.rows.append(row)
            self.writer.writerow(
                {k: (repr(v) if isinstance(v, float) else v)
                 for k, v in row.items()})
            cid = row["component"]
            for rep in (check_pinching(live[cid], self.state.t, self.mon_cfg),
                        check_rmin(live[cid], self.state.t, self.mon_cfg)):
                if not rep["ok"]:
                    self.pointwise.append({"t": self.state.t,
                                           "component": cid, **rep})

    def snapshot(self, tag: str) -> None:
        for cid, m in self.state.evolving().items():
            write_snapshot(m, cid, os.path.join(self.snap_dir,
                                                f"{tag}-{cid}.dat"))

    def extinguish(self, cid: str, max_R: float,
                   classification: str = ROUND) -> None:
        self.ledger.extinct(cid)
        self.state.status[cid] = EXTINCT
        del self.state.components[cid]
        self.armed.pop(cid, None)
        _jsonl(self.ev_fh, {"kind": "extinction", "time": self.state.t,
                            "component": cid, "tag": "S3",
                            "classification": classification,
                            "max_R": max_R})

    def detect(self):
        """Handle threshold crossings: extinguish round ones, pick surgery.

        A round component over the threshold extinguishes regardless of its
        armed flag (a fresh child can round out while its glued cap is still
        hotter than the re-arm level); the flag only gates surgery.

        Positive Ricci curvature is an alternative extinction certificate:
        it is preserved by the flow and forbids neck formation, so such a
        component shrinks to a round point without ever needing surgery.
        This covers collapsing spheres whose glued pole carries a small
        discretization cone angle that inflates the oscillation measure.
        """
        for cid, m in sorted(self.state.evolving().items()):
            try:
                curv = curvature_of(m)
            except PoleRegularityError:
                continue
            mx = float(curv.R.max())
            if not self.armed.get(cid, True) and mx < 0.5 * self.threshold:
                self.armed[cid] = True
            if mx < self.threshold:
                continue
            round_like = (_round_quality(curv) <= self.cfg.eps
                          or float(curv.ric_eigs.min()) > 0.0)
            if round_like and curv.R.min() > 0:
                self.sample()
                self.extinguish(cid, mx)
                continue
            if self.armed.get(cid, True):
                return cid, mx
        return None

    def collapse_hit(self) -> str | None:
        """First closed component entirely below the pinch floor.

        Such a component has shrunk beneath the resolvable scale; its two
        cap ends pin the topology to S^3 independently of how round the
        degenerate profile looks, and its tiny grid cells would otherwise
        throttle the shared timestep into underflow.
        """
        floor = self.cfg.pinch_floor
        if floor <= 0.0:
            return None
        for cid, m in sorted(self.state.evolving().items()):
            if (m.bc_left == CAP and m.bc_right == CAP
                    and float(m.psi.max()) < floor):
                return cid
        return None

    def pinch_hit(self) -> str | None:
        """First component whose profile dips below the pinch floor.

        Only interior dips count: within PINCH_MARGIN * floor of a cap end
        psi < floor is the regular psi ~ s pole behaviour.
        """
        floor = self.cfg.pinch_floor
        if floor <= 0.0:
            return None
        margin = PINCH_MARGIN * floor
        for cid, m in sorted(self.state.evolving().items()):
            s = m.arclength()
            inner = (s > margin) & (s < s[-1] - margin)
            if np.any(m.psi[inner] < floor):
                return cid
        return None

    def decompose_at_pinch(self, cid: str) -> None:
        """Resolve a region that has collapsed below the numerical floor.

        The singular set is the connected high-curvature basin around each
        below-floor point.  Each basin is discarded as an extinct piece --
        a horn capped at one end or a double horn, both punctured-S3
        summands, so the connected-sum word is unchanged.  Each surviving
        piece keeps evolving with its severed end closed by a slope-matched
        spherical dome; the largest retains the parent's identity.
        """
        cfg = self.cfg
        floor = cfg.pinch_floor
        m = self.state.components[cid]
        curv = curvature_of(m, pole_tol=math.inf)
        if _round_quality(curv) <= cfg.eps and curv.R.min() > 0:
            self.extinguish(cid, float(curv.R.max()))
            return
        s = m.arclength()
        n = m.n
        margin = PINCH_MARGIN * floor
        inner = (s > margin) & (s < s[-1] - margin)
        sub = np.flatnonzero(inner & (m.psi < floor))
        hot = (curv.R >= self.threshold / 2.0) | (m.psi < floor)
        basin = [iv for iv in _runs(hot)
                 if np.any((sub >= iv[0]) & (sub <= iv[1]))]
        if not basin:
            raise ResolutionExhausted(
                f"pinched region in {cid} has no high-curvature basin")
        V_before = volume(m)
        ev_id = f"d{self.n_decomps}"
        extinct = []
        for lo, hi in basin:
            kind = DOUBLE_HORN if (lo > 0 and hi < n - 1) else CAPPED_HORN
            extinct.append({"kind": kind, "i_lo": lo, "i_hi": hi,
                            "volume": volume_between(m, lo, hi)})
        pieces = []
        for lo, hi in _complement(basin, n):
            piece = _closed_piece(m, lo, hi, left_open=lo > 0,
                                  right_open=hi < n - 1,
                                  trim=PINCH_TRIM * floor)
            if piece is None:
                extinct.append({"kind": TUBE, "i_lo": lo, "i_hi": hi,
                                "volume": volume_between(m, lo, hi)})
            else:
                pieces.append(piece)
        pieces.sort(key=volume, reverse=True)
        del self.state.components[cid]
        del self.state.status[cid]
        del self.state.history[cid]
        self.armed.pop(cid, None)
        kept = []
        if not pieces:
            self.ledger.extinct(cid)
            self.state.status[cid] = EXTINCT
        for k, piece in enumerate(pieces):
            pid = cid if k == 0 else f"{cid}.p{k}"
            if k > 0:
                self.ledger.split(cid, cid, pid)
            piece = regrid(piece, self.target_n(piece),
                           curvature_weight=cfg.regrid_weight,
                           ).with_time(self.state.t)
            self.state.components[pid] = piece
            self.state.status[pid] = EVOLVING
            self.state.history[pid] = History()
            self.state.history[pid].append(self.state.t, piece)
            # the dome over the former pinch is the hottest spot; stay
            # disarmed until it has relaxed well under the threshold
            self.armed[pid] = False
            kept.append(pid)
        _jsonl(self.ev_fh, {"kind": "decomposition", "time": self.state.t,
                            "component": cid, "event_id": ev_id,
                            "floor": floor, "V_before": V_before,
                            "V_after": sum(volume(self.state.components[p])
                                           for p in kept),
                            "extinct": extinct, "kept": kept})
        self.n_decomps += 1

    def do_surgery(self, cid: str) -> None:
        cfg = self.cfg
        m = self.state.components[cid]
        if self.n_surgeries >= cfg.max_surgeries:
            raise SurgeryImpossible(
                f"surgery budget {cfg.max_surgeries} exhausted")
        decomp = decompose_omega(m, self.rho, eps=cfg.eps,
                                 omega_bound=self.threshold / 2.0)
        h = cutoff_radius(m, self.state.history[cid], cfg.delta, self.rho,
                          region=~decomp.omega)
        mode, i_lo, i_hi = _pick_cut_window(decomp.omega, m.n)
        if mode == "split":
            # confine the removed middle to +-h around the curvature
            # peak: the volume drop then stays within [h^3, 100 h^3] while
            # the retained sides keep the full delta-neck
            s = m.arclength()
            R = curvature_of(m).R
            j = i_lo + int(R[i_lo:i_hi + 1].argmax())
            win = (s >= s[j] - 1.0 * h) & (s <= s[j] + 1.0 * h)
            idx = np.flatnonzero(win)
            i_lo = max(i_lo, int(idx[0]))
            i_hi = min(i_hi, int(idx[-1]))
        ev_id = f"s{self.n_surgeries}"
        _jsonl(self.ev_fh, {"kind": "singularity", "time": self.state.t,
                            "component": cid, "h": h, "mode": mode,
                            "i_lo": i_lo, "i_hi": i_hi,
                            "pieces": decomp.pieces, "event_id": ev_id})
        write_snapshot(m, cid, os.path.join(self.snap_dir,
                                            f"pre-{ev_id}.dat"))
        try:
            lam_pre = lambda_min(m).lam
        except (NotClosed, NotApplicable):
            lam_pre = math.nan
        children, event = perform_surgery(
            m, h, cfg.delta, self.std, parent_id=cid, mode=mode,
            history=self.state.history[cid], i_lo=i_lo, i_hi=i_hi,
            eps=cfg.eps)
        event.lambda_before = lam_pre
        lam_post = []
        for c in children.values():
            try:
                lam_post.append(lambda_min(c).lam)
            except (NotClosed, NotApplicable):
                pass
        event.lambda_after = min(lam_post) if lam_post else math.nan
        update_ledger(self.ledger, event)
        del self.state.components[cid]
        del self.state.status[cid]
        del self.state.history[cid]
        self.armed.pop(cid, None)
        for ch_id, ch in children.items():
            # persist the raw glued child (pre-regrid) so replay can compare
            # bitwise against a fresh perform_surgery on the pre snapshot
            write_snapshot(ch, ch_id, os.path.join(
                self.snap_dir, f"post-{ev_id}-{ch_id}.dat"))
            ch = regrid(ch, self.target_n(ch),
                        curvature_weight=cfg.regrid_weight,
                        ).with_time(self.state.t)
            self.state.components[ch_id] = ch
            self.state.status[ch_id] = EVOLVING
            self.state.history[ch_id] = History()
            self.state.history[ch_id].append(self.state.t, ch)
            self.armed[ch_id] = False
        _jsonl(self.ev_fh, event.to_dict() | {"event_id": ev_id})
        self.n_surgeries += 1

    def loop(self) -> int:
        cfg = self.cfg
        self.sample()
        self.snapshot("t00000000")
        try:
            while self.state.t < cfg.t_max and self.state.evolving():
                try:
                    self.state = step(self.state, cfg.t_max - self.state.t,
                                      c_cfl=cfg.c_cfl)
                except StepCollapse:
                    # the profile at collapse is degenerate; judge roundness
                    # with the pole check suspended
                    done = []
                    for cid, m in self.state.evolving().items():
                        curv = curvature_of(m, pole_tol=math.inf)
                        if (_round_quality(curv) <= cfg.eps
                                or float(curv.ric_eigs.min()) > 0.0):
                            done.append((cid, ROUND))
                        elif m.bc_left == CAP and m.bc_right == CAP:
                            done.append((cid, COLLAPSED))
                    if not done:
                        raise ResolutionExhausted(
                            "step collapse on a non-round component")
                    for cid, cls in done:
                        self.extinguish(cid, math.nan, classification=cls)
                    continue
                self.n_steps += 1
                collapsed = self.collapse_hit()
                if collapsed is not None:
                    # no pre-event sample: rows from a sub-resolution
                    # profile would carry discretization junk
                    m = self.state.components[collapsed]
                    mx = float(curvature_of(m, pole_tol=math.inf).R.max())
                    self.extinguish(collapsed, mx, classification=COLLAPSED)
                    self.sample()
                    continue
                pinched = self.pinch_hit()
                if pinched is not None:
                    self.sample()
                    self.decompose_at_pinch(pinched)
                    self.sample()
                    continue
                if self.n_steps % cfg.regrid_every == 0:
                    for cid, m in self.state.evolving().items():
                        self.state.components[cid] = regrid(
                            m, self.target_n(m),
                            curvature_weight=cfg.regrid_weight,
                        ).with_time(self.state.t)
                if self.n_steps % cfg.sample_every == 0:
                    self.sample()
                if self.n_steps % (cfg.sample_every * 10) == 0:
                    self.snapshot(f"t{self.n_steps:08d}")

                hit = self.detect()
                if hit is None:
                    continue
                cid, mx = hit
                self.sample()
                self.do_surgery(cid)
                self.sample()
        except (ResolutionExhausted, SurgeryImpossible, GlueRejected,
                DecompositionIncomplete, StepCollapse) as exc:
            _jsonl(self.ev_fh, {"kind": "abort", "time": self.state.t,
                                "error": type(exc).__name__,
                                "message": str(exc)})
            return EXIT_RESOLUTION
        self.sample()
        return EXIT_CLEAN

    def finish(self, exit_code: int) -> RunResult:
        series = aggregate_series(self.rows, self.cfg.tol)
        monitor_ok = series["ok"] and not self.pointwise
        if exit_code == EXIT_CLEAN and not monitor_ok:
            exit_code = EXIT_MONITOR
        word = self.ledger.word()
        summary = {"word": word, "t_final": self.state.t,
                   "steps": self.n_steps, "surgeries": self.n_surgeries,
                   "decompositions": self.n_decomps,
                   "evolving": sorted(self.state.evolving()),
                   "scale": self.scale, "V0": self.V0,
                   "monitor_ok": monitor_ok,
                   "series_checks": series,
                   "pointwise_violations": self.pointwise[:50]}
        _jsonl(self.ev_fh, {"kind": "finish", "time": self.state.t,
                            "word": word, "exit_code": exit_code,
                            "surgeries": self.n_surgeries})
        self.ev_fh.close()
        self.csv_fh.close()
        cfg_echo = {f: getattr(self.cfg, f)
                    for f in self.cfg.__dataclass_fields__}
        with open(os.path.join(self.out_dir, "report.json"), "w") as fh:
            json.dump({"exit_code": exit_code, "summary": summary,
                       "config": cfg_echo}, fh, indent=1, sort_keys=True,
                      default=repr)
        return RunResult(exit_code=exit_code, word=word,
                         out_dir=self.out_dir, summary=summary)


def run(cfg: RunConfig, out_dir: str | None = None) -> RunResult:
    out_dir = out_dir or cfg.out_dir
    np.random.seed(cfg.seed)
    r = _Run(cfg, out_dir)
    code = r.loop()
    return r.finish(code)


def _pick_cut_window(omega: np.ndarray, n: int):
    """The hot interval to cut: interior -> split, boundary -> cap."""
    hot = np.flatnonzero(~omega)
    if hot.size == 0:
        raise SurgeryImpossible("no high-curvature region to cut")
    splits = np.flatnonzero(np.diff(hot) > 1)
    starts = np.concatenate([[hot[0]], hot[splits + 1]])
    ends = np.concatenate([hot[splits], [hot[-1]]])
    for lo, hi in zip(starts, ends):
        if lo > 0 and hi < n - 1:
            return "split", int(lo), int(hi)
    lo, hi = int(starts[0]), int(ends[0])
    return ("cap_left", lo, hi) if lo == 0 else ("cap_right", lo, hi)

"""Command-line interface.

Exit codes: 0 clean (extinction or t_max, monitors pass), 2 monitor
violation, 3 resolution exhaustion (cutoff search, glue, or step collapse).
"""

from __future__ import annotations

import argparse
import json
import sys

from . import standard
from .config import parse_config
from .orchestrate import EXIT_RESOLUTION, run


def _cmd_run(args) -> int:
    cfg = parse_config(args.config)
    if args.out:
        cfg.out_dir = args.out
    result = run(cfg)
    print(f"word={result.word} surgeries={result.summary['surgeries']} "
          f"t_final={result.summary['t_final']:.6g} "
          f"exit={result.exit_code} out={result.out_dir}")
    return result.exit_code


def _cmd_standard(args) -> int:
    if args.action != "precompute":
        raise SystemExit(f"unknown standard action {args.action!r}")
    cfg = parse_config(args.config)
    init = standard.build_initial_cap(smoothing=0.2, n=cfg.std_grid)
    table = standard.precompute(init, t_end=cfg.std_t_end, smoothing=0.2)
    dest = cfg.std_table or "std"
    standard.save_table(table, dest)
    print(f"standard solution table: {len(table.times)} samples, "
          f"c_std={table.c_std:.4f}, saved to {dest}")
    return 0


def _cmd_analyze(args) -> int:
    from .analysis import analyze
    out = analyze(args.run_dir)
    print(json.dumps({k: out[k] for k in
                      ("ok", "series_match_live", "snapshot_monitors_ok",
                       "neck_fit", "word", "figures")},
                     indent=1, sort_keys=True, default=repr))
    return 0 if out["ok"] else 2


def _cmd_replay(args) -> int:
    from .analysis import replay_surgery
    overrides = {}
    for name in ("delta", "eps", "h"):
        val = getattr(args, name)
        if val is not None:
            overrides[name] = val
    out = replay_surgery(args.run_dir, args.event_id, overrides)
    print(json.dumps(out, indent=1, sort_keys=True, default=repr))
    return 0 if out["ok"] else EXIT_RESOLUTION


def main(argv=None) -> int:
    p = argparse.ArgumentParser(prog="ricciflow")
    sub = p.add_subparsers(dest="command", required=True)

    q = sub.add_parser("run", help="run a configured flow with surgery")
    q.add_argument("config")
    q.add_argument("--out", default=None, help="override output directory")
    q.set_defaults(fn=_cmd_run)

    q = sub.add_parser("standard", help="standard-solution table tools")
    q.add_argument("action", choices=["precompute"])
    q.add_argument("config")
    q.set_defaults(fn=_cmd_standard)

    q = sub.add_parser("analyze", help="recompute monitors, render figures")
    q.add_argument("run_dir")
    q.set_defaults(fn=_cmd_analyze)

    q = sub.add_parser("replay", help="re-execute one persisted surgery")
    q.add_argument("run_dir")
    q.add_argument("event_id")
    q.add_argument("--delta", type=float, default=None)
    q.add_argument("--eps", type=float, default=None)
    q.add_argument("--h", type=float, default=None)
    q.set_defaults(fn=_cmd_replay)

    args = p.parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())

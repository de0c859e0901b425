"""Benchmark command line: run experiments, dump channels, validate."""

from __future__ import annotations

import argparse
import dataclasses
import sys

import numpy as np

from . import bench
from .channel import discrete_channel, gen_paths_eva, max_doppler_hz


def _plan_from_args(args) -> bench.ExperimentPlan:
    if args.plan and args.preset:
        raise SystemExit("use either --plan or --preset, not both")
    if args.plan:
        plan = bench.parse_plan_file(args.plan)
        if args.seed is not None:
            plan = dataclasses.replace(plan, seed=args.seed)
        return plan
    if args.preset:
        return bench.preset_plan(args.preset, seed=args.seed)
    raise SystemExit("one of --plan or --preset is required")


def _cmd_run(args) -> int:
    plan = _plan_from_args(args)
    records = bench.run_plan(
        plan, args.out, workers=args.workers, resume=not args.no_resume
    )
    for r in records:
        flag = " (low confidence)" if r.low_confidence else ""
        print(
            f"{r.scheme:5s} {r.detector:11s} snr={r.snr_db:5.1f} dB "
            f"speed={r.speed_kmh:6.1f} km/h  ber={r.ber:.3e} fer={r.fer:.3e}{flag}"
        )
    print(f"wrote {args.out} and {args.out}.manifest.json")
    return 0


def _cmd_dump_channel(args) -> int:
    if args.plan or args.preset:
        cfg = _plan_from_args(args).frame
    else:
        cfg = bench.preset_plan("fig1-desk").frame
    rng = np.random.default_rng(np.random.SeedSequence(args.seed))
    nu_max = max_doppler_hz(args.speed_kmh, cfg.f_c)
    chan = discrete_channel(gen_paths_eva(nu_max, cfg, rng), cfg)
    with open(args.out, "w") as fh:
        fh.write("l,q,re,im\n")
        for l in range(chan.taps.shape[0]):
            for q in range(chan.taps.shape[1]):
                v = chan.taps[l, q]
                fh.write(f"{l},{q},{v.real:.12g},{v.imag:.12g}\n")
    print(f"wrote {args.out} ({chan.taps.shape[0]}x{chan.taps.shape[1]} taps)")
    return 0


def _cmd_validate(_args) -> int:
    from .selfcheck import run_selfcheck

    return 0 if run_selfcheck() else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="uscsim",
        description="Monte-Carlo BER benchmarks for unitary-precoded "
        "single-carrier waveforms over doubly-selective channels",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment plan or preset")
    run.add_argument("--plan", help="plan file (flat key = value format)")
    run.add_argument("--preset", help=f"one of {sorted(bench.PRESETS)}")
    run.add_argument("--seed", type=int, default=None, help="override the plan seed")
    run.add_argument("--out", default="results.csv", help="output CSV path")
    run.add_argument("--workers", type=int, default=1, help="parallel workers")
    run.add_argument(
        "--no-resume", action="store_true",
        help="ignore an existing manifest and recompute every point",
    )
    run.set_defaults(func=_cmd_run)

    dump = sub.add_parser("dump-channel", help="write one channel realization as CSV")
    dump.add_argument("--plan", help="plan file supplying the frame parameters")
    dump.add_argument("--preset", help="preset supplying the frame parameters")
    dump.add_argument("--speed-kmh", type=float, default=500.0)
    dump.add_argument("--seed", type=int, default=1)
    dump.add_argument("--out", default="channel.csv")
    dump.set_defaults(func=_cmd_dump_channel)

    val = sub.add_parser("validate", help="run the built-in invariant suite")
    val.set_defaults(func=_cmd_validate)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())

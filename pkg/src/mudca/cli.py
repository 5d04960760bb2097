"""Command-line entry point.

Subcommands::

    mudca simulate --config run.ini [--seed N] [--out DIR] [--set k=v ...]
    mudca capacity --config run.ini [--v BITS] [--w-max BITS] [...]
    mudca analytic dof --tc 20 --ns 10 [--m 8 | --unbounded-m]
    mudca analytic timeshare --mode 0.8:50x39 --mode 0.2:5
    mudca sweep --config run.ini --axis antennas --values 5,10,20 [...]

``simulate`` and ``capacity`` write frames.csv, queues.csv, and summary.txt
into the output directory; ``sweep`` writes sweep.csv. Exit codes: 0 on
success, 1 for configuration problems (the message names the offending
key), 2 for runtime failures.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import os
import sys
from pathlib import Path
from typing import Dict, List, Optional, Sequence

from .analytic import TimeShareMode, timeshare_sum_rate, training_dof
from .config import load_run_config, summary_pairs
from .engine import (AdmissionControl, RunConfig, SimResult, SweepPoint,
                     default_admission, run_simulation, sweep)
from .errors import ConfigError, ParameterError

FLOAT_FMT = "{:.12g}"


def _fmt(value) -> str:
    if isinstance(value, float):
        return FLOAT_FMT.format(value)
    return str(value)


def _atomic_write(path: Path, text: str):
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


def _csv_text(header: Sequence[str], rows: Sequence[Sequence[str]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def write_frames_csv(path: Path, result: SimResult, user_ids: Sequence[int]):
    rows = []
    for rec in result.frames:
        rows.append([
            str(rec.frame_index), str(rec.t_start), str(rec.frame_len),
            rec.mode,
            ";".join(str(user_ids[i]) for i in rec.scheduled),
            ";".join(_fmt(b) for b in rec.allocated_bits),
            ";".join(_fmt(b) for b in rec.served_bits),
        ])
    _atomic_write(path, _csv_text(
        ["frame_index", "t_start", "frame_len", "mode", "scheduled_users",
         "alloc_bits", "served_bits"], rows))


def write_queues_csv(path: Path, result: SimResult, user_ids: Sequence[int]):
    header = (["slot"]
              + [f"q_{uid}" for uid in user_ids]
              + [f"hol_{uid}" for uid in user_ids])
    n, total = result.slot_queue.shape
    rows = []
    for slot in range(total):
        row = [str(slot)]
        row += [_fmt(float(result.slot_queue[u, slot])) for u in range(n)]
        row += [_fmt(float(result.slot_hol[u, slot])) for u in range(n)]
        rows.append(row)
    _atomic_write(path, _csv_text(header, rows))


def write_summary(path: Path, result: SimResult, user_ids: Sequence[int],
                  extras: Dict[str, str]):
    s = result.summary
    lines = [f"{k}={v}" for k, v in extras.items()]
    lines += [
        f"total_slots={s.total_slots}",
        f"num_frames={s.num_frames}",
        f"sum_rate={_fmt(s.sum_rate)}",
        f"stability_slope={_fmt(s.stability_slope)}",
    ]
    if s.admitted_rate is not None:
        lines.append(f"admitted_rate={_fmt(s.admitted_rate)}")
    for idx, uid in enumerate(user_ids):
        lines.append(f"time_avg_delay_{uid}={_fmt(s.per_user_delay[idx])}")
        lines.append(f"mean_queue_{uid}={_fmt(s.per_user_mean_queue[idx])}")
        lines.append(f"arrived_{uid}={_fmt(s.per_user_arrived[idx])}")
        lines.append(f"served_{uid}={_fmt(s.per_user_served[idx])}")
        lines.append(f"final_backlog_{uid}={_fmt(s.per_user_final_backlog[idx])}")
        lines.append(
            f"delay_convergence_{uid}={_fmt(s.per_user_delay_convergence[idx])}")
    _atomic_write(path, "\n".join(lines) + "\n")


def write_sweep_csv(path: Path, points: Sequence[SweepPoint], policy: str):
    rows = []
    for p in points:
        s = p.summary
        rows.append([
            policy, p.axis, _fmt(p.value), str(p.seed), _fmt(s.sum_rate),
            "" if s.admitted_rate is None else _fmt(s.admitted_rate),
            _fmt(s.mean_delay), _fmt(s.max_user_delay),
            _fmt(s.stability_slope), str(s.total_slots),
        ])
    _atomic_write(path, _csv_text(
        ["policy", "axis", "value", "seed", "sum_rate", "admitted_rate",
         "mean_delay", "max_user_delay", "stability_slope", "total_slots"],
        rows))


def write_run_outputs(out_dir: Path, config: RunConfig, result: SimResult):
    out_dir.mkdir(parents=True, exist_ok=True)
    user_ids = [u.user_id for u in config.users]
    write_frames_csv(out_dir / "frames.csv", result, user_ids)
    write_queues_csv(out_dir / "queues.csv", result, user_ids)
    write_summary(out_dir / "summary.txt", result, user_ids,
                  summary_pairs(config))


def _parse_timeshare_mode(spec: str) -> TimeShareMode:
    """``FRACTION:T[xCOUNT],...`` e.g. ``0.8:50x39`` or ``1:50x39,5``."""
    try:
        frac_part, coh_part = spec.split(":", 1)
        fraction = float(frac_part)
        coherences: List[int] = []
        for token in coh_part.split(","):
            token = token.strip()
            if "x" in token:
                value, count = token.split("x", 1)
                coherences += [int(value)] * int(count)
            else:
                coherences.append(int(token))
    except ValueError as exc:
        raise ConfigError("--mode", f"bad mode spec {spec!r} ({exc})") from None
    return TimeShareMode(fraction=fraction, coherences=coherences)


def _parse_values(raw: str) -> List[float]:
    try:
        return [float(tok) for tok in raw.split(",") if tok.strip()]
    except ValueError as exc:
        raise ConfigError("--values", f"bad value list {raw!r} ({exc})") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mudca",
        description="MU-MIMO downlink scheduling simulator with "
                    "channel-acquisition overhead")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_run_args(p):
        p.add_argument("--config", required=True, help="INI config file")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--set", action="append", default=[], dest="overrides",
                       metavar="SECTION.KEY=VALUE")

    sim = sub.add_parser("simulate", help="run one seeded simulation")
    add_run_args(sim)

    cap = sub.add_parser("capacity",
                         help="run with admission control and print A_avg")
    add_run_args(cap)
    cap.add_argument("--v", type=float, default=None,
                     help="admission threshold in bits")
    cap.add_argument("--w-max", type=float, default=None,
                     help="admission grant in bits")

    ana = sub.add_parser("analytic", help="closed-form calculators")
    anasub = ana.add_subparsers(dest="calc", required=True)
    dof = anasub.add_parser("dof")
    dof.add_argument("--tc", type=float, required=True)
    dof.add_argument("--ns", type=int, required=True)
    dof.add_argument("--m", type=int, default=None)
    dof.add_argument("--unbounded-m", action="store_true")
    ts = anasub.add_parser("timeshare")
    ts.add_argument("--mode", action="append", required=True, dest="modes",
                    metavar="FRACTION:T[xCOUNT],...")

    sw = sub.add_parser("sweep", help="one run per value of a config axis")
    add_run_args(sw)
    sw.add_argument("--axis", required=True)
    sw.add_argument("--values", required=True)

    return parser


def _out_dir(args, config: RunConfig) -> Path:
    if args.out:
        return Path(args.out)
    if config.output_dir:
        return Path(config.output_dir)
    return Path(".")


def cmd_simulate(args) -> int:
    config = load_run_config(args.config, args.overrides, seed=args.seed)
    result = run_simulation(config)
    write_run_outputs(_out_dir(args, config), config, result)
    print(f"sum_rate={_fmt(result.summary.sum_rate)}")
    return 0


def cmd_capacity(args) -> int:
    config = load_run_config(args.config, args.overrides, seed=args.seed)
    if args.v is not None:
        w = args.v if args.w_max is None else args.w_max
        admission = AdmissionControl(threshold_v=args.v, grant_w_max=w)
    elif config.admission is not None:
        admission = config.admission
        if args.w_max is not None:
            admission = AdmissionControl(admission.threshold_v, args.w_max)
    else:
        admission = default_admission(config)
        if args.w_max is not None:
            admission = AdmissionControl(admission.threshold_v, args.w_max)
    config = dataclasses.replace(config, admission=admission)
    result = run_simulation(config)
    write_run_outputs(_out_dir(args, config), config, result)
    print(f"A_avg={_fmt(result.summary.admitted_rate)}")
    return 0


def cmd_analytic(args) -> int:
    if args.calc == "dof":
        value = training_dof(args.tc, args.ns, num_antennas=args.m,
                             unbounded_antennas=args.unbounded_m)
    else:
        modes = [_parse_timeshare_mode(spec) for spec in args.modes]
        value = timeshare_sum_rate(modes)
    print(_fmt(float(value)))
    return 0


def cmd_sweep(args) -> int:
    config = load_run_config(args.config, args.overrides, seed=args.seed)
    values = _parse_values(args.values)
    points = sweep(config, args.axis, values)
    out = _out_dir(args, config)
    out.mkdir(parents=True, exist_ok=True)
    write_sweep_csv(out / "sweep.csv", points, config.policy.kind)
    print(f"wrote {len(points)} runs to {out / 'sweep.csv'}")
    return 0


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handlers = {"simulate": cmd_simulate, "capacity": cmd_capacity,
                "analytic": cmd_analytic, "sweep": cmd_sweep}
    try:
        return handlers[args.command](args)
    except (ConfigError, ParameterError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"runtime error: {exc}", file=sys.stderr)
        return 2


def entry():
    sys.exit(main())


if __name__ == "__main__":
    entry()

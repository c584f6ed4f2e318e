"""Command-line entry point.

Subcommands::

    zenolink protocol    --n 7 --bit 1 --trials 1000000 --seed 1
    zenolink montecarlo  --n 2 7 --sigma-theta 0.01 --m-list 1-100 --trials 1000000 --analytic
    zenolink tdse        --scenario fig3b --out-dir runs/fig3b
    zenolink zeno-table  --n 1 2 7 50

Exit codes: 0 success, 2 usage error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import platform
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .core import BeamSplitterStack
from .errors import NumericalError
from .io import write_csv, write_json
from .montecarlo import MODES, NoiseModel, RateCurve, analytic_rates, estimate_rates, tally_processes, worker_count
from .protocol import p0_return, p1_success, zeno_limit_table

log = logging.getLogger("zenolink")

EXIT_OK, EXIT_USAGE, EXIT_NUMERICAL = 0, 2, 3


class UsageError(ValueError):
    pass


# ------------------------------------------------------------------ parsing helpers

def positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def non_negative_float(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from None
    if not value >= 0 or math.isinf(value):
        raise argparse.ArgumentTypeError(f"must be a finite number >= 0, got {text}")
    return value


def fraction(text: str) -> float:
    value = non_negative_float(text)
    if value > 1:
        raise argparse.ArgumentTypeError(f"must lie in [0, 1], got {text}")
    return value


def parse_m_list(text: str) -> list[int]:
    """``"1-100"``, ``"1,2,5,10-20"`` or ``"1-100:5"`` (range with step)."""
    values = set()
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        try:
            step = 1
            if ":" in item:
                item, step_text = item.split(":")
                step = int(step_text)
            if "-" in item:
                lo, hi = (int(p) for p in item.split("-"))
                if step < 1 or hi < lo:
                    raise ValueError
                values.update(range(lo, hi + 1, step))
            else:
                values.add(int(item))
        except ValueError:
            raise argparse.ArgumentTypeError(f"cannot read M list item {item!r}") from None
    if not values or min(values) < 1:
        raise argparse.ArgumentTypeError("M values must be >= 1")
    return sorted(values)


def resolve_seed(seed):
    """An explicit seed, or fresh entropy (which is then recorded)."""
    return int(seed) if seed is not None else int(np.random.SeedSequence().entropy)


def run_timestamp(explicit=None):
    """Timestamp for metadata: ``--timestamp``, else SOURCE_DATE_EPOCH, else None.

    A wall-clock default would make repeated runs differ byte for byte.
    """
    if explicit:
        return explicit
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    if epoch:
        return datetime.fromtimestamp(int(epoch), tz=timezone.utc).isoformat()
    return None


def base_meta(args, command: str) -> dict:
    return {
        "command": command,
        "zenolink_version": __version__,
        "numpy_version": np.__version__,
        "python_version": platform.python_version(),
        "threads": worker_count(),
        "timestamp": run_timestamp(args.timestamp),
    }


# ------------------------------------------------------------------ subcommands

PROTOCOL_COLUMNS = (
    "N", "bit", "trials", "alice_detections", "alice_rate", "stderr",
    "bob_detections", "alice_after_bob_support", "p1_success", "p0_return",
)


def cmd_protocol(args) -> int:
    seed = resolve_seed(args.seed)
    noise = NoiseModel.for_stack(args.n, args.sigma_theta, args.noise_mode) if args.sigma_theta > 0 else None
    tally = tally_processes(args.bit, args.n, args.trials, seed=seed, noise=noise)
    ideal = BeamSplitterStack.ideal(args.n)
    expected = p1_success(ideal) if args.bit == 1 else p0_return(ideal)
    row = (
        args.n, args.bit, args.trials, tally.alice_detections, tally.alice_rate, tally.alice_stderr,
        tally.bob_detections, tally.alice_after_bob_support, p1_success(ideal), p0_return(ideal),
    )
    print(f"N={args.n} bit={args.bit} trials={args.trials} seed={seed}")
    print(f"  Alice detection rate  {tally.alice_rate:.6f} +/- {tally.alice_stderr:.2e}")
    print(f"  ideal closed form     {expected:.6f}")
    print(f"  Bob detections        {tally.bob_detections}")
    print(f"  Alice after B support {tally.alice_after_bob_support}")
    if args.out_dir:
        out = Path(args.out_dir)
        write_csv(out / f"protocol_N{args.n}_bit{args.bit}.csv", PROTOCOL_COLUMNS, [row])
        meta = base_meta(args, "protocol")
        meta.update(
            N=args.n, bit=args.bit, trials=args.trials, seed=seed,
            sigma_theta=args.sigma_theta, noise_mode=args.noise_mode, clamped=tally.clamped,
        )
        write_json(out / f"protocol_N{args.n}_bit{args.bit}.json", meta)
    return EXIT_OK


def _curve_rows(mc: RateCurve, an: RateCurve | None):
    for i, row in enumerate(mc.rows()):
        if an is None:
            yield row
        else:
            yield row + (float(an.bit_error_rate[i]), float(an.violation_rate[i]))


def cmd_montecarlo(args) -> int:
    seed = resolve_seed(args.seed)
    out = Path(args.out_dir)
    # one substream per requested N, so adding an N leaves the others unchanged
    for n in args.n:
        noise = NoiseModel.for_stack(n, args.sigma_theta, args.noise_mode)
        n_seed = int(np.random.SeedSequence([seed, n]).generate_state(1)[0])
        curve = estimate_rates(n, noise, args.m_list, args.trials, bit_mix=args.bit_mix, seed=n_seed)
        an = analytic_rates(n, noise, args.m_list, bit_mix=args.bit_mix, trials=args.trials) if args.analytic else None
        header = RateCurve.COLUMNS + (("analytic_bit_error_rate", "analytic_violation_rate") if an else ())
        write_csv(out / f"rates_N{n}.csv", header, _curve_rows(curve, an))
        meta = base_meta(args, "montecarlo")
        meta.update(curve.meta)
        meta.update(
            seed=seed, curve_seed=n_seed, trials_per_M=args.trials, M_values=list(map(int, curve.m)),
            analytic=bool(an), sent_one=int(curve.sent_one[0]), sent_zero=int(curve.sent_zero[0]),
        )
        if an:
            meta.update(p0_per_process=an.meta["p0_per_process"], p1_per_process=an.meta["p1_per_process"])
        write_json(out / f"rates_N{n}.json", meta)
        best = curve.argmin_m()
        print(
            f"N={n}: {len(curve.m)} M values, {args.trials} events each; "
            f"lowest bit-error rate {curve.bit_error_rate.min():.3e} at M={best} -> {out / f'rates_N{n}.csv'}"
        )
    return EXIT_OK


def cmd_tdse(args) -> int:
    from .tdse.scenario import load_scenario, run_scenario, scenario_to_dict

    try:
        scenario = load_scenario(args.scenario)
    except json.JSONDecodeError as exc:
        raise UsageError(f"scenario {args.scenario}: malformed JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}")
    except FileNotFoundError:
        raise UsageError(f"scenario {args.scenario!r} is neither a file nor a bundled scenario name")
    if args.frame_stride:
        from dataclasses import replace

        scenario = replace(scenario, frame_stride=args.frame_stride)
    result = run_scenario(scenario)
    out = Path(args.out_dir)
    for i, frame in enumerate(result.frames):
        write_csv(out / "frames" / f"frame_{i:04d}.csv", ("x", "density"), zip(result.x.tolist(), frame.density.tolist()))
    write_csv(out / "timeseries.csv", ("t", "P_A", "P_Tr", "P_B", "collapsed", "norm"), result.timeseries.tolist())
    summary = base_meta(args, "tdse")
    summary.update(
        scenario=scenario_to_dict(scenario),
        final=result.final,
        survival=result.survival,
        frame_times=[f.time for f in result.frames],
        collapses=[{"time": c.time, "removed": c.removed, "leakage": c.leakage} for c in result.collapses],
        ledger_error=result.ledger_error(),
        norm_drift=result.norm_drift(),
        b_to_tr_backflow=result.backflow,
        boundary_sentinel_max=result.sentinel_max,
        steps=result.steps,
    )
    write_json(out / "summary.json", summary)
    f = result.final
    print(f"{scenario.name or 'scenario'} (bit {scenario.bit}): P_A={f['P_A']:.5f} P_Tr={f['P_Tr']:.2e} "
          f"P_B={f['P_B']:.5f} collapsed={f['collapsed']:.5f} survival={f['survival']:.5f}")
    print(f"  {len(result.frames)} frames, ledger error {result.ledger_error():.1e} -> {out}")
    return EXIT_OK


def cmd_zeno_table(args) -> int:
    rows = zeno_limit_table(args.n)
    for n, p in rows:
        print(f"{n:6d}  {p:.6f}")
    if args.out_dir:
        write_csv(Path(args.out_dir) / "zeno_table.csv", ("N", "p1_success"), rows)
    return EXIT_OK


# ------------------------------------------------------------------ entry point

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="zenolink", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"zenolink {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging on stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, out_default=None):
        p.add_argument("--seed", type=int, default=None, help="master seed (default: fresh entropy, recorded)")
        p.add_argument("--out-dir", default=out_default, help="output directory")
        p.add_argument("--timestamp", default=None, help="timestamp to record in metadata")

    p = sub.add_parser("protocol", help="single-round detection statistics against the closed forms")
    p.add_argument("--n", type=positive_int, required=True, help="beam splitters per round")
    p.add_argument("--bit", type=int, choices=(0, 1), required=True)
    p.add_argument("--trials", type=positive_int, default=100_000)
    p.add_argument("--sigma-theta", type=non_negative_float, default=0.0, help="angle noise (rad)")
    p.add_argument("--noise-mode", choices=MODES, default="per_shot")
    common(p)
    p.set_defaults(func=cmd_protocol)

    p = sub.add_parser("montecarlo", help="bit-error and violation rates versus M")
    p.add_argument("--n", type=positive_int, nargs="+", default=[2, 7])
    p.add_argument("--m-list", type=parse_m_list, default=parse_m_list("1-100"), help='e.g. "1-100" or "1,2,5,10-50:5"')
    p.add_argument("--sigma-theta", type=non_negative_float, default=0.01)
    p.add_argument("--trials", type=positive_int, default=1_000_000, help="logical events per M")
    p.add_argument("--bit-mix", type=fraction, default=0.5, help="fraction of logical 1s sent")
    p.add_argument("--noise-mode", choices=MODES, default="per_shot")
    p.add_argument("--analytic", action="store_true", help="add analytic oracle columns")
    common(p, "zenolink-out")
    p.set_defaults(func=cmd_montecarlo)

    p = sub.add_parser("tdse", help="run a wavepacket scenario")
    p.add_argument("--scenario", required=True, help="JSON file or bundled name (fig3a, fig3b)")
    p.add_argument("--frame-stride", type=positive_int, default=None, help="override the scenario frame stride")
    common(p, "zenolink-out")
    p.set_defaults(func=cmd_tdse)

    p = sub.add_parser("zeno-table", help="ideal 1-bit success cos(pi/2N)^(2N)")
    p.add_argument("--n", type=positive_int, nargs="+", default=[1, 2, 3, 5, 7, 10, 20, 50, 100, 500])
    p.add_argument("--out-dir", default=None)
    p.add_argument("--timestamp", default=None, help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_zeno_table)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        sys.stdout.reconfigure(line_buffering=True)
    except (AttributeError, ValueError):
        pass
    try:
        return args.func(args)
    except NumericalError as exc:
        print(f"zenolink: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (UsageError, ValueError, OSError) as exc:
        print(f"zenolink: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())

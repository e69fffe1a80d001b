"""Batch front-end: parse a config, run the sweep, emit CSV or JSON results."""

import argparse
import json
import sys
import time

from . import __version__
from .config import ConfigError, parse_config, parse_snr_grid
from .protocol import SweepResult, run_sweep

__all__ = ["main", "emit_results", "CSV_COLUMNS"]

CSV_COLUMNS = (
    "snr_db",
    "scheme",
    "policy",
    "detector_relay",
    "detector_dest",
    "ber",
    "avg_delay_epochs",
    "avg_buffer_size",
    "residual_blocks",
    "mults",
    "adds",
)


def _format_value(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _result_rows(sweep: SweepResult):
    cfg = sweep.config
    for point in sweep.points:
        yield {
            "snr_db": float(point.snr_db),
            "scheme": cfg.scheme,
            "policy": cfg.policy,
            "detector_relay": cfg.detector_relay,
            "detector_dest": cfg.detector_dest,
            "ber": float(point.ber),
            "avg_delay_epochs": None if point.avg_delay is None else float(point.avg_delay),
            "avg_buffer_size": float(point.avg_capacity),
            "residual_blocks": int(point.residual),
            "mults": int(point.mults),
            "adds": int(point.adds),
        }


def emit_results(sweep: SweepResult, fmt: str, runtime_s: float = 0.0) -> bytes:
    """Serialize a finished sweep; CSV output is byte-stable for a fixed seed."""
    rows = list(_result_rows(sweep))
    if fmt == "csv":
        lines = [",".join(CSV_COLUMNS)]
        for row in rows:
            lines.append(",".join(_format_value(row[col]) for col in CSV_COLUMNS))
        return ("\n".join(lines) + "\n").encode("utf-8")
    if fmt == "json":
        cfg = sweep.config
        manifest = {
            "version": __version__,
            "seed": cfg.seed,
            "runtime_s": runtime_s,
            "config": {
                "users": cfg.users,
                "relays": cfg.relays,
                "gain": cfg.gain,
                "symbols": cfg.symbols,
                "packets": cfg.packets,
                "snr_db": list(cfg.snr_db),
                "scheme": cfg.scheme,
                "policy": cfg.policy,
                "detector_relay": cfg.detector_relay,
                "detector_dest": cfg.detector_dest,
                "buffer": cfg.buffer_mode,
                "capacity": cfg.capacity,
                "j_min": cfg.j_min,
                "j_max": cfg.j_max,
                "d1": cfg.d1,
                "d2": cfg.d2,
                "d3": cfg.d3,
                "gamma": cfg.gamma,
                "seed": cfg.seed,
            },
        }
        payload = {"manifest": manifest, "results": rows}
        return (json.dumps(payload, indent=2, sort_keys=True) + "\n").encode("utf-8")
    raise ValueError(f"unknown output format {fmt!r}")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dstcsim",
        description="Monte Carlo BER/delay sweeps for buffer-aided space-time coded relaying",
    )
    parser.add_argument("--config", metavar="PATH", help="key=value config file")
    parser.add_argument("--seed", type=int, metavar="U64", help="override the experiment seed")
    parser.add_argument("--format", choices=("csv", "json"), default="csv")
    parser.add_argument("--out", metavar="PATH", help="output file (default: stdout)")
    parser.add_argument("--scheme", metavar="NAME", help="override the configured scheme")
    parser.add_argument("--snr", metavar="A:B:STEP", help="override the SNR grid in dB")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        text = ""
        if args.config:
            try:
                with open(args.config, "r", encoding="utf-8") as handle:
                    text = handle.read()
            except OSError as exc:
                print(f"error: cannot read config {args.config}: {exc}", file=sys.stderr)
                return 2
        overrides = {}
        if args.seed is not None:
            overrides["seed"] = args.seed
        if args.scheme is not None:
            overrides["scheme"] = args.scheme
        if args.snr is not None:
            overrides["snr_db"] = parse_snr_grid(args.snr)
        config = parse_config(text, **overrides)
    except ConfigError as exc:
        print(f"error: invalid configuration: {exc}", file=sys.stderr)
        return 2

    start = time.perf_counter()
    sweep = run_sweep(config)
    runtime = time.perf_counter() - start
    payload = emit_results(sweep, args.format, runtime_s=runtime)

    if args.out:
        try:
            with open(args.out, "wb") as handle:
                handle.write(payload)
        except OSError as exc:
            print(f"error: cannot write {args.out}: {exc}", file=sys.stderr)
            return 2
    else:
        sys.stdout.buffer.write(payload)
    return 0


if __name__ == "__main__":
    sys.exit(main())

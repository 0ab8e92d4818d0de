"""
Command-line front end.

    pucchsim simulate  --preset fig8 --out fig8.csv --trials 1000
    pucchsim simulate  --scenario scn.json --snr 0,2,4
    pucchsim calibrate --scenario scn.json --target 0.01 --trials 100000
    pucchsim oracle    --ebn0 0:12:1

SNR values are per-RE Es/N0 in dB at each receive antenna. Exit codes:
0 success, 2 invalid configuration or arguments, 3 I/O failure.
"""
from __future__ import annotations

import argparse
import sys

import numpy as np

from .errors import ConfigError, InsufficientSamplesError, InvalidArgumentError
from .presets import PRESET_NAMES, preset
from .sim import (OracleScheme, Scenario, analytic_ber, calibrate_dtx_threshold,
                  measure_dtx_to_ack, sweep_snr, write_csv)

EXIT_OK, EXIT_CONFIG, EXIT_IO = 0, 2, 3
DEFAULT_SEED = 1


def _parse_list(text):
    """Comma list, or lo:hi:step (inclusive), of floats."""
    text = text.strip()
    if not text:
        return []
    try:
        if ":" in text:
            lo, hi, step = (float(v) for v in text.split(":"))
            if step <= 0:
                raise ValueError
            return [float(v) for v in np.arange(lo, hi + step / 2, step)]
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"cannot parse value list {text!r}") from None


def _scenarios(args):
    if bool(args.scenario) == bool(args.preset):
        raise ConfigError("give exactly one of --scenario or --preset")
    if args.preset:
        curves, multi = preset(args.preset), True
    else:
        curves, multi = [(None, Scenario.from_json(args.scenario))], False
    out = []
    for label, scn in curves:
        kw = {}
        if args.trials is not None:
            kw["trials"] = args.trials
        if args.seed is not None:
            kw["base_seed"] = args.seed
        if getattr(args, "snr", None):
            kw["snr_grid_db"] = tuple(_parse_list(args.snr))
        out.append((label, scn.with_overrides(**kw) if kw else scn))
    return out, multi


def _open_out(path):
    if path in (None, "-"):
        return sys.stdout, False
    return open(path, "w", newline=""), True


def cmd_simulate(args):
    curves, multi = _scenarios(args)
    results = []
    for label, scn in curves:
        if not scn.snr_grid_db:
            raise ConfigError("SNR grid is empty")
        results.append((label, sweep_snr(scn, workers=args.workers)))
    fh, own = _open_out(args.out)
    try:
        if multi:
            write_csv(fh, results, curve=True)
        else:
            write_csv(fh, results[0][1])
    finally:
        if own:
            fh.close()
    return EXIT_OK


def cmd_calibrate(args):
    if not 0 < args.target < 1:
        raise ConfigError("--target must lie in (0, 1)")
    # --trials here sizes the calibration, not the sweep
    trials, args.trials = args.trials, None
    curves, _ = _scenarios(args)
    lines = []
    for label, scn in curves:
        n = trials if trials is not None else scn.calibration_trials
        if scn.build_chain().gate == "crc":
            lines.append(f"{label or 'scenario'}: CRC-gated, no threshold needed")
            continue
        th = calibrate_dtx_threshold(scn, args.target, n, workers=args.workers)
        rate = measure_dtx_to_ack(scn, th, n, workers=args.workers)
        lines.append(f"{label or 'scenario'}: threshold={th!r} dtx_to_ack={rate!r}")
    fh, own = _open_out(args.out)
    try:
        fh.write("\n".join(lines) + "\n")
    finally:
        if own:
            fh.close()
    return EXIT_OK


def cmd_oracle(args):
    grid = _parse_list(args.ebn0)
    if not grid:
        raise ConfigError("Eb/N0 grid is empty")
    names = [s.value for s in OracleScheme] if args.scheme in (None, "all") else args.scheme.split(",")
    for name in names:
        if name not in OracleScheme.__members__:
            raise ConfigError(f"unknown scheme {name!r}")
    fh, own = _open_out(args.out)
    try:
        fh.write(",".join(["ebn0_db"] + names) + "\n")
        for e in grid:
            vals = [repr(float(e))] + [repr(float(analytic_ber(n, e))) for n in names]
            fh.write(",".join(vals) + "\n")
    finally:
        if own:
            fh.close()
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="pucchsim", description=(
        "Link-level simulator for NR PUCCH formats 0-4. SNR is the per-RE Es/N0 at each "
        "receive antenna; Eb/N0 = SNR + 10*log10(UCI REs * n_rx * amplitude^2 / bits), "
        "amplitude 1 unless the scenario sets power_reference \"prb\"."))
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--scenario", help="scenario JSON file")
        sp.add_argument("--preset", choices=PRESET_NAMES, help="named figure setup")
        sp.add_argument("--out", help="output file (default stdout)")
        sp.add_argument("--trials", type=int, help="trials per SNR point")
        sp.add_argument("--seed", type=int, help=f"base seed (default from scenario, {DEFAULT_SEED})")
        sp.add_argument("--workers", type=int, default=1, help="worker processes")

    s = sub.add_parser("simulate", help="run an SNR sweep and write CSV")
    common(s)
    s.add_argument("--snr", help="SNR grid in dB: comma list or lo:hi:step")
    s.set_defaults(func=cmd_simulate)

    c = sub.add_parser("calibrate", help="calibrate the DTX threshold on noise-only trials")
    common(c)
    c.add_argument("--target", type=float, default=1e-2, help="DTX-to-ACK target rate")
    c.set_defaults(func=cmd_calibrate)

    o = sub.add_parser("oracle", help="closed-form AWGN BER curves")
    o.add_argument("--scheme", help="comma list of schemes or 'all' (default)")
    o.add_argument("--ebn0", "--snr", dest="ebn0", default="0:12:1",
                   help="Eb/N0 grid in dB: comma list or lo:hi:step")
    o.add_argument("--out", help="output file (default stdout)")
    o.set_defaults(func=cmd_oracle)
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        return args.func(args)
    except (ConfigError, InsufficientSamplesError, InvalidArgumentError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())

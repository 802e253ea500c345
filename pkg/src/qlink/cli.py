"""Command-line entry point: ``qlink {characterize,capacity,sweep,trace,estimate}``.

Exit status is 0 on success, 2 for config or input errors (including
unreadable or constant traces) and 3 when the requested computation is
infeasible (saturation, squeezing above the observable cap, no squeezing
resolved).
"""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import json
import math
import os
import sys
from dataclasses import asdict, dataclass, field

import numpy as np

from . import __version__
from .config import ConfigError, load_link, load_receiver, load_trace_config
from .link import InfeasibleError, evaluate_link, sweep_pump_power, sweep_signal_power
from .receiver import (
    SaturationError,
    f_3db,
    f_shot,
    fit_shot_noise_slope,
    frequency_response,
    p_knee,
    noise_vs_lo,
    simulate_lo_sweep,
    snc,
)
from .trace import (
    DegenerateTraceError,
    NoSqueezingResolved,
    TraceFormatError,
    estimate_noise_levels,
    expected_levels_db,
    invert_squeezing,
    read_trace_csv,
    simulate_trace,
    write_trace_csv,
)

EXIT_OK, EXIT_CONFIG, EXIT_INFEASIBLE = 0, 2, 3
MANIFEST = "manifest.json"


class UsageError(ValueError):
    pass


@dataclass
class RunManifest:
    command: str
    config_path: str
    output_dir: str
    seed: int | None
    tool_version: str = __version__
    timestamp: str = field(default_factory=lambda: _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"))
    outputs: list = field(default_factory=list)

    def comments(self):
        """Metadata lines for CSV headers; no timestamp so reruns are byte-identical."""
        return [
            f"manifest: {MANIFEST}",
            f"command: {self.command}",
            f"config: {self.config_path}",
            f"seed: {self.seed}",
            f"version: {self.tool_version}",
        ]

    def write(self):
        with open(os.path.join(self.output_dir, MANIFEST), "w") as fh:
            json.dump(asdict(self), fh, indent=2)
            fh.write("\n")


def parse_grid(text):
    """``MIN:MAX:POINTS:log|lin`` to a numpy array."""
    parts = text.split(":")
    if len(parts) != 4:
        raise UsageError(f"grid {text!r} must look like MIN:MAX:POINTS:log|lin")
    try:
        lo, hi, n = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise UsageError(f"grid {text!r} has a non-numeric bound or point count") from None
    scale = parts[3]
    if scale not in ("log", "lin"):
        raise UsageError(f"grid spacing must be 'log' or 'lin', got {scale!r}")
    if n < 1:
        raise UsageError("empty grid: POINTS must be at least 1")
    if n > 1 and not hi > lo:
        raise UsageError("grid MAX must exceed MIN")
    if scale == "log" and lo <= 0:
        raise UsageError("log grid needs MIN > 0")
    if n == 1:
        return np.array([lo])
    return np.geomspace(lo, hi, n) if scale == "log" else np.linspace(lo, hi, n)


def _write_table(path, header, rows, comments):
    with open(path, "w", newline="") as fh:
        for line in comments:
            fh.write(f"# {line}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(v)) for v in row])


def _fmt(value, unit):
    if isinstance(value, float) and (math.isinf(value) or math.isnan(value)):
        return f"{value} {unit}".strip()
    return f"{value:.6g} {unit}".strip()


def _prepare_out(path):
    os.makedirs(path, exist_ok=True)
    return path


# --- commands -------------------------------------------------------------


def cmd_characterize(args):
    spec = load_receiver(args.config)
    knee = p_knee(spec)
    lo_grid = parse_grid(args.grid) if args.grid else np.geomspace(spec.max_lo_power * 1e-4, spec.max_lo_power, 41)
    if np.any(lo_grid <= 0):
        raise UsageError("LO powers must be positive")
    if lo_grid.max() > spec.max_lo_power * (1.0 + 1e-12):
        raise SaturationError(f"LO grid reaches {lo_grid.max():.4g} W, above the receiver maximum {spec.max_lo_power:.4g} W")
    fs = f_shot(spec)
    f3 = f_3db(spec)
    if args.freq_grid:
        freqs = parse_grid(args.freq_grid)
    else:
        top = 2.0 * max(x for x in (f3, fs, 5e9) if math.isfinite(x))
        freqs = np.linspace(0.0, top, 201)

    out = _prepare_out(args.out)
    manifest = RunManifest("characterize", args.config, out, args.seed)
    rng = np.random.default_rng(args.seed)
    model = noise_vs_lo(spec, lo_grid)
    readings, floor = simulate_lo_sweep(spec, lo_grid, args.averages, rng)
    snc_db = [snc(spec, p) for p in lo_grid]
    path = os.path.join(out, "noise_vs_lo.csv")
    _write_table(
        path,
        ["lo_power (W)", "model_noise (RF W)", "measured_noise (RF W)", "electronic_floor (RF W)", "snc (dB)"],
        zip(lo_grid, model, readings, np.full(lo_grid.size, floor), snc_db),
        manifest.comments(),
    )
    manifest.outputs.append(os.path.basename(path))

    pts = [frequency_response(spec, f) for f in freqs]
    gain0, nep0 = spec.gain(0.0), frequency_response(spec, 0.0).nep
    path = os.path.join(out, "frequency_response.csv")
    _write_table(
        path,
        ["frequency (Hz)", "gain (A/W)", "gain_rel (dB)", "nep (W)", "nep_rel (dB)"],
        [(f, p.gain, 20 * math.log10(p.gain / gain0), p.nep, 10 * math.log10(p.nep / nep0)) for f, p in zip(freqs, pts)],
        manifest.comments(),
    )
    manifest.outputs.append(os.path.basename(path))
    path = os.path.join(out, "snc_spectrum.csv")
    _write_table(
        path,
        ["frequency (Hz)", "snc_at_max_lo (dB)", "p_knee (W)"],
        [(f, p.snc_db, p_knee(spec, f)) for f, p in zip(freqs, pts)],
        manifest.comments(),
    )
    manifest.outputs.append(os.path.basename(path))
    manifest.write()

    knee_text = _fmt(knee * 1e6, "uW") if knee > 0 else "0 uW (below grid)"
    print(f"P_knee          {knee_text}")
    print(f"SNC at P_max    {_fmt(snc(spec, spec.max_lo_power), 'dB')}  (P_max {_fmt(spec.max_lo_power * 1e3, 'mW')})")
    print(f"f_3dB           {_fmt(f3 / 1e9, 'GHz')}")
    print(f"f_shot          {_fmt(fs / 1e9, 'GHz')}")
    if lo_grid.size > 1 and floor > 0 and np.all(readings > floor):
        print(f"LO-sweep slope  {fit_shot_noise_slope(lo_grid, readings, floor):.4f}")
    return EXIT_OK


def cmd_capacity(args):
    config = load_link(args.config)
    report = evaluate_link(config)
    rows = report.rows()
    width = max(len(label) for label, _, _ in rows)
    for label, value, unit in rows:
        print(f"{label:<{width}}  {_fmt(float(value), unit)}")
    if report.exceeds_holevo:
        print("note: squeezed capacity exceeds the signal-photon Holevo bound at this point")
    out = _prepare_out(args.out)
    manifest = RunManifest("capacity", args.config, out, None)
    path = os.path.join(out, "capacity.csv")
    header = [f"{label.replace(' ', '_')} ({unit or '1'})" for label, _, unit in rows]
    _write_table(path, header, [[v for _, v, _ in rows]], manifest.comments())
    manifest.outputs.append(os.path.basename(path))
    manifest.write()
    return EXIT_OK


def cmd_sweep(args):
    config = load_link(args.config)
    grid = parse_grid(args.grid) if args.grid else None
    sweep = sweep_signal_power if args.axis == "signal_power" else sweep_pump_power
    result = sweep(config, grid, workers=args.workers)
    out = _prepare_out(args.out)
    manifest = RunManifest("sweep", args.config, out, None)
    csv_path = os.path.join(out, f"sweep_{args.axis}.csv")
    meta_path = os.path.join(out, f"sweep_{args.axis}.json")
    result.write_csv(csv_path, manifest.comments() + [f"metadata: {os.path.basename(meta_path)}"])
    result.write_metadata(meta_path)
    manifest.outputs += [os.path.basename(csv_path), os.path.basename(meta_path)]
    manifest.write()
    print(f"{args.axis} sweep: {result.axis.size} points -> {csv_path}")
    for label, cutoff in result.metadata["cutoff_pump_power_W"].items():
        flags = result.columns.get(f"truncated_{label}")
        n_trunc = int(np.sum(flags)) if flags is not None else 0
        print(f"  {label}: cutoff pump {cutoff * 1e3:.4g} mW, {n_trunc} truncated rows")
    return EXIT_OK


def cmd_trace(args):
    config = load_trace_config(args.config)
    if args.seed is not None:
        config = config.replace(rng_seed=args.seed)
    trace = simulate_trace(config)
    out = _prepare_out(args.out)
    manifest = RunManifest("trace", args.config, out, int(config.rng_seed))
    path = os.path.join(out, "trace.csv")
    write_trace_csv(trace, path, manifest.comments())
    manifest.outputs.append(os.path.basename(path))
    manifest.write()
    sq, anti = expected_levels_db(config.squeezing_r, config.efficiency_eta, config.snc_db)
    print(f"{len(trace)} samples, {config.degrees_of_freedom} degrees of freedom -> {path}")
    print(f"expected levels  {sq:+.3f} dB / {anti:+.3f} dB")
    return EXIT_OK


def cmd_estimate(args):
    trace = read_trace_csv(args.trace)
    n = min(args.n_samples, len(trace))
    levels = estimate_noise_levels(
        trace, n_samples=n, seed=args.seed, bandwidth=args.bandwidth, n_bootstrap=args.bootstrap, feature=args.feature
    )
    print(f"squeezed        {levels.squeezed_db:+.3f} +/- {levels.uncertainty_db:.3f} dB")
    print(f"antisqueezed    {levels.antisqueezed_db:+.3f} +/- {levels.uncertainty_db:.3f} dB")
    try:
        inv = invert_squeezing(levels)
    except ValueError as exc:
        raise InfeasibleError(f"levels cannot be inverted: {exc}") from None
    print(f"r               {inv.r:.4f}")
    print(f"eta             {inv.eta:.4f}")
    print(f"system loss     {inv.system_loss_db:.2f} dB")
    if args.out:
        out = _prepare_out(args.out)
        manifest = RunManifest("estimate", args.trace, out, args.seed)
        path = os.path.join(out, "estimate.csv")
        _write_table(
            path,
            ["squeezed (dB)", "antisqueezed (dB)", "uncertainty (dB)", "r (1)", "eta (1)", "system_loss (dB)"],
            [[levels.squeezed_db, levels.antisqueezed_db, levels.uncertainty_db, inv.r, inv.eta, inv.system_loss_db]],
            manifest.comments(),
        )
        manifest.outputs.append(os.path.basename(path))
        manifest.write()
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="qlink", description="Quantum-limited coherent link modelling.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("characterize", help="receiver LO sweep, frequency response and SNC spectrum")
    c.add_argument("--config", required=True, help="receiver YAML")
    c.add_argument("--out", required=True, help="output directory")
    c.add_argument("--grid", help="LO power grid MIN:MAX:POINTS:log|lin (W)")
    c.add_argument("--freq-grid", help="frequency grid MIN:MAX:POINTS:log|lin (Hz)")
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--averages", type=int, default=1000, help="periodogram bins averaged per reading")
    c.set_defaults(func=cmd_characterize)

    c = sub.add_parser("capacity", help="capacities, rates and energy per bit at one operating point")
    c.add_argument("--config", required=True, help="link YAML")
    c.add_argument("--out", required=True)
    c.set_defaults(func=cmd_capacity)

    c = sub.add_parser("sweep", help="rate and energy-per-bit sweeps")
    c.add_argument("--config", required=True, help="link YAML")
    c.add_argument("--out", required=True)
    c.add_argument("--axis", required=True, choices=("signal_power", "pump_power"))
    c.add_argument("--grid", help="MIN:MAX:POINTS:log|lin (W)")
    c.add_argument("--workers", type=int, default=None)
    c.set_defaults(func=cmd_sweep)

    c = sub.add_parser("trace", help="simulate a ramped-phase noise trace")
    c.add_argument("--config", required=True, help="trace YAML")
    c.add_argument("--out", required=True)
    c.add_argument("--seed", type=int, default=None, help="override rng_seed")
    c.set_defaults(func=cmd_trace)

    c = sub.add_parser("estimate", help="squeezing levels, (r, eta) and loss from a trace CSV")
    c.add_argument("trace", help="trace CSV")
    c.add_argument("--out", help="optional output directory")
    c.add_argument("--seed", type=int, default=0, help="subsampling and bootstrap seed")
    c.add_argument("--n-samples", type=int, default=100_000)
    c.add_argument("--bandwidth", type=float, default=None, help="KDE bandwidth in dB")
    c.add_argument("--bootstrap", type=int, default=50)
    c.add_argument("--feature", choices=("derivative", "density"), default="derivative")
    c.set_defaults(func=cmd_estimate)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, UsageError, TraceFormatError, DegenerateTraceError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc.filename}: {exc.strerror}", file=sys.stderr)
        return EXIT_CONFIG
    except (InfeasibleError, SaturationError, NoSqueezingResolved) as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE


if __name__ == "__main__":
    sys.exit(main())

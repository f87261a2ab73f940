"""Command-line entry points: sweep, trace, dump-model, validate."""

import argparse
import csv
import logging
import sys

import numpy as np

from . import bench
from .channel import sample_channels, end_to_end_receive
from .config import (desk_defaults, load_config_file, config_from_dict,
                     tiny_defaults)
from .metrics import (Solution, average_sum_rate, effective_rows, optimal_equalizers,
                      mse_table, wmmse_objective)
from .reflection import (reflection_amplitude, reflection_coefficient,
                         reflection_phase, reflection_phase_raw, response_table,
                         DEFAULT_CIRCUIT)
from .solver import SolverOptions
from .bench import SweepSpec, run_sweep, emit, solver_options_from_dict, sweep_spec_from_dict

logger = logging.getLogger(__name__)


def _load_sections(path):
    if path is None:
        return desk_defaults(), SolverOptions(), {}
    raw = load_config_file(path)
    system = config_from_dict(raw.get("system", {}))
    solver = solver_options_from_dict(raw.get("solver", {}))
    return system, solver, raw.get("sweep", {})


def _add_common(parser):
    parser.add_argument("--config", help="JSON config file (system/solver/sweep sections)")
    parser.add_argument("--verbose", action="store_true", help="log progress to stderr")


def cmd_sweep(args) -> int:
    system, solver, sweep_raw = _load_sections(args.config)
    sweep_raw = dict(sweep_raw)
    if args.axis:
        sweep_raw["axis"] = args.axis
    if args.axis_values:
        sweep_raw["axis_values"] = [_parse_axis_value(v) for v in args.axis_values]
    if args.scheme:
        sweep_raw["schemes"] = args.scheme
    if args.seeds is not None:
        sweep_raw["num_seeds"] = args.seeds
    if "axis" not in sweep_raw or "axis_values" not in sweep_raw:
        print("error: sweep needs an axis and axis values (config or flags)", file=sys.stderr)
        return 2
    spec = sweep_spec_from_dict(system, sweep_raw, solver)
    result = run_sweep(spec, n_jobs=args.jobs)
    emit(result, args.out, args.format)
    print(f"wrote {args.out}: {len(result.records)} records, {result.n_failed} failed")
    return 1 if result.n_failed else 0


def cmd_trace(args) -> int:
    system, solver, _ = _load_sections(args.config)
    spec = SweepSpec(base=system, axis="iterations", axis_values=(args.iters,),
                     schemes=tuple(args.scheme or ("proposed",)),
                     num_seeds=args.seeds if args.seeds is not None else 1,
                     solver=solver)
    result = run_sweep(spec, n_jobs=args.jobs)
    emit(result, args.out, args.format)
    print(f"wrote {args.out}: {len(result.records)} runs, {result.n_failed} failed")
    return 1 if result.n_failed else 0


def _parse_axis_value(text):
    if text == bench.CONTINUOUS:
        return text
    try:
        return int(text)
    except ValueError:
        return float(text)


def cmd_dump_model(args) -> int:
    system, _, _ = _load_sections(args.config)
    grid = system.grid()
    thetas = np.linspace(-np.pi, np.pi, args.theta_points)
    freqs = grid.frequencies()
    with open(args.out, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["theta", "f_ghz", "amplitude", "phase", "phase_raw"])
        for theta in thetas:
            amp = reflection_amplitude(system.fit, theta, freqs)
            phs = reflection_phase(system.fit, theta, freqs)
            raw = reflection_phase_raw(system.fit, theta, freqs)
            for j, f in enumerate(freqs):
                writer.writerow([f"{theta:.12g}", f"{f:.12g}", f"{amp[j]:.12g}",
                                 f"{phs[j]:.12g}", f"{raw[j]:.12g}"])
    print(f"wrote {args.out}: {args.theta_points * len(freqs)} response samples")
    return 0


def _check(name, ok, detail=""):
    print(f"{'PASS' if ok else 'FAIL'} {name}{': ' + detail if detail else ''}")
    return bool(ok)


def cmd_validate(args) -> int:
    """Self-contained oracle suite over the core identities."""
    system, _, _ = _load_sections(args.config)
    rng = np.random.default_rng(0)
    ok = True

    cfg = tiny_defaults()
    channels = sample_channels(cfg, seed=1)
    n, n_tx, k_users = cfg.n_subcarriers, cfg.n_tx, cfg.n_users
    theta = rng.uniform(-np.pi, np.pi, cfg.n_elements)
    phi = response_table(cfg.fit, cfg.grid(), theta, "practical")
    weights = rng.standard_normal((n, n_tx, k_users)) + 1j * rng.standard_normal((n, n_tx, k_users))
    symbols = rng.standard_normal((n, k_users)) + 1j * rng.standard_normal((n, k_users))
    y_ref = end_to_end_receive(channels.taps, phi, weights, symbols, n)
    rows = effective_rows(channels.freq, phi)
    z = np.einsum("inp,ip->in", weights, symbols)
    y_fac = np.einsum("kin,in->ki", rows, z)
    err = np.abs(y_ref - y_fac).max() / np.abs(y_ref).max()
    ok &= _check("factorized channel matches time-domain model", err <= 1e-9, f"rel err {err:.2e}")

    for name, taps, freq, axis in (("h_d", channels.taps.h_d, channels.freq.h_d, 1),
                                   ("h_r", channels.taps.h_r, channels.freq.h_r, 1),
                                   ("g", channels.taps.g, channels.freq.g, 0)):
        e_t = np.sum(np.abs(taps) ** 2)
        e_f = np.sum(np.abs(freq) ** 2) / n
        ok &= _check(f"tap/bin energy identity ({name})", abs(e_t - e_f) / e_t <= 1e-10)

    scaled = weights * np.sqrt(cfg.power_w / np.sum(np.abs(weights) ** 2))
    sol = Solution(weights=scaled, theta=theta, model_tag="practical")
    eq = optimal_equalizers(rows, sol.weights, cfg.noise_w)
    rho = 1.0 / mse_table(rows, sol.weights, eq, cfg.noise_w)
    gap = abs(wmmse_objective(channels, sol, rho, eq, cfg.noise_w)
              - average_sum_rate(channels, sol, cfg.noise_w))
    ok &= _check("rate equals weighted-MSE objective at the block optima",
                 gap <= 1e-10, f"gap {gap:.2e}")

    caps = np.linspace(DEFAULT_CIRCUIT.c_min, DEFAULT_CIRCUIT.c_max, 60)
    fs = np.linspace(system.carrier_ghz - system.bandwidth_ghz / 2,
                     system.carrier_ghz + system.bandwidth_ghz / 2, 40) * 1e9
    mags = [abs(reflection_coefficient(DEFAULT_CIRCUIT, c, f)) for c in caps for f in fs]
    ok &= _check("circuit reflection is passive", max(mags) <= 1 + 1e-12,
                 f"max |phi| {max(mags):.12f}")

    grid_t = np.linspace(-np.pi, np.pi, 100)
    amp = reflection_amplitude(system.fit, grid_t[:, None], system.grid().frequencies()[None, :])
    ok &= _check("fitted amplitude stays in (0, 1]",
                 float(amp.min()) > 0 and float(amp.max()) <= 1.0)

    same = sample_channels(cfg, seed=7).sha256() == sample_channels(cfg, seed=7).sha256()
    ok &= _check("channel draw is deterministic in (config, seed)", same)

    return 0 if ok else 1


def build_parser():
    parser = argparse.ArgumentParser(prog="irsofdm",
                                     description="Wideband reflecting-surface downlink simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sweep", help="run a Monte-Carlo sweep and write results")
    _add_common(p)
    p.add_argument("--out", required=True)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--axis", choices=bench.AXES)
    p.add_argument("--axis-values", nargs="+")
    p.add_argument("--scheme", nargs="+", choices=list(bench.SCHEME_TAGS))
    p.add_argument("--seeds", type=int)
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("trace", help="record per-iteration objective traces")
    _add_common(p)
    p.add_argument("--out", required=True)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--scheme", nargs="+", choices=list(bench.SCHEME_TAGS))
    p.add_argument("--seeds", type=int)
    p.add_argument("--iters", type=int, default=30)
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_trace)

    p = sub.add_parser("dump-model", help="dump (theta, f, amplitude, phase) tables as CSV")
    _add_common(p)
    p.add_argument("--out", required=True)
    p.add_argument("--theta-points", type=int, default=41)
    p.set_defaults(func=cmd_dump_model)

    p = sub.add_parser("validate", help="run the numeric oracle suite")
    _add_common(p)
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())

"""Seeded Monte-Carlo sweeps over power / elements / antennas / resolution.

Within one (axis value, seed) cell every requested scheme consumes the
identical channel realization, and all reported rates come from the
common practical-model evaluation, so curves are directly comparable.
Everything is deterministic given the spec: cell channels use
``seed_base + seed_index`` and designer randomness derives from the
(seed, scheme) pair.
"""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
import csv
import json
import logging
import math
import time

from .channel import sample_channels
from .config import SystemConfig, db_to_linear
from .schemes import SCHEME_TAGS, run_scheme, evaluate_solution
from .solver import SolverOptions, SolverError

logger = logging.getLogger(__name__)

AXES = ("power", "elements", "antennas", "resolution", "iterations")
CSV_COLUMNS = ("axis", "scheme", "seed", "rate", "iters", "wall_ms")

CONTINUOUS = "cont"  # resolution-axis marker for continuous phase shifters


@dataclass(frozen=True)
class SweepSpec:
    """One experiment grid: axis values x schemes x seeds over a base scenario."""

    base: SystemConfig
    axis: str
    axis_values: tuple
    schemes: tuple = ("proposed",)
    num_seeds: int = 1
    seed_base: int = 0
    solver: SolverOptions = field(default_factory=SolverOptions)

    def __post_init__(self):
        if self.axis not in AXES:
            raise ValueError(f"unknown axis {self.axis!r}; expected one of {AXES}")
        if not self.axis_values:
            raise ValueError("axis_values must be nonempty")
        if self.num_seeds < 1:
            raise ValueError("num_seeds must be >= 1")
        unknown = set(self.schemes) - set(SCHEME_TAGS)
        if unknown:
            raise ValueError(f"unknown schemes {sorted(unknown)}")
        object.__setattr__(self, "axis_values", tuple(self.axis_values))
        object.__setattr__(self, "schemes", tuple(self.schemes))


@dataclass(frozen=True)
class SweepRecord:
    axis_value: object
    scheme: str
    seed: int
    rate: float
    iters: int
    wall_ms: float
    trace: tuple | None = None


@dataclass(frozen=True)
class SweepResult:
    axis: str
    records: tuple
    n_failed: int = 0


def apply_axis(base: SystemConfig, axis: str, value) -> SystemConfig:
    """Scenario for one axis value (resolution accepts 'cont' for continuous)."""
    if axis == "power":
        return replace(base, power_w=db_to_linear(float(value)))
    if axis == "elements":
        return replace(base, n_elements=int(value))
    if axis == "antennas":
        return replace(base, n_tx=int(value))
    if axis == "resolution":
        bits = None if value in (None, CONTINUOUS) else int(value)
        return replace(base, phase_bits=bits)
    return base  # iterations: scenario unchanged


def _cell_options(spec: SweepSpec, axis_value, seed, scheme) -> SolverOptions:
    opts = replace(spec.solver, rng_seed=1009 * seed + SCHEME_TAGS.index(scheme))
    if spec.axis == "iterations":
        opts = replace(opts, max_outer_iters=int(axis_value), outer_tol=1e-15)
    return opts


def _run_cell(spec: SweepSpec, axis_value, seed):
    """All schemes on one shared channel realization; returns records."""
    config = apply_axis(spec.base, spec.axis, axis_value)
    channels = sample_channels(config, seed)
    digest = channels.sha256()
    records = []
    for scheme in spec.schemes:
        logger.info("cell axis=%s value=%s seed=%d scheme=%s channel_sha=%s",
                    spec.axis, axis_value, seed, scheme, digest)
        opts = _cell_options(spec, axis_value, seed, scheme)
        t0 = time.perf_counter()
        try:
            solution, trace = run_scheme(scheme, channels, opts)
            rate = evaluate_solution(channels, solution)
            records.append(SweepRecord(
                axis_value=axis_value, scheme=scheme, seed=seed, rate=rate,
                iters=len(trace) - 1, wall_ms=1e3 * (time.perf_counter() - t0),
                trace=tuple(float(x) for x in trace) if spec.axis == "iterations" else None,
            ))
        except SolverError:
            logger.exception("cell failed: axis=%s value=%s seed=%d scheme=%s",
                             spec.axis, axis_value, seed, scheme)
            records.append(SweepRecord(
                axis_value=axis_value, scheme=scheme, seed=seed, rate=math.nan,
                iters=-1, wall_ms=1e3 * (time.perf_counter() - t0), trace=None,
            ))
    return records


def run_sweep(spec: SweepSpec, n_jobs=1) -> SweepResult:
    """Execute the whole grid; failed cells are marked, the sweep continues."""
    cells = [(value, spec.seed_base + s)
             for value in spec.axis_values for s in range(spec.num_seeds)]
    if n_jobs > 1:
        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            groups = list(pool.map(_run_cell, [spec] * len(cells),
                                   [c[0] for c in cells], [c[1] for c in cells]))
    else:
        groups = [_run_cell(spec, value, seed) for value, seed in cells]
    records = tuple(rec for group in groups for rec in group)
    n_failed = sum(1 for r in records if math.isnan(r.rate))
    return SweepResult(axis=spec.axis, records=records, n_failed=n_failed)


# --------------------------------------------------------------------------
# Persistence: CSV and JSON carry the identical (rounded) payload
# --------------------------------------------------------------------------

def _fmt(x) -> str:
    if isinstance(x, float):
        return f"{x:.12g}"
    return str(x)


def _rows(result: SweepResult):
    """Flat rows (one per iteration when traces are present)."""
    rows = []
    for rec in result.records:
        if rec.trace is not None:
            for it, value in enumerate(rec.trace):
                rows.append({"axis": it, "scheme": rec.scheme, "seed": rec.seed,
                             "rate": value, "iters": rec.iters, "wall_ms": rec.wall_ms})
        else:
            rows.append({"axis": rec.axis_value, "scheme": rec.scheme, "seed": rec.seed,
                         "rate": rec.rate, "iters": rec.iters, "wall_ms": rec.wall_ms})
    return rows


def emit(result: SweepResult, path, out_format="csv"):
    """Write the result table; stable column order, 12 significant digits."""
    rows = _rows(result)
    if out_format == "csv":
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(CSV_COLUMNS)
            for row in rows:
                writer.writerow([_fmt(row[c]) for c in CSV_COLUMNS])
    elif out_format == "json":
        payload = {
            "axis_name": result.axis,
            "n_failed": result.n_failed,
            "columns": list(CSV_COLUMNS),
            "records": [
                {c: (float(_fmt(row[c])) if isinstance(row[c], float) else row[c])
                 for c in CSV_COLUMNS}
                for row in rows
            ],
        }
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=1)
            fh.write("\n")
    else:
        raise ValueError(f"unknown format {out_format!r}")


def load_records(path) -> list:
    """Parse an emitted CSV or JSON back into row dictionaries."""
    text = str(path)
    if text.endswith(".json"):
        with open(path, "r", encoding="utf-8") as fh:
            payload = json.load(fh)
        return [dict(r) for r in payload["records"]]
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        rows = []
        for row in reader:
            parsed = dict(row)
            for key in ("rate", "wall_ms"):
                parsed[key] = float(parsed[key])
            for key in ("seed", "iters"):
                parsed[key] = int(parsed[key])
            rows.append(parsed)
        return rows


def solver_options_from_dict(d: dict) -> SolverOptions:
    known = {f for f in SolverOptions.__dataclass_fields__}
    unknown = set(d) - known
    if unknown:
        raise ValueError(f"unknown solver options {sorted(unknown)}")
    return SolverOptions(**d)


def sweep_spec_from_dict(base: SystemConfig, d: dict,
                         solver: SolverOptions | None = None) -> SweepSpec:
    return SweepSpec(
        base=base,
        axis=d["axis"],
        axis_values=tuple(d["axis_values"]),
        schemes=tuple(d.get("schemes", ("proposed",))),
        num_seeds=int(d.get("num_seeds", 1)),
        seed_base=int(d.get("seed_base", 0)),
        solver=solver or SolverOptions(),
    )

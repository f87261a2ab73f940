"""Render benchmark result files into publication-style figures.

Consumes exactly the files the simulator CLI emits: sweep/trace tables
with columns ``axis,scheme,seed,rate,iters,wall_ms`` (CSV or JSON) and
element-response dumps with columns
``theta,f_ghz,amplitude,phase,phase_raw``. Inputs are never modified;
identical input and spec produce identical plotted series.
"""

from dataclasses import dataclass, field
import csv
import json

import numpy as np
import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)


class FigureError(ValueError):
    """Malformed or incomplete input for the requested figure."""


SCHEME_LABELS = {
    "proposed": "w/ IRS, Proposed",
    "ideal": "w/ IRS, Ideal",
    "amplitude_only": "w/ IRS, Amplitude Only",
    "random_theta": "w/ IRS, Random",
    "no_irs": "w/o IRS",
}
LEGEND_ORDER = ("proposed", "ideal", "amplitude_only", "random_theta", "no_irs")

RESULT_COLUMNS = ("axis", "scheme", "seed", "rate", "iters", "wall_ms")
MODEL_COLUMNS = ("theta", "f_ghz", "amplitude", "phase", "phase_raw")

X_LABELS = {
    "convergence": "iteration",
    "resolution": "phase shifter resolution (bits)",
    "power": "transmit power (dBW)",
    "elements": "number of surface elements",
    "antennas": "number of transmit antennas",
}
FIGURE_KINDS = tuple(X_LABELS) + ("model_surface",)


@dataclass(frozen=True)
class PlotSpec:
    """One rendering request: input table, figure kind, output image."""

    input_path: str
    figure_kind: str
    output_path: str
    title: str | None = None
    ylabel: str = "average sum-rate (bits/s/Hz)"
    dpi: int = 150

    def __post_init__(self):
        if self.figure_kind not in FIGURE_KINDS:
            raise FigureError(
                f"unknown figure kind {self.figure_kind!r}; expected one of {FIGURE_KINDS}")


# ---------------------------------------------------------------------------
# input parsing and validation
# ---------------------------------------------------------------------------

def load_rows(path, required):
    """Parse a CSV/JSON table and check the required columns up front."""
    text = str(path)
    if text.endswith(".json"):
        with open(path, "r", encoding="utf-8") as fh:
            payload = json.load(fh)
        rows = [dict(r) for r in payload.get("records", [])]
        present = set(payload.get("columns", rows[0].keys() if rows else ()))
    else:
        with open(path, "r", encoding="utf-8", newline="") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None:
                raise FigureError(f"{path}: empty file, nothing to plot")
            present = set(reader.fieldnames)
            rows = [dict(r) for r in reader]
    missing = set(required) - present
    if missing:
        raise FigureError(f"{path}: missing required column(s) {sorted(missing)}")
    if not rows:
        raise FigureError(f"{path}: no data rows")
    return rows


def _axis_sort_key(value):
    try:
        return (0, float(value), "")
    except (TypeError, ValueError):
        return (1, 0.0, str(value))


def aggregate_rates(rows):
    """Per (scheme, axis value): mean rate and standard error over seeds.

    Returns {scheme: (axis_values, means, stderrs)} with axis values in
    numeric order (non-numeric markers such as 'cont' placed last) and
    per-group rates taken in file order.
    """
    groups = {}
    for row in rows:
        key = (row["scheme"], str(row["axis"]))
        groups.setdefault(key, []).append(float(row["rate"]))
    out = {}
    schemes = {scheme for scheme, _ in groups}
    for scheme in schemes:
        values = sorted({axis for s, axis in groups if s == scheme}, key=_axis_sort_key)
        means, errs = [], []
        for axis in values:
            rates = np.asarray(groups[(scheme, axis)], dtype=float)
            means.append(np.mean(rates))
            errs.append(np.std(rates, ddof=1) / np.sqrt(rates.size) if rates.size > 1 else 0.0)
        out[scheme] = (values, np.asarray(means), np.asarray(errs))
    return out


# ---------------------------------------------------------------------------
# result figures
# ---------------------------------------------------------------------------

def build_figure(spec: PlotSpec):
    """Validate the input and build the matplotlib figure (not yet saved)."""
    rows = load_rows(spec.input_path, RESULT_COLUMNS)
    series = aggregate_rates(rows)
    unknown = set(series) - set(LEGEND_ORDER)
    if unknown:
        raise FigureError(f"{spec.input_path}: unknown scheme tag(s) {sorted(unknown)}")

    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for scheme in LEGEND_ORDER:
        if scheme not in series:
            continue
        values, means, errs = series[scheme]
        numeric = all(_axis_sort_key(v)[0] == 0 for v in values)
        x = np.asarray([float(v) for v in values]) if numeric \
            else np.arange(len(values), dtype=float)
        ax.plot(x, means, marker="o", label=SCHEME_LABELS[scheme])
        if np.any(errs > 0):
            ax.fill_between(x, means - errs, means + errs, alpha=0.2)
        if not numeric:
            ax.set_xticks(x)
            ax.set_xticklabels([str(v) for v in values])
    ax.set_xlabel(X_LABELS[spec.figure_kind])
    ax.set_ylabel(spec.ylabel)
    if spec.title:
        ax.set_title(spec.title)
    ax.grid(True, alpha=0.3)
    ax.legend()
    return fig


def render(spec: PlotSpec):
    """Render one figure to ``spec.output_path``; returns the path."""
    if spec.figure_kind == "model_surface":
        return render_model_surface(spec.input_path, spec.output_path, dpi=spec.dpi)
    fig = build_figure(spec)
    fig.savefig(spec.output_path, dpi=spec.dpi, bbox_inches="tight")
    plt.close(fig)
    return spec.output_path


# ---------------------------------------------------------------------------
# element-response surfaces
# ---------------------------------------------------------------------------

def load_model_dump(path):
    rows = load_rows(path, MODEL_COLUMNS)
    by_theta = {}
    for row in rows:
        by_theta.setdefault(float(row["theta"]), []).append(
            (float(row["f_ghz"]), float(row["amplitude"]),
             float(row["phase"]), float(row["phase_raw"])))
    return {t: np.asarray(v) for t, v in sorted(by_theta.items())}


def phase_line_residual(path) -> float:
    """Worst linear-regression residual of the unwrapped phase over frequency."""
    worst = 0.0
    for samples in load_model_dump(path).values():
        f, raw = samples[:, 0], samples[:, 3]
        coef = np.polyfit(f, raw, 1)
        worst = max(worst, float(np.max(np.abs(np.polyval(coef, f) - raw))))
    return worst


def build_model_surface(path):
    by_theta = load_model_dump(path)
    thetas = list(by_theta)
    fig, (ax_amp, ax_phase) = plt.subplots(1, 2, figsize=(10.0, 4.0))

    freqs = by_theta[thetas[0]][:, 0]
    for j in sorted({0, len(freqs) // 2, len(freqs) - 1}):
        pts = np.asarray([(by_theta[t][j, 2], by_theta[t][j, 1]) for t in thetas])
        order = np.argsort(pts[:, 0])
        ax_amp.plot(pts[order, 0], pts[order, 1], marker=".",
                    label=f"{freqs[j]:.4f} GHz")
    ax_amp.set_xlabel("reflection phase (rad)")
    ax_amp.set_ylabel("reflection amplitude")
    ax_amp.grid(True, alpha=0.3)
    ax_amp.legend(fontsize=8)

    step = max(1, len(thetas) // 9)
    for t in thetas[::step]:
        samples = by_theta[t]
        ax_phase.plot(samples[:, 0], samples[:, 3], label=f"theta={t:.2f}")
    ax_phase.set_xlabel("frequency (GHz)")
    ax_phase.set_ylabel("unwrapped reflection phase (rad)")
    ax_phase.grid(True, alpha=0.3)
    ax_phase.legend(fontsize=7)
    fig.tight_layout()
    return fig


def render_model_surface(input_path, output_path, dpi=150):
    fig = build_model_surface(input_path)
    fig.savefig(output_path, dpi=dpi, bbox_inches="tight")
    plt.close(fig)
    return output_path

"""Per-element reflection models for a varactor-tuned reflecting surface.

Two independent code paths live here:

* the exact lumped-circuit model (parallel resonance circuit of the
  element, reflection coefficient against free space), and
* the simplified amplitude/phase/frequency fit that the optimizer
  consumes: for a phase setting ``theta`` (the reflection phase the
  element applies at the carrier), the reflection phase is affine in
  frequency with theta-dependent slope/intercept, and the amplitude is
  a quadratic in the (wrapped) phase.

No attempt is made to re-derive the fit coefficients from the circuit
model; the two paths are only compared qualitatively.

Units: circuit functions take frequency in Hz; the fit functions take
frequency in GHz. Angles are radians throughout.
"""

from dataclasses import dataclass
import logging
import warnings

import numpy as np

logger = logging.getLogger(__name__)

FREE_SPACE_IMPEDANCE = 376.730313668  # ohm

# Lower clamp for the fitted amplitude. The quadratic fit evaluated at a
# wrapped phase can leave (0, 1]; values are clamped back so the element
# stays passive. Clamp events are logged for audit.
AMPLITUDE_FLOOR = 1e-3

RESPONSE_MODELS = ("practical", "ideal", "amplitude_only", "none")


def wrap_phase(x):
    """Wrap an angle (scalar or array) to (-pi, pi]."""
    return np.pi - np.mod(np.pi - np.asarray(x), 2.0 * np.pi)


@dataclass(frozen=True)
class CircuitParams:
    """Lumped-element equivalent circuit of one reflecting element.

    Defaults follow a common surface-mount varactor setting
    (SMV1231-079): L1 = 2.5 nH, L2 = 0.7 nH, R = 1 ohm and an effective
    capacitance tunable over [0.47, 2.35] pF.
    """

    l1: float = 2.5e-9      # metal plate inductance, H
    l2: float = 0.7e-9      # outer layer inductance, H
    r: float = 1.0          # loss resistance, ohm
    z0: float = FREE_SPACE_IMPEDANCE
    c_min: float = 0.47e-12  # F
    c_max: float = 2.35e-12  # F

    def __post_init__(self):
        if self.l1 <= 0 or self.l2 <= 0:
            raise ValueError("inductances must be positive")
        if self.r < 0:
            raise ValueError("loss resistance must be nonnegative")
        if self.z0 <= 0:
            raise ValueError("reference impedance must be positive")
        if not 0 < self.c_min < self.c_max:
            raise ValueError("capacitance bounds must satisfy 0 < c_min < c_max")


@dataclass(frozen=True)
class FitParams:
    """Coefficients of the simplified amplitude/phase/frequency fit.

    ``a[0], b[0], c[0]`` parameterize the amplitude quadratic; the
    remaining entries parameterize the sinusoidal slope/intercept of the
    phase-frequency line. Defaults are the fitted values for the circuit
    defaults above (frequency in GHz).
    """

    a: tuple = (0.06, 11.27, 10.88, 89.64, 26.11)
    b: tuple = (0.02, 0.008996, 0.9799, 0.01268, 0.9796)
    c: tuple = (0.5736, -1.897, -1.471, 0.2899, 1.673)

    def __post_init__(self):
        for name in ("a", "b", "c"):
            vec = getattr(self, name)
            if len(vec) != 5:
                raise ValueError(f"fit vector {name!r} must have exactly 5 entries")
            object.__setattr__(self, name, tuple(float(x) for x in vec))


DEFAULT_FIT = FitParams()
DEFAULT_CIRCUIT = CircuitParams()


@dataclass(frozen=True)
class CarrierGrid:
    """Uniform subcarrier grid: carrier frequency, bandwidth (GHz), count."""

    carrier_ghz: float
    bandwidth_ghz: float
    n_subcarriers: int

    def __post_init__(self):
        if self.carrier_ghz <= 0 or self.bandwidth_ghz <= 0:
            raise ValueError("carrier and bandwidth must be positive")
        if self.n_subcarriers < 1:
            raise ValueError("need at least one subcarrier")
        if self.bandwidth_ghz / self.carrier_ghz > 0.05:
            warnings.warn(
                "relative bandwidth exceeds 5%; the simplified reflection "
                "fit is only validated for narrower bands",
                stacklevel=2,
            )

    def frequencies(self):
        """Center frequencies of all subcarriers, GHz, ascending."""
        i = np.arange(1, self.n_subcarriers + 1, dtype=float)
        step = self.bandwidth_ghz / self.n_subcarriers
        return self.carrier_ghz + (i - (self.n_subcarriers + 1) / 2.0) * step

    def frequency(self, i):
        """Center frequency of subcarrier ``i`` (1-based), GHz."""
        if not 1 <= i <= self.n_subcarriers:
            raise IndexError(f"subcarrier index {i} out of range 1..{self.n_subcarriers}")
        step = self.bandwidth_ghz / self.n_subcarriers
        return self.carrier_ghz + (i - (self.n_subcarriers + 1) / 2.0) * step

    def subband_frequencies(self, n_subbands):
        """Center frequencies of ``n_subbands`` equal sub-bands, GHz."""
        if n_subbands < 1 or self.n_subcarriers % n_subbands:
            raise ValueError("sub-band count must divide the subcarrier count")
        i = np.arange(1, n_subbands + 1, dtype=float)
        step = self.bandwidth_ghz / n_subbands
        return self.carrier_ghz + (i - (n_subbands + 1) / 2.0) * step


@dataclass(frozen=True, eq=False)
class PhaseCodebook:
    """Uniform b-bit phase codebook: 2**b values spaced 2*pi/2**b on [-pi, pi)."""

    bits: int

    def __post_init__(self):
        if self.bits < 1:
            raise ValueError("codebook resolution must be at least 1 bit")

    @property
    def values(self):
        n = 2 ** self.bits
        return 2.0 * np.pi * np.arange(n) / n - np.pi


# --------------------------------------------------------------------------
# Exact circuit model
# --------------------------------------------------------------------------

def impedance(params: CircuitParams, c, f_hz):
    """Element impedance at capacitance ``c`` (F) and frequency ``f_hz`` (Hz).

    L1 in parallel with the series branch (L2, C, R).
    """
    if not params.c_min <= c <= params.c_max:
        raise ValueError(f"capacitance {c} outside [{params.c_min}, {params.c_max}]")
    if f_hz <= 0:
        raise ValueError("frequency must be positive")
    w = 2.0 * np.pi * f_hz
    branch = 1j * w * params.l2 + 1.0 / (1j * w * c) + params.r
    return (1j * w * params.l1) * branch / (1j * w * params.l1 + branch)


def reflection_from_impedance(z, z0=FREE_SPACE_IMPEDANCE):
    """Reflection coefficient of a load ``z`` against reference ``z0``."""
    if abs(z + z0) < 1e-12:
        raise ZeroDivisionError("impedance equals -z0; reflection undefined")
    return (z - z0) / (z + z0)


def reflection_coefficient(params: CircuitParams, c, f_hz):
    """Complex reflection coefficient of the circuit model; |.| <= 1 for r >= 0."""
    return reflection_from_impedance(impedance(params, c, f_hz), params.z0)


# --------------------------------------------------------------------------
# Simplified fit
# --------------------------------------------------------------------------

def phase_slope(fit: FitParams, theta):
    """Slope of the phase-frequency line at phase setting ``theta``, rad/GHz."""
    theta = np.asarray(theta, dtype=float)
    a, b, c = fit.a, fit.b, fit.c
    return a[1] * np.sin(b[1] * theta + c[1]) + a[2] * np.sin(b[2] * theta + c[2])


def phase_intercept(fit: FitParams, theta):
    """Intercept of the phase-frequency line at phase setting ``theta``, rad."""
    theta = np.asarray(theta, dtype=float)
    a, b, c = fit.a, fit.b, fit.c
    return a[3] * np.sin(b[3] * theta + c[3]) + a[4] * np.sin(b[4] * theta + c[4])


def reflection_phase_raw(fit: FitParams, theta, f_ghz):
    """Unwrapped reflection phase: slope(theta) * f + intercept(theta)."""
    theta = np.asarray(theta, dtype=float)
    f_ghz = np.asarray(f_ghz, dtype=float)
    return phase_slope(fit, theta) * f_ghz + phase_intercept(fit, theta)


def reflection_phase(fit: FitParams, theta, f_ghz):
    """Reflection phase at ``theta`` and frequency ``f_ghz``, wrapped to (-pi, pi]."""
    return wrap_phase(reflection_phase_raw(fit, theta, f_ghz))


def reflection_amplitude(fit: FitParams, theta, f_ghz):
    """Reflection amplitude at ``theta`` / ``f_ghz``, clamped to (0, 1]."""
    g = reflection_phase(fit, theta, f_ghz)
    a, b, c = fit.a, fit.b, fit.c
    raw = a[0] * g * g + b[0] * g + c[0]
    clamped = np.clip(raw, AMPLITUDE_FLOOR, 1.0)
    n_clamped = int(np.count_nonzero(raw != clamped))
    if n_clamped:
        logger.debug(
            "amplitude fit clamped %d value(s) into [%g, 1] (raw range [%g, %g])",
            n_clamped, AMPLITUDE_FLOOR, float(np.min(raw)), float(np.max(raw)),
        )
    return clamped


def reflection_at(fit: FitParams, grid: CarrierGrid, theta, i):
    """Complex practical reflection of one element on subcarrier ``i`` (1-based)."""
    f = grid.frequency(i)
    return reflection_amplitude(fit, theta, f) * np.exp(1j * reflection_phase(fit, theta, f))


def ideal_reflection_at(theta, i=None):
    """Ideal unit-modulus, frequency-flat reflection exp(j*theta)."""
    return np.exp(1j * np.asarray(theta, dtype=float))


def response_table(fit: FitParams, grid: CarrierGrid, theta, model="practical"):
    """Per-subcarrier reflection coefficients for a phase vector.

    Returns an (n_subcarriers, len(theta)) complex array whose [i, m]
    entry is the response of element m on subcarrier i+1 under ``model``:

    * ``practical``      frequency-dependent amplitude and phase (the fit),
    * ``ideal``          exp(j*theta), identical on every subcarrier,
    * ``amplitude_only`` fitted amplitude at the carrier, phase theta,
      identical on every subcarrier,
    * ``none``           zeros (reflected path removed).
    """
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    n = grid.n_subcarriers
    if model == "practical":
        f = grid.frequencies()[:, None]  # (N, 1) against (M,)
        amp = reflection_amplitude(fit, theta[None, :], f)
        phs = reflection_phase(fit, theta[None, :], f)
        return amp * np.exp(1j * phs)
    if model == "ideal":
        return np.broadcast_to(np.exp(1j * theta), (n, theta.size)).copy()
    if model == "amplitude_only":
        amp = reflection_amplitude(fit, theta, grid.carrier_ghz)
        return np.broadcast_to(amp * np.exp(1j * theta), (n, theta.size)).copy()
    if model == "none":
        return np.zeros((n, theta.size), dtype=complex)
    raise ValueError(f"unknown reflection model {model!r}; expected one of {RESPONSE_MODELS}")

"""Reflection-model tests: circuit path, fit path, grids and codebooks.

Expected values marked "oracle" were produced by the independent
transcriptions below (plain complex/trig arithmetic, no shared code with
the implementation) and are frozen as literals.
"""

import json
import math

import numpy as np
import pytest

from irsofdm.config import config_from_dict, config_to_dict, desk_defaults
from irsofdm.reflection import (
    AMPLITUDE_FLOOR, CarrierGrid, CircuitParams, FitParams, PhaseCodebook,
    DEFAULT_CIRCUIT, DEFAULT_FIT,
    ideal_reflection_at, impedance, phase_intercept, phase_slope,
    reflection_amplitude, reflection_at, reflection_coefficient,
    reflection_from_impedance, reflection_phase, reflection_phase_raw,
    response_table, wrap_phase,
)


def oracle_impedance(l1, l2, r, c, f):
    """Independent one-line transcription of the parallel resonance circuit."""
    w = 2 * math.pi * f
    return (1j * w * l1 * (1j * w * l2 + 1 / (1j * w * c) + r)) / (
        1j * w * l1 + 1j * w * l2 + 1 / (1j * w * c) + r)


def oracle_slope(fit, t):
    return fit.a[1] * math.sin(fit.b[1] * t + fit.c[1]) + fit.a[2] * math.sin(fit.b[2] * t + fit.c[2])


def oracle_intercept(fit, t):
    return fit.a[3] * math.sin(fit.b[3] * t + fit.c[3]) + fit.a[4] * math.sin(fit.b[4] * t + fit.c[4])


class TestCircuit:
    def test_impedance_against_oracle(self):
        z = impedance(DEFAULT_CIRCUIT, 0.47e-12, 2.4e9)
        assert z == pytest.approx(0.16487017886796856 + 53.00565010654166j, rel=1e-12)
        assert z == pytest.approx(oracle_impedance(2.5e-9, 0.7e-9, 1.0, 0.47e-12, 2.4e9), rel=1e-12)

    def test_impedance_second_point(self):
        z = impedance(DEFAULT_CIRCUIT, 2.35e-12, 2.45e9)
        assert z == pytest.approx(3.162629680940258 - 29.882398766654692j, rel=1e-12)

    def test_lossless_impedance_is_reactive(self):
        params = CircuitParams(r=0.0)
        for c in (0.47e-12, 1.0e-12, 2.35e-12):
            z = impedance(params, c, 2.4e9)
            assert abs(z.real) < 1e-9
            assert abs(reflection_coefficient(params, c, 2.4e9)) == pytest.approx(1.0, abs=1e-12)

    def test_reflection_against_oracle(self):
        phi = reflection_coefficient(DEFAULT_CIRCUIT, 1.0e-12, 2.4e9)
        assert abs(phi) == pytest.approx(0.9791590092999044, rel=1e-12)
        assert np.angle(phi) == pytest.approx(2.543375353286005, rel=1e-12)

    def test_matched_load_reflects_nothing(self):
        assert reflection_from_impedance(DEFAULT_CIRCUIT.z0, DEFAULT_CIRCUIT.z0) == 0

    def test_domain_errors(self):
        with pytest.raises(ValueError):
            impedance(DEFAULT_CIRCUIT, 3e-12, 2.4e9)
        with pytest.raises(ValueError):
            impedance(DEFAULT_CIRCUIT, 1e-12, -1.0)
        with pytest.raises(ValueError):
            CircuitParams(c_min=2e-12, c_max=1e-12)

    def test_passivity_over_capacitance_frequency_grid(self):
        caps = np.linspace(DEFAULT_CIRCUIT.c_min, DEFAULT_CIRCUIT.c_max, 50)
        freqs = np.linspace(2.35e9, 2.45e9, 40)
        mags = [abs(reflection_coefficient(DEFAULT_CIRCUIT, c, f)) for c in caps for f in freqs]
        assert max(mags) <= 1 + 1e-12


class TestFit:
    def test_slope_at_zero(self):
        expected = 11.27 * math.sin(-1.897) + 10.88 * math.sin(-1.471)  # oracle
        assert float(phase_slope(DEFAULT_FIT, 0.0)) == pytest.approx(expected, rel=1e-14)
        assert float(phase_slope(DEFAULT_FIT, 0.0)) == pytest.approx(-21.50155072151309, rel=1e-12)

    def test_slope_zero_coefficients(self):
        fit = FitParams(a=(0.06, 0, 0, 89.64, 26.11), b=DEFAULT_FIT.b, c=DEFAULT_FIT.c)
        for t in np.linspace(-np.pi, np.pi, 7):
            assert float(phase_slope(fit, t)) == 0.0

    def test_slope_not_periodic(self):
        # sin arguments scale by b != 1, so theta = +/-pi give different slopes
        assert float(phase_slope(DEFAULT_FIT, math.pi)) == pytest.approx(0.09921962763918657, rel=1e-12)
        assert float(phase_slope(DEFAULT_FIT, -math.pi)) == pytest.approx(0.1665176867151814, rel=1e-12)

    def test_intercept_values(self):
        expected = 89.64 * math.sin(0.2899) + 26.11 * math.sin(1.673)  # oracle
        assert float(phase_intercept(DEFAULT_FIT, 0.0)) == pytest.approx(expected, rel=1e-14)
        assert float(phase_intercept(DEFAULT_FIT, math.pi / 2)) == pytest.approx(25.49953286433585, rel=1e-12)
        fit = FitParams(a=(0.06, 11.27, 10.88, 0, 0), b=DEFAULT_FIT.b, c=DEFAULT_FIT.c)
        assert float(phase_intercept(fit, 1.1)) == 0.0

    def test_phase_wraps_affine_line(self):
        t, f = 0.5, 2.4
        raw = oracle_slope(DEFAULT_FIT, t) * f + oracle_intercept(DEFAULT_FIT, t)
        assert float(reflection_phase_raw(DEFAULT_FIT, t, f)) == pytest.approx(raw, rel=1e-13)
        assert float(reflection_phase(DEFAULT_FIT, t, f)) == pytest.approx(0.4733858659394201, rel=1e-12)

    def test_phase_zero_line(self):
        fit = FitParams(a=(0.06, 0, 0, 0, 0), b=DEFAULT_FIT.b, c=DEFAULT_FIT.c)
        for f in (2.35, 2.4, 2.45):
            assert float(reflection_phase(fit, 0.7, f)) == 0.0

    def test_adjacent_subcarrier_phase_step(self):
        grid = CarrierGrid(2.4, 0.1, 64)
        t = 0.5
        p1 = reflection_phase(DEFAULT_FIT, t, grid.frequency(1))
        p2 = reflection_phase(DEFAULT_FIT, t, grid.frequency(2))
        step = oracle_slope(DEFAULT_FIT, t) * 0.1 / 64
        assert float(wrap_phase(p2 - p1)) == pytest.approx(step, abs=1e-12)

    def test_phase_line_linearity_unwrapped(self):
        thetas = np.linspace(-np.pi, np.pi, 100)
        f1, f2 = 2.36, 2.43
        d = reflection_phase_raw(DEFAULT_FIT, thetas, f2) - reflection_phase_raw(DEFAULT_FIT, thetas, f1)
        assert np.max(np.abs(d - phase_slope(DEFAULT_FIT, thetas) * (f2 - f1))) < 1e-12

    def test_amplitude_at_zero_phase_is_offset_coefficient(self):
        fit = FitParams(a=(0.06, 0, 0, 0, 0), b=DEFAULT_FIT.b, c=DEFAULT_FIT.c)
        # slope and intercept vanish -> G = 0 -> amplitude = c1
        assert float(reflection_amplitude(fit, 0.3, 2.41)) == pytest.approx(0.5736)

    def test_amplitude_unit_fit(self):
        fit = FitParams(a=(0, 11.27, 10.88, 89.64, 26.11), b=(0, *DEFAULT_FIT.b[1:]),
                        c=(1.0, *DEFAULT_FIT.c[1:]))
        amps = reflection_amplitude(fit, np.linspace(-3, 3, 11), 2.4)
        assert np.all(amps == 1.0)

    def test_amplitude_oracle_point(self):
        assert float(reflection_amplitude(DEFAULT_FIT, -1.2, 2.42)) == pytest.approx(
            0.6732009484193758, rel=1e-12)

    def test_amplitude_clamped_to_passive_range(self):
        thetas = np.linspace(-np.pi, np.pi, 100)
        grid = CarrierGrid(2.4, 0.1, 64)
        amps = reflection_amplitude(DEFAULT_FIT, thetas[:, None], grid.frequencies()[None, :])
        assert amps.min() >= AMPLITUDE_FLOOR
        assert amps.max() <= 1.0
        # the raw quadratic does exceed 1 somewhere, so the clamp is active
        g = reflection_phase(DEFAULT_FIT, thetas[:, None], grid.frequencies()[None, :])
        raw = 0.06 * g * g + 0.02 * g + 0.5736
        assert raw.max() > 1.0


class TestGridAndResponses:
    def test_single_subcarrier_sits_at_carrier(self):
        grid = CarrierGrid(2.4, 0.1, 1)
        assert grid.frequency(1) == pytest.approx(2.4)

    def test_first_subcarrier_frequency(self):
        grid = CarrierGrid(2.4, 0.1, 64)
        assert grid.frequency(1) == pytest.approx(2.4 - 31.5 * (0.1 / 64), rel=1e-15)
        assert grid.frequency(1) == pytest.approx(2.35078125, rel=1e-15)

    def test_index_out_of_range(self):
        grid = CarrierGrid(2.4, 0.1, 8)
        with pytest.raises(IndexError):
            grid.frequency(0)
        with pytest.raises(IndexError):
            grid.frequency(9)

    def test_relative_bandwidth_warning(self):
        with pytest.warns(UserWarning):
            CarrierGrid(2.4, 0.2, 16)

    def test_reflection_at_magnitude_bounded(self):
        grid = CarrierGrid(2.4, 0.1, 16)
        rng = np.random.default_rng(0)
        for t in rng.uniform(-np.pi, np.pi, 100):
            for i in range(1, grid.n_subcarriers + 1):
                assert abs(reflection_at(DEFAULT_FIT, grid, t, i)) <= 1.0

    def test_ideal_reflection(self):
        assert ideal_reflection_at(0.0) == pytest.approx(1 + 0j)
        assert ideal_reflection_at(np.pi / 2, i=5) == pytest.approx(1j)
        rng = np.random.default_rng(1)
        for t in rng.uniform(-np.pi, np.pi, 20):
            assert abs(ideal_reflection_at(t, i=rng.integers(1, 64))) == pytest.approx(1.0)

    def test_response_table_matches_pointwise(self):
        grid = CarrierGrid(2.4, 0.1, 8)
        theta = np.array([0.3, -2.0, 1.4])
        table = response_table(DEFAULT_FIT, grid, theta, "practical")
        assert table.shape == (8, 3)
        for m, t in enumerate(theta):
            for i in range(1, 9):
                assert table[i - 1, m] == pytest.approx(
                    complex(reflection_at(DEFAULT_FIT, grid, t, i)), rel=1e-12)
        flat = response_table(DEFAULT_FIT, grid, theta, "amplitude_only")
        assert np.allclose(flat, flat[0])
        assert np.allclose(np.abs(flat[0]),
                           reflection_amplitude(DEFAULT_FIT, theta, 2.4))
        assert np.all(response_table(DEFAULT_FIT, grid, theta, "none") == 0)

    def test_squint_nondegenerate(self):
        # the practical model must separate band-edge responses for some theta
        grid = CarrierGrid(2.4, 0.1, 64)
        thetas = np.linspace(-np.pi, np.pi, 41)
        gap = np.abs(wrap_phase(
            reflection_phase(DEFAULT_FIT, thetas, grid.frequency(1))
            - reflection_phase(DEFAULT_FIT, thetas, grid.frequency(64))))
        assert gap.max() > 0.01


class TestCodebook:
    def test_two_point_codebook(self):
        cb = PhaseCodebook(1)
        assert np.allclose(cb.values, [-np.pi, 0.0])

    def test_codebook_structure(self):
        for bits in (1, 2, 3, 4, 5):
            values = PhaseCodebook(bits).values
            assert len(values) == 2 ** bits
            assert len(np.unique(values)) == 2 ** bits
            assert np.all(np.diff(values) == pytest.approx(2 * np.pi / 2 ** bits))
            assert values.min() >= -np.pi and values.max() < np.pi

    def test_invalid_resolution(self):
        with pytest.raises(ValueError):
            PhaseCodebook(0)


class TestConfigFileRoundTrip:
    def test_fit_and_circuit_from_file(self, tmp_path):
        doc = {
            "system": config_to_dict(desk_defaults()),
        }
        doc["system"]["fit"]["c"][0] = 0.61
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps(doc))
        cfg = config_from_dict(json.loads(path.read_text())["system"])
        assert cfg.fit.c[0] == 0.61
        assert cfg.fit.a == DEFAULT_FIT.a

    def test_fit_requires_five_entries(self):
        with pytest.raises(ValueError):
            FitParams(a=(1, 2, 3), b=DEFAULT_FIT.b, c=DEFAULT_FIT.c)


def test_carrier_phase_residual_diagnostic():
    """The fit only loosely pins G(theta, f_c) = theta; record the residual bound."""
    thetas = np.linspace(-np.pi, np.pi, 101)
    resid = wrap_phase(reflection_phase(DEFAULT_FIT, thetas, 2.4) - thetas)
    assert np.max(np.abs(resid)) < 0.1  # documented misfit scale, not an identity

"""Channel tests: geometry, fading, tap statistics, DFT conventions, and the
factorization of the dense time-domain model into per-subcarrier channels."""

import math

import numpy as np
import pytest

from irsofdm.channel import (
    ChannelSet, TapChannels, dft_matrix, element_distances, end_to_end_receive,
    fading, load_channels, sample_channels, sample_taps, save_channels,
    taps_to_freq,
)
from irsofdm.config import Geometry, PathLoss, SystemConfig, desk_defaults, tiny_defaults
from irsofdm.metrics import effective_rows
from irsofdm.reflection import response_table


class TestGeometry:
    def test_distance_oracle_point(self):
        geo = Geometry(d_bi=10.0, d_iu=1.0, d_a=0.3, d_i=0.03)
        d_iu, d_bu, d_bi = element_distances(geo, 1, 1, 1, math.pi / 4)
        assert d_iu == pytest.approx(0.9794761830329551, rel=1e-14)
        assert d_bu == pytest.approx(9.32458387148022, rel=1e-14)
        assert d_bi == pytest.approx(10.003689319446101, rel=1e-14)

    def test_degenerate_element_collapses_to_user_distance(self):
        geo = Geometry(d_bi=10.0, d_iu=1.0)
        d_iu, _, _ = element_distances(geo, 1, 0, 0, math.pi / 2)
        assert d_iu == pytest.approx(geo.d_iu)

    def test_surface_link_distance_lower_bound(self):
        geo = Geometry(d_bi=25.0)
        rng = np.random.default_rng(3)
        for _ in range(50):
            n, p, q = rng.integers(1, 6, size=3)
            _, _, d_bi = element_distances(geo, int(n), int(p), int(q), 0.1)
            assert d_bi >= geo.d_bi

    def test_negative_index_rejected(self):
        with pytest.raises(IndexError):
            element_distances(Geometry(), -1, 1, 1, 0.0)


class TestFading:
    def test_reference_distance(self):
        pl = PathLoss(zeta0=1e-3)
        assert fading(pl, 1.0, 2.8) == pytest.approx(math.sqrt(1e-3))

    def test_minus_30db_at_ten_meters(self):
        pl = PathLoss(zeta0=1e-3)
        assert fading(pl, 10.0, 2.0) == pytest.approx(0.0031622776601683794, rel=1e-14)

    def test_power_law(self):
        pl = PathLoss()
        assert fading(pl, 2.0, 2.0) == pytest.approx(fading(pl, 1.0, 2.0) / 2)

    def test_positive_distance_required(self):
        with pytest.raises(ValueError):
            fading(PathLoss(), 0.0, 2.0)


class TestTapSampling:
    def test_two_tap_mask(self):
        cfg = SystemConfig(n_subcarriers=8, n_tx=2, n_users=1, n_elements=1,
                           n_taps=2, cp_len=2, n_subbands=1,
                           geometry=Geometry(user_phases=(0.3,)))
        taps = sample_taps(cfg, np.array([0.3]), np.random.default_rng(0))
        assert taps.nonzero_mask.tolist() == [True, False]
        assert np.all(taps.h_d[:, 1, :] == 0)
        assert np.all(taps.g[1] == 0)
        assert np.all(taps.h_r[:, 1, :] == 0)
        assert np.all(taps.h_d[:, 0, :] != 0)

    def test_determinism(self, tiny_cfg):
        a = sample_channels(tiny_cfg, seed=5)
        b = sample_channels(tiny_cfg, seed=5)
        assert a.sha256() == b.sha256()
        assert np.array_equal(a.taps.h_d, b.taps.h_d)
        c = sample_channels(tiny_cfg, seed=6)
        assert a.sha256() != c.sha256()

    def test_nonzero_tap_variance_matches_fading(self):
        cfg = SystemConfig(n_subcarriers=8, n_tx=1, n_users=1, n_elements=1,
                           n_taps=4, cp_len=4, n_subbands=1,
                           geometry=Geometry(user_phases=(0.3,)))
        _, d_bu, _ = element_distances(cfg.geometry, 1, 1, 1, 0.3)
        xi2 = cfg.pathloss.zeta0 * d_bu ** (-cfg.pathloss.eps_bu)
        rng = np.random.default_rng(123)
        draws = np.array([sample_taps(cfg, np.array([0.3]), rng).h_d[0, :2, 0]
                          for _ in range(10_000)])
        emp = np.mean(np.abs(draws) ** 2)
        assert emp == pytest.approx(xi2 / 2, rel=0.05)

    def test_square_element_count_required(self):
        with pytest.raises(ValueError):
            SystemConfig(n_elements=12)


class TestFrequencyTransform:
    def test_single_leading_tap_gives_flat_spectrum(self):
        h_d = np.zeros((1, 2, 2), dtype=complex)
        h_d[0, 0] = [1 + 2j, -0.5j]
        g = np.zeros((2, 1, 2), dtype=complex)
        g[0] = [[0.3, 1j]]
        h_r = np.zeros((1, 2, 1), dtype=complex)
        h_r[0, 0] = [2.0]
        taps = TapChannels(h_d=h_d, g=g, h_r=h_r, nonzero_mask=np.array([True, False]))
        freq = taps_to_freq(taps, 8)
        assert np.allclose(freq.h_d, np.broadcast_to(h_d[0, 0], (1, 8, 2)))
        assert np.allclose(freq.g, np.broadcast_to(g[0], (8, 1, 2)))
        assert np.allclose(freq.h_r, 2.0)

    def test_matches_cyclic_matrix_eigenvalue_oracle(self):
        rng = np.random.default_rng(42)
        n, n_tx, m_el, k_users, d = 8, 2, 4, 1, 3
        shape = dict(h_d=(k_users, d, n_tx), g=(d, m_el, n_tx), h_r=(k_users, d, m_el))
        raw = {k: rng.standard_normal(s) + 1j * rng.standard_normal(s)
               for k, s in shape.items()}
        taps = TapChannels(**raw, nonzero_mask=np.ones(d, dtype=bool))
        freq = taps_to_freq(taps, n)
        f_mat = dft_matrix(n)

        def cyclic(first_col):
            mat = np.zeros((n, n), dtype=complex)
            for t in range(n):
                for u in range(n):
                    mat[t, u] = first_col[(t - u) % n]
            return mat

        for ant in range(n_tx):
            col = np.zeros(n, dtype=complex)
            col[:d] = raw["h_d"][0, :, ant].conj()
            lam = np.diag(f_mat @ cyclic(col) @ f_mat.conj().T)
            assert np.allclose(freq.h_d[0, :, ant], lam.conj(), atol=1e-10)
        for m in range(m_el):
            for ant in range(n_tx):
                col = np.zeros(n, dtype=complex)
                col[:d] = raw["g"][:, m, ant]
                lam = np.diag(f_mat @ cyclic(col) @ f_mat.conj().T)
                assert np.allclose(freq.g[:, m, ant], lam, atol=1e-10)
        for m in range(m_el):
            col = np.zeros(n, dtype=complex)
            col[:d] = raw["h_r"][0, :, m].conj()
            lam = np.diag(f_mat @ cyclic(col) @ f_mat.conj().T)
            assert np.allclose(freq.h_r[0, :, m], lam.conj(), atol=1e-10)

    def test_two_tap_hand_dft(self):
        h_d = np.zeros((1, 2, 1), dtype=complex)
        h_d[0, :, 0] = [1.0, 1.0]
        taps = TapChannels(h_d=h_d, g=np.zeros((2, 1, 1), dtype=complex),
                           h_r=np.zeros((1, 2, 1), dtype=complex),
                           nonzero_mask=np.ones(2, dtype=bool))
        freq = taps_to_freq(taps, 4)
        # positive-exponent transform of [1, 1, 0, 0] at N = 4
        expected = np.array([1 + np.exp(2j * np.pi * i / 4) for i in range(4)])
        assert np.allclose(freq.h_d[0, :, 0], expected, atol=1e-12)
        assert np.allclose(np.abs(freq.h_d[0, :, 0]),
                           [2.0, math.sqrt(2), 0.0, math.sqrt(2)], atol=1e-12)

    def test_parseval_energy(self, tiny_channels):
        n = tiny_channels.config.n_subcarriers
        for taps, freq in ((tiny_channels.taps.h_d, tiny_channels.freq.h_d),
                           (tiny_channels.taps.h_r, tiny_channels.freq.h_r),
                           (tiny_channels.taps.g, tiny_channels.freq.g)):
            e_t = np.sum(np.abs(taps) ** 2)
            e_f = np.sum(np.abs(freq) ** 2) / n
            assert e_f == pytest.approx(e_t, rel=1e-10)

    def test_too_many_taps_rejected(self, tiny_channels):
        with pytest.raises(ValueError):
            taps_to_freq(tiny_channels.taps, 1)


class TestEndToEnd:
    def _random_signal(self, cfg, rng):
        shape = (cfg.n_subcarriers, cfg.n_tx, cfg.n_users)
        w = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
        s = (rng.standard_normal(shape[::2]) + 1j * rng.standard_normal(shape[::2]))
        return w, s

    def test_factorization_equivalence(self, tiny_cfg):
        rng = np.random.default_rng(7)
        for seed in range(5):
            channels = sample_channels(tiny_cfg, seed=seed)
            theta = rng.uniform(-np.pi, np.pi, tiny_cfg.n_elements)
            phi = response_table(tiny_cfg.fit, tiny_cfg.grid(), theta, "practical")
            w, s = self._random_signal(tiny_cfg, rng)
            y_ref = end_to_end_receive(channels.taps, phi, w, s, tiny_cfg.n_subcarriers)
            rows = effective_rows(channels.freq, phi)
            z = np.einsum("inp,ip->in", w, s)
            y_fac = np.einsum("kin,in->ki", rows, z)
            scale = np.abs(y_ref).max()
            assert np.abs(y_ref - y_fac).max() / scale <= 1e-9

    def test_zero_reflection_reduces_to_direct_link(self, tiny_cfg, tiny_channels):
        rng = np.random.default_rng(1)
        w, s = self._random_signal(tiny_cfg, rng)
        phi = np.zeros((tiny_cfg.n_subcarriers, tiny_cfg.n_elements))
        y = end_to_end_receive(tiny_channels.taps, phi, w, s, tiny_cfg.n_subcarriers)
        rows = effective_rows(tiny_channels.freq, phi)
        z = np.einsum("inp,ip->in", w, s)
        assert np.allclose(y, np.einsum("kin,in->ki", rows, z), atol=1e-12)

    def test_zero_input_returns_noise(self, tiny_cfg, tiny_channels):
        rng = np.random.default_rng(2)
        phi = response_table(tiny_cfg.fit, tiny_cfg.grid(),
                             np.zeros(tiny_cfg.n_elements), "practical")
        w = np.zeros((tiny_cfg.n_subcarriers, tiny_cfg.n_tx, tiny_cfg.n_users), dtype=complex)
        s = np.ones((tiny_cfg.n_subcarriers, tiny_cfg.n_users), dtype=complex)
        noise = rng.standard_normal((tiny_cfg.n_users, tiny_cfg.n_subcarriers)) + 0j
        y = end_to_end_receive(tiny_channels.taps, phi, w, s,
                               tiny_cfg.n_subcarriers, noise=noise)
        f_mat = dft_matrix(tiny_cfg.n_subcarriers)
        assert np.allclose(y, noise @ f_mat.T, atol=1e-12)

    def test_dimension_mismatch(self, tiny_cfg, tiny_channels):
        w = np.zeros((tiny_cfg.n_subcarriers, tiny_cfg.n_tx, tiny_cfg.n_users))
        s = np.zeros((tiny_cfg.n_subcarriers, tiny_cfg.n_users))
        bad_phi = np.zeros((tiny_cfg.n_subcarriers, tiny_cfg.n_elements + 1))
        with pytest.raises(ValueError):
            end_to_end_receive(tiny_channels.taps, bad_phi, w, s, tiny_cfg.n_subcarriers)


class TestPersistence:
    def test_round_trip(self, tmp_path, tiny_channels):
        path = tmp_path / "channels.bin"
        save_channels(path, tiny_channels)
        loaded = load_channels(path)
        assert isinstance(loaded, ChannelSet)
        assert np.array_equal(loaded.taps.h_d, tiny_channels.taps.h_d)
        assert np.array_equal(loaded.taps.g, tiny_channels.taps.g)
        assert np.array_equal(loaded.taps.h_r, tiny_channels.taps.h_r)
        assert np.array_equal(loaded.user_phases, tiny_channels.user_phases)
        assert np.allclose(loaded.freq.h_d, tiny_channels.freq.h_d)
        assert loaded.sha256() == tiny_channels.sha256()
        assert loaded.config.n_subcarriers == tiny_channels.config.n_subcarriers

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "junk.bin"
        path.write_bytes(b"not a dump")
        with pytest.raises(ValueError):
            load_channels(path)

"""Geometry-based wideband tap channels and their per-subcarrier form.

Three links are modeled with D-tap impulse responses: transmitter-user
(``h_d``), transmitter-surface (``g``), surface-user (``h_r``). Taps are
CSCG with the leading D/2 delays carrying all the energy, scaled by a
per-antenna/per-element distance power law.

Conventions (used consistently across the whole package):

* normalized DFT matrix F(m, n) = exp(-j*2*pi*(m-1)*(n-1)/N) / sqrt(N);
* the time-domain receive operators apply the *conjugated* taps of the
  user-side links, so the per-subcarrier channel vectors h_d/h_r are the
  positive-exponent (inverse-DFT style) transform of the taps, while the
  transmitter-surface matrix G uses the plain forward transform;
* subcarrier i (1-based) is assigned the physical frequency of
  ``CarrierGrid.frequency(i)`` everywhere.

``end_to_end_receive`` is a literal dense transcription of the
time-domain block-cyclic propagation and exists to validate the
factorized per-subcarrier model; keep dimensions small when calling it.
"""

from dataclasses import dataclass
import hashlib
import json
import math

import numpy as np

from .config import SystemConfig, Geometry, PathLoss, validate_config


@dataclass(frozen=True, eq=False)
class TapChannels:
    """One tap-domain realization of the three links.

    Shapes: h_d (K, D, N_t), g (D, M, N_t), h_r (K, D, M);
    ``nonzero_mask`` (D,) marks the delay taps that carry energy.
    """

    h_d: np.ndarray
    g: np.ndarray
    h_r: np.ndarray
    nonzero_mask: np.ndarray

    @property
    def n_taps(self):
        return self.h_d.shape[1]


@dataclass(frozen=True, eq=False)
class FreqChannels:
    """Per-subcarrier channels: h_d (K, N, N_t), h_r (K, N, M), g (N, M, N_t)."""

    h_d: np.ndarray
    h_r: np.ndarray
    g: np.ndarray


@dataclass(frozen=True, eq=False)
class ChannelSet:
    """One channel realization in both tap and frequency form, plus its scenario."""

    config: SystemConfig
    taps: TapChannels
    freq: FreqChannels
    user_phases: np.ndarray  # realized azimuths, radians, shape (K,)

    def sha256(self) -> str:
        """Digest of the raw channel bytes; equal digests mean equal channels."""
        h = hashlib.sha256()
        for arr in (self.taps.h_d, self.taps.g, self.taps.h_r,
                    self.freq.h_d, self.freq.h_r, self.freq.g):
            h.update(np.ascontiguousarray(arr).tobytes())
        h.update(np.ascontiguousarray(self.user_phases).tobytes())
        return h.hexdigest()


# --------------------------------------------------------------------------
# Geometry and fading
# --------------------------------------------------------------------------

def element_distances(geometry: Geometry, n, p, q, phi_k):
    """Exact distances for antenna ``n`` and surface element (p, q), meters.

    Indices follow the array layout convention: n in 1..N_t, p, q in
    1..sqrt(M) (zero is tolerated for degenerate-geometry checks).
    Returns (surface-user, transmitter-user, transmitter-surface).
    """
    if n < 0 or p < 0 or q < 0:
        raise IndexError("indices must be nonnegative")
    d_iu = math.sqrt((p * geometry.d_i - geometry.d_iu * math.cos(phi_k)) ** 2
                     + (q * geometry.d_i) ** 2
                     + (geometry.d_iu * math.sin(phi_k)) ** 2)
    d_bu = math.sqrt((geometry.d_bi - geometry.d_iu * math.sin(phi_k)) ** 2
                     + (n * geometry.d_a) ** 2
                     + (geometry.d_iu * math.cos(phi_k)) ** 2)
    d_bi = math.sqrt((q * geometry.d_i - n * geometry.d_a) ** 2
                     + (p * geometry.d_i) ** 2
                     + geometry.d_bi ** 2)
    return d_iu, d_bu, d_bi


def fading(pathloss: PathLoss, distance, exponent):
    """Amplitude attenuation sqrt(zeta0 * distance**-exponent)."""
    if distance <= 0:
        raise ValueError("distance must be positive")
    return math.sqrt(pathloss.zeta0 * distance ** (-exponent))


def _fading_tables(config: SystemConfig, user_phases):
    """Per-scalar amplitude attenuations: (xi_bu (K,Nt), xi_iu (K,M), xi_bi (M,Nt))."""
    geo, pl = config.geometry, config.pathloss
    k_users, n_tx, m_el = config.n_users, config.n_tx, config.n_elements
    root = config.sqrt_m
    xi_bu = np.empty((k_users, n_tx))
    xi_iu = np.empty((k_users, m_el))
    xi_bi = np.empty((m_el, n_tx))
    for k in range(k_users):
        phi = user_phases[k]
        for n in range(1, n_tx + 1):
            _, d_bu, _ = element_distances(geo, n, 1, 1, phi)
            xi_bu[k, n - 1] = fading(pl, d_bu, pl.eps_bu)
        for p in range(1, root + 1):
            for q in range(1, root + 1):
                m = (p - 1) * root + q
                d_iu, _, _ = element_distances(geo, 1, p, q, phi)
                xi_iu[k, m - 1] = fading(pl, d_iu, pl.eps_iu)
    for p in range(1, root + 1):
        for q in range(1, root + 1):
            m = (p - 1) * root + q
            for n in range(1, n_tx + 1):
                _, _, d_bi = element_distances(geo, n, p, q, 0.0)
                xi_bi[m - 1, n - 1] = fading(pl, d_bi, pl.eps_bi)
    return xi_bu, xi_iu, xi_bi


# --------------------------------------------------------------------------
# Sampling and transforms
# --------------------------------------------------------------------------

def _cscg(rng, shape, scale):
    return scale / math.sqrt(2.0) * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def sample_taps(config: SystemConfig, user_phases, rng) -> TapChannels:
    """Draw one tap realization; the leading D/2 taps are CSCG, the rest zero.

    Each nonzero scalar has variance 1/(D/2) (unit average link energy)
    before the per-antenna/per-element fading is applied.
    """
    validate_config(config)
    d_taps = config.n_taps
    n_active = max(1, d_taps // 2)
    mask = np.zeros(d_taps, dtype=bool)
    mask[:n_active] = True
    scale = 1.0 / math.sqrt(n_active)

    k_users, n_tx, m_el = config.n_users, config.n_tx, config.n_elements
    h_d = np.zeros((k_users, d_taps, n_tx), dtype=complex)
    g = np.zeros((d_taps, m_el, n_tx), dtype=complex)
    h_r = np.zeros((k_users, d_taps, m_el), dtype=complex)
    h_d[:, mask, :] = _cscg(rng, (k_users, n_active, n_tx), scale)
    g[mask, :, :] = _cscg(rng, (n_active, m_el, n_tx), scale)
    h_r[:, mask, :] = _cscg(rng, (k_users, n_active, m_el), scale)

    xi_bu, xi_iu, xi_bi = _fading_tables(config, user_phases)
    h_d *= xi_bu[:, None, :]
    g *= xi_bi[None, :, :]
    h_r *= xi_iu[:, None, :]
    return TapChannels(h_d=h_d, g=g, h_r=h_r, nonzero_mask=mask)


def taps_to_freq(taps: TapChannels, n_subcarriers: int) -> FreqChannels:
    """Per-subcarrier channels from taps.

    The user-side links enter the receive operator conjugated, so their
    bin-i value is conj of the forward DFT of the conjugated taps, i.e.
    the positive-exponent transform of the raw taps; the
    transmitter-surface link uses the plain forward DFT.
    """
    if taps.n_taps > n_subcarriers:
        raise ValueError("tap count exceeds subcarrier count")
    # positive-exponent unnormalized transform == N * ifft
    h_d = np.fft.ifft(taps.h_d, n=n_subcarriers, axis=1) * n_subcarriers
    h_r = np.fft.ifft(taps.h_r, n=n_subcarriers, axis=1) * n_subcarriers
    g = np.fft.fft(taps.g, n=n_subcarriers, axis=0)
    return FreqChannels(h_d=h_d, h_r=h_r, g=g)


def sample_channels(config: SystemConfig, seed) -> ChannelSet:
    """Draw a full ChannelSet; deterministic in (config, seed).

    User azimuths come from the configured geometry when present and are
    otherwise drawn uniformly on [0, pi].
    """
    rng = np.random.default_rng(seed)
    if config.geometry.user_phases is not None:
        user_phases = np.asarray(config.geometry.user_phases, dtype=float)
    else:
        user_phases = rng.uniform(0.0, np.pi, size=config.n_users)
    taps = sample_taps(config, user_phases, rng)
    freq = taps_to_freq(taps, config.n_subcarriers)
    return ChannelSet(config=config, taps=taps, freq=freq, user_phases=user_phases)


def dft_matrix(n: int) -> np.ndarray:
    """Normalized DFT matrix F(m, n) = exp(-j*2*pi*(m-1)*(n-1)/N)/sqrt(N)."""
    idx = np.arange(n)
    return np.exp(-2j * np.pi * np.outer(idx, idx) / n) / math.sqrt(n)


# --------------------------------------------------------------------------
# Dense time-domain reference model
# --------------------------------------------------------------------------

def _block_cyclic(blocks, n, block_rows, block_cols):
    """Dense block-cyclic matrix whose (t, u) block is blocks[(t-u) mod n]."""
    out = np.zeros((n * block_rows, n * block_cols), dtype=complex)
    for t in range(n):
        for u in range(n):
            out[t * block_rows:(t + 1) * block_rows,
                u * block_cols:(u + 1) * block_cols] = blocks[(t - u) % n]
    return out


def end_to_end_receive(taps: TapChannels, phi, weights, symbols, n_subcarriers,
                       noise=None):
    """Frequency-domain received samples via the dense time-domain model.

    Builds the block-cyclic channel operators of all three links, the
    per-element circular-convolution reflection operator (frequency
    response phi[:, m] on the subcarrier grid), applies the IDFT-precoded
    transmit signal, and DFTs the receive samples.

    Parameters: phi (N, M) per-subcarrier reflection coefficients (zeros
    remove the reflected path), weights (N, N_t, K), symbols (N, K),
    noise optional (K, N) time-domain samples. Returns (K, N) with entry
    [k, i] the bin-(i+1) sample of user k+1.
    """
    n = n_subcarriers
    k_users, d_taps, n_tx = taps.h_d.shape
    m_el = taps.h_r.shape[2]
    if phi.shape != (n, m_el):
        raise ValueError("phi must be (n_subcarriers, n_elements)")
    if weights.shape != (n, n_tx, k_users) or symbols.shape != (n, k_users):
        raise ValueError("weights/symbols shapes inconsistent with taps")

    f_mat = dft_matrix(n)

    def padded(arr_taps, axis_shape):
        blocks = np.zeros((n,) + axis_shape, dtype=complex)
        blocks[:d_taps] = arr_taps
        return blocks

    # transmit samples: (F^H kron I_Nt) @ blkdiag(W_i) @ s
    z = np.einsum("ink,ik->in", weights, symbols).reshape(n * n_tx)
    x_time = np.kron(f_mat.conj().T, np.eye(n_tx)) @ z

    g_big = _block_cyclic(padded(taps.g, (m_el, n_tx)), n, m_el, n_tx)

    # per-element reflection: circular convolution with frequency response
    # phi[:, m]  ->  C_m = F^H diag(phi[:, m]) F, placed at time-major index
    # (t*M + m, u*M + m)
    phi_big = np.zeros((n * m_el, n * m_el), dtype=complex)
    for m in range(m_el):
        c_m = f_mat.conj().T @ np.diag(phi[:, m]) @ f_mat
        phi_big[m::m_el, m::m_el] = c_m

    out = np.zeros((k_users, n), dtype=complex)
    for k in range(k_users):
        hd_blocks = padded(taps.h_d[k].conj()[:, None, :], (1, n_tx))
        hr_blocks = padded(taps.h_r[k].conj()[:, None, :], (1, m_el))
        hd_big = _block_cyclic(hd_blocks, n, 1, n_tx)
        hr_big = _block_cyclic(hr_blocks, n, 1, m_el)
        y_time = hd_big @ x_time + hr_big @ (phi_big @ (g_big @ x_time))
        if noise is not None:
            y_time = y_time + noise[k]
        out[k] = f_mat @ y_time
    return out


# --------------------------------------------------------------------------
# ChannelSet persistence (replay of failing cases)
# --------------------------------------------------------------------------

_MAGIC = b"IRSCH1\n"


def save_channels(path, channels: ChannelSet):
    """Binary dump: magic, JSON dims header, arrays as little-endian c16."""
    arrays = {
        "taps_h_d": channels.taps.h_d, "taps_g": channels.taps.g,
        "taps_h_r": channels.taps.h_r,
        "user_phases": channels.user_phases.astype(float),
    }
    header = {
        "n_subcarriers": channels.config.n_subcarriers,
        "n_taps": int(channels.taps.n_taps),
        "nonzero_mask": channels.taps.nonzero_mask.astype(int).tolist(),
        "shapes": {k: list(v.shape) for k, v in arrays.items()},
    }
    from .config import config_to_dict
    header["config"] = config_to_dict(channels.config)
    blob = json.dumps(header).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(len(blob).to_bytes(8, "little"))
        fh.write(blob)
        for key in ("taps_h_d", "taps_g", "taps_h_r"):
            fh.write(np.ascontiguousarray(arrays[key], dtype="<c16").tobytes())
        fh.write(np.ascontiguousarray(arrays["user_phases"], dtype="<f8").tobytes())


def load_channels(path) -> ChannelSet:
    from .config import config_from_dict
    with open(path, "rb") as fh:
        if fh.read(len(_MAGIC)) != _MAGIC:
            raise ValueError(f"{path} is not a channel dump")
        size = int.from_bytes(fh.read(8), "little")
        header = json.loads(fh.read(size).decode("utf-8"))
        shapes = header["shapes"]

        def read(key, dtype):
            shape = tuple(shapes[key])
            count = int(np.prod(shape))
            arr = np.frombuffer(fh.read(count * np.dtype(dtype).itemsize), dtype=dtype)
            return arr.reshape(shape).copy()

        h_d = read("taps_h_d", "<c16")
        g = read("taps_g", "<c16")
        h_r = read("taps_h_r", "<c16")
        user_phases = read("user_phases", "<f8")
    config = config_from_dict(header["config"])
    mask = np.asarray(header["nonzero_mask"], dtype=bool)
    taps = TapChannels(h_d=h_d, g=g, h_r=h_r, nonzero_mask=mask)
    freq = taps_to_freq(taps, header["n_subcarriers"])
    return ChannelSet(config=config, taps=taps, freq=freq, user_phases=user_phases)

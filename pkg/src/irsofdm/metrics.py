"""Objective-side quantities: effective channels, SINR, sum-rate, MSE.

Every scheme is scored through these functions so cross-scheme
comparisons cannot diverge by evaluation-path differences.
"""

from dataclasses import dataclass
import math

import numpy as np

from .channel import ChannelSet, FreqChannels
from .reflection import response_table, RESPONSE_MODELS

LN2 = math.log(2.0)


@dataclass(eq=False)
class Solution:
    """Joint design state: per-subcarrier beamformers plus the phase vector.

    ``weights`` has shape (N, N_t, K); ``theta`` has shape (M,);
    ``model_tag`` names the reflection model the design assumed (one of
    ``practical``, ``ideal``, ``amplitude_only``, ``none``). Scoring may
    rebuild the reflections under a different model.
    """

    weights: np.ndarray
    theta: np.ndarray
    model_tag: str = "practical"

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=complex)
        self.theta = np.asarray(self.theta, dtype=float)
        if self.weights.ndim != 3:
            raise ValueError("weights must be (n_subcarriers, n_tx, n_users)")
        if self.model_tag not in RESPONSE_MODELS:
            raise ValueError(f"unknown model_tag {self.model_tag!r}")

    def total_power(self) -> float:
        return float(np.sum(np.abs(self.weights) ** 2))

    def check_power(self, budget, tol=1e-9):
        if self.total_power() > budget + tol:
            raise ValueError(
                f"beamformer power {self.total_power():.6g} exceeds budget {budget:.6g}")


def effective_rows(freq: FreqChannels, phi_table: np.ndarray) -> np.ndarray:
    """Composite channel rows h_d^H + h_r^H diag(phi_i) G_i for all (k, i).

    ``phi_table`` is (N, M); the result is (K, N, N_t) holding the row
    vector of each user/subcarrier pair.
    """
    direct = freq.h_d.conj()
    reflected = np.einsum("kim,im,imn->kin", freq.h_r.conj(), phi_table, freq.g)
    return direct + reflected


def effective_channel(channels: ChannelSet, theta, model_tag, k, i):
    """Effective channel of user ``k`` on subcarrier ``i`` (1-based), as a column.

    Returns the conjugated composite row, i.e. the vector h with
    h^H w = (h_d^H + h_r^H diag(phi_i) G_i) w.
    """
    phi = response_table(channels.config.fit, channels.config.grid(), theta, model_tag)
    rows = effective_rows(channels.freq, phi)
    return rows[k - 1, i - 1].conj()


def _solution_rows(channels: ChannelSet, solution: Solution) -> np.ndarray:
    phi = response_table(channels.config.fit, channels.config.grid(),
                         solution.theta, solution.model_tag)
    return effective_rows(channels.freq, phi)


def stream_products(rows: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """All inner products h_{k,i}^H w_{p,i}: (K, N, K) with axes (k, i, p)."""
    return np.einsum("kin,inp->kip", rows, weights)


def sinr_table(rows, weights, noise_w):
    """Per-(k, i) SINR from effective rows and beamformers."""
    prod = stream_products(rows, weights)
    powers = np.abs(prod) ** 2
    k_users = powers.shape[0]
    sig = powers[np.arange(k_users), :, np.arange(k_users)]  # (K, N)
    interf = powers.sum(axis=2) - sig
    return sig / (interf + noise_w)


def sinr(channels: ChannelSet, solution: Solution, k, i, noise_w):
    """SINR of user ``k`` on subcarrier ``i`` (1-based)."""
    if noise_w <= 0:
        raise ValueError("noise power must be positive")
    rows = _solution_rows(channels, solution)
    return float(sinr_table(rows, solution.weights, noise_w)[k - 1, i - 1])


def sum_rate_from_rows(rows, weights, noise_w) -> float:
    gamma = sinr_table(rows, weights, noise_w)
    return float(np.sum(np.log2(1.0 + gamma)) / rows.shape[1])


def average_sum_rate(channels: ChannelSet, solution: Solution, noise_w=None) -> float:
    """Average sum-rate over subcarriers, bits/s/Hz."""
    if noise_w is None:
        noise_w = channels.config.noise_w
    rows = _solution_rows(channels, solution)
    return sum_rate_from_rows(rows, solution.weights, noise_w)


def mse_table(rows, weights, eq, noise_w):
    """Modified per-stream MSE for every (k, i) given equalizers ``eq`` (K, N)."""
    prod = stream_products(rows, weights)
    k_users = prod.shape[0]
    sig = prod[np.arange(k_users), :, np.arange(k_users)]  # (K, N)
    total = np.sum(np.abs(eq[:, :, None].conj() * prod) ** 2, axis=2)
    return total - 2.0 * np.real(eq.conj() * sig) + np.abs(eq) ** 2 * noise_w + 1.0


def mse(channels: ChannelSet, solution: Solution, eq_ki, k, i, noise_w):
    """Modified MSE of user ``k`` on subcarrier ``i`` for a scalar equalizer."""
    rows = _solution_rows(channels, solution)
    k_users, n = rows.shape[0], rows.shape[1]
    eq = np.zeros((k_users, n), dtype=complex)
    eq[k - 1, i - 1] = eq_ki
    return float(mse_table(rows, solution.weights, eq, noise_w)[k - 1, i - 1])


def optimal_equalizers(rows, weights, noise_w):
    """MMSE equalizers: h^H w_k / (sum_p |h^H w_p|^2 + noise)."""
    prod = stream_products(rows, weights)
    k_users = prod.shape[0]
    sig = prod[np.arange(k_users), :, np.arange(k_users)]
    denom = np.sum(np.abs(prod) ** 2, axis=2) + noise_w
    return sig / denom


def wmmse_objective(channels: ChannelSet, solution: Solution, rho, eq, noise_w) -> float:
    """Weighted-MSE surrogate (1/N) sum log2(rho) - rho * MSE + 1.

    At the closed-form optimal weights and equalizers this equals the
    average sum-rate exactly.
    """
    rho = np.asarray(rho, dtype=float)
    if np.any(rho <= 0):
        raise ValueError("MSE weights must be positive")
    rows = _solution_rows(channels, solution)
    m = mse_table(rows, solution.weights, np.asarray(eq, dtype=complex), noise_w)
    n = rows.shape[1]
    return float(np.sum(np.log2(rho) - rho * m + 1.0) / n)


def wmmse_surrogate_nats(rows, weights, rho, eq, noise_w) -> float:
    """Surrogate with natural-log weight term, rescaled to bits.

    This variant is what the block-coordinate updates maximize exactly
    (the weight update rho = 1/MSE is its stationary point), so it is
    the quantity traced for monotone-convergence checks. It coincides
    with :func:`wmmse_objective` whenever rho * MSE = 1.
    """
    rho = np.asarray(rho, dtype=float)
    m = mse_table(rows, weights, np.asarray(eq, dtype=complex), noise_w)
    n = rows.shape[1]
    return float(np.sum(np.log(rho) - rho * m + 1.0) / (n * LN2))

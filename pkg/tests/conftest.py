import numpy as np
import pytest

from irsofdm import (SolverOptions, desk_defaults, sample_channels, tiny_defaults)
from irsofdm.metrics import Solution, effective_rows, optimal_equalizers, mse_table
from irsofdm.reflection import response_table


@pytest.fixture(scope="session")
def tiny_cfg():
    return tiny_defaults()


@pytest.fixture(scope="session")
def desk_cfg():
    return desk_defaults()


@pytest.fixture(scope="session")
def tiny_channels(tiny_cfg):
    return sample_channels(tiny_cfg, seed=11)


def random_feasible_state(channels, rng, power=None):
    """Random phases + power-feasible beamformers with fresh equalizers/weights."""
    cfg = channels.config
    power = cfg.power_w if power is None else power
    theta = rng.uniform(-np.pi, np.pi, cfg.n_elements)
    phi = response_table(cfg.fit, cfg.grid(), theta, "practical")
    rows = effective_rows(channels.freq, phi)
    shape = (cfg.n_subcarriers, cfg.n_tx, cfg.n_users)
    w = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    w *= np.sqrt(power / np.sum(np.abs(w) ** 2))
    eq = optimal_equalizers(rows, w, cfg.noise_w)
    rho = 1.0 / mse_table(rows, w, eq, cfg.noise_w)
    solution = Solution(weights=w, theta=theta, model_tag="practical")
    return solution, rows, phi, eq, rho

"""Scikit-learn style estimator wrappers around the designers.

Each designer is fit on a :class:`~irsofdm.channel.ChannelSet` (which
carries its scenario) and exposes the usual ``get_params`` /
``set_params`` / ``clone`` surface, so designs compose with standard
model-selection tooling. ``score`` always evaluates under the practical
element model, whatever the design assumed.
"""

import numpy as np
from sklearn.base import BaseEstimator

from .channel import ChannelSet
from .schemes import evaluate_solution
from .solver import SolverOptions, solve, initial_theta, _resolve_phase_setup


def _check_channels(x):
    if not isinstance(x, ChannelSet):
        raise TypeError(f"expected a ChannelSet, got {type(x).__name__}")
    return x


class _DesignerMixin:
    """Shared fit/score machinery; subclasses define ``_design``."""

    def _options(self) -> SolverOptions:
        keys = ("max_outer_iters", "outer_tol", "theta_inner_tol", "theta_max_sweeps",
                "mu_tol", "golden_eps", "step_h0", "n_subbands", "phase_mode",
                "phase_bits", "rng_seed")
        return SolverOptions(**{k: getattr(self, k) for k in keys if hasattr(self, k)})

    def fit(self, X, y=None):
        channels = _check_channels(X)
        solution, trace = self._design(channels)
        self.channels_ = channels
        self.solution_ = solution
        self.trace_ = np.asarray(trace)
        self.n_iter_ = len(trace) - 1
        self.objective_ = float(trace[-1])
        self.rate_ = evaluate_solution(channels, solution)
        return self

    def score(self, X=None, y=None) -> float:
        """Average sum-rate (bits/s/Hz) of the fitted design, practical model."""
        if not hasattr(self, "solution_"):
            raise RuntimeError("designer is not fitted")
        channels = self.channels_ if X is None else _check_channels(X)
        return evaluate_solution(channels, self.solution_)


class JointBeamformingDesigner(_DesignerMixin, BaseEstimator):
    """Joint beamformer + phase design under a chosen element model.

    ``model`` selects what the optimizer assumes about the elements:
    ``practical`` (frequency-dependent fit), ``ideal`` (unit modulus,
    frequency flat) or ``amplitude_only`` (carrier amplitude, no squint).
    """

    def __init__(self, model="practical", max_outer_iters=50, outer_tol=1e-4,
                 theta_inner_tol=1e-4, theta_max_sweeps=10, mu_tol=1e-9,
                 golden_eps=1e-4, step_h0=0.1, n_subbands=None,
                 phase_mode="auto", phase_bits=None, rng_seed=0):
        self.model = model
        self.max_outer_iters = max_outer_iters
        self.outer_tol = outer_tol
        self.theta_inner_tol = theta_inner_tol
        self.theta_max_sweeps = theta_max_sweeps
        self.mu_tol = mu_tol
        self.golden_eps = golden_eps
        self.step_h0 = step_h0
        self.n_subbands = n_subbands
        self.phase_mode = phase_mode
        self.phase_bits = phase_bits
        self.rng_seed = rng_seed

    def _design(self, channels):
        return solve(channels, opts=self._options(), model=self.model)


class RandomPhaseDesigner(_DesignerMixin, BaseEstimator):
    """Uniformly random phases; beamformers optimized with phases frozen."""

    def __init__(self, max_outer_iters=50, outer_tol=1e-4, mu_tol=1e-9,
                 phase_mode="auto", phase_bits=None, rng_seed=0):
        self.max_outer_iters = max_outer_iters
        self.outer_tol = outer_tol
        self.mu_tol = mu_tol
        self.phase_mode = phase_mode
        self.phase_bits = phase_bits
        self.rng_seed = rng_seed

    def _design(self, channels):
        opts = self._options()
        rng = np.random.default_rng(opts.rng_seed)
        codebook = _resolve_phase_setup(channels.config, opts)
        theta = initial_theta(channels.config, codebook, rng)
        return solve(channels, opts=opts, model="practical",
                     theta0=theta, freeze_theta=True)


class DirectLinkDesigner(_DesignerMixin, BaseEstimator):
    """Beamforming on the direct link only; the reflected path is removed."""

    def __init__(self, max_outer_iters=50, outer_tol=1e-4, mu_tol=1e-9, rng_seed=0):
        self.max_outer_iters = max_outer_iters
        self.outer_tol = outer_tol
        self.mu_tol = mu_tol
        self.rng_seed = rng_seed

    def _design(self, channels):
        return solve(channels, opts=self._options(), model="none")

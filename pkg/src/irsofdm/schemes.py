"""Comparison schemes: joint designs under different element models.

Every scheme produces a Solution; scoring always happens through
:func:`evaluate_solution`, which rebuilds the reflections with the
practical frequency-dependent model (or removes the reflected path for
the direct-link-only scheme), so cross-scheme numbers share one
evaluation path regardless of what the designer assumed.

Closed form used by the ideal-model phase update: with unit-modulus
frequency-flat reflections, the per-element objective reduces to
sum_i 2 Re{r_i e^{-j theta}} + const = 2 |sum_i r_i| cos(angle(sum r) - theta)
+ const, minimized at theta = angle(sum_i r_i) + pi (wrapped); for a zero
residual sum the angle is taken as 0, giving theta = pi.
"""

import numpy as np

from .channel import ChannelSet
from .metrics import Solution, average_sum_rate
from .solver import SolverOptions, solve, initial_theta, _resolve_phase_setup

SCHEME_TAGS = ("proposed", "ideal", "amplitude_only", "random_theta", "no_irs")


def design_proposed(channels: ChannelSet, opts: SolverOptions | None = None):
    """Joint design under the practical frequency-dependent element model."""
    return solve(channels, opts=opts, model="practical")


def design_ideal(channels: ChannelSet, opts: SolverOptions | None = None):
    """Joint design assuming ideal unit-modulus, frequency-flat elements."""
    return solve(channels, opts=opts, model="ideal")


def design_amplitude_only(channels: ChannelSet, opts: SolverOptions | None = None):
    """Joint design with the fitted amplitude at the carrier but no squint."""
    return solve(channels, opts=opts, model="amplitude_only")


def design_random_theta(channels: ChannelSet, opts: SolverOptions | None = None,
                        seed=None):
    """Random phases, beamformers still optimized under the practical model."""
    opts = opts or SolverOptions()
    rng = np.random.default_rng(opts.rng_seed if seed is None else seed)
    codebook = _resolve_phase_setup(channels.config, opts)
    theta = initial_theta(channels.config, codebook, rng)
    return solve(channels, opts=opts, model="practical",
                 theta0=theta, freeze_theta=True)


def design_no_irs(channels: ChannelSet, opts: SolverOptions | None = None):
    """Direct link only: the reflected path is removed entirely."""
    return solve(channels, opts=opts, model="none")


DESIGNERS = {
    "proposed": design_proposed,
    "ideal": design_ideal,
    "amplitude_only": design_amplitude_only,
    "random_theta": design_random_theta,
    "no_irs": design_no_irs,
}


def run_scheme(tag: str, channels: ChannelSet, opts: SolverOptions | None = None):
    """Design with the named scheme; returns (Solution, trace)."""
    try:
        designer = DESIGNERS[tag]
    except KeyError:
        raise ValueError(f"unknown scheme {tag!r}; expected one of {SCHEME_TAGS}") from None
    return designer(channels, opts)


def evaluate_solution(channels: ChannelSet, solution: Solution, noise_w=None) -> float:
    """Average sum-rate of a design under the practical element model.

    A design tagged ``none`` (direct link only) keeps its zeroed
    reflected path; every other design is re-evaluated with practical
    reflections, whatever model it was optimized under.
    """
    tag = "none" if solution.model_tag == "none" else "practical"
    scored = Solution(weights=solution.weights, theta=solution.theta, model_tag=tag)
    return average_sum_rate(channels, scored, noise_w)

"""Estimator-API tests: sklearn conventions over the designers."""

import numpy as np
import pytest
from sklearn.base import clone

from irsofdm.estimators import (DirectLinkDesigner, JointBeamformingDesigner,
                                RandomPhaseDesigner)
from irsofdm.schemes import evaluate_solution


class TestSklearnSurface:
    def test_get_set_params_round_trip(self):
        est = JointBeamformingDesigner(model="ideal", rng_seed=7, golden_eps=1e-5)
        params = est.get_params()
        assert params["model"] == "ideal"
        assert params["golden_eps"] == 1e-5
        est.set_params(model="practical", max_outer_iters=3)
        assert est.model == "practical"
        assert est.max_outer_iters == 3

    def test_clone_preserves_params(self):
        est = RandomPhaseDesigner(rng_seed=3, phase_mode="discrete", phase_bits=2)
        twin = clone(est)
        assert twin.get_params() == est.get_params()

    def test_requires_channelset(self):
        with pytest.raises(TypeError):
            DirectLinkDesigner().fit(np.zeros((4, 4)))

    def test_score_before_fit_raises(self, tiny_channels):
        with pytest.raises(RuntimeError):
            JointBeamformingDesigner().score(tiny_channels)


class TestFitting:
    def test_fit_populates_attributes(self, tiny_channels):
        est = JointBeamformingDesigner(rng_seed=1, max_outer_iters=10)
        assert est.fit(tiny_channels) is est
        assert est.solution_.total_power() <= tiny_channels.config.power_w + 1e-8
        assert est.n_iter_ <= 10
        assert est.trace_.shape == (est.n_iter_ + 1,)
        assert est.rate_ == pytest.approx(evaluate_solution(tiny_channels, est.solution_))

    def test_score_matches_common_evaluation(self, tiny_channels):
        est = JointBeamformingDesigner(model="ideal", rng_seed=2).fit(tiny_channels)
        assert est.score() == pytest.approx(
            evaluate_solution(tiny_channels, est.solution_))
        assert est.score(tiny_channels) == est.score()

    def test_deterministic_given_seed(self, tiny_channels):
        a = JointBeamformingDesigner(rng_seed=5).fit(tiny_channels)
        b = JointBeamformingDesigner(rng_seed=5).fit(tiny_channels)
        assert a.rate_ == b.rate_
        assert np.array_equal(a.solution_.theta, b.solution_.theta)

    def test_direct_link_designer_ignores_surface(self, tiny_channels):
        est = DirectLinkDesigner(rng_seed=0).fit(tiny_channels)
        assert est.solution_.model_tag == "none"

    def test_random_phase_designer_discrete(self, tiny_channels):
        est = RandomPhaseDesigner(rng_seed=4, phase_mode="discrete",
                                  phase_bits=2).fit(tiny_channels)
        from irsofdm.reflection import PhaseCodebook
        allowed = set(np.round(PhaseCodebook(2).values, 12).tolist())
        assert set(np.round(est.solution_.theta, 12).tolist()) <= allowed

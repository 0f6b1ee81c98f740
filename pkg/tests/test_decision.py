# -*- coding: utf-8 -*-

import sys
import os
import inspect

import numpy as np
import pytest

path = os.path.abspath(
    os.path.split(inspect.getfile( inspect.currentframe() ))[0])
sys.path.insert(0, os.path.split(path)[0])

from bitslab import ConfigError, Error, stats
from bitslab.gibbs.draws import PosteriorDraws
from bitslab.model import BidGrid, ContextSpec, ModelParams
from bitslab.policies import decision
from bitslab.policies.decision import OptimalityProfile, StoppingState


def spa_theta():
    return ModelParams([ 0.809 ], [ 0.22 ], [ 0.4 ], 0.49, 0.81, 0.25)


def fpa_theta():
    return ModelParams([ 0.736 ], [ 0.22 ], [ 0.481 ], 0.49, 0.81, 1.0)


def point_draws(theta, m=50):
    """Posterior collapsed on theta"""
    return PosteriorDraws.from_params([ theta ] * m)


class TestOptimalityProfile:

    def test_uniform(self):
        profile = OptimalityProfile.uniform(BidGrid([ [ 0.6, 1.0, 1.5 ] ]))
        assert np.allclose(profile.probabilities[0], 1.0 / 3)
        assert profile.max_probability().tolist() == [ pytest.approx(1 / 3) ]

    def test_must_sum_to_one(self):
        with pytest.raises(Error):
            OptimalityProfile([ [ 0.6, 1.0 ] ], [ [ 0.5, 0.6 ] ])

    def test_arm_count_must_match(self):
        with pytest.raises(Error):
            OptimalityProfile([ [ 0.6, 1.0 ] ], [ [ 1.0 ] ])

    def test_committed_off_grid(self):
        profile = OptimalityProfile.committed([ 0.97, 1.52 ])
        assert profile.context_count == 2
        assert profile.mass_on(0, 0.97) == 1.0
        assert profile.mass_on(0, 1.0) == 0.0


class TestAllocation:

    def test_frequencies_follow_profile(self):
        profile = OptimalityProfile([ [ 0.6, 1.0, 1.5 ] ],
                                    [ [ 0.2, 0.5, 0.3 ] ])
        bids, arms = decision.allocate_bids(profile, np.zeros(30000, int),
                                            stats.make_rng(1))
        freq = np.bincount(arms, minlength=3) / 30000.0
        assert np.allclose(freq, [ 0.2, 0.5, 0.3 ], atol=0.015)
        assert np.array_equal(bids, np.array([ 0.6, 1.0, 1.5 ])[arms])

    def test_per_context_grids(self):
        profile = OptimalityProfile([ [ 0.5 ], [ 2.0 ] ], [ [ 1.0 ], [ 1.0 ] ])
        bids, _ = decision.allocate_bids(profile, [ 0, 1, 1, 0 ],
                                         stats.make_rng(1))
        assert bids.tolist() == [ 0.5, 2.0, 2.0, 0.5 ]


class TestOptimalityProbabilities:

    def test_point_posterior_spa(self):
        grid = BidGrid([ [ 0.6, 1.0, 1.5 ] ])
        profile = decision.optimality_probabilities(
            point_draws(spa_theta()), grid, 'spa')
        assert profile.probabilities[0].tolist() == [ 0.0, 1.0, 0.0 ]

    def test_point_posterior_fpa(self):
        grid = BidGrid([ [ 0.1, 0.5, 1.0 ] ])
        profile = decision.optimality_probabilities(
            point_draws(fpa_theta()), grid, 'fpa')
        assert profile.probabilities[0].tolist() == [ 0.0, 1.0, 0.0 ]

    def test_split_posterior(self):
        # three quarters of the draws favour 0.6, the rest 1.5
        low = spa_theta().replace(delta1=[ 0.45 ])
        high = spa_theta().replace(delta1=[ 1.15 ])
        draws = PosteriorDraws.from_params([ low ] * 30 + [ high ] * 10)
        profile = decision.optimality_probabilities(
            draws, BidGrid([ [ 0.6, 1.0, 1.5 ] ]), 'spa')
        assert profile.probabilities[0][0] == 0.75
        assert profile.probabilities[0][2] == 0.25

    def test_no_draws(self):
        with pytest.raises(Error):
            decision.optimality_probabilities(
                PosteriorDraws(1), BidGrid([ [ 1.0 ] ]), 'spa')

    def test_payoff_matrix_shape(self):
        matrix = decision.payoff_matrix(point_draws(spa_theta(), 7),
                                        [ 0.6, 1.0, 1.5 ], 0, 'spa')
        assert matrix.shape == (7, 3)

    def test_model_payoff_is_truth_at_truth(self):
        theta = spa_theta()
        from bitslab import env
        assert decision.expected_payoff_model('spa', 1.0, 0, theta) == \
            env.expected_payoff_true('spa', 1.0, 0, theta)

    def test_scaling_payoffs_keeps_profile(self, monkeypatch):
        rng = stats.make_rng(17)
        draws = PosteriorDraws.from_params([
            spa_theta().replace(delta1=[ d1 ], delta_cp=[ dcp ])
            for d1, dcp in zip(rng.normal(0.8, 0.3, size=200),
                               rng.normal(0.4, 0.1, size=200)) ])
        grid = BidGrid([ [ 0.6, 1.0, 1.5 ] ])
        before = decision.optimality_probabilities(draws, grid, 'spa')

        payoff_matrix = decision.payoff_matrix
        monkeypatch.setattr(decision, 'payoff_matrix',
                            lambda *args: 4.0 * payoff_matrix(*args))
        after = decision.optimality_probabilities(draws, grid, 'spa')
        assert after.probabilities[0].tolist() == \
            before.probabilities[0].tolist()
        assert before.max_probability()[0] < 1.0


class TestCateReadouts:

    def test_spa_weighted_bid(self):
        profile = OptimalityProfile([ [ 0.6, 1.0, 1.5 ] ],
                                    [ [ 0.1, 0.8, 0.1 ] ])
        assert decision.estimate_cate_spa(profile)[0] == pytest.approx(1.01)

    def test_chi_hat_at_truth(self):
        value = decision.chi_hat(0.5, 0, point_draws(fpa_theta()))
        assert abs(value - 0.8) < 1e-3

    def test_chi_hat_rejects_zero_bid(self):
        with pytest.raises(Error):
            decision.chi_hat(0.0, 0, point_draws(fpa_theta()))

    def test_chi_hat_strictly_increasing(self):
        rng = stats.make_rng(19)
        draws = PosteriorDraws.from_params([
            fpa_theta().replace(delta_cp=[ dcp ])
            for dcp in rng.normal(0.481, 0.2, size=100) ])
        values = decision.chi_hat(np.linspace(0.01, 3.0, 1000), 0, draws)
        assert np.all(np.diff(values) > 0)

    def test_fpa_readout_with_zero_bid(self):
        profile = OptimalityProfile([ [ 0.0, 0.5 ] ], [ [ 0.5, 0.5 ] ])
        estimate = decision.estimate_cate_fpa(profile,
                                              point_draws(fpa_theta()))
        assert abs(estimate[0] - 0.4) < 1e-3


class TestStopping:

    def profile(self, psi):
        return OptimalityProfile([ [ 0.6, 1.0, 1.5 ] ], [ psi ])

    def test_rounds(self):
        spec = ContextSpec([ 1.0 ])
        state = decision.stopping_value(self.profile([ 0, 1, 0 ]), 'rounds',
                                        spec, None, 'spa', 100, 100)
        assert state.stop
        state = decision.stopping_value(self.profile([ 0, 1, 0 ]), 'rounds',
                                        spec, None, 'spa', 99, 100)
        assert not state.stop

    def test_noncontextual_is_strict(self):
        spec = ContextSpec([ 1.0 ])
        state = decision.stopping_value(self.profile([ 0.05, 0.95, 0.0 ]),
                                        'noncontextual', spec, None, 'spa',
                                        3, 0.95)
        assert state.value == pytest.approx(0.95)
        assert not StoppingState(0.95, 0.95, 'noncontextual').stop
        assert StoppingState(0.96, 0.95, 'noncontextual').stop

    def test_posterior_odds(self):
        spec = ContextSpec([ 1.0 ])
        state = decision.stopping_value(self.profile([ 0.0, 0.96, 0.04 ]),
                                        'posterior_odds', spec, None, 'spa',
                                        3, 19.0)
        assert state.value == pytest.approx(24.0)
        assert state.stop
        certain = decision.stopping_value(self.profile([ 0, 1, 0 ]),
                                          'posterior_odds', spec, None,
                                          'spa', 3, 19.0)
        assert certain.value == np.inf

    def test_single_context_modes(self):
        profile = OptimalityProfile([ [ 1.0 ], [ 2.0 ] ], [ [ 1.0 ], [ 1.0 ] ])
        with pytest.raises(ConfigError):
            decision.stopping_value(profile, 'noncontextual',
                                    ContextSpec.uniform(2), None, 'spa', 1,
                                    0.95)

    def test_contextual_min(self):
        profile = OptimalityProfile([ [ 1.0, 2.0 ], [ 1.0, 2.0 ] ],
                                    [ [ 0.99, 0.01 ], [ 0.4, 0.6 ] ])
        state = decision.stopping_value(profile, 'contextual_min',
                                        ContextSpec.uniform(2), None, 'spa',
                                        1, 0.95)
        assert state.value == pytest.approx(0.6)

    def test_unknown_mode(self):
        with pytest.raises(ConfigError):
            StoppingState(1.0, 1.0, 'forever')

    def test_ate_grid_groups_equal_values(self):
        mass = decision.ate_grid_mass(
            [ [ 1.0, 2.0 ], [ 1.0, 2.0 ] ], [ [ 0.5, 0.5 ], [ 0.5, 0.5 ] ],
            [ 0.5, 0.5 ], 1e-9)
        # 1.5 is reached by two combinations
        assert mass == pytest.approx(0.5)

    def test_ate_grid_spa_stopping(self):
        profile = OptimalityProfile([ [ 1.0, 2.0 ], [ 1.0, 2.0 ] ],
                                    [ [ 0.0, 1.0 ], [ 1.0, 0.0 ] ])
        state = decision.stopping_value(profile, 'ate_grid',
                                        ContextSpec.uniform(2), None, 'spa',
                                        1, 0.95)
        assert state.value == pytest.approx(1.0)
        assert state.stop

    def test_ate_grid_fpa_needs_draws(self):
        with pytest.raises(Error):
            decision.stopping_value(self.profile([ 0, 1, 0 ]), 'ate_grid',
                                    ContextSpec([ 1.0 ]), None, 'fpa', 1,
                                    0.95)

    def test_ate_grid_combination_cap(self):
        labels = [ list(range(10)) ] * 4
        psi = [ [ 0.1 ] * 10 ] * 4
        with pytest.raises(Error):
            decision.ate_grid_mass(labels, psi, [ 0.25 ] * 4, 1e-9,
                                   max_combinations=1000)

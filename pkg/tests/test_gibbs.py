# -*- coding: utf-8 -*-

import sys
import os
import inspect

import numpy as np
import pytest

path = os.path.abspath(
    os.path.split(inspect.getfile( inspect.currentframe() ))[0])
sys.path.insert(0, os.path.split(path)[0])

from bitslab import DataError, Error, NumericalError, env, gibbs, stats
from bitslab.gibbs import diagnostics
from bitslab.gibbs.conditionals import augment_missing, equation_posterior
from bitslab.gibbs.draws import CompletedDataset, PosteriorDraws
from bitslab.model import (AuctionData, EquationPrior, ModelParams,
                           PriorParams)


def spa_theta():
    return ModelParams([ 0.809 ], [ 0.22 ], [ 0.4 ], 0.49, 0.81, 0.25)


def fpa_theta():
    return ModelParams([ 0.736 ], [ 0.22 ], [ 0.481 ], 0.49, 0.81, 1.0)


def simulate(theta, fmt, n, grid, seed, P=1, contexts=None):
    rng = stats.make_rng(seed)
    if contexts is None:
        contexts = rng.integers(P, size=n)
    bids = rng.choice(grid, size=n)
    y1, y0, b_cp = env.draw_units(theta, contexts, rng)
    win, outcome, cp_value, cp_code, _ = env.resolve_auctions(
        fmt, bids, y1, y0, b_cp)
    data = AuctionData(theta.context_count)
    data.extend(bids, contexts, win, outcome, cp_value, cp_code)
    return data


class TestAugmentation:

    def test_imputed_bids_respect_bounds(self):
        data = simulate(fpa_theta(), 'fpa', 2000, [ 0.1, 0.5, 1.0 ], 1)
        completed = augment_missing(data, fpa_theta(), 'fpa',
                                    stats.make_rng(2))
        log_bid = np.log(data.bid)
        assert np.all(completed.log_cp[data.win] <= log_bid[data.win])
        assert np.all(completed.log_cp[~data.win] > log_bid[~data.win])

    def test_observed_outcomes_kept(self):
        data = simulate(spa_theta(), 'spa', 500, [ 0.6, 1.0, 1.5 ], 3)
        completed = augment_missing(data, spa_theta(), 'spa',
                                    stats.make_rng(4))
        log_y = np.log(data.outcome)
        assert np.array_equal(completed.log_y1[data.win], log_y[data.win])
        assert np.array_equal(completed.log_y0[~data.win],
                              log_y[~data.win])
        observed = data.observed_cp
        assert np.allclose(completed.log_cp[observed],
                           np.log(data.cp_value[observed]))

    def test_bound_violation_detected(self):
        completed = CompletedDataset(
            np.zeros(1, int), 1, np.array([ False ]), np.array([ 0.0 ]),
            np.array([ 0.0 ]), np.array([ 0.0 ]), np.array([ -0.1 ]),
            np.array([ True ]), np.array([ False ]))
        with pytest.raises(NumericalError):
            completed.check_bounds()


class TestEquationPosterior:

    def test_flat_prior_gives_group_means(self):
        y = np.array([ 1.0, 2.0, 3.0, 10.0, 12.0 ])
        ctx = np.array([ 0, 0, 0, 1, 1 ])
        post = equation_posterior(y, ctx, 2, EquationPrior.uninformative(2))
        assert np.allclose(post['mean'], [ 2.0, 11.0 ])
        assert post['shape'] == 2.5
        assert np.isclose(post['rate'], 0.5 * (2.0 + 2.0))

    def test_empty_context_falls_back_to_prior_mean(self):
        y = np.array([ 1.0, 2.0 ])
        ctx = np.array([ 0, 0 ])
        prior = EquationPrior(0.0, 0.0, [ 0.0, 0.7 ], np.zeros((2, 2)))
        post = equation_posterior(y, ctx, 2, prior)
        assert np.isclose(post['mean'][1], 0.7)
        assert post['V'][1, 1] > 1e5

    def test_informative_prior_shrinks(self):
        y = np.array([ 1.0, 1.0 ])
        ctx = np.array([ 0, 0 ])
        prior = EquationPrior(1.0, 1.0, [ 0.0 ], [ [ 2.0 ] ])
        post = equation_posterior(y, ctx, 1, prior)
        assert np.isclose(post['mean'][0], 0.5)


class TestRunGibbs:

    def test_spa_recovers_truth(self):
        data = simulate(spa_theta(), 'spa', 5000, [ 0.6, 1.0, 1.5 ], 5)
        draws = gibbs.run_gibbs(data, PriorParams.uninformative(1),
                                ModelParams.initial(1), 400, 'spa',
                                stats.make_rng(6), burn_in=200,
                                thinning=5)
        assert len(draws) == 40
        mean = draws.mean()
        assert abs(mean.delta1[0] - 0.809) < 0.05
        assert abs(mean.delta0[0] - 0.22) < 0.05
        assert abs(mean.delta_cp[0] - 0.4) < 0.03
        assert abs(mean.sigma_cp_sq - 0.25) < 0.03
        assert abs(np.mean(draws.cate(0)) - 1.0) < 0.15

    def test_fpa_keeps_unit_variance(self):
        data = simulate(fpa_theta(), 'fpa', 3000, [ 0.1, 0.5, 1.0 ], 7)
        draws = gibbs.run_gibbs(data, PriorParams.uninformative(1),
                                ModelParams.initial(1), 300, 'fpa',
                                stats.make_rng(8))
        draws.check_format('fpa')
        assert np.all(draws.sigma_cp_sq == 1.0)
        assert abs(draws.mean().delta_cp[0] - 0.481) < 0.1

    def test_retention_rule(self):
        data = simulate(spa_theta(), 'spa', 200, [ 0.6, 1.0, 1.5 ], 9)
        draws = gibbs.run_gibbs(data, PriorParams.uninformative(1),
                                ModelParams.initial(1), 100, 'spa',
                                stats.make_rng(10), burn_in=50,
                                thinning=10)
        # sweeps 60, 70, 80, 90, 100
        assert len(draws) == 5

    def test_empty_context_stays_finite(self):
        theta = ModelParams([ 0.809, 0.809 ], [ 0.22, 0.22 ], [ 0.4, 0.4 ],
                            0.49, 0.81, 0.25)
        data = simulate(theta, 'spa', 300, [ 0.6, 1.0, 1.5 ], 11,
                        contexts=np.zeros(300, dtype=int))
        draws = gibbs.run_gibbs(data, PriorParams.uninformative(2),
                                ModelParams.initial(2), 60, 'spa',
                                stats.make_rng(12))
        assert np.all(np.isfinite(draws.delta1))

    def test_same_seed_same_draws(self):
        data = simulate(spa_theta(), 'spa', 300, [ 0.6, 1.0, 1.5 ], 13)
        runs = [ gibbs.run_gibbs(data, PriorParams.uninformative(1),
                                 ModelParams.initial(1), 60, 'spa',
                                 stats.make_rng(14)) for _ in range(2) ]
        assert np.array_equal(runs[0].delta1, runs[1].delta1)

    def test_no_data(self):
        with pytest.raises(DataError):
            gibbs.run_gibbs(AuctionData(1), PriorParams.uninformative(1),
                            ModelParams.initial(1), 100, 'spa',
                            stats.make_rng(1))

    def test_too_few_sweeps(self):
        data = simulate(spa_theta(), 'spa', 50, [ 1.0 ], 1)
        with pytest.raises(Error):
            gibbs.run_gibbs(data, PriorParams.uninformative(1),
                            ModelParams.initial(1), 5, 'spa',
                            stats.make_rng(1))

    def test_correlated_sampler(self):
        theta = spa_theta().replace(rho=0.5)
        data = simulate(theta, 'spa', 3000, [ 0.6, 1.0, 1.5 ], 15)
        settings = gibbs.GibbsSettings(draws=200, burn_in=100, thinning=5,
                                       rho_mode='correlated')
        draws = gibbs.sample_posterior(
            data, PriorParams.uninformative(1, correlated=True),
            ModelParams.initial(1), settings, 'spa', stats.make_rng(16))
        assert len(draws) == settings.retained
        assert np.all(np.abs(draws.rho) < 1.0)
        assert abs(draws.mean().delta1[0] - 0.809) < 0.08


class TestGibbsSettings:

    def test_defaults(self):
        settings = gibbs.GibbsSettings()
        assert settings.burn_in == 500
        assert settings.retained == 50

    @pytest.mark.parametrize('kwargs', [
        { 'draws': 10 },
        { 'draws': 100, 'burn_in': 100 },
        { 'draws': 100, 'thinning': 200 },
        { 'init': 'random' },
        { 'rho_mode': 'full' },
    ])
    def test_invalid(self, kwargs):
        with pytest.raises(Error):
            gibbs.GibbsSettings(**kwargs)

    def test_unknown_option(self):
        with pytest.raises(Error):
            gibbs.GibbsSettings.from_config_dict({ 'chains': 4 })


class TestPosteriorDraws:

    def test_rejects_non_positive_variance(self):
        draws = PosteriorDraws(1)
        theta = spa_theta()
        theta.sigma1_sq = 0.0
        with pytest.raises(NumericalError):
            draws.append(theta)

    def test_columns(self):
        draws = PosteriorDraws.from_params([ spa_theta(), spa_theta() ])
        assert draws.delta1.shape == (2, 1)
        assert draws.sigma1_sq.shape == (2,)
        assert np.allclose(draws.cate(0), draws.cate(0)[0])


class TestDiagnostics:

    def test_conjugacy(self):
        rows = diagnostics.conjugacy_check(spa_theta(), 2000, 400, 'spa',
                                           stats.make_rng(21))
        assert len(rows) == 6
        assert max(abs(r['z']) for r in rows) < 4.5

    def test_conjugacy_fpa_skips_fixed_variance(self):
        rows = diagnostics.conjugacy_check(fpa_theta(), 1000, 200, 'fpa',
                                           stats.make_rng(22))
        assert len(rows) == 5

    def test_exact_posterior(self):
        y = np.array([ 1.0, 3.0 ])
        post = diagnostics.exact_normal_gamma_posterior(
            y, np.zeros(2, int), 1, EquationPrior.uninformative(1))
        assert np.allclose(post['delta_mean'], [ 2.0 ])
        assert np.isclose(post['precision_mean'], 1.0)

    def test_calibration_ranks_uniform(self):
        ranks, retained = diagnostics.calibration_ranks(
            40, 80, 'spa', stats.make_rng(23), Q=100, thinning=10)
        assert retained == 5
        for name, values in ranks.items():
            assert values.size == 40
            assert values.min() >= 0 and values.max() <= retained
            assert diagnostics.rank_uniformity_pvalue(values,
                                                      retained) > 1e-3

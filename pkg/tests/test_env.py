# -*- coding: utf-8 -*-

import sys
import os
import inspect

import numpy as np
import pytest

path = os.path.abspath(
    os.path.split(inspect.getfile( inspect.currentframe() ))[0])
sys.path.insert(0, os.path.split(path)[0])

from bitslab import Error, env, stats
from bitslab.model import (AuctionData, BidGrid, ModelParams, chi,
                           true_cate)


def spa_theta():
    return ModelParams([ 0.809 ], [ 0.22 ], [ 0.4 ], 0.49, 0.81, 0.25)


def fpa_theta():
    return ModelParams([ 0.736 ], [ 0.22 ], [ 0.481 ], 0.49, 0.81, 1.0)


def spa_ctxt_theta():
    return ModelParams([ 0.81, 1.04, 1.25, 1.43, 1.57 ],
                       [ 0.20, 0.31, 0.45, 0.59, 0.70 ],
                       [ 0.25, 0.33, 0.40, 0.47, 0.55 ], 0.36, 0.64, 0.25)


def fpa_ctxt_theta():
    return ModelParams([ 0.65, 0.75, 0.85, 0.95, 1.05 ],
                       [ 0.20, 0.30, 0.40, 0.50, 0.60 ],
                       [ -1.38, -0.50, 0.20, 0.80, 1.31 ], 1.44, 1.21, 1.0)


class TestResolveAuctions:

    def batch(self, fmt, disclosure='censored'):
        bids = np.array([ 1.0, 1.0, 0.5 ])
        y1 = np.array([ 3.0, 3.0, 3.0 ])
        y0 = np.array([ 2.0, 2.0, 2.0 ])
        b_cp = np.array([ 0.7, 1.4, 0.5 ])
        return env.resolve_auctions(fmt, bids, y1, y0, b_cp, disclosure)

    def test_spa_censoring(self):
        win, outcome, cp_value, cp_code, payoff = self.batch('spa')
        # ties go to the experimenting bidder
        assert win.tolist() == [ True, False, True ]
        assert outcome.tolist() == [ 3.0, 2.0, 3.0 ]
        assert cp_value.tolist() == [ 0.7, 1.0, 0.5 ]
        assert payoff.tolist() == [ 3.0 - 0.7, 2.0, 3.0 - 0.5 ]

    def test_spa_full_disclosure(self):
        _, _, cp_value, cp_code, _ = self.batch('spa', 'full')
        assert cp_value.tolist() == [ 0.7, 1.4, 0.5 ]
        assert set(cp_code.tolist()) == { 0 }

    def test_fpa_pays_own_bid(self):
        win, _, cp_value, _, payoff = self.batch('fpa')
        assert payoff.tolist() == [ 2.0, 2.0, 2.5 ]
        assert cp_value.tolist() == [ 1.0, 1.0, 0.5 ]

    def test_fpa_full_disclosure_refused(self):
        with pytest.raises(Error):
            self.batch('fpa', 'full')

    def test_rows_validate(self):
        for fmt in [ 'spa', 'fpa' ]:
            rng = stats.make_rng(2)
            theta = spa_theta() if fmt == 'spa' else fpa_theta()
            contexts = np.zeros(500, dtype=int)
            y1, y0, b_cp = env.draw_units(theta, contexts, rng)
            bids = rng.choice([ 0.1, 0.5, 1.0, 1.5 ], size=500)
            win, outcome, cp_value, cp_code, _ = env.resolve_auctions(
                fmt, bids, y1, y0, b_cp)
            data = AuctionData(1)
            data.extend(bids, contexts, win, outcome, cp_value, cp_code)
            data.validate(fmt)

    def test_single_auction(self):
        draw = env.PotentialDraw(3.0, 2.0, 0.7)
        obs, payoff = env.run_auction('spa', 1.0, draw)
        assert obs.win and obs.cp_kind == 'observed'
        assert payoff == pytest.approx(2.3)

    def test_negative_bid(self):
        with pytest.raises(Error):
            env.run_auction('spa', -1.0, env.PotentialDraw(1.0, 1.0, 1.0))


class TestDraws:

    def test_log_moments(self):
        rng = stats.make_rng(9)
        y1, y0, b_cp = env.draw_units(spa_theta(), np.zeros(50000, int), rng)
        assert abs(np.log(y1).mean() - 0.809) < 0.02
        assert abs(np.log(y0).var() - 0.81) < 0.03
        assert abs(np.log(b_cp).mean() - 0.4) < 0.01

    def test_correlated_outcomes(self):
        theta = spa_theta().replace(rho=0.6)
        y1, y0, _ = env.draw_units(theta, np.zeros(50000, int),
                                   stats.make_rng(4))
        corr = np.corrcoef(np.log(y1), np.log(y0))[0, 1]
        assert abs(corr - 0.6) < 0.02

    def test_competing_bid_independent_of_outcomes(self):
        n = 20000
        theta = spa_ctxt_theta().replace(rho=0.6)
        y1, y0, b_cp = env.draw_units(theta, np.full(n, 2),
                                      stats.make_rng(31))
        # within one context, correlation is 0 within 3 standard errors
        for y in [ y1, y0 ]:
            corr = np.corrcoef(np.log(b_cp), np.log(y))[0, 1]
            assert abs(corr) < 3.0 / np.sqrt(n)

    def test_realized_payoff_matches_closed_form(self):
        rng = stats.make_rng(12)
        theta = spa_theta()
        n = 200000
        y1, y0, b_cp = env.draw_units(theta, np.zeros(n, int), rng)
        _, _, _, _, payoff = env.resolve_auctions('spa', np.full(n, 1.0),
                                                  y1, y0, b_cp)
        expected = (env.expected_payoff_true('spa', 1.0, 0, theta)
                    + stats.lognormal_mean(0.22, 0.81))
        assert abs(payoff.mean() - expected) < 4 * payoff.std() / np.sqrt(n)


class TestOracle:

    @pytest.mark.parametrize('theta', [ fpa_theta(), fpa_ctxt_theta() ])
    def test_fpa_chi_strictly_increasing(self, theta):
        b = np.linspace(0.01, 3.0, 1000)
        for p in range(theta.context_count):
            values = chi(b, theta.delta_cp[p], np.sqrt(theta.sigma_cp_sq))
            assert np.all(np.diff(values) > 0)

    def test_spa_optimal_bid_is_cate(self):
        theta = spa_theta()
        assert env.optimal_bid_oracle('spa', 0, theta) == true_cate(theta, 0)

    def test_negative_cate_bids_zero(self):
        theta = spa_theta().replace(delta1=[ -1.0 ])
        for fmt in [ 'spa', 'fpa' ]:
            t = theta if fmt == 'spa' else theta.replace(sigma_cp_sq=1.0)
            assert env.optimal_bid_oracle(fmt, 0, t) == 0.0

    def test_fpa_chi_identity(self):
        theta = fpa_theta()
        b_star = env.optimal_bid_oracle('fpa', 0, theta)
        assert abs(float(chi(b_star, 0.481, 1.0))
                   - true_cate(theta, 0)) < 1e-6
        assert abs(b_star - 0.5) < 5e-3

    def test_spa_card(self):
        card = env.OracleCard('spa', spa_theta(),
                              BidGrid([ [ 0.6, 1.0, 1.5 ] ]))
        assert card.grid_bids[0][card.best_arm[0]] == 1.0
        assert card.optimal_payoff[0] >= card.grid_payoff[0].max()

    def test_fpa_card(self):
        card = env.OracleCard('fpa', fpa_theta(),
                              BidGrid([ [ 0.1, 0.5, 1.0 ] ]))
        assert card.grid_bids[0][card.best_arm[0]] == 0.5
        assert abs(card.ate([ 1.0 ]) - 0.8) < 1e-2

    def test_spa_contextual_cates(self):
        theta = spa_ctxt_theta()
        cates = [ true_cate(theta, p) for p in range(5) ]
        assert np.allclose(cates, [ 1.0, 1.5, 2.0, 2.5, 3.0 ], atol=0.05)

    def test_fpa_contextual_optimal_bids(self):
        theta = fpa_ctxt_theta()
        bids = [ env.optimal_bid_oracle('fpa', p, theta) for p in range(5) ]
        assert np.allclose(bids, [ 0.5, 0.75, 1.0, 1.25, 1.5 ], atol=0.02)

    def test_card_contexts_must_match(self):
        with pytest.raises(Error):
            env.OracleCard('spa', spa_theta(),
                           BidGrid([ [ 1.0 ], [ 1.0 ] ]))

    def test_card_to_dict(self):
        card = env.OracleCard('spa', spa_theta(),
                              BidGrid([ [ 0.6, 1.0, 1.5 ] ])).to_dict()
        assert card['format'] == 'spa'
        assert card['contexts'][0]['context'] == 1
        assert card['contexts'][0]['best_arm_bid'] == 1.0

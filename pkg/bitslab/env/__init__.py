# -*- coding: utf-8 -*-

"""Ground-truth data generating process and auction mechanics"""

import logging

import numpy as np
import scipy.optimize

from bitslab import ConvergenceError, Error
from bitslab.model import (AuctionFormat, AuctionObservation, CP_LOWER,
                           CP_OBSERVED, CP_UPPER, chi, expected_payoff,
                           true_cate)
from bitslab.model.data import CP_KINDS


__all__ = [
    'PotentialDraw',
    'draw_unit',
    'draw_units',
    'run_auction',
    'resolve_auctions',
    'expected_payoff_true',
    'optimal_bid_oracle',
    'OracleCard',
    'DISCLOSURE_OPTIONS',
]

LOG = logging.getLogger(__name__)
LOG.addHandler(logging.NullHandler())

# bracket and tolerance of the FPA first-order condition solve
ORACLE_BID_LOWER = 1e-6
ORACLE_BID_XTOL = 1e-8
ORACLE_MAX_ITER = 400

# "censored": SPA losers only learn that the competing bid exceeded theirs
# "full": SPA competing bids are disclosed after every auction
DISCLOSURE_OPTIONS = [ 'censored', 'full' ]


class PotentialDraw:

    """Potential outcomes and highest competing bid of one impression"""

    def __init__(self, y1, y0, b_cp, context=0):
        for name, value in [ ('y1', y1), ('y0', y0), ('b_cp', b_cp) ]:
            if not value > 0:
                log_msg = '{} "{}" must be positive'.format(name, value)
                LOG.error(log_msg)
                raise Error(log_msg)

        self.y1 = float(y1)
        self.y0 = float(y0)
        self.b_cp = float(b_cp)
        self.context = int(context)

    def __repr__(self):
        return 'PotentialDraw(y1={}, y0={}, b_cp={}, context={})'.format(
            self.y1, self.y0, self.b_cp, self.context)


def draw_units(theta, contexts, rng):
    """Vectorized draws for a batch of impressions

    args:
        theta: ModelParams, ground truth
        contexts: int array of 0-based contexts
        rng: numpy Generator

    returns:
        (y1, y0, b_cp) arrays
    """
    contexts = np.asarray(contexts, dtype=int)
    z = rng.standard_normal(size=(contexts.size, 3))

    rho = theta.rho
    sd1 = np.sqrt(theta.sigma1_sq)
    sd0 = np.sqrt(theta.sigma0_sq)
    sd_cp = np.sqrt(theta.sigma_cp_sq)

    log_y1 = theta.delta1[contexts] + sd1 * z[:, 0]
    log_y0 = theta.delta0[contexts] + sd0 * (
        rho * z[:, 0] + np.sqrt(1.0 - rho * rho) * z[:, 1])
    log_cp = theta.delta_cp[contexts] + sd_cp * z[:, 2]

    return np.exp(log_y1), np.exp(log_y0), np.exp(log_cp)


def draw_unit(theta, p, rng):
    """Draw the potential outcomes and competing bid of one impression"""
    y1, y0, b_cp = draw_units(theta, [ p ], rng)
    return PotentialDraw(y1[0], y0[0], b_cp[0], context=p)


def resolve_auctions(auction_format, bids, y1, y0, b_cp,
                     disclosure='censored'):
    """Resolve a batch of auctions

    returns:
        (win, outcome, cp_value, cp_code, payoff) arrays
    """
    auction_format = AuctionFormat.parse(auction_format)
    if disclosure not in DISCLOSURE_OPTIONS:
        log_msg = ('disclosure "{}" must be one of {}'
                   .format(disclosure, DISCLOSURE_OPTIONS))
        LOG.error(log_msg)
        raise Error(log_msg)

    bids = np.asarray(bids, dtype=float)
    if np.any(~(bids >= 0)):
        log_msg = 'bids must be non-negative'
        LOG.error(log_msg)
        raise Error(log_msg)

    win = b_cp <= bids
    outcome = np.where(win, y1, y0)

    observed = CP_KINDS.index(CP_OBSERVED)
    lower = CP_KINDS.index(CP_LOWER)
    upper = CP_KINDS.index(CP_UPPER)

    if auction_format is AuctionFormat.SPA:
        payoff = np.where(win, y1 - b_cp, y0)
        if disclosure == 'full':
            cp_value = b_cp.copy()
            cp_code = np.full(bids.size, observed, dtype=np.int8)
        else:
            cp_value = np.where(win, b_cp, bids)
            cp_code = np.where(win, observed, lower).astype(np.int8)
    else:
        if disclosure != 'censored':
            log_msg = 'FPA only supports censored competing bids'
            LOG.error(log_msg)
            raise Error(log_msg)
        payoff = np.where(win, y1 - bids, y0)
        cp_value = bids.copy()
        cp_code = np.where(win, upper, lower).astype(np.int8)

    return win, outcome, cp_value, cp_code, payoff


def run_auction(auction_format, b, draw, disclosure='censored'):
    """Resolve a single auction

    returns:
        (AuctionObservation, realized payoff)
    """
    if not b >= 0:
        log_msg = 'bid "{}" must be non-negative'.format(b)
        LOG.error(log_msg)
        raise Error(log_msg)

    win, outcome, cp_value, cp_code, payoff = resolve_auctions(
        auction_format, np.array([ b ]), np.array([ draw.y1 ]),
        np.array([ draw.y0 ]), np.array([ draw.b_cp ]), disclosure)

    obs = AuctionObservation(b, draw.context, win[0], outcome[0],
                             cp_value[0], CP_KINDS[cp_code[0]])
    return obs, float(payoff[0])


def expected_payoff_true(auction_format, b, p, theta):
    """Expected bid-dependent payoff at bid(s) b in 0-based context p"""
    value = expected_payoff(auction_format, b, true_cate(theta, p),
                            theta.delta_cp[p], theta.sigma_cp_sq)
    if np.ndim(value) == 0:
        return float(value)
    return value


def optimal_bid_oracle(auction_format, p, theta):
    """Optimal bid of 0-based context p under the true parameters

    SPA: max(0, CATE). FPA: root of b + F/f = CATE by bisection,
    0 when CATE <= 0.

    raises:
        ConvergenceError if the bisection fails
    """
    auction_format = AuctionFormat.parse(auction_format)
    cate = true_cate(theta, p)
    if cate <= 0:
        return 0.0

    if auction_format is AuctionFormat.SPA:
        return cate

    mu_cp = theta.delta_cp[p]
    sigma_cp = np.sqrt(theta.sigma_cp_sq)

    def first_order_condition(b):
        return float(chi(b, mu_cp, sigma_cp)) - cate

    lower = ORACLE_BID_LOWER
    if lower >= cate or first_order_condition(lower) >= 0:
        lower = 0.0

    try:
        root = scipy.optimize.bisect(first_order_condition, lower, cate,
                                     xtol=ORACLE_BID_XTOL,
                                     maxiter=ORACLE_MAX_ITER)
    except (ValueError, RuntimeError) as e:
        log_msg = ('optimal bid bisection failed in context {} - {} {}'
                   .format(p + 1, e.__class__.__name__, e))
        LOG.error(log_msg)
        raise ConvergenceError(log_msg)

    return float(root)


class OracleCard:

    """True CATEs, optimal bids and expected payoff curves per context"""

    def __init__(self, auction_format, theta, grid):
        self.auction_format = AuctionFormat.parse(auction_format)
        self.theta = theta

        if grid.count != theta.context_count:
            log_msg = ('grid has {} contexts, parameters have {}'
                       .format(grid.count, theta.context_count))
            LOG.error(log_msg)
            raise Error(log_msg)

        self.cate = []
        self.optimal_bid = []
        self.optimal_payoff = []
        self.grid_bids = []
        self.grid_payoff = []
        self.best_arm = []
        for p in range(grid.count):
            self.cate.append(true_cate(theta, p))
            b_star = optimal_bid_oracle(self.auction_format, p, theta)
            self.optimal_bid.append(b_star)
            self.optimal_payoff.append(self.payoff(p, b_star))
            bids = grid.bids(p)
            curve = np.asarray(self.payoff(p, bids), dtype=float)
            self.grid_bids.append(bids)
            self.grid_payoff.append(curve)
            self.best_arm.append(int(np.argmax(curve)))

    @property
    def context_count(self):
        return len(self.cate)

    def payoff(self, p, b):
        return expected_payoff_true(self.auction_format, b, p, self.theta)

    def ate(self, weights):
        return float(np.dot(weights, self.cate))

    def to_dict(self):
        return {
            'format': self.auction_format.value,
            'contexts': [
                {
                    'context': p + 1,
                    'cate': self.cate[p],
                    'optimal_bid': self.optimal_bid[p],
                    'optimal_payoff': self.optimal_payoff[p],
                    'grid': self.grid_bids[p].tolist(),
                    'grid_payoff': self.grid_payoff[p].tolist(),
                    'best_arm_bid': float(
                        self.grid_bids[p][self.best_arm[p]]),
                }
                for p in range(self.context_count)
            ],
        }

# -*- coding: utf-8 -*-

"""Closed-form expected payoffs under the lognormal model

All functions broadcast over numpy arrays so the same code evaluates the
truth and a stack of posterior draws. The E[Y(0)] term is left out: it
does not depend on the bid.
"""

import numpy as np

from bitslab import stats
from bitslab.model.params import AuctionFormat


__all__ = [ 'expected_payoff', 'bid_adjustment', 'chi' ]


def _standardized_log_bid(b, mu_cp, sigma_cp):
    with np.errstate(divide='ignore'):
        log_b = np.log(b)
    return (log_b - mu_cp) / sigma_cp


def expected_payoff(auction_format, b, cate, mu_cp, sigma_cp_sq):
    """Bid-dependent part of the expected auction payoff

    args:
        auction_format: AuctionFormat
        b: bid(s) >= 0
        cate: CATE(s) of the context
        mu_cp, sigma_cp_sq: log-mean and log-variance of the competing bid

    returns:
        SPA: Phi(z) CATE - Phi(z - s) exp(mu + s^2 / 2)
        FPA: Phi(z) (CATE - b)
        with z = (ln b - mu) / s, and exactly 0 at b = 0
    """
    auction_format = AuctionFormat.parse(auction_format)
    b = np.asarray(b, dtype=float)
    sigma_cp = np.sqrt(sigma_cp_sq)
    z = _standardized_log_bid(b, mu_cp, sigma_cp)

    if auction_format is AuctionFormat.SPA:
        value = (stats.std_normal_cdf(z) * cate
                 - stats.std_normal_cdf(z - sigma_cp)
                 * stats.lognormal_mean(mu_cp, sigma_cp_sq))
    else:
        value = stats.std_normal_cdf(z) * (cate - b)

    return np.where(b > 0, value, 0.0)


def bid_adjustment(b, mu_cp, sigma_cp):
    """F_CP(b) / f_CP(b) of the lognormal competing bid

    b s Phi(z) / phi(z), evaluated through the log Mills ratio so tiny
    bids do not underflow. 0 at b = 0.
    """
    b = np.asarray(b, dtype=float)
    z = _standardized_log_bid(b, mu_cp, sigma_cp)
    with np.errstate(invalid='ignore'):
        value = b * sigma_cp * np.exp(stats.log_mills_ratio(z))
    return np.where(b > 0, value, 0.0)


def chi(b, mu_cp, sigma_cp):
    """Virtual value b + F/f whose root at CATE is the optimal FPA bid"""
    return np.asarray(b, dtype=float) + bid_adjustment(b, mu_cp, sigma_cp)

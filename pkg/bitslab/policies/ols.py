# -*- coding: utf-8 -*-

"""Regression readout of the treatment effect used by the A/B and
explore-then-commit designs
"""

import logging

import numpy as np
import statsmodels.api as sm

from bitslab import DataError


__all__ = [ 'ols_ate', 'context_cates' ]

LOG = logging.getLogger(__name__)
LOG.addHandler(logging.NullHandler())

COV_TYPE = 'HC1'


def ols_ate(outcome, win):
    """Slope of the least-squares fit of Y on the win indicator D

    The slope equals mean(Y | D=1) - mean(Y | D=0).

    args:
        outcome: realized outcomes Y
        win: bool per row, D

    returns:
        (estimate, heteroskedasticity-robust sampling variance); the
        variance is nan when there is no residual degree of freedom

    raises:
        DataError unless there is at least one win and one loss
    """
    y = np.asarray(outcome, dtype=float)
    d = np.asarray(win, dtype=bool)
    wins = int(d.sum())
    if wins == 0 or wins == d.size:
        log_msg = ('ATE regression needs wins and losses, got {} wins in {} '
                   'rows'.format(wins, d.size))
        LOG.error(log_msg)
        raise DataError(log_msg)

    if d.size <= 2:
        return float(y[d].mean() - y[~d].mean()), float('nan')

    X = sm.add_constant(d.astype(float), has_constant='add')
    fit = sm.OLS(y, X).fit(cov_type=COV_TYPE)
    return float(fit.params[1]), float(fit.bse[1] ** 2)


def context_cates(data):
    """Per-context regression readout on AuctionData

    returns:
        (cate, variance) arrays, nan for a context without both a win and
        a loss yet
    """
    P = data.context_count
    cate = np.full(P, np.nan)
    variance = np.full(P, np.nan)
    for p in range(P):
        rows = data.context == p
        wins = int(data.win[rows].sum())
        if wins == 0 or wins == int(rows.sum()):
            LOG.debug('context {} has {} wins in {} rows, no CATE yet'
                      .format(p + 1, wins, int(rows.sum())))
            continue
        cate[p], variance[p] = ols_ate(data.outcome[rows], data.win[rows])

    return cate, variance

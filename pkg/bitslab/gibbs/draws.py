# -*- coding: utf-8 -*-

import logging

import numpy as np

from bitslab import NumericalError, stats
from bitslab.model import AuctionFormat, ModelParams


__all__ = [ 'CompletedDataset', 'PosteriorDraws' ]

LOG = logging.getLogger(__name__)
LOG.addHandler(logging.NullHandler())


class CompletedDataset:

    """Auction data with every latent cell filled in, on the log scale"""

    def __init__(self, context, context_count, win, log_bid, log_y1, log_y0,
                 log_cp, lower, upper):
        """
        args:
            context: 0-based context per row
            context_count: int, P
            win: bool per row
            log_bid: log own bid per row, -inf for a zero bid
            log_y1, log_y0, log_cp: completed log potential outcomes and
                log competing bid
            lower, upper: bool masks of rows whose competing bid was
                imputed above / below the own bid
        """
        self.context = context
        self.context_count = context_count
        self.win = win
        self.log_bid = log_bid
        self.log_y1 = log_y1
        self.log_y0 = log_y0
        self.log_cp = log_cp
        self.lower = lower
        self.upper = upper

    def __len__(self):
        return self.context.size

    def check_bounds(self):
        """Every imputed competing bid must respect its censoring bound

        raises:
            NumericalError naming the offending row
        """
        bad = (self.lower & ~(self.log_cp > self.log_bid)) | (
            self.upper & ~(self.log_cp <= self.log_bid))
        bad |= ~np.isfinite(self.log_cp)
        bad |= ~np.isfinite(self.log_y1) | ~np.isfinite(self.log_y0)
        if np.any(bad):
            i = int(np.flatnonzero(bad)[0])
            log_msg = ('imputed row {} violates its bound: log bid {} '
                       'log competing bid {}'.format(
                           i, self.log_bid[i], self.log_cp[i]))
            LOG.error(log_msg)
            raise NumericalError(log_msg)


class PosteriorDraws:

    """Retained sampler draws stored column-wise

    delta arrays have shape (M, P), variances and rho shape (M,).
    """

    FIELDS = [ 'delta1', 'delta0', 'delta_cp', 'sigma1_sq', 'sigma0_sq',
               'sigma_cp_sq', 'rho' ]

    def __init__(self, context_count):
        self.context_count = context_count
        self._rows = []
        self._arrays = None

    def append(self, theta):
        for name in [ 'sigma1_sq', 'sigma0_sq', 'sigma_cp_sq' ]:
            if not getattr(theta, name) > 0:
                log_msg = 'posterior draw has non-positive {}'.format(name)
                LOG.error(log_msg)
                raise NumericalError(log_msg)

        self._rows.append(theta)
        self._arrays = None

    @classmethod
    def from_params(cls, params):
        params = list(params)
        draws = cls(params[0].context_count if params else 0)
        for theta in params:
            draws.append(theta)
        return draws

    def __len__(self):
        return len(self._rows)

    def __iter__(self):
        return iter(self._rows)

    def __getitem__(self, i):
        return self._rows[i]

    def last(self):
        return self._rows[-1]

    def _build(self):
        if self._arrays is None:
            self._arrays = {}
            for name in self.FIELDS:
                self._arrays[name] = np.array(
                    [ getattr(theta, name) for theta in self._rows ],
                    dtype=float)
        return self._arrays

    def __getattr__(self, name):
        if name in PosteriorDraws.FIELDS:
            return self._build()[name]
        raise AttributeError(name)

    def cate(self, p):
        """CATE of 0-based context p in every draw, shape (M,)"""
        arrays = self._build()
        return (stats.lognormal_mean(arrays['delta1'][:, p],
                                     arrays['sigma1_sq'])
                - stats.lognormal_mean(arrays['delta0'][:, p],
                                       arrays['sigma0_sq']))

    def check_format(self, auction_format):
        if (AuctionFormat.parse(auction_format) is AuctionFormat.FPA
                and np.any(self.sigma_cp_sq != 1.0)):
            log_msg = 'FPA posterior draws must keep sigma_cp_sq at 1'
            LOG.error(log_msg)
            raise NumericalError(log_msg)

    def mean(self):
        """Posterior mean as ModelParams"""
        arrays = self._build()
        return ModelParams(
            arrays['delta1'].mean(axis=0), arrays['delta0'].mean(axis=0),
            arrays['delta_cp'].mean(axis=0),
            float(arrays['sigma1_sq'].mean()),
            float(arrays['sigma0_sq'].mean()),
            float(arrays['sigma_cp_sq'].mean()),
            float(arrays['rho'].mean()))

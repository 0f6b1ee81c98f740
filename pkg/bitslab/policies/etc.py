# -*- coding: utf-8 -*-

import logging

import numpy as np

from bitslab import ConfigError
from bitslab.policies.decision import OptimalityProfile
from bitslab.policies.ols import context_cates
from . import BasePolicy, run_epoch


__all__ = [ 'ExploreThenCommit', 'run_etc' ]

LOG = logging.getLogger(__name__)
LOG.addHandler(logging.NullHandler())


class ExploreThenCommit(BasePolicy):

    """A/B test for the first half of the rounds, then bid the estimated
    CATE of each context for the rest

    The committed bid generally lies off the grid. The reported effect is
    the first-half estimate.
    """

    name = 'etc'

    def __init__(self, config):
        super(ExploreThenCommit, self).__init__(config)

        if config.rounds % 2:
            log_msg = ('explore-then-commit needs an even number of rounds, '
                       'got {}'.format(config.rounds))
            LOG.error(log_msg)
            raise ConfigError(log_msg)
        self.explore_rounds = config.rounds // 2

        self.cate = None
        self.committed = None

    def start(self, rng):
        super(ExploreThenCommit, self).start(rng)
        self.cate = None
        self.committed = None

    def prepare(self, t):
        # psi_t stays uniform through round T/2
        if t == self.explore_rounds + 1:
            self.profile = OptimalityProfile.committed(self.committed)

    def update(self, batch, data, t, rng):
        if self.committed is not None:
            return

        self.cate, _ = context_cates(data)
        if t == self.explore_rounds:
            # a context with no estimate yet bids 0
            bids = np.maximum(0.0, np.nan_to_num(self.cate, nan=0.0))
            self.committed = bids
            LOG.debug('committed to bids {} after round {}'
                      .format(bids.tolist(), t))

    def cate_estimates(self):
        if self.cate is None:
            return super(ExploreThenCommit, self).cate_estimates()
        return self.cate


def run_etc(config, theta_true, rng, **kwargs):
    """One explore-then-commit epoch, see policies.run_epoch"""
    return run_epoch('etc', config, theta_true, rng, **kwargs)

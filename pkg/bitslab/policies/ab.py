# -*- coding: utf-8 -*-

import logging

from bitslab.policies.ols import context_cates
from . import BasePolicy, run_epoch


__all__ = [ 'ABTest', 'run_ab' ]

LOG = logging.getLogger(__name__)
LOG.addHandler(logging.NullHandler())


class ABTest(BasePolicy):

    """Bids uniformly over the grid every round and reads the effect off a
    regression of Y on the win indicator within each context
    """

    name = 'ab'

    def __init__(self, config):
        super(ABTest, self).__init__(config)
        self.cate = None

    def start(self, rng):
        super(ABTest, self).start(rng)
        self.cate = None

    def update(self, batch, data, t, rng):
        self.cate, _ = context_cates(data)

    def cate_estimates(self):
        if self.cate is None:
            return super(ABTest, self).cate_estimates()
        return self.cate


def run_ab(config, theta_true, rng, **kwargs):
    """One A/B epoch, see policies.run_epoch"""
    return run_epoch('ab', config, theta_true, rng, **kwargs)

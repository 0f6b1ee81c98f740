# -*- coding: utf-8 -*-

import logging

import numpy as np

from bitslab import gibbs
from bitslab.model import AuctionFormat, ModelParams, PriorParams
from bitslab.policies.decision import (estimate_cate_fpa, estimate_cate_spa,
                                       optimality_probabilities,
                                       stopping_value)
from . import BasePolicy, run_epoch


__all__ = [ 'BITS', 'run_bits' ]

LOG = logging.getLogger(__name__)
LOG.addHandler(logging.NullHandler())


class BITS(BasePolicy):

    """Bidding Thompson sampling

    Arms are bids. After every batch the posterior over the auction model
    is resampled by Gibbs sampling and each arm is pulled with the
    posterior probability that it maximizes expected payoff.
    """

    name = 'bits'

    def __init__(self, config):
        super(BITS, self).__init__(config)

        self.priors = config.priors
        if self.priors is None:
            self.priors = PriorParams.uninformative(
                config.contexts.count,
                correlated=config.gibbs.rho_mode == 'correlated')

        # latest retained posterior draws, None before the first update
        self.draws = None

    def start(self, rng):
        super(BITS, self).start(rng)
        self.draws = None

    def _init_params(self):
        if self.config.gibbs.init == 'warm' and self.draws is not None:
            return self.draws.last()
        return ModelParams.initial(self.config.contexts.count)

    def update(self, batch, data, t, rng):
        self.draws = gibbs.sample_posterior(
            data, self.priors, self._init_params(), self.config.gibbs,
            self.config.auction_format, rng)
        self.draws.check_format(self.config.auction_format)
        self.profile = optimality_probabilities(
            self.draws, self.config.grid, self.config.auction_format)

    def cate_estimates(self):
        if self.config.auction_format is AuctionFormat.SPA:
            return estimate_cate_spa(self.profile)
        if self.draws is None:
            return super(BITS, self).cate_estimates()
        return estimate_cate_fpa(self.profile, self.draws)

    def stopping_state(self, t, data):
        stopping = self.config.stopping
        threshold = stopping.threshold
        if stopping.mode == 'rounds':
            threshold = self.config.rounds

        weights = None
        if stopping.weights == 'empirical':
            weights = (np.bincount(data.context,
                                   minlength=data.context_count)
                       / float(len(data)))

        return stopping_value(
            self.profile, stopping.mode, self.config.contexts, self.draws,
            self.config.auction_format, t, threshold, weights=weights,
            max_combinations=self.config.ate_grid_max_combinations)


def run_bits(config, theta_true, rng, **kwargs):
    """One BITS epoch, see policies.run_epoch"""
    return run_epoch('bits', config, theta_true, rng, **kwargs)

# -*- coding: utf-8 -*-

import logging

import numpy as np

from bitslab import Error, stats
from bitslab.model import AuctionFormat
from bitslab.policies.decision import OptimalityProfile, estimate_cate_spa
from . import BasePolicy, run_epoch


__all__ = [ 'ArmBelief', 'VanillaTS', 'run_vanilla_ts' ]

LOG = logging.getLogger(__name__)
LOG.addHandler(logging.NullHandler())

# posterior draws per arm used to estimate the optimality probabilities
MC_DRAWS = 1000


class ArmBelief:

    """Normal-gamma beliefs over the payoff distribution of each arm

    Arms are independent, each is updated with its own realized payoffs
    only. The default prior is flat: mu = lam = alpha = beta = 0.
    """

    def __init__(self, arm_count, mu=0.0, lam=0.0, alpha=0.0, beta=0.0):
        if lam < 0 or alpha < 0 or beta < 0:
            log_msg = ('arm prior lam "{}", alpha "{}" and beta "{}" must '
                       'be non-negative'.format(lam, alpha, beta))
            LOG.error(log_msg)
            raise Error(log_msg)

        self.arm_count = arm_count
        self.prior = {
            'mu': np.full(arm_count, float(mu)),
            'lambda': np.full(arm_count, float(lam)),
            'alpha': np.full(arm_count, float(alpha)),
            'beta': np.full(arm_count, float(beta)),
        }
        self.n = np.zeros(arm_count)
        self.sum = np.zeros(arm_count)
        self.sum_sq = np.zeros(arm_count)
        self.posterior = dict(self.prior)

    def update(self, arms, rewards):
        """Add the rewards of a batch, arms holds the arm index of each"""
        arms = np.asarray(arms, dtype=int)
        rewards = np.asarray(rewards, dtype=float)
        self.n += np.bincount(arms, minlength=self.arm_count)
        self.sum += np.bincount(arms, weights=rewards,
                                minlength=self.arm_count)
        self.sum_sq += np.bincount(arms, weights=rewards * rewards,
                                   minlength=self.arm_count)

        prior = self.prior
        n = self.n
        n0 = np.where(n > 0, n, 1.0)
        sample_mean = self.sum / n0
        sum_square = np.maximum(self.sum_sq - n * sample_mean ** 2, 0.0)
        lam = prior['lambda'] + n

        self.posterior = {
            'mu': np.divide(prior['lambda'] * prior['mu'] + n * sample_mean,
                            lam, out=prior['mu'].copy(), where=lam > 0),
            'lambda': lam,
            'alpha': prior['alpha'] + 0.5 * n,
            'beta': prior['beta'] + 0.5 * sum_square + np.divide(
                prior['lambda'] * n * (sample_mean - prior['mu']) ** 2,
                2.0 * lam, out=np.zeros(self.arm_count), where=lam > 0),
        }

    @property
    def proper(self):
        """arms whose posterior can be sampled, the rest fall back to
        standard normal draws
        """
        post = self.posterior
        return (post['lambda'] > 0) & (post['alpha'] > 0) & (
            post['beta'] > 0) & (self.n + self.prior['lambda'] >= 2)

    def sample_means(self, size, rng):
        """Posterior draws of every arm's mean payoff, shape (size, arms)"""
        means = rng.standard_normal(size=(size, self.arm_count))
        proper = self.proper
        if np.any(proper):
            post = dict((k, v[proper]) for k, v in self.posterior.items())
            precision = stats.draw_gamma(post['alpha'], post['beta'], rng,
                                         size=(size, int(proper.sum())))
            means[:, proper] = post['mu'] + means[:, proper] / np.sqrt(
                post['lambda'] * precision)
        return means


class VanillaTS(BasePolicy):

    """Thompson sampling on raw payoffs with independent normal arms

    Ignores the auction structure. The ATE readout uses the bid labels,
    which is only meaningful for second-price auctions.
    """

    name = 'vanilla_ts'

    def __init__(self, config):
        super(VanillaTS, self).__init__(config)
        self.beliefs = None

    def start(self, rng):
        super(VanillaTS, self).start(rng)
        self.beliefs = [ ArmBelief(size) for size in self.config.grid.sizes ]

    def update(self, batch, data, t, rng):
        probabilities = []
        for p, belief in enumerate(self.beliefs):
            rows = batch.contexts == p
            belief.update(batch.arms[rows], batch.payoff[rows])
            best = np.argmax(belief.sample_means(MC_DRAWS, rng), axis=1)
            probabilities.append(np.bincount(best,
                                             minlength=belief.arm_count)
                                 / float(MC_DRAWS))

        self.profile = OptimalityProfile(
            [ self.config.grid.bids(p) for p in range(len(self.beliefs)) ],
            probabilities)

    def cate_estimates(self):
        if self.config.auction_format is AuctionFormat.FPA:
            return super(VanillaTS, self).cate_estimates()
        return estimate_cate_spa(self.profile)


def run_vanilla_ts(config, theta_true, rng, **kwargs):
    """One vanilla Thompson sampling epoch, see policies.run_epoch"""
    return run_epoch('vanilla_ts', config, theta_true, rng, **kwargs)

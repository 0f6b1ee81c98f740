# -*- coding: utf-8 -*-

"""Posterior sampling over the model parameters given censored auction
data, by Gibbs sampling with data augmentation
"""

import logging

from bitslab import DataError, Error
from bitslab.gibbs.draws import CompletedDataset, PosteriorDraws
from bitslab.gibbs.conditionals import (augment_missing,
                                        draw_full_conditionals,
                                        draw_correlated_conditionals,
                                        equation_posterior)
from bitslab.model import AuctionFormat


__all__ = [
    'GibbsSettings',
    'CompletedDataset',
    'PosteriorDraws',
    'augment_missing',
    'draw_full_conditionals',
    'draw_correlated_conditionals',
    'equation_posterior',
    'run_gibbs',
    'run_gibbs_correlated',
    'sample_posterior',
]

LOG = logging.getLogger(__name__)
LOG.addHandler(logging.NullHandler())

MIN_DRAWS = 20
MAX_DRAWS = 1000000


class GibbsSettings:

    """Chain length, burn-in, thinning and restart behaviour"""

    INIT_OPTIONS = [ 'fixed', 'warm' ]
    RHO_MODE_OPTIONS = [ 'independent', 'correlated' ]

    def __init__(self, draws=1000, burn_in=None, thinning=10, init='fixed',
                 rho_mode='independent'):
        """
        args:
            draws: int, sweeps per round, Q
            burn_in: int, sweeps discarded, defaults to draws // 2
            thinning: int, keep sweeps that are multiples of this
            init: "fixed" restarts each round from all deltas 0 and unit
                variances, "warm" starts from the last retained draw
            rho_mode: "independent" keeps rho at 0, "correlated" samples
                the outcome covariance
        """
        if (not isinstance(draws, int) or draws < MIN_DRAWS
                or draws > MAX_DRAWS):
            log_msg = ('draws "{}" must be an int between {} and {}'
                       .format(draws, MIN_DRAWS, MAX_DRAWS))
            LOG.error(log_msg)
            raise Error(log_msg)
        self.draws = draws

        if burn_in is None:
            burn_in = draws // 2
        if not isinstance(burn_in, int) or burn_in < 0 or burn_in >= draws:
            log_msg = ('burn_in "{}" must be an int in [0, {})'
                       .format(burn_in, draws))
            LOG.error(log_msg)
            raise Error(log_msg)
        self.burn_in = burn_in

        if (not isinstance(thinning, int) or thinning < 1
                or draws // thinning - burn_in // thinning < 1):
            log_msg = ('thinning "{}" must be a positive int that keeps at '
                       'least one of sweeps {}..{}'
                       .format(thinning, burn_in + 1, draws))
            LOG.error(log_msg)
            raise Error(log_msg)
        self.thinning = thinning

        if init not in self.INIT_OPTIONS:
            log_msg = ('init "{}" must be one of {}'
                       .format(init, self.INIT_OPTIONS))
            LOG.error(log_msg)
            raise Error(log_msg)
        self.init = init

        if rho_mode not in self.RHO_MODE_OPTIONS:
            log_msg = ('rho_mode "{}" must be one of {}'
                       .format(rho_mode, self.RHO_MODE_OPTIONS))
            LOG.error(log_msg)
            raise Error(log_msg)
        self.rho_mode = rho_mode

    @property
    def retained(self):
        """number of draws kept"""
        return self.draws // self.thinning - self.burn_in // self.thinning

    @classmethod
    def from_config_dict(cls, obj):
        obj = dict(obj or {})
        unknown = set(obj) - set([ 'draws', 'burn_in', 'thinning', 'init',
                                   'rho_mode' ])
        if unknown:
            log_msg = 'unknown gibbs options {}'.format(sorted(unknown))
            LOG.error(log_msg)
            raise Error(log_msg)
        return cls(**obj)

    def to_dict(self):
        return {
            'draws': self.draws,
            'burn_in': self.burn_in,
            'thinning': self.thinning,
            'init': self.init,
            'rho_mode': self.rho_mode,
        }


def _run_chain(data, priors, init, Q, auction_format, rng, burn_in,
               thinning, draw_parameters):
    auction_format = AuctionFormat.parse(auction_format)
    if len(data) == 0:
        log_msg = 'cannot sample the posterior without observations'
        LOG.error(log_msg)
        raise DataError(log_msg)

    if not isinstance(Q, int) or Q < MIN_DRAWS:
        log_msg = 'draw count "{}" must be an int of at least {}'.format(
            Q, MIN_DRAWS)
        LOG.error(log_msg)
        raise Error(log_msg)

    if burn_in is None:
        burn_in = Q // 2

    data.validate(auction_format)

    theta = init
    if auction_format is AuctionFormat.FPA and theta.sigma_cp_sq != 1.0:
        theta = theta.replace(sigma_cp_sq=1.0)

    draws = PosteriorDraws(data.context_count)
    for q in range(1, Q + 1):
        completed = augment_missing(data, theta, auction_format, rng,
                                    validate=False)
        theta = draw_parameters(completed, priors, auction_format, rng)
        if q > burn_in and q % thinning == 0:
            draws.append(theta)

    LOG.debug('kept {} of {} draws on {} observations'.format(
        len(draws), Q, len(data)))
    return draws


def run_gibbs(data, priors, init, Q, auction_format, rng, burn_in=None,
              thinning=10):
    """Gibbs sampler with rho fixed at 0

    args:
        data: AuctionData
        priors: PriorParams
        init: ModelParams, starting point
        Q: int >= 20, number of sweeps
        auction_format: AuctionFormat
        rng: numpy Generator
        burn_in: sweeps discarded, Q // 2 by default
        thinning: keep every sweep whose 1-based index is a multiple

    returns:
        PosteriorDraws
    """
    return _run_chain(data, priors, init.replace(rho=0.0), Q,
                      auction_format, rng, burn_in, thinning,
                      draw_full_conditionals)


def run_gibbs_correlated(data, priors, init, Q, auction_format, rng,
                         burn_in=None, thinning=10):
    """Gibbs sampler that also samples the outcome correlation

    Same arguments as run_gibbs, priors.correlated supplies the Wishart
    prior (a weak default when absent).
    """
    if priors.correlated is not None and not priors.correlated.nu > 1:
        log_msg = 'Wishart prior nu must exceed 1'
        LOG.error(log_msg)
        raise Error(log_msg)

    return _run_chain(data, priors, init, Q, auction_format, rng, burn_in,
                      thinning, draw_correlated_conditionals)


def sample_posterior(data, priors, init, settings, auction_format, rng):
    """Run the sampler selected by settings.rho_mode"""
    if settings.rho_mode == 'correlated':
        run = run_gibbs_correlated
    else:
        run = run_gibbs

    return run(data, priors, init, settings.draws, auction_format, rng,
               burn_in=settings.burn_in, thinning=settings.thinning)

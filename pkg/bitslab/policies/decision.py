# -*- coding: utf-8 -*-

"""Decision layer shared by the policies

Posterior draws -> expected payoff of every arm -> probability that each
arm is optimal (the optimality profile), Thompson allocation, CATE
readouts and stopping criteria.
"""

import logging

import numpy as np

from bitslab import ConfigError, Error
from bitslab.model import (AuctionFormat, bid_adjustment, expected_payoff,
                           true_cate)


__all__ = [
    'OptimalityProfile',
    'StoppingState',
    'STOPPING_MODES',
    'expected_payoff_model',
    'payoff_matrix',
    'optimality_probabilities',
    'allocate_bids',
    'estimate_cate_spa',
    'chi_hat',
    'estimate_cate_fpa',
    'ate_grid_mass',
    'stopping_value',
]

LOG = logging.getLogger(__name__)
LOG.addHandler(logging.NullHandler())

PROFILE_SUM_TOLERANCE = 1e-9

STOPPING_MODES = [ 'rounds', 'noncontextual', 'posterior_odds',
                   'contextual_min', 'ate_grid' ]

# implied-ATE grouping tolerance in ate_grid mode
SPA_ATE_TOLERANCE = 1e-9
FPA_ATE_TOLERANCE = 1e-6

DEFAULT_ATE_GRID_MAX_COMBINATIONS = 1000000


class OptimalityProfile:

    """Per-context probability vectors over that context's arms

    The arms are normally the bid grid; a committed policy may carry a
    single off-grid bid instead.
    """

    def __init__(self, bids, probabilities):
        if len(bids) != len(probabilities) or len(bids) == 0:
            log_msg = 'profile needs one probability vector per context'
            LOG.error(log_msg)
            raise Error(log_msg)

        self.bids = []
        self.probabilities = []
        for p, (b, psi) in enumerate(zip(bids, probabilities)):
            b = np.array(b, dtype=float).ravel()
            psi = np.array(psi, dtype=float).ravel()
            if (b.size != psi.size or np.any(psi < 0) or np.any(psi > 1)
                    or abs(psi.sum() - 1.0) > PROFILE_SUM_TOLERANCE):
                log_msg = ('context {} probabilities {} must be in [0, 1], '
                           'sum to 1 and match {} arms'
                           .format(p + 1, psi.tolist(), b.size))
                LOG.error(log_msg)
                raise Error(log_msg)
            b.setflags(write=False)
            psi.setflags(write=False)
            self.bids.append(b)
            self.probabilities.append(psi)

    @property
    def context_count(self):
        return len(self.bids)

    @classmethod
    def uniform(cls, grid):
        return cls([ grid.bids(p) for p in range(grid.count) ],
                   [ np.full(size, 1.0 / size) for size in grid.sizes ])

    @classmethod
    def committed(cls, bids):
        """One certain arm per context"""
        return cls([ [ b ] for b in bids ], [ [ 1.0 ] for _ in bids ])

    def max_probability(self):
        return np.array([ psi.max() for psi in self.probabilities ])

    def mass_on(self, p, bid):
        """probability of context p's arm equal to bid, 0 if absent"""
        match = np.isclose(self.bids[p], bid, rtol=0, atol=1e-12)
        return float(self.probabilities[p][match].sum())

    def __repr__(self):
        return 'OptimalityProfile({})'.format(
            [ dict(zip(b.tolist(), psi.tolist()))
              for b, psi in zip(self.bids, self.probabilities) ])


class StoppingState:

    """Stopping criterion value against its threshold"""

    def __init__(self, value, threshold, mode):
        if mode not in STOPPING_MODES:
            log_msg = ('stopping mode "{}" must be one of {}'
                       .format(mode, STOPPING_MODES))
            LOG.error(log_msg)
            raise ConfigError(log_msg)

        self.value = float(value)
        self.threshold = float(threshold)
        self.mode = mode

    @property
    def stop(self):
        if self.mode == 'rounds':
            return self.value >= self.threshold
        return self.value > self.threshold

    def __repr__(self):
        return 'StoppingState(mode={}, value={}, threshold={})'.format(
            self.mode, self.value, self.threshold)


### payoffs and profiles ###
def expected_payoff_model(auction_format, b, p, theta):
    """Expected bid-dependent payoff under parameters theta

    The same closed form as the ground-truth payoff, evaluated at a
    posterior draw.
    """
    value = expected_payoff(auction_format, b, true_cate(theta, p),
                            theta.delta_cp[p], theta.sigma_cp_sq)
    if np.ndim(value) == 0:
        return float(value)
    return value


def payoff_matrix(draws, bids, p, auction_format):
    """Expected payoff of every bid under every draw, shape (M, R)"""
    cate = draws.cate(p)[:, None]
    mu_cp = draws.delta_cp[:, p][:, None]
    sigma_cp_sq = draws.sigma_cp_sq[:, None]
    return expected_payoff(auction_format, np.asarray(bids)[None, :], cate,
                           mu_cp, sigma_cp_sq)


def optimality_probabilities(draws, grid, auction_format):
    """Share of draws under which each arm has the highest expected payoff

    Ties go to the lowest arm index.

    returns:
        OptimalityProfile over the grid
    """
    if len(draws) == 0:
        log_msg = 'no posterior draws to compute optimality probabilities'
        LOG.error(log_msg)
        raise Error(log_msg)

    probabilities = []
    for p in range(grid.count):
        bids = grid.bids(p)
        payoffs = payoff_matrix(draws, bids, p, auction_format)
        best = np.argmax(payoffs, axis=1)
        probabilities.append(
            np.bincount(best, minlength=bids.size) / float(len(draws)))

    return OptimalityProfile([ grid.bids(p) for p in range(grid.count) ],
                             probabilities)


def allocate_bids(profile, contexts, rng):
    """Draw an arm for every impression from its context's probabilities

    returns:
        (bids, arm indices) arrays aligned with contexts
    """
    contexts = np.asarray(contexts, dtype=int)
    bids = np.zeros(contexts.size)
    arms = np.zeros(contexts.size, dtype=int)
    for p in range(profile.context_count):
        rows = np.flatnonzero(contexts == p)
        if rows.size == 0:
            continue
        psi = profile.probabilities[p]
        chosen = rng.choice(psi.size, size=rows.size, p=psi)
        arms[rows] = chosen
        bids[rows] = profile.bids[p][chosen]

    return bids, arms


### CATE readouts ###
def estimate_cate_spa(profile):
    """Probability-weighted bid per context, the SPA optimal bid is CATE

    The bid grid is read from the profile, profile.bids[p] holds the bids
    psi_t weighs in context p.
    """
    return np.array([ float(np.dot(psi, b)) for b, psi
                      in zip(profile.bids, profile.probabilities) ])


def chi_hat(b, p, draws):
    """Posterior mean of b + F_CP(b) / f_CP(b) in context p

    raises:
        Error if any b <= 0
    """
    b = np.asarray(b, dtype=float)
    if np.any(~(b > 0)):
        log_msg = 'bid-adjusted value needs positive bids, got {}'.format(b)
        LOG.error(log_msg)
        raise Error(log_msg)

    mu_cp = draws.delta_cp[:, p]
    sigma_cp = np.sqrt(draws.sigma_cp_sq)
    adjustment = bid_adjustment(b[..., None], mu_cp, sigma_cp).mean(axis=-1)
    value = b + adjustment
    if np.ndim(value) == 0:
        return float(value)
    return value


def estimate_cate_fpa(profile, draws):
    """Probability-weighted bid-adjusted value per context

    Zero bids carry no adjustment and count as 0.
    """
    estimates = []
    for p, (b, psi) in enumerate(zip(profile.bids, profile.probabilities)):
        adjusted = np.zeros(b.size)
        positive = b > 0
        if np.any(positive):
            adjusted[positive] = chi_hat(b[positive], p, draws)
        estimates.append(float(np.dot(psi, adjusted)))
    return np.array(estimates)


### stopping ###
def ate_grid_mass(labels, probabilities, weights, tolerance,
                  max_combinations=DEFAULT_ATE_GRID_MAX_COMBINATIONS):
    """Largest posterior mass on a single implied ATE value

    Every combination of one arm per context implies ATE =
    sum_p weights[p] * labels[p][arm]; combinations whose values agree
    within tolerance are grouped and the joint probabilities summed.

    raises:
        Error if the number of combinations exceeds max_combinations
    """
    combinations = int(np.prod([ len(lab) for lab in labels ],
                               dtype=float))
    if combinations > max_combinations:
        log_msg = ('ate_grid would enumerate {} arm combinations, limit {}'
                   .format(combinations, max_combinations))
        LOG.error(log_msg)
        raise Error(log_msg)

    values = np.zeros(())
    masses = np.ones(())
    for lab, psi, w in zip(labels, probabilities, weights):
        values = values[..., None] + w * np.asarray(lab, dtype=float)
        masses = masses[..., None] * np.asarray(psi, dtype=float)

    values = values.ravel()
    masses = masses.ravel()
    order = np.argsort(values, kind='stable')
    values = values[order]
    masses = masses[order]

    starts = np.concatenate([ [ 0 ],
                              np.flatnonzero(np.diff(values) > tolerance)
                              + 1 ])
    return float(np.add.reduceat(masses, starts).max())


def stopping_value(profile, mode, context_spec, draws, auction_format, t,
                   threshold, weights=None,
                   max_combinations=DEFAULT_ATE_GRID_MAX_COMBINATIONS):
    """Stopping criterion after round t

    args:
        profile: OptimalityProfile after the round t update
        mode: one of STOPPING_MODES
        context_spec: ContextSpec, weights of the implied ATE
        draws: PosteriorDraws, needed by ate_grid for FPA
        auction_format: AuctionFormat
        t: int, rounds completed
        threshold: float, rounds budget in "rounds" mode
        weights: overrides context_spec.probabilities (empirical F_x)

    returns:
        StoppingState
    """
    auction_format = AuctionFormat.parse(auction_format)
    if mode not in STOPPING_MODES:
        log_msg = ('stopping mode "{}" must be one of {}'
                   .format(mode, STOPPING_MODES))
        LOG.error(log_msg)
        raise ConfigError(log_msg)

    if mode == 'rounds':
        return StoppingState(t, threshold, mode)

    if mode in ('noncontextual', 'posterior_odds'):
        if profile.context_count != 1:
            log_msg = '{} stopping needs a single context'.format(mode)
            LOG.error(log_msg)
            raise ConfigError(log_msg)

        psi = float(profile.probabilities[0].max())
        if mode == 'noncontextual':
            return StoppingState(psi, threshold, mode)
        odds = np.inf if psi >= 1.0 else psi / (1.0 - psi)
        return StoppingState(odds, threshold, mode)

    if mode == 'contextual_min':
        return StoppingState(profile.max_probability().min(), threshold,
                             mode)

    # ate_grid
    if weights is None:
        weights = context_spec.probabilities

    if auction_format is AuctionFormat.SPA:
        labels = profile.bids
        tolerance = SPA_ATE_TOLERANCE
    else:
        if draws is None or len(draws) == 0:
            log_msg = 'ate_grid stopping for FPA needs posterior draws'
            LOG.error(log_msg)
            raise Error(log_msg)
        labels = []
        for p, b in enumerate(profile.bids):
            lab = np.zeros(b.size)
            lab[b > 0] = chi_hat(b[b > 0], p, draws)
            labels.append(lab)
        tolerance = FPA_ATE_TOLERANCE

    mass = ate_grid_mass(labels, profile.probabilities, weights, tolerance,
                         max_combinations)
    return StoppingState(mass, threshold, mode)

# -*- coding: utf-8 -*-

"""Experimentation policies and the round loop that drives them

A policy owns an allocation profile over bids. Every round the loop
assigns contexts to the batch impressions, pulls bids from the profile,
resolves the auctions against the true model, hands the feedback to the
policy and records what happened.
"""

import logging

import numpy as np

from bitslab import ConfigError, env, metrics
from bitslab.model import AuctionData
from bitslab.policies.decision import (OptimalityProfile, StoppingState,
                                       allocate_bids)


__all__ = [
    'BasePolicy',
    'RoundBatch',
    'RoundRecord',
    'EpochResult',
    'CONTEXT_ASSIGNMENTS',
    'TRACE_COLUMNS',
    'assign_contexts',
    'run_epoch',
    'registered',
]

LOG = logging.getLogger(__name__)
LOG.addHandler(logging.NullHandler())

CONTEXT_ASSIGNMENTS = [ 'equal', 'random' ]

TRACE_COLUMNS = [ 'epoch', 'round', 'context', 'arm_bid', 'psi', 'pulls',
                  'realized_payoff_sum', 'cum_pseudo_regret',
                  'cate_estimate', 'stop_value' ]


class BasePolicy:

    """Base policy, allocates uniformly over the grid until told otherwise"""

    name = None

    def __init__(self, config):
        """
        args:
            config: ExperimentConfig
        """
        self.config = config
        self.profile = None

    def start(self, rng):
        """Reset to the pre-data state, psi_0 is uniform over the grid"""
        self.profile = OptimalityProfile.uniform(self.config.grid)

    def prepare(self, t):
        """Called before the bids of round t are pulled"""
        pass

    def update(self, batch, data, t, rng):
        """Incorporate the feedback of round t

        args:
            batch: RoundBatch of the round
            data: AuctionData, every row so far including the batch
            t: int, 1-based round number
            rng: numpy Generator of the policy
        """
        raise NotImplementedError

    def cate_estimates(self):
        return np.full(self.config.contexts.count, np.nan)

    def stopping_state(self, t, data):
        return StoppingState(t, self.config.rounds, 'rounds')

    def final_ate(self):
        return float(np.dot(self.config.contexts.probabilities,
                            self.cate_estimates()))


class RoundBatch:

    """Impressions of one round with their auction outcomes"""

    def __init__(self, contexts, bids, arms, win, outcome, cp_value,
                 cp_code, payoff):
        self.contexts = contexts
        self.bids = bids
        self.arms = arms
        self.win = win
        self.outcome = outcome
        self.cp_value = cp_value
        self.cp_code = cp_code
        self.payoff = payoff

    def __len__(self):
        return self.contexts.size

    def arm_totals(self, p, arm_count):
        """(pulls, realized payoff sum) per arm of context p"""
        rows = self.contexts == p
        pulls = np.bincount(self.arms[rows], minlength=arm_count)
        payoff = np.bincount(self.arms[rows], weights=self.payoff[rows],
                             minlength=arm_count)
        return pulls, payoff


class RoundRecord:

    """Trace of one round"""

    def __init__(self, t, allocation, profile, pulls, payoff_sums,
                 round_regret, cum_regret, cate, stop, psi_best):
        """
        args:
            t: int, 1-based round
            allocation: OptimalityProfile the bids were pulled from
            profile: OptimalityProfile after the update, psi_t
            pulls, payoff_sums: per context arrays aligned with the
                allocation arms
            round_regret: float, F_x-weighted pseudo-regret of allocation
            cum_regret: float, cumulative pseudo-regret up to t
            cate: per context CATE estimates after the update
            stop: StoppingState after the update
            psi_best: per context probability psi_t puts on the best
                grid arm
        """
        self.round = t
        self.allocation = allocation
        self.profile = profile
        self.pulls = pulls
        self.payoff_sums = payoff_sums
        self.round_regret = round_regret
        self.cum_regret = cum_regret
        self.cate = cate
        self.stop = stop
        self.psi_best = psi_best

    @property
    def psi_best_min(self):
        return float(np.min(self.psi_best))


class EpochResult:

    """Everything one epoch of one policy produced"""

    def __init__(self, policy, epoch, seed, records, ate_estimate,
                 cate_estimate, initial_psi_best_min):
        self.policy = policy
        self.epoch = epoch
        self.seed = seed
        self.records = records
        self.ate_estimate = float(ate_estimate)
        self.cate_estimate = np.asarray(cate_estimate, dtype=float)
        self.initial_psi_best_min = float(initial_psi_best_min)

    @property
    def stopped_round(self):
        return self.records[-1].round if self.records else 0

    @property
    def cum_regret(self):
        return self.records[-1].cum_regret if self.records else 0.0

    def trace_rows(self):
        """Rows of the per-round trace, one per round, context and arm"""
        rows = []
        for record in self.records:
            for p in range(record.allocation.context_count):
                for i, bid in enumerate(record.allocation.bids[p]):
                    rows.append({
                        'epoch': self.epoch,
                        'round': record.round,
                        'context': p + 1,
                        'arm_bid': float(bid),
                        'psi': record.profile.mass_on(p, bid),
                        'pulls': int(record.pulls[p][i]),
                        'realized_payoff_sum': float(
                            record.payoff_sums[p][i]),
                        'cum_pseudo_regret': record.cum_regret,
                        'cate_estimate': float(record.cate[p]),
                        'stop_value': record.stop.value,
                    })
        return rows

    def __repr__(self):
        return ('EpochResult(policy={}, epoch={}, rounds={}, ate={})'
                .format(self.policy, self.epoch, self.stopped_round,
                        self.ate_estimate))


def assign_contexts(contexts, batch_size, assignment, rng):
    """Contexts of the impressions in one batch

    "equal" splits the batch evenly across contexts in context order,
    "random" draws each impression's context from F_x.
    """
    if assignment == 'equal':
        if batch_size % contexts.count:
            log_msg = ('batch size {} is not divisible by {} contexts'
                       .format(batch_size, contexts.count))
            LOG.error(log_msg)
            raise ConfigError(log_msg)
        return np.repeat(np.arange(contexts.count),
                         batch_size // contexts.count)
    elif assignment == 'random':
        return rng.choice(contexts.count, size=batch_size,
                          p=contexts.probabilities)

    log_msg = ('context assignment "{}" must be one of {}'
               .format(assignment, CONTEXT_ASSIGNMENTS))
    LOG.error(log_msg)
    raise ConfigError(log_msg)


def _psi_best(profile, oracle):
    return np.array([
        profile.mass_on(p, oracle.grid_bids[p][oracle.best_arm[p]])
        for p in range(oracle.context_count) ])


def run_epoch(policy_name, config, theta_true, rng, epoch=0, seed=None,
              oracle=None):
    """Run one epoch of a policy

    The generator is split into an environment stream (contexts and
    auctions) and a policy stream (allocation and posterior sampling), so
    every policy faces the same impressions under the same seed.

    args:
        policy_name: key of registered
        config: ExperimentConfig
        theta_true: ModelParams, the data generating process
        rng: numpy Generator
        epoch: int, index reported in the result
        seed: int, reported in the result
        oracle: OracleCard for theta_true, computed when None

    returns:
        EpochResult
    """
    if policy_name not in registered:
        log_msg = ('policy "{}" must be one of {}'
                   .format(policy_name, sorted(registered)))
        LOG.error(log_msg)
        raise ConfigError(log_msg)

    if oracle is None:
        oracle = env.OracleCard(config.auction_format, theta_true,
                                config.grid)

    env_rng, policy_rng = rng.spawn(2)
    policy = registered[policy_name](config)
    policy.start(policy_rng)

    weights = config.contexts.probabilities
    initial_psi_best_min = float(np.min(_psi_best(policy.profile, oracle)))
    data = AuctionData(config.contexts.count)
    records = []
    cum_regret = 0.0
    for t in range(1, config.rounds + 1):
        policy.prepare(t)
        allocation = policy.profile
        contexts = assign_contexts(config.contexts, config.batch_size,
                                   config.context_assignment, env_rng)
        y1, y0, b_cp = env.draw_units(theta_true, contexts, env_rng)
        bids, arms = allocate_bids(allocation, contexts, policy_rng)
        win, outcome, cp_value, cp_code, payoff = env.resolve_auctions(
            config.auction_format, bids, y1, y0, b_cp,
            disclosure=config.disclosure)
        data.extend(bids, contexts, win, outcome, cp_value, cp_code)
        batch = RoundBatch(contexts, bids, arms, win, outcome, cp_value,
                           cp_code, payoff)

        round_regret = metrics.pseudo_regret_round(allocation, oracle,
                                                   weights)
        cum_regret += round_regret

        policy.update(batch, data, t, policy_rng)
        stop = policy.stopping_state(t, data)

        pulls = []
        payoff_sums = []
        for p in range(allocation.context_count):
            n, s = batch.arm_totals(p, allocation.bids[p].size)
            pulls.append(n)
            payoff_sums.append(s)

        record = RoundRecord(t, allocation, policy.profile, pulls,
                             payoff_sums, round_regret, cum_regret,
                             policy.cate_estimates(), stop,
                             _psi_best(policy.profile, oracle))
        records.append(record)

        LOG.debug('{} epoch {} round {}: max psi {} regret {:.6g} stop {}'
                  .format(policy_name, epoch, t,
                          policy.profile.max_probability().tolist(),
                          round_regret, stop.value))

        if stop.stop and t < config.rounds:
            LOG.info('{} epoch {} stopped after round {}, {} {:.6g} > {:.6g}'
                     .format(policy_name, epoch, t, stop.mode, stop.value,
                             stop.threshold))
            break

    return EpochResult(policy_name, epoch, seed, records,
                       policy.final_ate(), policy.cate_estimates(),
                       initial_psi_best_min)


from .bits import BITS
from .ab import ABTest
from .etc import ExploreThenCommit
from .vanilla_ts import VanillaTS

registered = {
    'bits': BITS,
    'ab': ABTest,
    'etc': ExploreThenCommit,
    'vanilla_ts': VanillaTS,
}

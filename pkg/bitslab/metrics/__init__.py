# -*- coding: utf-8 -*-

"""Evaluation of finished epochs: pseudo-regret, MSE of the ATE readout,
kernel density of the estimates and the aggregate tables
"""

import logging

import numpy as np
import pandas as pd
import scipy.stats

from bitslab import Error


__all__ = [
    'pseudo_regret_round',
    'pseudo_regret_by_context',
    'mse_over_epochs',
    'silverman_factor',
    'kde_density',
    'MetricsTable',
]

LOG = logging.getLogger(__name__)
LOG.addHandler(logging.NullHandler())

PSI_QUANTILES = [ 0.25, 0.5, 0.75 ]


def pseudo_regret_by_context(profile, oracle):
    """Expected payoff shortfall of the pull distribution in every context

    The pulled bids need not lie on the grid, the payoff is evaluated at
    whatever bid the profile carries.

    returns:
        float array, one value per context
    """
    if profile.context_count != oracle.context_count:
        log_msg = ('profile has {} contexts, oracle has {}'
                   .format(profile.context_count, oracle.context_count))
        LOG.error(log_msg)
        raise Error(log_msg)

    regret = np.zeros(profile.context_count)
    for p in range(profile.context_count):
        payoffs = np.asarray(oracle.payoff(p, profile.bids[p]), dtype=float)
        regret[p] = (oracle.optimal_payoff[p]
                     - float(np.dot(profile.probabilities[p], payoffs)))
    return regret


def pseudo_regret_round(profile, oracle, weights=None):
    """Pseudo-regret of one round, contexts weighted by weights (F_x)"""
    regret = pseudo_regret_by_context(profile, oracle)
    if weights is None:
        weights = np.full(regret.size, 1.0 / regret.size)
    return float(np.dot(weights, regret))


def mse_over_epochs(estimates, truth):
    """Mean squared deviation of per-epoch estimates from the truth"""
    estimates = np.asarray(estimates, dtype=float)
    if estimates.size == 0:
        log_msg = 'no estimates to compute the MSE of'
        LOG.error(log_msg)
        raise Error(log_msg)
    return float(np.mean((estimates - truth) ** 2))


def silverman_factor(kde):
    """Rule-of-thumb bandwidth factor of a Gaussian kernel, 1.06 n^-1/5"""
    return 1.06 * kde.n ** (-1.0 / 5.0)


def kde_density(samples, grid):
    """Gaussian kernel density of samples evaluated on grid

    raises:
        Error on fewer than two samples or zero spread
    """
    samples = np.asarray(samples, dtype=float)
    samples = samples[np.isfinite(samples)]
    if samples.size < 2:
        log_msg = 'density needs at least 2 finite samples, got {}'.format(
            samples.size)
        LOG.error(log_msg)
        raise Error(log_msg)

    if not samples.std() > 0:
        log_msg = 'density of samples with zero spread is undefined'
        LOG.error(log_msg)
        raise Error(log_msg)

    kde = scipy.stats.gaussian_kde(samples, bw_method=silverman_factor)
    return kde(np.asarray(grid, dtype=float))


class MetricsTable:

    """Aggregates of the epoch results of one experiment

    attributes:
        rounds: DataFrame per policy and round with the mean cumulative and
            per-round pseudo-regret and quantiles over epochs of the
            minimum over contexts of the probability on the optimal arm
        epochs: DataFrame per policy and epoch with the final ATE estimate,
            the round it stopped at and its cumulative pseudo-regret
        summary: DataFrame per policy with the MSE of the ATE estimates
    """

    def __init__(self, results, true_ate, rounds):
        """
        args:
            results: list of EpochResult, any mix of policies
            true_ate: float, F_x-weighted true CATE
            rounds: int, round budget T; epochs that stopped early keep
                their last state for the remaining rounds
        """
        self.true_ate = float(true_ate)
        self.round_count = rounds

        policies = []
        for r in results:
            if r.policy not in policies:
                policies.append(r.policy)
        self.policies = policies

        round_rows = []
        epoch_rows = []
        summary_rows = []
        for policy in policies:
            mine = sorted([ r for r in results if r.policy == policy ],
                          key=lambda r: r.epoch)

            cum = np.array([ self._filled(r, 'cum_regret') for r in mine ])
            per_round = np.array([ self._filled(r, 'round_regret', 0.0)
                                   for r in mine ])
            psi = np.array([ self._filled(r, 'psi_best_min') for r in mine ])

            for t in range(rounds):
                row = {
                    'policy': policy,
                    'round': t + 1,
                    'mean_cum_regret': float(cum[:, t].mean()),
                    'mean_round_regret': float(per_round[:, t].mean()),
                }
                for q in PSI_QUANTILES:
                    row['psi_q{:02d}'.format(int(q * 100))] = float(
                        np.quantile(psi[:, t], q))
                round_rows.append(row)

            estimates = []
            for r in mine:
                estimates.append(r.ate_estimate)
                epoch_rows.append({
                    'policy': policy,
                    'epoch': r.epoch,
                    'seed': r.seed,
                    'ate_estimate': r.ate_estimate,
                    'stopped_round': r.stopped_round,
                    'cum_regret': r.cum_regret,
                })

            finite = [ e for e in estimates if np.isfinite(e) ]
            summary_rows.append({
                'policy': policy,
                'epochs': len(mine),
                'true_ate': self.true_ate,
                'ate_mse': (mse_over_epochs(finite, self.true_ate)
                            if len(finite) == len(estimates) and finite
                            else float('nan')),
                'mean_cum_regret': float(cum[:, -1].mean()) if rounds
                                   else 0.0,
            })

        self.rounds = pd.DataFrame(round_rows, columns=[
            'policy', 'round', 'mean_cum_regret', 'mean_round_regret' ]
            + [ 'psi_q{:02d}'.format(int(q * 100)) for q in PSI_QUANTILES ])
        self.epochs = pd.DataFrame(epoch_rows, columns=[
            'policy', 'epoch', 'seed', 'ate_estimate', 'stopped_round',
            'cum_regret' ])
        self.summary = pd.DataFrame(summary_rows, columns=[
            'policy', 'epochs', 'true_ate', 'ate_mse', 'mean_cum_regret' ])

    def _filled(self, result, name, fill=None):
        """Per-round values of an epoch padded to the round budget

        Padding repeats the last value, or uses fill when given.
        """
        values = [ getattr(record, name) for record in result.records ]
        if not values:
            values = [ 0.0 if fill is None else fill ]
            if name == 'psi_best_min':
                values = [ result.initial_psi_best_min ]
        pad = values[-1] if fill is None else fill
        values = values + [ pad ] * (self.round_count - len(values))
        return values[:self.round_count]

    def mse(self, policy):
        rows = self.summary[self.summary['policy'] == policy]
        return float(rows['ate_mse'].iloc[0])

    def final_psi_median(self, policy):
        rows = self.rounds[self.rounds['policy'] == policy]
        return float(rows['psi_q50'].iloc[-1])

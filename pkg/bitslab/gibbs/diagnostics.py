# -*- coding: utf-8 -*-

"""Sampler self-checks

conjugacy_check compares sampler output on fully observed data with the
closed-form normal-gamma posterior. calibration_ranks runs
simulation-based calibration: parameters drawn from a proper prior,
data simulated from them, and the rank of each true value among the
posterior draws collected; ranks are uniform for a correct sampler.
"""

import logging

import numpy as np
import scipy.stats

from bitslab import env, stats
from bitslab.gibbs import run_gibbs
from bitslab.gibbs.conditionals import (draw_full_conditionals,
                                        equation_posterior)
from bitslab.gibbs.draws import CompletedDataset
from bitslab.model import (AuctionData, AuctionFormat, EquationPrior,
                           ModelParams, PriorParams)


__all__ = [
    'exact_normal_gamma_posterior',
    'conjugacy_check',
    'calibration_prior',
    'calibration_ranks',
    'rank_uniformity_pvalue',
]

LOG = logging.getLogger(__name__)
LOG.addHandler(logging.NullHandler())

# z-score beyond which a sampler moment disagrees with the closed form
CONJUGACY_MAX_Z = 3.0

CALIBRATION_BIDS = [ 0.5, 1.0, 2.0 ]


def exact_normal_gamma_posterior(y, ctx, P, prior):
    """Closed-form posterior moments of one equation block

    returns:
        dict with "delta_mean" (P,) and "precision_mean"
    """
    post = equation_posterior(np.asarray(y, dtype=float),
                              np.asarray(ctx, dtype=int), P, prior)
    return {
        'delta_mean': post['mean'],
        'precision_mean': post['shape'] / post['rate'],
    }


def conjugacy_check(theta, n, draws, auction_format, rng, priors=None):
    """Sampler moments against exact posterior moments on complete data

    With nothing to impute the conditionals return independent exact
    posterior draws, so the Monte Carlo standard error is sd / sqrt(draws).

    returns:
        list of dicts with keys equation, parameter, context,
        sampler_mean, exact_mean, mc_se, z, passed
    """
    auction_format = AuctionFormat.parse(auction_format)
    P = theta.context_count
    if priors is None:
        priors = PriorParams.uninformative(P)

    ctx = np.sort(rng.integers(P, size=n))
    y1, y0, b_cp = env.draw_units(theta, ctx, rng)
    no_rows = np.zeros(n, dtype=bool)
    completed = CompletedDataset(ctx, P, np.ones(n, dtype=bool),
                                 np.zeros(n), np.log(y1), np.log(y0),
                                 np.log(b_cp), no_rows, no_rows)

    samples = [ draw_full_conditionals(completed, priors, auction_format,
                                       rng) for _ in range(draws) ]

    blocks = [
        ('y1', completed.log_y1, 'delta1', 'sigma1_sq'),
        ('y0', completed.log_y0, 'delta0', 'sigma0_sq'),
        ('cp', completed.log_cp, 'delta_cp', 'sigma_cp_sq'),
    ]

    rows = []
    for name, y, delta_name, sigma_name in blocks:
        prior = priors.equation(name)
        exact = exact_normal_gamma_posterior(y, ctx, P, prior)
        delta_draws = np.array([ getattr(s, delta_name) for s in samples ])
        checks = [ ('delta', p + 1, delta_draws[:, p],
                    exact['delta_mean'][p]) for p in range(P) ]

        fixed_variance = (name == 'cp'
                          and auction_format is AuctionFormat.FPA)
        if fixed_variance:
            # delta | sigma2 = 1 has the same mean, nothing else to check
            pass
        else:
            precision = 1.0 / np.array([ getattr(s, sigma_name)
                                         for s in samples ])
            checks.append(('precision', 0, precision,
                           exact['precision_mean']))

        for parameter, context, values, exact_mean in checks:
            mc_se = values.std(ddof=1) / np.sqrt(values.size)
            z = (values.mean() - exact_mean) / mc_se
            rows.append({
                'equation': name,
                'parameter': parameter,
                'context': context,
                'sampler_mean': float(values.mean()),
                'exact_mean': float(exact_mean),
                'mc_se': float(mc_se),
                'z': float(z),
                'passed': bool(abs(z) <= CONJUGACY_MAX_Z),
            })

    return rows


def calibration_prior(P):
    """Proper normal-gamma prior used to draw calibration truths"""
    block = EquationPrior(3.0, 2.0, np.zeros(P), np.eye(P))
    return PriorParams(block, block, block)


def _draw_truth(priors, auction_format, rng):
    P = priors.context_count
    values = {}
    for name, delta_name, sigma_name in [ ('y1', 'delta1', 'sigma1_sq'),
                                          ('y0', 'delta0', 'sigma0_sq'),
                                          ('cp', 'delta_cp', 'sigma_cp_sq') ]:
        prior = priors.equation(name)
        if name == 'cp' and auction_format is AuctionFormat.FPA:
            sigma2 = 1.0
        else:
            sigma2 = 1.0 / stats.draw_gamma(prior.alpha, prior.beta, rng)
        values[sigma_name] = sigma2
        values[delta_name] = stats.draw_mv_normal(
            prior.mu, sigma2 * np.linalg.inv(prior.A), rng)
    values['rho'] = 0.0

    return ModelParams(**values)


def calibration_ranks(runs, n, auction_format, rng, Q=200, thinning=10,
                      P=1):
    """Simulation-based calibration of run_gibbs

    args:
        runs: int, number of simulated datasets
        n: int, auctions per dataset, bids drawn from CALIBRATION_BIDS
        auction_format: AuctionFormat
        rng: numpy Generator
        Q, thinning: sampler length and thinning, burn-in is Q // 2
        P: number of contexts

    returns:
        (dict parameter name -> int array of ranks, retained draw count)
        parameter names are "delta1", "delta0", "delta_cp" (first context)
        and the sampled variances
    """
    auction_format = AuctionFormat.parse(auction_format)
    priors = calibration_prior(P)
    names = [ 'delta1', 'delta0', 'delta_cp', 'sigma1_sq', 'sigma0_sq' ]
    if auction_format is AuctionFormat.SPA:
        names.append('sigma_cp_sq')

    ranks = dict((name, []) for name in names)
    retained = None
    for run in range(runs):
        truth = _draw_truth(priors, auction_format, rng)
        contexts = rng.integers(P, size=n)
        bids = rng.choice(CALIBRATION_BIDS, size=n)
        y1, y0, b_cp = env.draw_units(truth, contexts, rng)
        win, outcome, cp_value, cp_code, _ = env.resolve_auctions(
            auction_format, bids, y1, y0, b_cp)

        data = AuctionData(P)
        data.extend(bids, contexts, win, outcome, cp_value, cp_code)
        draws = run_gibbs(data, priors, ModelParams.initial(P), Q,
                          auction_format, rng, burn_in=Q // 2,
                          thinning=thinning)
        retained = len(draws)

        for name in names:
            values = getattr(draws, name)
            truth_value = getattr(truth, name)
            if values.ndim == 2:
                values = values[:, 0]
                truth_value = truth_value[0]
            ranks[name].append(int(np.sum(values < truth_value)))

        LOG.debug('calibration run {} of {} done'.format(run + 1, runs))

    return dict((k, np.array(v)) for k, v in ranks.items()), retained


def rank_uniformity_pvalue(ranks, retained):
    """Chi-square p-value of ranks being uniform on 0..retained"""
    counts = np.bincount(np.asarray(ranks, dtype=int),
                         minlength=retained + 1)
    return float(scipy.stats.chisquare(counts).pvalue)

# -*- coding: utf-8 -*-

"""One sweep of the data-augmentation sampler

augment_missing fills latent cells given the parameters,
draw_full_conditionals / draw_correlated_conditionals draw the parameters
given the completed data.
"""

import logging

import numpy as np

from bitslab import DataError, Error, NumericalError, stats
from bitslab.gibbs.draws import CompletedDataset
from bitslab.model import AuctionFormat, CorrelatedPrior, ModelParams


__all__ = [
    'augment_missing',
    'draw_full_conditionals',
    'draw_correlated_conditionals',
    'equation_posterior',
]

LOG = logging.getLogger(__name__)
LOG.addHandler(logging.NullHandler())

# precision added to a context without observations under a flat prior,
# its delta then falls back to N(prior mean, sigma2 * 1e6)
EMPTY_CONTEXT_PRECISION = 1e-6

# keeps a drawn correlation strictly inside (-1, 1)
MAX_ABS_RHO = 1.0 - 1e-12


def augment_missing(data, theta, auction_format, rng, validate=True):
    """Impute censored competing bids and unobserved potential outcomes

    args:
        data: AuctionData
        theta: ModelParams, current draw
        auction_format: AuctionFormat
        rng: numpy Generator
        validate: check the censoring flags of every row first

    returns:
        CompletedDataset
    """
    auction_format = AuctionFormat.parse(auction_format)
    if validate:
        data.validate(auction_format)

    ctx = data.context
    with np.errstate(divide='ignore'):
        log_bid = np.log(data.bid)

    lower = data.lower_cp
    upper = data.upper_cp
    observed = data.observed_cp

    ### competing bid ###
    log_cp = np.empty(len(data))
    log_cp[observed] = np.log(data.cp_value[observed])

    sd_cp = np.sqrt(theta.sigma_cp_sq)
    mu_cp = theta.delta_cp[ctx]
    if np.any(lower):
        log_cp[lower] = stats.truncated_normal_rvs(
            mu_cp[lower], sd_cp, log_bid[lower], np.inf, rng)
    if np.any(upper):
        log_cp[upper] = stats.truncated_normal_rvs(
            mu_cp[upper], sd_cp, -np.inf, log_bid[upper], rng)

    ### potential outcomes ###
    # the missing outcome is normal given the observed one, with rho = 0
    # this is the marginal of its own equation
    win = data.win
    log_outcome = np.log(data.outcome)
    sd1 = np.sqrt(theta.sigma1_sq)
    sd0 = np.sqrt(theta.sigma0_sq)
    rho = theta.rho
    z = rng.standard_normal(size=len(data))

    mean_y1 = theta.delta1[ctx] + rho * sd1 / sd0 * (
        log_outcome - theta.delta0[ctx])
    mean_y0 = theta.delta0[ctx] + rho * sd0 / sd1 * (
        log_outcome - theta.delta1[ctx])
    scale = np.sqrt(1.0 - rho * rho)

    log_y1 = np.where(win, log_outcome, mean_y1 + scale * sd1 * z)
    log_y0 = np.where(win, mean_y0 + scale * sd0 * z, log_outcome)

    completed = CompletedDataset(ctx, data.context_count, win, log_bid,
                                 log_y1, log_y0, log_cp, lower, upper)
    completed.check_bounds()
    return completed


def equation_posterior(y, ctx, P, prior):
    """Normal-gamma posterior of one equation block on complete data

    returns:
        dict with "shape", "rate" of the precision, "mean" of delta and
        "V" = (A + X'X)^-1 so that delta | sigma2 ~ N(mean, sigma2 V)

    raises:
        NumericalError if A + X'X is singular
    """
    counts = np.bincount(ctx, minlength=P).astype(float)
    sums = np.bincount(ctx, weights=y, minlength=P)
    delta_ols = np.divide(sums, counts, out=np.zeros(P), where=counts > 0)
    resid = y - delta_ols[ctx]
    ssr = float(resid @ resid)

    A = np.array(prior.A, dtype=float)
    empty = (counts == 0) & (np.diag(A) == 0)
    if np.any(empty):
        A[empty, empty] = EMPTY_CONTEXT_PRECISION

    K = A + np.diag(counts)
    try:
        np.linalg.cholesky(K)
        V = np.linalg.inv(K)
    except np.linalg.LinAlgError:
        log_msg = 'A + X\'X is singular, prior precision {}'.format(
            prior.A.tolist())
        LOG.error(log_msg)
        raise NumericalError(log_msg)
    V = 0.5 * (V + V.T)

    d = delta_ols - prior.mu
    shrinkage = float(d @ (counts * (V @ (A @ d))))

    return {
        'shape': prior.alpha + 0.5 * y.size,
        'rate': prior.beta + 0.5 * (ssr + shrinkage),
        'mean': V @ (sums + A @ prior.mu),
        'V': V,
    }


def _draw_equation(y, ctx, P, prior, rng, fixed_sigma2=None):
    post = equation_posterior(y, ctx, P, prior)

    if fixed_sigma2 is None:
        if not (post['shape'] > 0 and post['rate'] > 0):
            log_msg = ('improper precision conditional, shape {} rate {}'
                       .format(post['shape'], post['rate']))
            LOG.error(log_msg)
            raise NumericalError(log_msg)
        sigma2 = 1.0 / stats.draw_gamma(post['shape'], post['rate'], rng)
    else:
        sigma2 = fixed_sigma2

    delta = stats.draw_mv_normal(post['mean'], sigma2 * post['V'], rng)
    return delta, sigma2


def draw_full_conditionals(completed, priors, auction_format, rng):
    """Draw all parameters given completed data, rho fixed at 0

    Each block draws its precision from the gamma marginal around the OLS
    fit, then delta given the variance. FPA keeps sigma_cp_sq at 1.

    returns:
        ModelParams
    """
    auction_format = AuctionFormat.parse(auction_format)
    if len(completed) == 0:
        log_msg = 'completed data is empty'
        LOG.error(log_msg)
        raise DataError(log_msg)

    ctx = completed.context
    P = completed.context_count
    delta1, sigma1_sq = _draw_equation(completed.log_y1, ctx, P, priors.y1,
                                       rng)
    delta0, sigma0_sq = _draw_equation(completed.log_y0, ctx, P, priors.y0,
                                       rng)
    delta_cp, sigma_cp_sq = _draw_equation(
        completed.log_cp, ctx, P, priors.cp, rng,
        fixed_sigma2=1.0 if auction_format is AuctionFormat.FPA else None)

    return ModelParams(delta1, delta0, delta_cp, sigma1_sq, sigma0_sq,
                       sigma_cp_sq, 0.0)


def draw_correlated_conditionals(completed, priors, auction_format, rng):
    """Draw all parameters given completed data with correlated outcomes

    The outcome pair is a two-equation SUR block: the precision matrix is
    Wishart around the prior scale plus residual cross-products and
    vec(delta1, delta0) is normal with covariance Sigma kron
    (X'X + A_delta)^-1. The competing bid block is as in
    draw_full_conditionals.

    returns:
        ModelParams
    """
    auction_format = AuctionFormat.parse(auction_format)
    if len(completed) == 0:
        log_msg = 'completed data is empty'
        LOG.error(log_msg)
        raise DataError(log_msg)

    ctx = completed.context
    P = completed.context_count
    prior = priors.correlated
    if prior is None:
        prior = CorrelatedPrior.default(P)

    ### outcome pair ###
    Y = np.column_stack([ completed.log_y1, completed.log_y0 ])
    counts = np.bincount(ctx, minlength=P).astype(float)
    XtY = np.column_stack([
        np.bincount(ctx, weights=Y[:, 0], minlength=P),
        np.bincount(ctx, weights=Y[:, 1], minlength=P) ])

    A = np.array(prior.A_delta, dtype=float)
    empty = (counts == 0) & (np.diag(A) == 0)
    if np.any(empty):
        A[empty, empty] = EMPTY_CONTEXT_PRECISION

    K = np.diag(counts) + A
    try:
        np.linalg.cholesky(K)
        K_inv = np.linalg.inv(K)
    except np.linalg.LinAlgError:
        log_msg = 'X\'X + A_delta is singular'
        LOG.error(log_msg)
        raise NumericalError(log_msg)
    K_inv = 0.5 * (K_inv + K_inv.T)

    M = prior.M
    delta_tilde = K_inv @ (XtY + A @ M)
    resid = Y - delta_tilde[ctx]
    gap = delta_tilde - M
    ssr = resid.T @ resid + gap.T @ A @ gap

    scale_inv = prior.Xi + ssr
    scale_inv = 0.5 * (scale_inv + scale_inv.T)
    try:
        np.linalg.cholesky(scale_inv)
    except np.linalg.LinAlgError:
        log_msg = 'Xi + SSR is not positive definite'
        LOG.error(log_msg)
        raise NumericalError(log_msg)

    try:
        precision = stats.draw_wishart(prior.nu + len(completed),
                                       np.linalg.inv(scale_inv), rng)
    except Error as e:
        raise NumericalError(str(e))
    sigma = np.linalg.inv(precision)
    sigma = 0.5 * (sigma + sigma.T)

    # column stacking: vec = [delta1; delta0]
    vec = stats.draw_mv_normal(delta_tilde.T.ravel(),
                               np.kron(sigma, K_inv), rng)
    delta1, delta0 = vec[:P], vec[P:]

    rho = sigma[0, 1] / np.sqrt(sigma[0, 0] * sigma[1, 1])
    rho = float(np.clip(rho, -MAX_ABS_RHO, MAX_ABS_RHO))

    ### competing bid ###
    delta_cp, sigma_cp_sq = _draw_equation(
        completed.log_cp, ctx, P, priors.cp, rng,
        fixed_sigma2=1.0 if auction_format is AuctionFormat.FPA else None)

    return ModelParams(delta1, delta0, delta_cp, float(sigma[0, 0]),
                       float(sigma[1, 1]), sigma_cp_sq, rho)

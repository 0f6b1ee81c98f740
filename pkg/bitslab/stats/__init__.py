# -*- coding: utf-8 -*-

"""Seedable probability primitives

Everything that draws random numbers takes an explicit
numpy.random.Generator, nothing touches global random state.
"""

import logging
import math

import numpy as np
import scipy.special
import scipy.stats

from bitslab import Error, NumericalError


__all__ = [
    'make_rng',
    'spawn_rngs',
    'std_normal_cdf',
    'std_normal_pdf',
    'log_std_normal_cdf',
    'log_std_normal_pdf',
    'log_mills_ratio',
    'inverse_mills_ratio',
    'TruncationBounds',
    'draw_truncated_normal',
    'truncated_normal_rvs',
    'draw_gamma',
    'draw_mv_normal',
    'draw_wishart',
    'lognormal_mean',
]

LOG = logging.getLogger(__name__)
LOG.addHandler(logging.NullHandler())

LOG_SQRT_2PI = 0.5 * math.log(2 * math.pi)

# one-sided truncation further than this many standard deviations into the
# tail is sampled by exponential accept-reject instead of inverse-CDF
TAIL_REJECTION_THRESHOLD = 4.0

# relative tolerance for negative eigenvalues of a covariance matrix
PSD_TOLERANCE = 1e-10


### generators ###
def make_rng(seed):
    """Return a PCG64 generator seeded from a SeedSequence

    args:
        seed: non-negative int or a numpy SeedSequence
    """
    if not isinstance(seed, np.random.SeedSequence):
        if (not isinstance(seed, (int, np.integer))
                or isinstance(seed, bool) or seed < 0):
            log_msg = 'seed "{}" must be a non-negative int'.format(seed)
            LOG.error(log_msg)
            raise Error(log_msg)
        seed = np.random.SeedSequence(int(seed))

    return np.random.Generator(np.random.PCG64(seed))


def spawn_rngs(seed, n):
    """Return n independent generators derived from a single seed"""
    children = np.random.SeedSequence(int(seed)).spawn(n)
    return [ make_rng(child) for child in children ]


### standard normal ###
def std_normal_cdf(z):
    return scipy.special.ndtr(z)


def std_normal_pdf(z):
    return np.exp(log_std_normal_pdf(z))


def log_std_normal_cdf(z):
    return scipy.special.log_ndtr(z)


def log_std_normal_pdf(z):
    z = np.asarray(z, dtype=float)
    return -0.5 * z * z - LOG_SQRT_2PI


def log_mills_ratio(z):
    """log(Phi(z) / phi(z)), finite for every finite z"""
    return log_std_normal_cdf(z) - log_std_normal_pdf(z)


def inverse_mills_ratio(z):
    """phi(z) / Phi(z) computed in log space"""
    return np.exp(-log_mills_ratio(z))


### truncated normal ###
class TruncationBounds:

    """Truncation interval, either bound may be infinite"""

    def __init__(self, lower=-np.inf, upper=np.inf):
        lower = float(lower)
        upper = float(upper)
        if math.isnan(lower) or math.isnan(upper) or not lower < upper:
            log_msg = ('truncation bounds lower "{}" must be below upper "{}"'
                       .format(lower, upper))
            LOG.error(log_msg)
            raise Error(log_msg)

        self.lower = lower
        self.upper = upper

    def __repr__(self):
        return 'TruncationBounds({}, {})'.format(self.lower, self.upper)


def _tail_rvs(a, rng):
    """Standard normal draws conditioned on z >= a, a large and positive.

    Exponential proposal with the optimal rate, accept-reject.
    """
    out = np.empty_like(a)
    pending = np.arange(a.size)
    while pending.size:
        aa = a[pending]
        rate = 0.5 * (aa + np.sqrt(aa * aa + 4.0))
        z = aa + rng.exponential(size=pending.size) / rate
        accept = rng.uniform(size=pending.size) <= np.exp(
            -0.5 * (z - rate) ** 2)
        out[pending[accept]] = z[accept]
        pending = pending[~accept]

    return out


def truncated_normal_rvs(mu, sd, lower, upper, rng):
    """Vectorized truncated normal draws

    args:
        mu, sd, lower, upper: broadcastable arrays, sd > 0, lower < upper
        rng: numpy Generator

    returns:
        array of draws with the broadcast shape
    """
    mu, sd, lower, upper = np.broadcast_arrays(
        np.asarray(mu, dtype=float), np.asarray(sd, dtype=float),
        np.asarray(lower, dtype=float), np.asarray(upper, dtype=float))
    shape = mu.shape
    mu, sd = mu.ravel(), sd.ravel()
    lower, upper = lower.ravel(), upper.ravel()

    if np.any(~(sd > 0)):
        log_msg = 'truncated normal standard deviation must be positive'
        LOG.error(log_msg)
        raise Error(log_msg)

    if np.any(~(lower < upper)):
        log_msg = 'truncated normal lower bound must be below upper bound'
        LOG.error(log_msg)
        raise Error(log_msg)

    a = (lower - mu) / sd
    b = (upper - mu) / sd
    z = np.empty_like(mu)

    free = np.isneginf(a) & np.isposinf(b)
    right_tail = (a > TAIL_REJECTION_THRESHOLD) & np.isposinf(b)
    left_tail = (b < -TAIL_REJECTION_THRESHOLD) & np.isneginf(a)
    inverse = ~(free | right_tail | left_tail)

    if np.any(free):
        z[free] = rng.standard_normal(size=int(free.sum()))

    if np.any(inverse):
        ai, bi = a[inverse], b[inverse]
        u = rng.uniform(size=ai.size)
        # work on the side of zero where the cdf keeps its precision
        upper_side = ai > 0
        zi = np.empty_like(ai)

        sa = scipy.special.ndtr(-ai[upper_side])
        sb = scipy.special.ndtr(-bi[upper_side])
        zi[upper_side] = -scipy.special.ndtri(
            sb + u[upper_side] * (sa - sb))

        pa = scipy.special.ndtr(ai[~upper_side])
        pb = scipy.special.ndtr(bi[~upper_side])
        zi[~upper_side] = scipy.special.ndtri(
            pa + u[~upper_side] * (pb - pa))

        z[inverse] = np.clip(zi, ai, bi)

    if np.any(right_tail):
        z[right_tail] = _tail_rvs(a[right_tail], rng)

    if np.any(left_tail):
        z[left_tail] = -_tail_rvs(-b[left_tail], rng)

    draws = np.clip(mu + sd * z, lower, upper)
    return draws.reshape(shape)


def draw_truncated_normal(mu, sigma2, bounds, rng):
    """Single draw from N(mu, sigma2) truncated to bounds

    args:
        mu: float
        sigma2: float > 0, variance
        bounds: TruncationBounds
        rng: numpy Generator

    returns:
        float
    """
    if not sigma2 > 0:
        log_msg = 'variance "{}" must be positive'.format(sigma2)
        LOG.error(log_msg)
        raise Error(log_msg)

    if not isinstance(bounds, TruncationBounds):
        bounds = TruncationBounds(*bounds)

    return float(truncated_normal_rvs(
        mu, math.sqrt(sigma2), bounds.lower, bounds.upper, rng))


### gamma, normal, wishart ###
def draw_gamma(shape, rate, rng, size=None):
    """Gamma draw parametrized so that the mean is shape / rate"""
    if np.any(~(np.asarray(shape) > 0)) or np.any(~(np.asarray(rate) > 0)):
        log_msg = ('gamma shape "{}" and rate "{}" must be positive'
                   .format(shape, rate))
        LOG.error(log_msg)
        raise Error(log_msg)

    draws = rng.gamma(shape, 1.0 / np.asarray(rate, dtype=float), size=size)
    if size is None and np.ndim(draws) == 0:
        return float(draws)
    return draws


def _psd_factor(cov):
    """Symmetric square root factor L with L L' = cov

    raises:
        NumericalError if cov is not symmetric PSD
    """
    cov = np.atleast_2d(np.asarray(cov, dtype=float))
    if cov.shape[0] != cov.shape[1] or not np.allclose(cov, cov.T,
                                                       rtol=1e-10,
                                                       atol=1e-12):
        log_msg = 'covariance matrix must be square and symmetric'
        LOG.error(log_msg)
        raise NumericalError(log_msg)

    if not np.all(np.isfinite(cov)):
        log_msg = 'covariance matrix has non-finite entries'
        LOG.error(log_msg)
        raise NumericalError(log_msg)

    eigval, eigvec = np.linalg.eigh(0.5 * (cov + cov.T))
    scale = max(1.0, float(np.max(np.abs(eigval))))
    if eigval.min() < -PSD_TOLERANCE * scale:
        log_msg = ('covariance matrix is not positive semi-definite, '
                   'smallest eigenvalue {}'.format(eigval.min()))
        LOG.error(log_msg)
        raise NumericalError(log_msg)

    return eigvec * np.sqrt(np.clip(eigval, 0.0, None))


def draw_mv_normal(mean, cov, rng):
    """Multivariate normal draw, a zero covariance returns mean exactly"""
    mean = np.asarray(mean, dtype=float)
    factor = _psd_factor(cov)
    if factor.shape[0] != mean.size:
        log_msg = ('mean of size {} does not match covariance of shape {}'
                   .format(mean.size, factor.shape))
        LOG.error(log_msg)
        raise NumericalError(log_msg)

    return mean + factor @ rng.standard_normal(size=mean.size)


def draw_wishart(dof, scale, rng):
    """2x2 Wishart draw with E[draw] = dof * scale"""
    scale = np.asarray(scale, dtype=float)
    if scale.shape != (2, 2):
        log_msg = 'Wishart scale must be 2x2, got {}'.format(scale.shape)
        LOG.error(log_msg)
        raise Error(log_msg)

    if not dof > 1:
        log_msg = 'Wishart degrees of freedom "{}" must exceed 1'.format(dof)
        LOG.error(log_msg)
        raise Error(log_msg)

    try:
        np.linalg.cholesky(scale)
    except np.linalg.LinAlgError:
        log_msg = 'Wishart scale {} is not positive definite'.format(
            scale.tolist())
        LOG.error(log_msg)
        raise NumericalError(log_msg)

    draw = scipy.stats.wishart.rvs(df=dof, scale=scale, random_state=rng)
    return 0.5 * (draw + draw.T)


def lognormal_mean(mu, sigma2):
    """Mean of exp(N(mu, sigma2))"""
    return np.exp(np.asarray(mu, dtype=float) + 0.5 * np.asarray(sigma2))

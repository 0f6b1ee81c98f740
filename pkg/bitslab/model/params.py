# -*- coding: utf-8 -*-

import enum
import logging

import numpy as np

from bitslab import Error, stats


__all__ = [
    'AuctionFormat',
    'ModelParams',
    'EquationPrior',
    'PriorParams',
    'CorrelatedPrior',
    'true_cate',
    'EQUATIONS',
]

LOG = logging.getLogger(__name__)
LOG.addHandler(logging.NullHandler())

# equation blocks: treated outcome, control outcome, competing bid
EQUATIONS = [ 'y1', 'y0', 'cp' ]

PSD_TOLERANCE = 1e-10


class AuctionFormat(enum.Enum):

    SPA = 'spa'
    FPA = 'fpa'

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            log_msg = ('auction format "{}" must be one of {}'
                       .format(value, [ f.value for f in cls ]))
            LOG.error(log_msg)
            raise Error(log_msg)


def _vector(name, values, size=None):
    try:
        arr = np.array(values, dtype=float).ravel()
    except (TypeError, ValueError):
        log_msg = '{} "{}" must be a list of numbers'.format(name, values)
        LOG.error(log_msg)
        raise Error(log_msg)

    if arr.size == 0 or np.any(~np.isfinite(arr)):
        log_msg = '{} "{}" must be a non-empty finite vector'.format(
            name, values)
        LOG.error(log_msg)
        raise Error(log_msg)

    if size is not None and arr.size != size:
        log_msg = '{} must have {} entries, got {}'.format(
            name, size, arr.size)
        LOG.error(log_msg)
        raise Error(log_msg)

    arr.setflags(write=False)
    return arr


def _psd_matrix(name, values, size):
    arr = np.array(values, dtype=float)
    if arr.ndim == 1 and arr.size == size:
        arr = np.diag(arr)
    if arr.shape != (size, size) or np.any(~np.isfinite(arr)):
        log_msg = '{} must be a finite {}x{} matrix'.format(name, size, size)
        LOG.error(log_msg)
        raise Error(log_msg)

    if not np.allclose(arr, arr.T):
        log_msg = '{} must be symmetric'.format(name)
        LOG.error(log_msg)
        raise Error(log_msg)

    eigval = np.linalg.eigvalsh(arr)
    if eigval.min() < -PSD_TOLERANCE * max(1.0, np.abs(eigval).max()):
        log_msg = '{} must be positive semi-definite'.format(name)
        LOG.error(log_msg)
        raise Error(log_msg)

    arr.setflags(write=False)
    return arr


class ModelParams:

    """Parameter vector of the trivariate lognormal model

    log Y(1), log Y(0) and log B_CP are normal with context means
    delta1[p], delta0[p], delta_cp[p]; rho correlates the outcome pair only.
    """

    def __init__(self, delta1, delta0, delta_cp, sigma1_sq, sigma0_sq,
                 sigma_cp_sq, rho=0.0, auction_format=None):
        self.delta1 = _vector('delta1', delta1)
        P = self.delta1.size
        self.delta0 = _vector('delta0', delta0, P)
        self.delta_cp = _vector('delta_cp', delta_cp, P)

        for name, value in [ ('sigma1_sq', sigma1_sq),
                             ('sigma0_sq', sigma0_sq),
                             ('sigma_cp_sq', sigma_cp_sq) ]:
            if (not isinstance(value, (int, float, np.floating))
                    or not np.isfinite(value) or not value > 0):
                log_msg = '{} "{}" must be a positive number'.format(
                    name, value)
                LOG.error(log_msg)
                raise Error(log_msg)

        self.sigma1_sq = float(sigma1_sq)
        self.sigma0_sq = float(sigma0_sq)
        self.sigma_cp_sq = float(sigma_cp_sq)

        if (not isinstance(rho, (int, float, np.floating))
                or not -1.0 < rho < 1.0):
            log_msg = 'rho "{}" must be in (-1, 1)'.format(rho)
            LOG.error(log_msg)
            raise Error(log_msg)
        self.rho = float(rho)

        if auction_format is not None:
            self.check_format(auction_format)

    @property
    def context_count(self):
        return self.delta1.size

    @property
    def outcome_cov(self):
        """2x2 covariance of (log Y(1), log Y(0))"""
        c = self.rho * np.sqrt(self.sigma1_sq * self.sigma0_sq)
        return np.array([[ self.sigma1_sq, c ], [ c, self.sigma0_sq ]])

    def check_format(self, auction_format):
        """FPA inference is only identified with sigma_cp_sq == 1"""
        auction_format = AuctionFormat.parse(auction_format)
        if auction_format is AuctionFormat.FPA and self.sigma_cp_sq != 1.0:
            log_msg = ('FPA requires sigma_cp_sq == 1, got {}'
                       .format(self.sigma_cp_sq))
            LOG.error(log_msg)
            raise Error(log_msg)

    def replace(self, **kwargs):
        values = {
            'delta1': self.delta1,
            'delta0': self.delta0,
            'delta_cp': self.delta_cp,
            'sigma1_sq': self.sigma1_sq,
            'sigma0_sq': self.sigma0_sq,
            'sigma_cp_sq': self.sigma_cp_sq,
            'rho': self.rho,
        }
        values.update(kwargs)
        return ModelParams(**values)

    @classmethod
    def initial(cls, P):
        """Sampler starting point: all deltas 0, all variances 1"""
        zeros = np.zeros(P)
        return cls(zeros, zeros, zeros, 1.0, 1.0, 1.0, 0.0)

    @classmethod
    def from_config_dict(cls, obj, auction_format=None):
        try:
            return cls(delta1=obj['delta1'],
                       delta0=obj['delta0'],
                       delta_cp=obj['delta_cp'],
                       sigma1_sq=obj['sigma1_sq'],
                       sigma0_sq=obj['sigma0_sq'],
                       sigma_cp_sq=obj['sigma_cp_sq'],
                       rho=obj.get('rho', 0.0),
                       auction_format=auction_format)
        except KeyError as e:
            log_msg = 'model parameters miss "{}"'.format(e.args[0])
            LOG.error(log_msg)
            raise Error(log_msg)

    def to_dict(self):
        return {
            'delta1': self.delta1.tolist(),
            'delta0': self.delta0.tolist(),
            'delta_cp': self.delta_cp.tolist(),
            'sigma1_sq': self.sigma1_sq,
            'sigma0_sq': self.sigma0_sq,
            'sigma_cp_sq': self.sigma_cp_sq,
            'rho': self.rho,
        }

    def __repr__(self):
        return 'ModelParams({})'.format(self.to_dict())


def true_cate(theta, p):
    """CATE of 0-based context p, a difference of lognormal means"""
    return float(stats.lognormal_mean(theta.delta1[p], theta.sigma1_sq)
                 - stats.lognormal_mean(theta.delta0[p], theta.sigma0_sq))


class EquationPrior:

    """Normal-gamma prior of one equation block

    precision ~ Gamma(alpha, beta), delta | sigma2 ~ N(mu, sigma2 * A^-1).
    alpha = beta = 0 and A = 0 is the uninformative prior.
    """

    def __init__(self, alpha, beta, mu, A):
        for name, value in [ ('alpha', alpha), ('beta', beta) ]:
            if (not isinstance(value, (int, float, np.floating))
                    or not np.isfinite(value) or value < 0):
                log_msg = '{} "{}" must be a non-negative number'.format(
                    name, value)
                LOG.error(log_msg)
                raise Error(log_msg)

        self.alpha = float(alpha)
        self.beta = float(beta)
        self.mu = _vector('mu', mu)
        self.A = _psd_matrix('A', A, self.mu.size)

    @classmethod
    def uninformative(cls, P):
        return cls(0.0, 0.0, np.zeros(P), np.zeros((P, P)))

    @classmethod
    def from_config_dict(cls, obj):
        return cls(obj['alpha'], obj['beta'], obj['mu'], obj['A'])

    def to_dict(self):
        return {
            'alpha': self.alpha,
            'beta': self.beta,
            'mu': self.mu.tolist(),
            'A': self.A.tolist(),
        }


class CorrelatedPrior:

    """Wishart prior on the outcome precision matrix with a joint normal
    prior on (delta1, delta0)

    Sigma^-1 ~ Wishart(nu, Xi^-1), vec(delta1, delta0) | Sigma ~
    N(mu_delta, Sigma kron A_delta^-1).
    """

    def __init__(self, nu, Xi, mu_delta, A_delta):
        if (not isinstance(nu, (int, float, np.floating))
                or not np.isfinite(nu) or not nu > 1):
            log_msg = 'nu "{}" must be a number above 1'.format(nu)
            LOG.error(log_msg)
            raise Error(log_msg)
        self.nu = float(nu)

        self.Xi = _psd_matrix('Xi', Xi, 2)
        try:
            np.linalg.cholesky(self.Xi)
        except np.linalg.LinAlgError:
            log_msg = 'Xi must be positive definite'
            LOG.error(log_msg)
            raise Error(log_msg)

        self.mu_delta = _vector('mu_delta', mu_delta)
        if self.mu_delta.size % 2:
            log_msg = 'mu_delta must stack delta1 and delta0'
            LOG.error(log_msg)
            raise Error(log_msg)

        self.A_delta = _psd_matrix('A_delta', A_delta,
                                   self.mu_delta.size // 2)

    @property
    def M(self):
        """prior mean as a P x 2 matrix, columns delta1 and delta0"""
        return self.mu_delta.reshape(2, -1).T

    @classmethod
    def default(cls, P):
        """Weak prior centred at unit outcome variances"""
        return cls(4.0, 4.0 * np.eye(2), np.zeros(2 * P), np.zeros((P, P)))

    @classmethod
    def from_config_dict(cls, obj):
        return cls(obj['nu'], obj['Xi'], obj['mu_delta'], obj['A_delta'])

    def to_dict(self):
        return {
            'nu': self.nu,
            'Xi': self.Xi.tolist(),
            'mu_delta': self.mu_delta.tolist(),
            'A_delta': self.A_delta.tolist(),
        }


class PriorParams:

    """Priors of the three equation blocks plus the optional correlated
    outcome prior"""

    def __init__(self, y1, y0, cp, correlated=None):
        P = y1.mu.size
        for name, prior in [ ('y1', y1), ('y0', y0), ('cp', cp) ]:
            if not isinstance(prior, EquationPrior) or prior.mu.size != P:
                log_msg = ('prior "{}" must be an EquationPrior over {} '
                           'contexts'.format(name, P))
                LOG.error(log_msg)
                raise Error(log_msg)

        if correlated is not None and (
                not isinstance(correlated, CorrelatedPrior)
                or correlated.mu_delta.size != 2 * P):
            log_msg = ('correlated prior must be a CorrelatedPrior over {} '
                       'contexts'.format(P))
            LOG.error(log_msg)
            raise Error(log_msg)

        self.y1 = y1
        self.y0 = y0
        self.cp = cp
        self.correlated = correlated

    @property
    def context_count(self):
        return self.y1.mu.size

    def equation(self, name):
        return getattr(self, name)

    @classmethod
    def uninformative(cls, P, correlated=False):
        return cls(EquationPrior.uninformative(P),
                   EquationPrior.uninformative(P),
                   EquationPrior.uninformative(P),
                   CorrelatedPrior.default(P) if correlated else None)

    @classmethod
    def from_config_dict(cls, obj):
        try:
            correlated = obj.get('correlated')
            return cls(EquationPrior.from_config_dict(obj['y1']),
                       EquationPrior.from_config_dict(obj['y0']),
                       EquationPrior.from_config_dict(obj['cp']),
                       CorrelatedPrior.from_config_dict(correlated)
                       if correlated else None)
        except KeyError as e:
            log_msg = 'prior parameters miss "{}"'.format(e.args[0])
            LOG.error(log_msg)
            raise Error(log_msg)

    def to_dict(self):
        obj = {
            'y1': self.y1.to_dict(),
            'y0': self.y0.to_dict(),
            'cp': self.cp.to_dict(),
        }
        if self.correlated is not None:
            obj['correlated'] = self.correlated.to_dict()
        return obj

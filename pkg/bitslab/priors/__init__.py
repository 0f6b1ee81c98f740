# -*- coding: utf-8 -*-

"""Prior hyperparameters from historical auction data

The potential-outcome equations are fitted by OLS on the rows where each
outcome is observed, the competing bid by a censored-normal (Tobit) MLE
for second-price data or a Probit MLE for first-price data. Point
estimates and asymptotic variances are then turned into normal-gamma
priors with matching means and variances.
"""

import logging

import numpy as np
import statsmodels.api as sm

from bitslab import ConvergenceError, DataError, NumericalError, stats
from bitslab.model import (AuctionFormat, EquationPrior, PriorParams,
                           EQUATIONS)


__all__ = [
    'MleResult',
    'OlsenParams',
    'fit_outcome_ols',
    'tobit_sample',
    'tobit_loglik',
    'tobit_gradient',
    'tobit_hessian',
    'fit_tobit_mle',
    'probit_sample',
    'probit_loglik',
    'probit_gradient',
    'probit_hessian',
    'fit_probit_mle',
    'moment_match_priors',
    'fit_priors',
]

LOG = logging.getLogger(__name__)
LOG.addHandler(logging.NullHandler())

GRADIENT_TOLERANCE = 1e-8
MAX_ITERATIONS = 100
MAX_STEP_HALVINGS = 50


class MleResult:

    """Estimates of one equation block with their asymptotic variances

    attributes:
        delta: per context mean estimates
        sigma2: variance estimate, 1.0 when fixed
        avar_delta: asymptotic covariance of sqrt(n) (delta_hat - delta)
        avar_sigma2: asymptotic variance of sqrt(n) (sigma2_hat - sigma2),
            None when sigma2 is fixed
        n: observations behind the estimates
        converged, iterations, loglik: optimizer report
    """

    def __init__(self, delta, sigma2, avar_delta, avar_sigma2, n,
                 converged=True, iterations=0, loglik=None):
        self.delta = np.asarray(delta, dtype=float)
        self.sigma2 = float(sigma2)
        self.avar_delta = np.asarray(avar_delta, dtype=float)
        self.avar_sigma2 = (None if avar_sigma2 is None
                            else float(avar_sigma2))
        self.n = int(n)
        self.converged = converged
        self.iterations = iterations
        self.loglik = loglik

    @property
    def fixed_sigma2(self):
        return self.avar_sigma2 is None

    @property
    def cov_delta(self):
        """finite-sample covariance of delta_hat"""
        return self.avar_delta / self.n

    @property
    def se_delta(self):
        return np.sqrt(np.diag(self.cov_delta))

    @property
    def se_sigma2(self):
        if self.fixed_sigma2:
            return 0.0
        return float(np.sqrt(self.avar_sigma2 / self.n))

    def to_dict(self):
        return {
            'delta': self.delta.tolist(),
            'sigma2': self.sigma2,
            'se_delta': self.se_delta.tolist(),
            'se_sigma2': self.se_sigma2,
            'n': self.n,
            'converged': self.converged,
            'iterations': self.iterations,
            'loglik': None if self.loglik is None else float(self.loglik),
        }

    def __repr__(self):
        return 'MleResult({})'.format(self.to_dict())


class OlsenParams:

    """Tobit parameters in the concave parametrization

    aleph = delta / sigma per context, beth = 1 / sigma.
    """

    def __init__(self, aleph, beth):
        if not beth > 0:
            log_msg = 'beth "{}" must be positive'.format(beth)
            LOG.error(log_msg)
            raise NumericalError(log_msg)

        self.aleph = np.asarray(aleph, dtype=float)
        self.beth = float(beth)

    @classmethod
    def from_vector(cls, vec):
        return cls(vec[:-1], vec[-1])

    def to_vector(self):
        return np.append(self.aleph, self.beth)

    @property
    def delta(self):
        return self.aleph / self.beth

    @property
    def sigma2(self):
        return 1.0 / (self.beth * self.beth)

    def jacobian(self):
        """Jacobian of (aleph, beth) -> (delta, sigma2)"""
        P = self.aleph.size
        J = np.zeros((P + 1, P + 1))
        J[:P, :P] = np.eye(P) / self.beth
        J[:P, P] = -self.aleph / self.beth ** 2
        J[P, P] = -2.0 / self.beth ** 3
        return J


### outcome equations ###
def fit_outcome_ols(data):
    """OLS of log Y(1) on the context dummies over wins, log Y(0) over
    losses

    returns:
        dict "y1", "y0" -> MleResult

    raises:
        DataError unless every context has at least two wins and two
        losses
    """
    P = data.context_count
    results = {}
    for name, rows in [ ('y1', data.win), ('y0', ~data.win) ]:
        ctx = data.context[rows]
        counts = np.bincount(ctx, minlength=P)
        if np.any(counts < 2):
            p = int(np.flatnonzero(counts < 2)[0])
            log_msg = ('{} regression needs at least 2 rows per context, '
                       'context {} has {}'.format(name, p + 1, counts[p]))
            LOG.error(log_msg)
            raise DataError(log_msg)

        y = np.log(data.outcome[rows])
        X = np.eye(P)[ctx]
        fit = sm.OLS(y, X).fit()
        n = y.size
        sigma2 = float(fit.ssr / n)
        avar_delta = sigma2 * np.linalg.inv(X.T @ X / n)

        results[name] = MleResult(fit.params, sigma2, avar_delta,
                                  2.0 * sigma2 * sigma2, n)
        LOG.debug('{} OLS on {} rows: delta {} sigma2 {}'
                  .format(name, n, results[name].delta.tolist(), sigma2))

    return results


### newton-raphson ###
def _newton(loglik, gradient, hessian, x0, sample, name, valid=None):
    x = np.asarray(x0, dtype=float)
    ll = loglik(x, sample)
    for iteration in range(1, MAX_ITERATIONS + 1):
        g = gradient(x, sample)
        if np.max(np.abs(g)) < GRADIENT_TOLERANCE:
            return x, iteration - 1, ll

        H = hessian(x, sample)
        try:
            step = np.linalg.solve(H, g)
        except np.linalg.LinAlgError:
            log_msg = '{} Hessian is singular at {}'.format(name, x.tolist())
            LOG.error(log_msg)
            raise NumericalError(log_msg)

        # halve the Newton step until the log-likelihood improves
        t = 1.0
        for _ in range(MAX_STEP_HALVINGS):
            candidate = x - t * step
            if valid is None or valid(candidate):
                candidate_ll = loglik(candidate, sample)
                if np.isfinite(candidate_ll) and candidate_ll >= ll:
                    break
            t *= 0.5
        else:
            log_msg = ('{} line search failed at iteration {}, gradient {}'
                       .format(name, iteration, g.tolist()))
            LOG.error(log_msg)
            raise ConvergenceError(log_msg)

        x = candidate
        ll = candidate_ll
        LOG.debug('{} iteration {}: loglik {:.12g} step {}'
                  .format(name, iteration, ll, t))

    g = gradient(x, sample)
    if np.max(np.abs(g)) < GRADIENT_TOLERANCE:
        return x, MAX_ITERATIONS, ll

    log_msg = ('{} did not converge in {} iterations, gradient norm {}'
               .format(name, MAX_ITERATIONS, np.max(np.abs(g))))
    LOG.error(log_msg)
    raise ConvergenceError(log_msg)


def _check_covariance(name, cov):
    cov = 0.5 * (cov + cov.T)
    eigval = np.linalg.eigvalsh(cov)
    if not np.all(np.isfinite(eigval)) or eigval.min() < 0:
        log_msg = '{} covariance is not positive semi-definite'.format(name)
        LOG.error(log_msg)
        raise NumericalError(log_msg)
    return cov


### Tobit ###
def tobit_sample(data):
    """Competing bid rows for the Tobit likelihood

    Observed competing bids enter with their log value, losses with the
    log bid as a lower bound. Losses at a zero bid carry no information
    and are dropped.
    """
    observed = data.observed_cp
    lower = data.lower_cp & (data.bid > 0)
    rows = observed | lower
    value = np.where(observed, data.cp_value, data.bid)[rows]
    return {
        'context': data.context[rows],
        'context_count': data.context_count,
        'value': np.log(value),
        'observed': observed[rows],
    }


def _tobit_terms(vec, sample):
    aleph = vec[:-1]
    beth = vec[-1]
    a = aleph[sample['context']]
    y = sample['value']
    obs = sample['observed']
    e = beth * y[obs] - a[obs]
    u = a[~obs] - beth * y[~obs]
    return a, beth, y, obs, e, u


def tobit_loglik(vec, sample):
    """Censored-normal log-likelihood at vec = (aleph..., beth)"""
    _, beth, _, _, e, u = _tobit_terms(vec, sample)
    if not beth > 0:
        return -np.inf
    return float(e.size * np.log(beth)
                 + np.sum(stats.log_std_normal_pdf(e))
                 + np.sum(stats.log_std_normal_cdf(u)))


def tobit_gradient(vec, sample):
    _, beth, y, obs, e, u = _tobit_terms(vec, sample)
    P = sample['context_count']
    ctx = sample['context']
    lam = stats.inverse_mills_ratio(u)

    grad = np.zeros(P + 1)
    grad[:P] = (np.bincount(ctx[obs], weights=e, minlength=P)
                + np.bincount(ctx[~obs], weights=lam, minlength=P))
    grad[P] = (e.size / beth - np.sum(e * y[obs])
               - np.sum(lam * y[~obs]))
    return grad


def tobit_hessian(vec, sample):
    _, beth, y, obs, e, u = _tobit_terms(vec, sample)
    P = sample['context_count']
    ctx = sample['context']
    lam = stats.inverse_mills_ratio(u)
    curv = lam * (u + lam)

    H = np.zeros((P + 1, P + 1))
    H[:P, :P] = -np.diag(np.bincount(ctx[obs], minlength=P)
                         + np.bincount(ctx[~obs], weights=curv, minlength=P))
    cross = (np.bincount(ctx[obs], weights=y[obs], minlength=P)
             + np.bincount(ctx[~obs], weights=curv * y[~obs], minlength=P))
    H[:P, P] = cross
    H[P, :P] = cross
    H[P, P] = (-e.size / beth ** 2 - np.sum(y[obs] ** 2)
               - np.sum(curv * y[~obs] ** 2))
    return H


def fit_tobit_mle(data):
    """Censored-normal MLE of the competing bid equation

    Newton-Raphson in (aleph, beth) from aleph = 0, beth = 1; estimates
    and their covariance are mapped back with the delta method.

    returns:
        MleResult

    raises:
        ConvergenceError when a context has no observed competing bid or
        the iterations do not converge
    """
    sample = tobit_sample(data)
    P = data.context_count
    counts = np.bincount(sample['context'][sample['observed']], minlength=P)
    if np.any(counts == 0):
        p = int(np.flatnonzero(counts == 0)[0])
        log_msg = ('context {} has no observed competing bid, the Tobit '
                   'likelihood has no maximum'.format(p + 1))
        LOG.error(log_msg)
        raise ConvergenceError(log_msg)

    x0 = OlsenParams(np.zeros(P), 1.0).to_vector()
    x, iterations, ll = _newton(tobit_loglik, tobit_gradient, tobit_hessian,
                                x0, sample, 'tobit',
                                valid=lambda v: v[-1] > 0)
    olsen = OlsenParams.from_vector(x)

    H = tobit_hessian(x, sample)
    J = olsen.jacobian()
    try:
        cov = -J @ np.linalg.solve(H, J.T)
    except np.linalg.LinAlgError:
        log_msg = 'tobit Hessian is singular at the optimum'
        LOG.error(log_msg)
        raise NumericalError(log_msg)
    cov = _check_covariance('tobit', cov)

    n = sample['value'].size
    LOG.info('tobit converged in {} iterations on {} rows: delta_cp {} '
             'sigma_cp_sq {:.6g}'.format(iterations, n, olsen.delta.tolist(),
                                         olsen.sigma2))
    # block diagonal of the joint covariance
    return MleResult(olsen.delta, olsen.sigma2, n * cov[:P, :P],
                     n * cov[P, P], n, True, iterations, ll)


### Probit ###
def probit_sample(data):
    """Win indicators against the log bid, zero bids dropped"""
    rows = data.bid > 0
    return {
        'context': data.context[rows],
        'context_count': data.context_count,
        'log_bid': np.log(data.bid[rows]),
        'win': data.win[rows],
    }


def _probit_index(delta, sample):
    return sample['log_bid'] - delta[sample['context']]


def probit_loglik(delta, sample):
    """Log-likelihood of winning, P(win) = Phi(log b - delta)"""
    v = _probit_index(delta, sample)
    win = sample['win']
    return float(np.sum(stats.log_std_normal_cdf(v[win]))
                 + np.sum(stats.log_std_normal_cdf(-v[~win])))


def probit_gradient(delta, sample):
    v = _probit_index(delta, sample)
    win = sample['win']
    score = np.where(win, -stats.inverse_mills_ratio(v),
                     stats.inverse_mills_ratio(-v))
    return np.bincount(sample['context'], weights=score,
                       minlength=sample['context_count'])


def probit_hessian(delta, sample):
    v = _probit_index(delta, sample)
    win = sample['win']
    lam_win = stats.inverse_mills_ratio(v)
    lam_loss = stats.inverse_mills_ratio(-v)
    curv = np.where(win, lam_win * (v + lam_win),
                    lam_loss * (lam_loss - v))
    return -np.diag(np.bincount(sample['context'], weights=curv,
                                minlength=sample['context_count']))


def fit_probit_mle(data):
    """Probit MLE of the competing bid means with sigma_cp_sq = 1

    returns:
        MleResult with avar_sigma2 None

    raises:
        ConvergenceError when a context has only wins or only losses
        (perfect separation)
    """
    sample = probit_sample(data)
    P = data.context_count
    totals = np.bincount(sample['context'], minlength=P)
    wins = np.bincount(sample['context'][sample['win']], minlength=P)
    separated = (wins == 0) | (wins == totals)
    if np.any(separated):
        p = int(np.flatnonzero(separated)[0])
        log_msg = ('context {} has {} wins in {} auctions, perfect '
                   'separation'.format(p + 1, wins[p], totals[p]))
        LOG.error(log_msg)
        raise ConvergenceError(log_msg)

    x, iterations, ll = _newton(probit_loglik, probit_gradient,
                                probit_hessian, np.zeros(P), sample,
                                'probit')

    H = probit_hessian(x, sample)
    try:
        cov = -np.linalg.inv(H)
    except np.linalg.LinAlgError:
        log_msg = 'probit Hessian is singular at the optimum'
        LOG.error(log_msg)
        raise NumericalError(log_msg)
    cov = _check_covariance('probit', cov)

    n = sample['log_bid'].size
    LOG.info('probit converged in {} iterations on {} rows: delta_cp {}'
             .format(iterations, n, x.tolist()))
    return MleResult(x, 1.0, n * cov, None, n, True, iterations, ll)


### priors ###
def _equation_prior(name, result, n):
    if not result.converged:
        log_msg = '{} estimates did not converge, no prior'.format(name)
        LOG.error(log_msg)
        raise ConvergenceError(log_msg)

    if n is None:
        n = result.n

    try:
        np.linalg.cholesky(result.avar_delta)
        A = n * result.sigma2 * np.linalg.inv(result.avar_delta)
    except np.linalg.LinAlgError:
        log_msg = ('{} asymptotic covariance of delta is not positive '
                   'definite'.format(name))
        LOG.error(log_msg)
        raise NumericalError(log_msg)
    A = 0.5 * (A + A.T)

    if result.fixed_sigma2:
        return EquationPrior(0.0, 0.0, result.delta, A)

    sigma2 = result.sigma2
    if not (sigma2 > 0 and result.avar_sigma2 > 0):
        log_msg = ('{} variance estimate {} with asymptotic variance {} '
                   'cannot be matched'.format(name, sigma2,
                                              result.avar_sigma2))
        LOG.error(log_msg)
        raise NumericalError(log_msg)

    # Gamma(alpha, beta) on the precision: mean 1 / sigma2, variance
    # Avar(1 / sigma2) / n with Avar(1 / sigma2) = Avar(sigma2) / sigma2^4
    alpha = n * sigma2 ** 2 / result.avar_sigma2
    return EquationPrior(alpha, alpha * sigma2, result.delta, A)


def moment_match_priors(estimates, n=None):
    """Normal-gamma priors whose moments match the estimates

    mu = delta_hat, A = n sigma2_hat Avar(delta_hat)^-1,
    alpha = n sigma2_hat^2 / Avar(sigma2_hat), beta = alpha sigma2_hat,
    so the prior precision has mean 1 / sigma2_hat. A fixed variance gets
    alpha = beta = 0.

    args:
        estimates: dict "y1", "y0", "cp" -> MleResult
        n: history size, each estimate's own row count when None

    returns:
        PriorParams
    """
    missing = [ name for name in EQUATIONS if name not in estimates ]
    if missing:
        log_msg = 'estimates miss equations {}'.format(missing)
        LOG.error(log_msg)
        raise DataError(log_msg)

    return PriorParams(*[ _equation_prior(name, estimates[name], n)
                          for name in EQUATIONS ])


def fit_priors(data, auction_format):
    """Fit every equation on a history and moment-match the priors

    returns:
        (PriorParams, dict equation name -> MleResult)
    """
    auction_format = AuctionFormat.parse(auction_format)
    data.validate(auction_format)

    estimates = fit_outcome_ols(data)
    if auction_format is AuctionFormat.SPA:
        estimates['cp'] = fit_tobit_mle(data)
    else:
        estimates['cp'] = fit_probit_mle(data)

    return moment_match_priors(estimates), estimates

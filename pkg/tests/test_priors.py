# -*- coding: utf-8 -*-

import sys
import os
import inspect

import numpy as np
import pytest

path = os.path.abspath(
    os.path.split(inspect.getfile( inspect.currentframe() ))[0])
sys.path.insert(0, os.path.split(path)[0])

from bitslab import (ConvergenceError, DataError, NumericalError, env,
                     gibbs, priors, stats)
from bitslab.gibbs import GibbsSettings
from bitslab.model import AuctionData, ModelParams
from bitslab.priors import MleResult, OlsenParams


def spa_theta(P=1):
    return ModelParams([ 0.809 ] * P, [ 0.22 ] * P,
                       [ 0.4 + 0.2 * p for p in range(P) ], 0.49, 0.81, 0.25)


def fpa_theta():
    return ModelParams([ 0.736 ], [ 0.22 ], [ 0.481 ], 0.49, 0.81, 1.0)


def history(theta, fmt, n, seed, grid=(0.6, 1.0, 1.5, 2.5)):
    rng = stats.make_rng(seed)
    contexts = rng.integers(theta.context_count, size=n)
    bids = rng.choice(grid, size=n)
    y1, y0, b_cp = env.draw_units(theta, contexts, rng)
    win, outcome, cp_value, cp_code, _ = env.resolve_auctions(
        fmt, bids, y1, y0, b_cp)
    data = AuctionData(theta.context_count)
    data.extend(bids, contexts, win, outcome, cp_value, cp_code)
    return data


def numeric_gradient(f, x, sample, h=1e-6):
    grad = np.zeros(x.size)
    for i in range(x.size):
        e = np.zeros(x.size)
        e[i] = h
        grad[i] = (f(x + e, sample) - f(x - e, sample)) / (2 * h)
    return grad


def numeric_hessian(g, x, sample, h=1e-6):
    H = np.zeros((x.size, x.size))
    for i in range(x.size):
        e = np.zeros(x.size)
        e[i] = h
        H[:, i] = (g(x + e, sample) - g(x - e, sample)) / (2 * h)
    return H


class TestTobit:

    def setup_method(self):
        self.data = history(spa_theta(2), 'spa', 400, 1)
        self.sample = priors.tobit_sample(self.data)
        self.point = np.array([ 0.7, 1.1, 1.6 ])

    def test_gradient(self):
        exact = priors.tobit_gradient(self.point, self.sample)
        approx = numeric_gradient(priors.tobit_loglik, self.point,
                                  self.sample)
        assert np.allclose(exact, approx, rtol=1e-5, atol=1e-4)

    def test_hessian(self):
        exact = priors.tobit_hessian(self.point, self.sample)
        approx = numeric_hessian(priors.tobit_gradient, self.point,
                                 self.sample)
        assert np.allclose(exact, approx, rtol=1e-5, atol=1e-4)

    def test_sample_bounds(self):
        lower = ~self.sample['observed']
        assert lower.sum() == int((~self.data.win).sum())
        assert np.all(np.isfinite(self.sample['value']))

    def test_recovers_truth(self):
        data = history(spa_theta(2), 'spa', 20000, 2)
        result = priors.fit_tobit_mle(data)
        assert result.converged
        assert np.allclose(result.delta, [ 0.4, 0.6 ], atol=0.03)
        assert abs(result.sigma2 - 0.25) < 0.02
        assert np.all(result.se_delta < 0.02)

    def test_no_observed_competing_bid(self):
        data = AuctionData(1)
        data.extend([ 1.0, 1.0 ], [ 0, 0 ], [ False, False ], [ 1.0, 2.0 ],
                    [ 1.0, 1.0 ], [ 1, 1 ])
        with pytest.raises(ConvergenceError):
            priors.fit_tobit_mle(data)


class TestOlsenParams:

    def test_round_trip(self):
        olsen = OlsenParams([ 0.8, 1.2 ], 2.0)
        assert np.allclose(olsen.delta, [ 0.4, 0.6 ])
        assert olsen.sigma2 == 0.25

    def test_jacobian(self):
        vec = np.array([ 0.8, 1.2, 2.0 ])
        J = OlsenParams.from_vector(vec).jacobian()

        def mapped(v):
            olsen = OlsenParams.from_vector(v)
            return np.append(olsen.delta, olsen.sigma2)

        h = 1e-6
        approx = np.zeros((3, 3))
        for i in range(3):
            e = np.zeros(3)
            e[i] = h
            approx[:, i] = (mapped(vec + e) - mapped(vec - e)) / (2 * h)
        assert np.allclose(J, approx, atol=1e-6)

    def test_non_positive_beth(self):
        with pytest.raises(NumericalError):
            OlsenParams([ 0.0 ], 0.0)


class TestProbit:

    def setup_method(self):
        self.data = history(spa_theta(2).replace(sigma_cp_sq=1.0), 'fpa',
                            400, 3)
        self.sample = priors.probit_sample(self.data)
        self.point = np.array([ 0.3, 0.8 ])

    def test_gradient(self):
        exact = priors.probit_gradient(self.point, self.sample)
        approx = numeric_gradient(priors.probit_loglik, self.point,
                                  self.sample)
        assert np.allclose(exact, approx, rtol=1e-5, atol=1e-4)

    def test_hessian(self):
        exact = priors.probit_hessian(self.point, self.sample)
        approx = numeric_hessian(priors.probit_gradient, self.point,
                                 self.sample)
        assert np.allclose(exact, approx, rtol=1e-5, atol=1e-4)

    def test_recovers_truth(self):
        data = history(fpa_theta(), 'fpa', 20000, 4,
                       grid=(0.3, 0.8, 1.6, 3.0))
        result = priors.fit_probit_mle(data)
        assert abs(result.delta[0] - 0.481) < 0.05
        assert result.fixed_sigma2 and result.sigma2 == 1.0
        assert result.se_sigma2 == 0.0

    def test_perfect_separation(self):
        data = AuctionData(1)
        data.extend([ 1.0, 1.0 ], [ 0, 0 ], [ True, True ], [ 1.0, 2.0 ],
                    [ 1.0, 1.0 ], [ 2, 2 ])
        with pytest.raises(ConvergenceError):
            priors.fit_probit_mle(data)

    def test_hessian_negative_definite_at_optimum(self):
        data = history(fpa_theta(), 'fpa', 5000, 8,
                       grid=(0.3, 0.8, 1.6, 3.0))
        result = priors.fit_probit_mle(data)
        sample = priors.probit_sample(data)
        assert np.max(np.abs(priors.probit_gradient(result.delta,
                                                    sample))) < 1e-6
        H = priors.probit_hessian(result.delta, sample)
        assert np.all(np.linalg.eigvalsh(H) < 0)


class TestOutcomeOls:

    def test_recovers_truth(self):
        data = history(spa_theta(), 'spa', 20000, 5)
        results = priors.fit_outcome_ols(data)
        assert abs(results['y1'].delta[0] - 0.809) < 0.03
        assert abs(results['y0'].delta[0] - 0.22) < 0.03
        assert abs(results['y1'].sigma2 - 0.49) < 0.03
        assert results['y1'].avar_sigma2 == pytest.approx(
            2 * results['y1'].sigma2 ** 2)

    def test_needs_two_rows_per_context(self):
        data = AuctionData(1)
        data.extend([ 1.0, 1.0, 1.0 ], [ 0, 0, 0 ], [ True, False, False ],
                    [ 2.0, 1.0, 1.5 ], [ 0.5, 1.0, 1.0 ], [ 0, 1, 1 ])
        with pytest.raises(DataError):
            priors.fit_outcome_ols(data)


class TestMomentMatching:

    def estimates(self, cp_fixed=False):
        result = MleResult([ 1.0 ], 0.5, [ [ 2.0 ] ], 0.5, 100)
        cp = (MleResult([ 0.4 ], 1.0, [ [ 1.0 ] ], None, 100) if cp_fixed
              else result)
        return { 'y1': result, 'y0': result, 'cp': cp }

    def test_normal_gamma_moments(self):
        prior = priors.moment_match_priors(self.estimates()).y1
        assert prior.mu.tolist() == [ 1.0 ]
        assert prior.A[0, 0] == pytest.approx(25.0)
        assert prior.alpha == pytest.approx(50.0)
        assert prior.beta == pytest.approx(25.0)
        # precision prior mean is 1 / sigma2_hat
        assert prior.alpha / prior.beta == pytest.approx(2.0)

    def test_precision_variance_is_delta_method(self):
        # Avar(1 / sigma2) = Avar(sigma2) / sigma2^4, per row
        prior = priors.moment_match_priors(self.estimates()).y1
        assert prior.alpha / prior.beta ** 2 == pytest.approx(
            0.5 / 0.5 ** 4 / 100)

    def test_fixed_variance(self):
        prior = priors.moment_match_priors(self.estimates(cp_fixed=True)).cp
        assert prior.alpha == 0.0 and prior.beta == 0.0
        assert prior.A[0, 0] == pytest.approx(100.0)

    def test_history_size_override(self):
        prior = priors.moment_match_priors(self.estimates(), n=10).y1
        assert prior.A[0, 0] == pytest.approx(2.5)

    def test_missing_equation(self):
        estimates = self.estimates()
        del estimates['cp']
        with pytest.raises(DataError):
            priors.moment_match_priors(estimates)

    def test_not_converged(self):
        estimates = self.estimates()
        estimates['y0'] = MleResult([ 1.0 ], 0.5, [ [ 2.0 ] ], 0.5, 100,
                                    converged=False)
        with pytest.raises(ConvergenceError):
            priors.moment_match_priors(estimates)

    def test_singular_covariance(self):
        estimates = self.estimates()
        estimates['y1'] = MleResult([ 1.0 ], 0.5, [ [ 0.0 ] ], 0.5, 100)
        with pytest.raises(NumericalError):
            priors.moment_match_priors(estimates)


class TestFitPriors:

    def test_spa(self):
        data = history(spa_theta(), 'spa', 5000, 6)
        fitted, estimates = priors.fit_priors(data, 'spa')
        assert sorted(estimates) == [ 'cp', 'y0', 'y1' ]
        assert fitted.cp.alpha > 0
        assert abs(fitted.cp.mu[0] - 0.4) < 0.05
        assert estimates['cp'].to_dict()['n'] == 5000

    def test_fpa(self):
        data = history(fpa_theta(), 'fpa', 5000, 7,
                       grid=(0.3, 0.8, 1.6, 3.0))
        fitted, _ = priors.fit_priors(data, 'fpa')
        assert fitted.cp.alpha == 0.0
        assert fitted.y1.alpha > 0

    @pytest.mark.parametrize('fmt, theta, grid', [
        ('spa', spa_theta(2), (0.6, 1.0, 1.5, 2.5)),
        ('fpa', fpa_theta(), (0.3, 0.8, 1.6, 3.0)),
    ])
    def test_covariances_are_psd(self, fmt, theta, grid):
        data = history(theta, fmt, 5000, 9, grid=grid)
        _, estimates = priors.fit_priors(data, fmt)
        for result in estimates.values():
            cov = result.cov_delta
            assert np.allclose(cov, cov.T)
            assert np.all(np.linalg.eigvalsh(cov) > 0)
            assert result.fixed_sigma2 or result.avar_sigma2 > 0

    def test_priors_reproduce_estimates(self):
        data = history(spa_theta(), 'spa', 5000, 10)
        fitted, estimates = priors.fit_priors(data, 'spa')
        draws = gibbs.sample_posterior(
            data, fitted, ModelParams.initial(1),
            GibbsSettings(draws=400, burn_in=200, thinning=5), 'spa',
            stats.make_rng(11))
        mean = draws.mean()
        assert abs(mean.delta1[0] - estimates['y1'].delta[0]) < 0.05
        assert abs(mean.delta0[0] - estimates['y0'].delta[0]) < 0.05
        assert abs(mean.delta_cp[0] - estimates['cp'].delta[0]) < 0.03
        assert abs(mean.sigma_cp_sq - estimates['cp'].sigma2) < 0.03

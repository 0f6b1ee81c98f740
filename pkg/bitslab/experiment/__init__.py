# -*- coding: utf-8 -*-

"""Experiment configuration

An experiment is one data generating process, one grid of bids and a
list of policies, each run for a number of independent epochs.
"""

import copy
import logging

import numpy as np

from bitslab import ConfigError, Error, config, env
from bitslab.gibbs import GibbsSettings
from bitslab.model import (AuctionFormat, BidGrid, ContextSpec, ModelParams,
                           PriorParams, true_cate)
from bitslab.policies import CONTEXT_ASSIGNMENTS, registered
from bitslab.policies.decision import STOPPING_MODES


__all__ = [ 'StoppingSettings', 'ExperimentConfig', 'merge_config_dicts',
            'load_experiment' ]

LOG = logging.getLogger(__name__)
LOG.addHandler(logging.NullHandler())

MAX_ROUNDS = 100000
MAX_BATCH_SIZE = 1000000
MAX_EPOCHS = 100000

DEFAULT_THRESHOLDS = {
    'rounds': None,
    'noncontextual': 0.95,
    'posterior_odds': 19.0,
    'contextual_min': 0.95,
    'ate_grid': 0.95,
}

STOPPING_WEIGHTS = [ 'known', 'empirical' ]

CONFIG_KEYS = [ 'preset', 'description', 'format', 'contexts', 'theta',
                'grids', 'arms', 'rounds', 'batch_size', 'epochs',
                'full_epochs', 'policies', 'gibbs', 'stopping', 'seed',
                'context_assignment', 'disclosure', 'priors' ]


class StoppingSettings:

    """Stopping criterion of the adaptive policies

    The round budget always applies on top of the criterion.
    """

    def __init__(self, mode='rounds', threshold=None, weights='known'):
        if mode not in STOPPING_MODES:
            log_msg = ('stopping mode "{}" must be one of {}'
                       .format(mode, STOPPING_MODES))
            LOG.error(log_msg)
            raise ConfigError(log_msg)
        self.mode = mode

        if threshold is None:
            threshold = DEFAULT_THRESHOLDS[mode]
        if threshold is not None and (
                not isinstance(threshold, (int, float))
                or not threshold > 0):
            log_msg = 'stopping threshold "{}" must be a positive number'\
                .format(threshold)
            LOG.error(log_msg)
            raise ConfigError(log_msg)
        self.threshold = threshold

        if weights not in STOPPING_WEIGHTS:
            log_msg = ('stopping weights "{}" must be one of {}'
                       .format(weights, STOPPING_WEIGHTS))
            LOG.error(log_msg)
            raise ConfigError(log_msg)
        self.weights = weights

    @classmethod
    def from_config_dict(cls, obj):
        obj = dict(obj or {})
        unknown = set(obj) - set([ 'mode', 'threshold', 'weights' ])
        if unknown:
            log_msg = 'unknown stopping options {}'.format(sorted(unknown))
            LOG.error(log_msg)
            raise ConfigError(log_msg)
        return cls(**obj)

    def to_dict(self):
        return {
            'mode': self.mode,
            'threshold': self.threshold,
            'weights': self.weights,
        }


class ExperimentConfig:

    """Validated experiment description"""

    def __init__(self, auction_format, theta, contexts, grid, rounds,
                 batch_size, epochs=100, policies=None, gibbs=None,
                 stopping=None, seed=0, context_assignment='equal',
                 disclosure='censored', priors=None, name=None,
                 ate_grid_max_combinations=None):
        """
        args:
            auction_format: AuctionFormat or "spa" / "fpa"
            theta: ModelParams, ground truth
            contexts: ContextSpec, F_x
            grid: BidGrid
            rounds: int, round budget T
            batch_size: int, impressions per round n_t
            epochs: int, independent replications E
            policies: list of policy names, all registered ones by default
            gibbs: GibbsSettings
            stopping: StoppingSettings
            seed: int, epoch e uses seed + e
            context_assignment: "equal" or "random"
            disclosure: "censored", or "full" to observe every SPA
                competing bid
            priors: PriorParams for BITS, uninformative when None
            name: preset name or label
            ate_grid_max_combinations: cap of the ate_grid stopping mode
        """
        self.auction_format = AuctionFormat.parse(auction_format)
        self.name = name

        self.theta = theta
        self.theta.check_format(self.auction_format)
        self.contexts = contexts
        self.grid = grid
        P = contexts.count
        if theta.context_count != P or grid.count != P:
            log_msg = ('contexts {}, parameters {} and grids {} must agree '
                       'on the number of contexts'
                       .format(P, theta.context_count, grid.count))
            LOG.error(log_msg)
            raise ConfigError(log_msg)

        for key, value, upper, lower in [
                ('rounds', rounds, MAX_ROUNDS, 0),
                ('batch_size', batch_size, MAX_BATCH_SIZE, 1),
                ('epochs', epochs, MAX_EPOCHS, 1) ]:
            if (not isinstance(value, int) or isinstance(value, bool)
                    or value < lower or value > upper):
                log_msg = ('{} "{}" must be an int between {} and {}'
                           .format(key, value, lower, upper))
                LOG.error(log_msg)
                raise ConfigError(log_msg)
        self.rounds = rounds
        self.batch_size = batch_size
        self.epochs = epochs

        if policies is None:
            policies = [ 'bits', 'ab', 'etc', 'vanilla_ts' ]
        unknown = [ p for p in policies if p not in registered ]
        if not policies or unknown:
            log_msg = ('policies {} must be a non-empty list from {}'
                       .format(policies, sorted(registered)))
            LOG.error(log_msg)
            raise ConfigError(log_msg)
        if 'etc' in policies and rounds % 2:
            log_msg = ('explore-then-commit needs an even number of rounds, '
                       'got {}'.format(rounds))
            LOG.error(log_msg)
            raise ConfigError(log_msg)
        self.policies = list(policies)

        self.gibbs = gibbs if gibbs is not None else GibbsSettings()
        self.stopping = (stopping if stopping is not None
                         else StoppingSettings())
        if self.stopping.mode in ('noncontextual', 'posterior_odds') \
                and P != 1:
            log_msg = ('stopping mode "{}" needs a single context, got {}'
                       .format(self.stopping.mode, P))
            LOG.error(log_msg)
            raise ConfigError(log_msg)

        if (not isinstance(seed, int) or isinstance(seed, bool)
                or seed < 0):
            log_msg = 'seed "{}" must be a non-negative int'.format(seed)
            LOG.error(log_msg)
            raise ConfigError(log_msg)
        self.seed = seed

        if context_assignment not in CONTEXT_ASSIGNMENTS:
            log_msg = ('context_assignment "{}" must be one of {}'
                       .format(context_assignment, CONTEXT_ASSIGNMENTS))
            LOG.error(log_msg)
            raise ConfigError(log_msg)
        if context_assignment == 'equal' and batch_size % P:
            log_msg = ('batch size {} must be divisible by {} contexts'
                       .format(batch_size, P))
            LOG.error(log_msg)
            raise ConfigError(log_msg)
        self.context_assignment = context_assignment

        if disclosure not in env.DISCLOSURE_OPTIONS:
            log_msg = ('disclosure "{}" must be one of {}'
                       .format(disclosure, env.DISCLOSURE_OPTIONS))
            LOG.error(log_msg)
            raise ConfigError(log_msg)
        if (disclosure != 'censored'
                and self.auction_format is AuctionFormat.FPA):
            log_msg = 'FPA experiments only support censored disclosure'
            LOG.error(log_msg)
            raise ConfigError(log_msg)
        self.disclosure = disclosure

        if priors is not None and priors.context_count != P:
            log_msg = ('priors cover {} contexts, experiment has {}'
                       .format(priors.context_count, P))
            LOG.error(log_msg)
            raise ConfigError(log_msg)
        self.priors = priors

        if ate_grid_max_combinations is None:
            ate_grid_max_combinations = config.BASE[
                'ATE_GRID_MAX_COMBINATIONS']
        self.ate_grid_max_combinations = ate_grid_max_combinations

    @property
    def true_cate(self):
        return np.array([ true_cate(self.theta, p)
                          for p in range(self.contexts.count) ])

    @property
    def true_ate(self):
        return float(np.dot(self.contexts.probabilities, self.true_cate))

    def oracle(self):
        return env.OracleCard(self.auction_format, self.theta, self.grid)

    @classmethod
    def from_config_dict(cls, obj, arms=None, full=False):
        """Build from a preset-style dict

        args:
            obj: dict, see etc/presets/*.yaml
            arms: key of obj["grids"] to use, obj["arms"] when None
            full: use obj["full_epochs"] instead of obj["epochs"]

        raises:
            ConfigError on anything invalid
        """
        if not isinstance(obj, dict):
            log_msg = 'experiment configuration must be a mapping'
            LOG.error(log_msg)
            raise ConfigError(log_msg)

        unknown = set(obj) - set(CONFIG_KEYS)
        if unknown:
            log_msg = ('unknown experiment options {}'
                       .format(sorted(unknown)))
            LOG.error(log_msg)
            raise ConfigError(log_msg)

        try:
            for key in [ 'format', 'contexts', 'theta', 'grids', 'rounds',
                         'batch_size' ]:
                if key not in obj:
                    log_msg = 'experiment configuration misses "{}"'.format(
                        key)
                    LOG.error(log_msg)
                    raise ConfigError(log_msg)

            auction_format = AuctionFormat.parse(obj['format'])

            grids = dict((int(k), v) for k, v in obj['grids'].items())
            if arms is None:
                arms = obj.get('arms', min(grids))
            if int(arms) not in grids:
                log_msg = ('no grid with {} arms, choose from {}'
                           .format(arms, sorted(grids)))
                LOG.error(log_msg)
                raise ConfigError(log_msg)

            epochs = obj.get('epochs', 100)
            if full:
                epochs = obj.get('full_epochs', epochs)

            priors = obj.get('priors')
            if priors is not None:
                priors = PriorParams.from_config_dict(priors)

            return cls(
                auction_format=auction_format,
                theta=ModelParams.from_config_dict(obj['theta']),
                contexts=ContextSpec.from_config_dict(obj['contexts']),
                grid=BidGrid.from_config_dict(grids[int(arms)]),
                rounds=obj['rounds'],
                batch_size=obj['batch_size'],
                epochs=epochs,
                policies=obj.get('policies'),
                gibbs=GibbsSettings.from_config_dict(obj.get('gibbs')),
                stopping=StoppingSettings.from_config_dict(
                    obj.get('stopping')),
                seed=obj.get('seed', 0),
                context_assignment=obj.get('context_assignment', 'equal'),
                disclosure=obj.get('disclosure', 'censored'),
                priors=priors,
                name=obj.get('preset'))
        except ConfigError:
            raise
        except (Error, KeyError, TypeError, ValueError, AttributeError) as e:
            log_msg = ('invalid experiment configuration - {} {}'
                       .format(e.__class__.__name__, e))
            LOG.error(log_msg)
            raise ConfigError(log_msg)

    def to_dict(self):
        obj = {
            'name': self.name,
            'format': self.auction_format.value,
            'contexts': self.contexts.probabilities.tolist(),
            'theta': self.theta.to_dict(),
            'grid': self.grid.to_list(),
            'rounds': self.rounds,
            'batch_size': self.batch_size,
            'epochs': self.epochs,
            'policies': self.policies,
            'gibbs': self.gibbs.to_dict(),
            'stopping': self.stopping.to_dict(),
            'seed': self.seed,
            'context_assignment': self.context_assignment,
            'disclosure': self.disclosure,
            'priors': (None if self.priors is None
                       else self.priors.to_dict()),
        }
        return obj

    def __repr__(self):
        return 'ExperimentConfig({})'.format(self.to_dict())


def merge_config_dicts(base, override):
    """Merge override into a copy of base, nested mappings one level deep"""
    merged = copy.deepcopy(base)
    for k, v in (override or {}).items():
        if isinstance(v, dict) and isinstance(merged.get(k), dict):
            merged[k] = dict(merged[k], **v)
        else:
            merged[k] = v
    return merged


def load_experiment(preset=None, path=None, overrides=None, arms=None,
                    full=False):
    """Preset, then a user YAML file, then overrides

    returns:
        ExperimentConfig
    """
    obj = {}
    if preset is not None:
        obj = config.load_preset(preset)
    if path is not None:
        user = config.load_yaml(path)
        if not isinstance(user, dict):
            log_msg = '{} must hold a mapping'.format(path)
            LOG.error(log_msg)
            raise ConfigError(log_msg)
        obj = merge_config_dicts(obj, user)
    obj = merge_config_dicts(obj, overrides)

    if not obj:
        log_msg = 'an experiment needs a preset or a configuration file'
        LOG.error(log_msg)
        raise ConfigError(log_msg)

    experiment = ExperimentConfig.from_config_dict(obj, arms=arms, full=full)
    LOG.debug('loaded experiment {}'.format(experiment))
    return experiment

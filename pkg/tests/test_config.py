# -*- coding: utf-8 -*-

import sys
import os
import inspect

import numpy as np
import pytest

path = os.path.abspath(
    os.path.split(inspect.getfile( inspect.currentframe() ))[0])
sys.path.insert(0, os.path.split(path)[0])

from bitslab import ConfigError, config
from bitslab.experiment import (ExperimentConfig, StoppingSettings,
                                load_experiment, merge_config_dicts)


@pytest.fixture
def base():
    """Restore BASE after a test reloads the configuration"""
    saved = dict(config.BASE)
    yield config.BASE
    config.BASE.clear()
    config.BASE.update(saved)


def write_base_config(tmp_path, text):
    etc = tmp_path / 'etc'
    etc.mkdir()
    (etc / 'bits-lab.yaml').write_text(text)
    return str(tmp_path)


class TestLoadConfiguration:

    def test_defaults(self, base, monkeypatch):
        monkeypatch.delenv('BITSLAB_INSTALL_PREFIX', raising=False)
        monkeypatch.delenv('BITSLAB_WORKERS', raising=False)
        config.load_configuration()
        assert os.path.isdir(base['PRESET_DIR'])
        assert base['NUM_WORKERS'] >= 1

    def test_install_prefix(self, base, monkeypatch, tmp_path):
        prefix = write_base_config(tmp_path, 'NUM_WORKERS: 3\n')
        monkeypatch.setenv('BITSLAB_INSTALL_PREFIX', prefix)
        monkeypatch.delenv('BITSLAB_WORKERS', raising=False)
        config.load_configuration()
        assert base['NUM_WORKERS'] == 3
        assert base['PRESET_DIR'] == os.path.join(prefix, 'etc', 'presets')

    def test_unknown_option(self, base, monkeypatch, tmp_path):
        prefix = write_base_config(tmp_path, 'NUM_THREADS: 3\n')
        monkeypatch.setenv('BITSLAB_INSTALL_PREFIX', prefix)
        with pytest.raises(ConfigError):
            config.load_configuration()

    def test_unparsable(self, base, monkeypatch, tmp_path):
        prefix = write_base_config(tmp_path, 'NUM_WORKERS: [ 3\n')
        monkeypatch.setenv('BITSLAB_INSTALL_PREFIX', prefix)
        with pytest.raises(ConfigError):
            config.load_configuration()

    def test_workers_env(self, base, monkeypatch, tmp_path):
        monkeypatch.setenv('BITSLAB_INSTALL_PREFIX', str(tmp_path))
        monkeypatch.setenv('BITSLAB_WORKERS', '4')
        config.load_configuration()
        assert base['NUM_WORKERS'] == 4

    @pytest.mark.parametrize('workers', [ 'four', '0' ])
    def test_bad_workers_env(self, base, monkeypatch, tmp_path, workers):
        monkeypatch.setenv('BITSLAB_INSTALL_PREFIX', str(tmp_path))
        monkeypatch.setenv('BITSLAB_WORKERS', workers)
        with pytest.raises(ConfigError):
            config.load_configuration()


class TestPresets:

    @pytest.mark.parametrize('name', config.PRESET_NAMES)
    def test_presets_load(self, name):
        experiment = load_experiment(preset=name)
        assert experiment.name == name
        assert experiment.rounds == 100
        assert experiment.epochs == 100
        assert experiment.policies == [ 'bits', 'ab', 'etc', 'vanilla_ts' ]
        assert experiment.gibbs.retained == 50

    def test_full_epochs(self):
        assert load_experiment(preset='spa_nc', full=True).epochs == 1000

    def test_unknown_preset(self):
        with pytest.raises(ConfigError):
            config.load_preset('spa_big')

    @pytest.mark.parametrize('arms', [ 3, 5, 10 ])
    def test_spa_nc_best_arm(self, arms):
        oracle = load_experiment(preset='spa_nc', arms=arms).oracle()
        assert oracle.grid_bids[0][oracle.best_arm[0]] == 1.0
        assert abs(oracle.cate[0] - 1.0) < 1e-2

    @pytest.mark.parametrize('arms', [ 3, 5, 10 ])
    def test_fpa_nc_best_arm(self, arms):
        experiment = load_experiment(preset='fpa_nc', arms=arms)
        oracle = experiment.oracle()
        assert oracle.grid_bids[0][oracle.best_arm[0]] == 0.5
        assert abs(experiment.true_ate - 0.8) < 1e-2

    def test_spa_ctxt(self):
        experiment = load_experiment(preset='spa_ctxt')
        assert np.allclose(experiment.true_cate, [ 1.0, 1.5, 2.0, 2.5, 3.0 ],
                           atol=0.05)
        assert abs(experiment.true_ate - 2.0) < 0.05
        assert experiment.batch_size % experiment.contexts.count == 0

    def test_fpa_ctxt(self):
        oracle = load_experiment(preset='fpa_ctxt').oracle()
        assert np.allclose(oracle.optimal_bid, [ 0.5, 0.75, 1.0, 1.25, 1.5 ],
                           atol=0.02)

    def test_missing_grid(self):
        with pytest.raises(ConfigError):
            load_experiment(preset='spa_ctxt', arms=3)


class TestExperimentConfig:

    def preset(self, **overrides):
        return merge_config_dicts(config.load_preset('spa_nc'), overrides)

    def test_merge_one_level(self):
        merged = merge_config_dicts({ 'gibbs': { 'draws': 10, 'thinning': 2 },
                                      'seed': 1 },
                                    { 'gibbs': { 'draws': 20 } })
        assert merged == { 'gibbs': { 'draws': 20, 'thinning': 2 },
                           'seed': 1 }

    def test_user_file_overrides_preset(self, tmp_path):
        user = tmp_path / 'exp.yaml'
        user.write_text('rounds: 6\nstopping:\n  mode: noncontextual\n')
        experiment = load_experiment(preset='spa_nc', path=str(user),
                                     overrides={ 'seed': 9 })
        assert experiment.rounds == 6
        assert experiment.stopping.mode == 'noncontextual'
        assert experiment.stopping.threshold == 0.95
        assert experiment.seed == 9

    def test_needs_preset_or_file(self):
        with pytest.raises(ConfigError):
            load_experiment()

    @pytest.mark.parametrize('overrides', [
        { 'rounds': 5 },
        { 'batch_size': 0 },
        { 'seed': -1 },
        { 'policies': [ 'bits', 'ucb' ] },
        { 'policies': [] },
        { 'format': 'vickrey' },
        { 'disclosure': 'partial' },
        { 'context_assignment': 'round_robin' },
        { 'stopping': { 'mode': 'forever' } },
        { 'stopping': { 'mode': 'noncontextual', 'threshold': -1 } },
        { 'gibbs': { 'draws': 10 } },
        { 'gibbs': { 'chains': 2 } },
        { 'budget': 100 },
    ])
    def test_invalid(self, overrides):
        with pytest.raises(ConfigError):
            ExperimentConfig.from_config_dict(self.preset(**overrides))

    def test_odd_rounds_without_etc(self):
        experiment = ExperimentConfig.from_config_dict(
            self.preset(rounds=5, policies=[ 'bits', 'ab' ]))
        assert experiment.rounds == 5

    def test_single_context_stopping_modes(self):
        obj = merge_config_dicts(config.load_preset('spa_ctxt'),
                                 { 'stopping': { 'mode': 'posterior_odds' } })
        with pytest.raises(ConfigError):
            ExperimentConfig.from_config_dict(obj)

    def test_fpa_full_disclosure(self):
        obj = merge_config_dicts(config.load_preset('fpa_nc'),
                                 { 'disclosure': 'full' })
        with pytest.raises(ConfigError):
            ExperimentConfig.from_config_dict(obj)

    def test_equal_split_divisible(self):
        obj = merge_config_dicts(config.load_preset('spa_ctxt'),
                                 { 'batch_size': 52 })
        with pytest.raises(ConfigError):
            ExperimentConfig.from_config_dict(obj)
        obj['context_assignment'] = 'random'
        assert ExperimentConfig.from_config_dict(obj).batch_size == 52

    def test_stopping_defaults(self):
        assert StoppingSettings('posterior_odds').threshold == 19.0
        assert StoppingSettings().threshold is None
        with pytest.raises(ConfigError):
            StoppingSettings.from_config_dict({ 'when': 'never' })

    def test_to_dict(self):
        obj = ExperimentConfig.from_config_dict(self.preset()).to_dict()
        assert obj['format'] == 'spa'
        assert obj['grid'] == [ [ 0.6, 1.0, 1.5 ] ]
        assert obj['priors'] is None

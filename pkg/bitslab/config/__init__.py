# -*- coding: utf-8 -*-

import logging
import os

import yaml

from bitslab import ConfigError


__all__ = [
    'BASE',
    'PRESET_NAMES',
    'load_configuration',
    'load_preset',
    'load_yaml',
]

LOG = logging.getLogger(__name__)
LOG.addHandler(logging.NullHandler())

PRESET_NAMES = [ 'spa_nc', 'spa_ctxt', 'fpa_nc', 'fpa_ctxt' ]

BASE = {
    # can be overriden by etc/bits-lab.yaml
    'LOG_LEVEL': 'info',
    'LOG_HANDLER': 'console',
    'LOG_FILE': 'bits-lab.log',

    # number of epoch worker processes, BITSLAB_WORKERS env overrides it
    'NUM_WORKERS': 1,

    'OUTPUT_DIR': 'bits-lab-out',

    # refuse to enumerate more arm combinations than this in ate_grid mode
    'ATE_GRID_MAX_COMBINATIONS': 1000000,

    # printf-style format for floats in the CSV outputs
    'FLOAT_FORMAT': '%.17g',

    # copied from BITSLAB_INSTALL_PREFIX env when the configuration is
    # loaded, defaults to the repository root
    'INSTALL_PREFIX': None,

    # hard set based on INSTALL_PREFIX
    'PRESET_DIR': None,
}


def _default_install_prefix():
    here = os.path.dirname(os.path.abspath(__file__))
    return os.path.dirname(os.path.dirname(here))


def load_yaml(path):
    """Load a YAML file into a python object

    raises:
        ConfigError if the file is missing or unparsable
    """
    if not os.path.isfile(path):
        log_msg = '{} does not exist'.format(path)
        LOG.error(log_msg)
        raise ConfigError(log_msg)

    try:
        with open(path) as fp:
            return yaml.safe_load(fp)
    except yaml.YAMLError as e:
        log_msg = ('unable to parse {} - {} {}'
                   .format(path, e.__class__.__name__, e))
        LOG.error(log_msg)
        raise ConfigError(log_msg)


def load_configuration():
    """Populate BASE from the environment and etc/bits-lab.yaml"""
    LOG.debug('loading bits-lab configuration')

    ### INSTALL_PREFIX ###
    config_prefix = os.environ.get('BITSLAB_INSTALL_PREFIX')
    if config_prefix is None:
        config_prefix = _default_install_prefix()
    BASE['INSTALL_PREFIX'] = config_prefix

    ### optionally load BASE configuration ###
    base_config_file = os.path.join(
        BASE['INSTALL_PREFIX'], 'etc', 'bits-lab.yaml')
    if os.path.isfile(base_config_file):
        base_config = load_yaml(base_config_file)

        if base_config:
            # validate and set values
            for k in base_config:
                if k not in BASE:
                    log_msg = ('unknown configuration option "{}"'
                               .format(k))
                    LOG.error(log_msg)
                    raise ConfigError(log_msg)
                else:
                    BASE[k] = base_config[k]

    # hard set
    BASE['PRESET_DIR'] = os.path.join(
        BASE['INSTALL_PREFIX'], 'etc', 'presets')

    ### env overrides ###
    workers = os.environ.get('BITSLAB_WORKERS')
    if workers is not None:
        try:
            BASE['NUM_WORKERS'] = int(workers)
        except ValueError:
            log_msg = ('BITSLAB_WORKERS "{}" must be an int'
                       .format(workers))
            LOG.error(log_msg)
            raise ConfigError(log_msg)

    if (not isinstance(BASE['NUM_WORKERS'], int)
            or BASE['NUM_WORKERS'] < 1):
        log_msg = ('NUM_WORKERS "{}" must be a positive int'
                   .format(BASE['NUM_WORKERS']))
        LOG.error(log_msg)
        raise ConfigError(log_msg)


def load_preset(name):
    """Load a named preset dict from PRESET_DIR

    args:
        name: one of PRESET_NAMES

    returns:
        dict as read from etc/presets/<name>.yaml
    """
    if name not in PRESET_NAMES:
        log_msg = ('unknown preset "{}", must be one of {}'
                   .format(name, PRESET_NAMES))
        LOG.error(log_msg)
        raise ConfigError(log_msg)

    preset_dir = BASE['PRESET_DIR']
    if preset_dir is None:
        preset_dir = os.path.join(_default_install_prefix(), 'etc', 'presets')

    obj = load_yaml(os.path.join(preset_dir, '{}.yaml'.format(name)))
    if not isinstance(obj, dict):
        log_msg = 'preset "{}" must be a mapping'.format(name)
        LOG.error(log_msg)
        raise ConfigError(log_msg)

    obj['preset'] = name
    return obj

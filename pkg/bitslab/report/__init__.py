# -*- coding: utf-8 -*-

"""Artifacts of a finished experiment: CSV traces and tables, SVG figures
and the run manifest
"""

import logging
import os

import matplotlib
matplotlib.use('Agg')
import matplotlib.pyplot as plt
import numpy as np
import pandas as pd
import yaml

from bitslab import Error, config, metrics, runner
from bitslab.policies import TRACE_COLUMNS
from bitslab.util import config_hash, instance_to_dict


__all__ = [
    'write_traces',
    'write_metrics',
    'plot_psi_boxplots',
    'plot_cum_regret',
    'plot_contextual',
    'plot_ate_kde',
    'write_manifest',
    'write_report',
    'run_experiment',
]

LOG = logging.getLogger(__name__)
LOG.addHandler(logging.NullHandler())

# number of rounds shown in a psi boxplot
BOXPLOT_ROUNDS = 10

# points of the KDE evaluation grid
KDE_POINTS = 512

# fixed salt so SVG element ids do not change between runs
SVG_HASHSALT = 'bits-lab'

POLICY_LABELS = {
    'bits': 'BITS',
    'ab': 'A/B test',
    'etc': 'Explore-then-commit',
    'vanilla_ts': 'Thompson sampling',
}


def _label(policy):
    return POLICY_LABELS.get(policy, policy)


def _savefig(fig, path):
    with matplotlib.rc_context({ 'svg.hashsalt': SVG_HASHSALT }):
        fig.savefig(path, format='svg', metadata={ 'Date': None })
    plt.close(fig)
    LOG.debug('wrote {}'.format(path))
    return path


def _ensure_dir(out_dir):
    try:
        os.makedirs(out_dir, exist_ok=True)
    except OSError as e:
        log_msg = ('unable to create output directory {} - {} {}'
                   .format(out_dir, e.__class__.__name__, e))
        LOG.error(log_msg)
        raise Error(log_msg)


def _by_policy(results):
    grouped = {}
    for r in results:
        grouped.setdefault(r.policy, []).append(r)
    return grouped


def write_traces(results, out_dir, float_format=None):
    """One trace_<policy>.csv per policy, rows of every epoch

    returns:
        list of paths written
    """
    if float_format is None:
        float_format = config.BASE['FLOAT_FORMAT']

    paths = []
    for policy, mine in _by_policy(results).items():
        rows = []
        for r in sorted(mine, key=lambda r: r.epoch):
            rows.extend(r.trace_rows())
        frame = pd.DataFrame(rows, columns=TRACE_COLUMNS)
        path = os.path.join(out_dir, 'trace_{}.csv'.format(policy))
        frame.to_csv(path, index=False, float_format=float_format)
        paths.append(path)
    return paths


def write_metrics(table, out_dir, float_format=None):
    """metrics_rounds.csv, metrics_epochs.csv and mse.csv of a MetricsTable"""
    if float_format is None:
        float_format = config.BASE['FLOAT_FORMAT']

    paths = []
    for name, frame in [ ('metrics_rounds.csv', table.rounds),
                         ('metrics_epochs.csv', table.epochs),
                         ('mse.csv', table.summary) ]:
        path = os.path.join(out_dir, name)
        frame.to_csv(path, index=False, float_format=float_format)
        paths.append(path)
    return paths


def _boxplot_rounds(rounds):
    step = max(1, rounds // BOXPLOT_ROUNDS)
    picked = list(range(step, rounds + 1, step))
    if picked[-1] != rounds:
        picked.append(rounds)
    return picked


def _psi_matrix(results, rounds, context=None):
    """psi on the best grid arm per epoch and round, padded with the last
    value of epochs that stopped early

    context None takes the minimum over contexts.
    """
    matrix = np.zeros((len(results), rounds))
    for i, r in enumerate(results):
        values = [ (rec.psi_best_min if context is None
                    else float(rec.psi_best[context]))
                   for rec in r.records ]
        if not values:
            values = [ r.initial_psi_best_min ]
        values = values + [ values[-1] ] * (rounds - len(values))
        matrix[i] = values[:rounds]
    return matrix


def plot_psi_boxplots(results, oracle, rounds, out_dir):
    """Per policy, the spread over epochs of the probability on the best
    grid arm at evenly spaced rounds, as median and quartile boxes
    """
    paths = []
    picked = _boxplot_rounds(rounds)
    best = oracle.grid_bids[0][oracle.best_arm[0]]
    for policy, mine in _by_policy(results).items():
        matrix = _psi_matrix(mine, rounds, context=0)
        stats = []
        for t in picked:
            column = matrix[:, t - 1]
            q1, med, q3 = np.quantile(column, [ 0.25, 0.5, 0.75 ])
            stats.append({
                'label': str(t),
                'q1': q1, 'med': med, 'q3': q3,
                # quartiles and median only
                'whislo': q1, 'whishi': q3,
                'fliers': [],
            })

        fig, ax = plt.subplots(figsize=(7, 4))
        ax.bxp(stats, showfliers=False, showcaps=False)
        ax.set_ylim(-0.02, 1.02)
        ax.set_xlabel('round')
        ax.set_ylabel('probability of bid {:g}'.format(best))
        ax.set_title('{}: probability on the optimal bid'
                     .format(_label(policy)))
        paths.append(_savefig(fig, os.path.join(
            out_dir, 'psi_boxplot_{}.svg'.format(policy))))
    return paths


def plot_cum_regret(table, out_dir):
    """Average cumulative pseudo-regret of every policy"""
    fig, ax = plt.subplots(figsize=(7, 4))
    for policy in table.policies:
        rows = table.rounds[table.rounds['policy'] == policy]
        ax.plot(rows['round'], rows['mean_cum_regret'],
                label=_label(policy))
    ax.set_xlabel('round')
    ax.set_ylabel('average cumulative pseudo-regret')
    ax.legend()
    return _savefig(fig, os.path.join(out_dir, 'cum_regret.svg'))


def plot_contextual(table, out_dir):
    """Median and quartiles of the minimum over contexts of the probability
    on the best arm, next to the per-round pseudo-regret
    """
    fig, (left, right) = plt.subplots(1, 2, figsize=(11, 4))
    for policy in table.policies:
        rows = table.rounds[table.rounds['policy'] == policy]
        line, = left.plot(rows['round'], rows['psi_q50'],
                          label=_label(policy))
        left.fill_between(rows['round'], rows['psi_q25'], rows['psi_q75'],
                          color=line.get_color(), alpha=0.2)
        right.plot(rows['round'], rows['mean_round_regret'],
                   label=_label(policy))
    left.set_ylim(-0.02, 1.02)
    left.set_xlabel('round')
    left.set_ylabel('min over contexts of the optimal bid probability')
    right.set_xlabel('round')
    right.set_ylabel('pseudo-regret per round')
    right.legend()
    fig.tight_layout()
    return _savefig(fig, os.path.join(out_dir, 'contextual.svg'))


def plot_ate_kde(table, true_ate, out_dir):
    """Kernel density of the per-epoch ATE estimates of every policy

    Policies with fewer than two finite estimates or no spread are left
    out of the figure.
    """
    frame = table.epochs
    finite = frame['ate_estimate'].to_numpy(dtype=float)
    finite = finite[np.isfinite(finite)]
    if finite.size == 0:
        LOG.warning('no finite ATE estimates, skipping the density figure')
        return None

    spread = max(float(finite.std()), 1e-3)
    lo = min(float(finite.min()), true_ate) - 3 * spread
    hi = max(float(finite.max()), true_ate) + 3 * spread
    grid = np.linspace(lo, hi, KDE_POINTS)

    fig, ax = plt.subplots(figsize=(7, 4))
    for policy in table.policies:
        estimates = frame[frame['policy'] == policy]['ate_estimate']
        try:
            density = metrics.kde_density(estimates.to_numpy(dtype=float),
                                          grid)
        except Error as e:
            LOG.warning('no density for {}: {}'.format(policy, e))
            continue
        ax.plot(grid, density, label=_label(policy))
    ax.axvline(true_ate, color='black', linestyle='--', linewidth=1,
               label='true ATE')
    ax.set_xlabel('ATE estimate')
    ax.set_ylabel('density')
    ax.legend()
    return _savefig(fig, os.path.join(out_dir, 'ate_kde.svg'))


def write_manifest(experiment, results, paths, out_dir):
    """manifest.yaml: configuration, its hash, the seeds and the files"""
    seeds = sorted(set(r.seed for r in results if r.seed is not None))
    manifest = {
        'config_hash': config_hash(experiment.to_dict()),
        'config': instance_to_dict(experiment.to_dict()),
        'true_ate': experiment.true_ate,
        'seeds': seeds,
        'files': sorted(os.path.basename(p) for p in paths if p),
    }
    path = os.path.join(out_dir, 'manifest.yaml')
    with open(path, 'w') as fp:
        yaml.safe_dump(manifest, fp, default_flow_style=False,
                       sort_keys=True)
    return path


def write_report(experiment, results, out_dir, figures=True):
    """Write every artifact of an experiment into out_dir

    returns:
        (MetricsTable, list of paths written)
    """
    _ensure_dir(out_dir)
    oracle = experiment.oracle()
    table = metrics.MetricsTable(results, experiment.true_ate,
                                 experiment.rounds)

    paths = write_traces(results, out_dir)
    paths.extend(write_metrics(table, out_dir))

    if figures:
        paths.append(plot_cum_regret(table, out_dir))
        if experiment.contexts.count == 1:
            paths.extend(plot_psi_boxplots(results, oracle,
                                           experiment.rounds, out_dir))
        else:
            paths.append(plot_contextual(table, out_dir))
        paths.append(plot_ate_kde(table, experiment.true_ate, out_dir))

    paths.append(write_manifest(experiment, results, paths, out_dir))
    LOG.info('wrote {} files to {}'.format(len([ p for p in paths if p ]),
                                           out_dir))
    return table, [ p for p in paths if p ]


def run_experiment(experiment, out_dir=None, workers=None, figures=True):
    """Run every epoch of an experiment and write its report

    args:
        experiment: ExperimentConfig
        out_dir: str, defaults to BASE OUTPUT_DIR
        workers: int, defaults to BASE NUM_WORKERS

    returns:
        (out_dir, MetricsTable)
    """
    if out_dir is None:
        out_dir = config.BASE['OUTPUT_DIR']

    results = runner.run_epochs(experiment, workers=workers)
    table, _ = write_report(experiment, results, out_dir, figures=figures)
    return out_dir, table

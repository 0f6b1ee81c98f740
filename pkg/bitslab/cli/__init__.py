# -*- coding: utf-8 -*-

"""bits-lab command line

subcommands:
    run               run the epochs of an experiment and write the report
    fit-priors        fit priors on a historical auction CSV
    oracle            print true CATEs, optimal bids and grid payoffs
    gibbs-check       conjugacy and calibration diagnostics of the sampler
    simulate-history  write a randomized-bid auction history CSV
"""

import argparse
import logging
import sys

import numpy as np
import pandas as pd
import yaml

from bitslab import ConfigError, Error, NumericalError, config, env, \
    experiment, priors, report, stats
from bitslab.gibbs import diagnostics
from bitslab.model import AuctionData, AuctionFormat
from bitslab.util import instance_to_dict, log


__all__ = [ 'main', 'build_parser' ]

LOG = logging.getLogger(__name__)
LOG.addHandler(logging.NullHandler())

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_CONFIG_ERROR = 2
EXIT_NUMERICAL_ERROR = 3

GIBBS_CHECK_MODES = [ 'conjugacy', 'calibration' ]

# calibration p-values below this reject uniformity
CALIBRATION_ALPHA = 0.01


def _add_experiment_args(parser):
    parser.add_argument('--preset', choices=config.PRESET_NAMES,
                        help='named experiment from etc/presets')
    parser.add_argument('--config', metavar='FILE',
                        help='experiment YAML, merged over the preset')
    parser.add_argument('--arms', type=int,
                        help='grid size of the preset, 3, 5 or 10')


def _experiment_overrides(args):
    overrides = {}
    if getattr(args, 'epochs', None) is not None:
        overrides['epochs'] = args.epochs
        overrides['full_epochs'] = args.epochs
    if getattr(args, 'seed', None) is not None:
        overrides['seed'] = args.seed
    if getattr(args, 'policy', None):
        overrides['policies'] = args.policy
    if getattr(args, 'stopping', None) is not None:
        overrides['stopping'] = { 'mode': args.stopping,
                                  'threshold': args.threshold }
    elif getattr(args, 'threshold', None) is not None:
        overrides['stopping'] = { 'threshold': args.threshold }
    if getattr(args, 'priors', None) is not None:
        overrides['priors'] = config.load_yaml(args.priors)
    return overrides


def _load_experiment(args):
    if args.preset is None and args.config is None:
        log_msg = 'either --preset or --config is required'
        LOG.error(log_msg)
        raise ConfigError(log_msg)

    return experiment.load_experiment(
        preset=args.preset, path=args.config,
        overrides=_experiment_overrides(args), arms=args.arms,
        full=getattr(args, 'full', False))


def _dump(obj, fp=None):
    text = yaml.safe_dump(instance_to_dict(obj), default_flow_style=False,
                          sort_keys=False)
    if fp is None:
        sys.stdout.write(text)
    else:
        fp.write(text)


def cmd_run(args):
    exp = _load_experiment(args)
    out_dir = args.out or config.BASE['OUTPUT_DIR']

    LOG.info('experiment {} ({} auctions, {} contexts, {} arms) started'
             .format(exp.name or args.config, exp.auction_format.value,
                     exp.contexts.count, exp.grid.sizes))
    out_dir, table = report.run_experiment(exp, out_dir,
                                           workers=args.workers,
                                           figures=not args.no_figures)
    LOG.info('experiment finished, report in {}'.format(out_dir))

    sys.stdout.write(table.summary.to_string(index=False) + '\n')
    return EXIT_OK


def cmd_fit_priors(args):
    data = AuctionData.read_csv(args.history, context_count=args.contexts)
    fitted, estimates = priors.fit_priors(data, args.format)

    for name, result in estimates.items():
        LOG.info('{} equation: delta {} sigma2 {:.6g} ({} rows, {} '
                 'iterations)'.format(name, result.delta.tolist(),
                                      result.sigma2, result.n,
                                      result.iterations))

    obj = {
        'priors': fitted.to_dict(),
        'estimates': dict((k, v.to_dict()) for k, v in estimates.items()),
    }
    if args.out:
        with open(args.out, 'w') as fp:
            # run --priors reads the priors mapping only
            _dump(obj['priors'], fp)
        LOG.info('wrote priors to {}'.format(args.out))
    else:
        _dump(obj)
    return EXIT_OK


def cmd_oracle(args):
    exp = _load_experiment(args)
    card = exp.oracle().to_dict()
    card['true_ate'] = exp.true_ate
    _dump(card)
    return EXIT_OK


def cmd_gibbs_check(args):
    rng = stats.make_rng(args.seed)

    if args.mode == 'conjugacy':
        if args.format is not None:
            log_msg = ('--format applies to calibration only, conjugacy '
                       'uses the format of the experiment')
            LOG.error(log_msg)
            raise ConfigError(log_msg)

        exp = _load_experiment(args)
        rows = diagnostics.conjugacy_check(
            exp.theta, args.n, args.draws, exp.auction_format, rng)
        frame = pd.DataFrame(rows)
        sys.stdout.write(frame.to_string(index=False) + '\n')
        if not frame['passed'].all():
            log_msg = ('sampler moments differ from the exact posterior '
                       'by more than {} standard errors'
                       .format(diagnostics.CONJUGACY_MAX_Z))
            LOG.error(log_msg)
            raise NumericalError(log_msg)
        return EXIT_OK

    auction_format = AuctionFormat.parse(args.format or 'spa')
    ranks, retained = diagnostics.calibration_ranks(
        args.runs, args.n, auction_format, rng, Q=args.draws)
    rows = []
    for name, values in ranks.items():
        rows.append({
            'parameter': name,
            'runs': values.size,
            'pvalue': diagnostics.rank_uniformity_pvalue(values, retained),
        })
    frame = pd.DataFrame(rows)
    sys.stdout.write(frame.to_string(index=False) + '\n')
    if (frame['pvalue'] < CALIBRATION_ALPHA).any():
        log_msg = ('rank uniformity rejected at {} for {}'
                   .format(CALIBRATION_ALPHA,
                           frame[frame['pvalue']
                                 < CALIBRATION_ALPHA]['parameter'].tolist()))
        LOG.error(log_msg)
        raise NumericalError(log_msg)
    return EXIT_OK


def cmd_simulate_history(args):
    exp = _load_experiment(args)
    rng = stats.make_rng(args.seed if args.seed is not None else exp.seed)

    contexts = rng.choice(exp.contexts.count, size=args.n,
                          p=exp.contexts.probabilities)
    bids = np.zeros(args.n)
    for p in range(exp.contexts.count):
        rows = contexts == p
        bids[rows] = rng.choice(exp.grid.bids(p), size=int(rows.sum()))

    y1, y0, b_cp = env.draw_units(exp.theta, contexts, rng)
    win, outcome, cp_value, cp_code, _ = env.resolve_auctions(
        exp.auction_format, bids, y1, y0, b_cp, disclosure=exp.disclosure)

    data = AuctionData(exp.contexts.count)
    data.extend(bids, contexts, win, outcome, cp_value, cp_code)
    data.write_csv(args.out, float_format=config.BASE['FLOAT_FORMAT'])
    LOG.info('wrote {} auctions to {}'.format(len(data), args.out))
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog='bits-lab',
        description='Bidding Thompson sampling experiments')
    parser.add_argument('--debug', action='store_true',
                        help='log everything to the console')
    subparsers = parser.add_subparsers(dest='command', metavar='COMMAND')
    subparsers.required = True

    ### run ###
    run = subparsers.add_parser('run', help='run an experiment')
    _add_experiment_args(run)
    run.add_argument('--epochs', type=int,
                     help='override the number of epochs')
    run.add_argument('--full', action='store_true',
                     help='use the full-scale epoch count of the preset')
    run.add_argument('--policy', action='append',
                     choices=[ 'bits', 'ab', 'etc', 'vanilla_ts' ],
                     help='run only this policy, repeatable')
    run.add_argument('--stopping',
                     choices=list(experiment.DEFAULT_THRESHOLDS),
                     help='stopping mode of BITS')
    run.add_argument('--threshold', type=float,
                     help='stopping threshold')
    run.add_argument('--seed', type=int, help='base seed')
    run.add_argument('--priors', metavar='FILE',
                     help='priors YAML written by fit-priors')
    run.add_argument('--workers', type=int,
                     help='worker processes, NUM_WORKERS by default')
    run.add_argument('--out', help='output directory')
    run.add_argument('--no-figures', action='store_true',
                     help='write the CSV files and manifest only')
    run.set_defaults(func=cmd_run)

    ### fit-priors ###
    fit = subparsers.add_parser('fit-priors',
                                help='fit priors on an auction history')
    fit.add_argument('history', help='auction history CSV')
    fit.add_argument('--format', required=True,
                     choices=[ f.value for f in AuctionFormat ])
    fit.add_argument('--contexts', type=int,
                     help='number of contexts, inferred when omitted')
    fit.add_argument('--out', help='write the priors YAML here')
    fit.set_defaults(func=cmd_fit_priors)

    ### oracle ###
    oracle = subparsers.add_parser(
        'oracle', help='print the oracle card of an experiment')
    _add_experiment_args(oracle)
    oracle.set_defaults(func=cmd_oracle)

    ### gibbs-check ###
    check = subparsers.add_parser('gibbs-check',
                                  help='Gibbs sampler diagnostics')
    _add_experiment_args(check)
    check.add_argument('--mode', choices=GIBBS_CHECK_MODES,
                       default='conjugacy')
    check.add_argument('--format', choices=[ f.value for f in AuctionFormat ],
                       help='auction format of the calibration runs, spa '
                            'when omitted; conjugacy takes it from the '
                            'experiment')
    check.add_argument('--n', type=int, default=500,
                       help='auctions per simulated dataset')
    check.add_argument('--draws', type=int, default=2000,
                       help='sampler sweeps')
    check.add_argument('--runs', type=int, default=200,
                       help='calibration datasets')
    check.add_argument('--seed', type=int, default=0)
    check.set_defaults(func=cmd_gibbs_check)

    ### simulate-history ###
    history = subparsers.add_parser(
        'simulate-history', help='write a randomized-bid auction history')
    _add_experiment_args(history)
    history.add_argument('--n', type=int, default=100000,
                         help='number of auctions')
    history.add_argument('--seed', type=int)
    history.add_argument('--out', required=True, help='CSV path')
    history.set_defaults(func=cmd_simulate_history)

    return parser


def main(argv=None):
    """Entry point, returns the process exit code"""
    args = build_parser().parse_args(argv)

    try:
        config.load_configuration()
        if args.debug:
            log.setup_debug()
        else:
            log.setup()

        return args.func(args)
    except ConfigError as e:
        sys.stderr.write('bits-lab: configuration error: {}\n'.format(e))
        return EXIT_CONFIG_ERROR
    except NumericalError as e:
        sys.stderr.write('bits-lab: numerical failure: {}\n'.format(e))
        return EXIT_NUMERICAL_ERROR
    except Error as e:
        sys.stderr.write('bits-lab: {}\n'.format(e))
        return EXIT_ERROR
    except OSError as e:
        sys.stderr.write('bits-lab: {} {}\n'.format(
            e.__class__.__name__, e))
        return EXIT_ERROR


if __name__ == '__main__':
    sys.exit(main())

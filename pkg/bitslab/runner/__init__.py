# -*- coding: utf-8 -*-

import logging
import multiprocessing
import os
import queue
import signal
import time

import bitslab
from bitslab import Error, config, stats
from bitslab.policies import run_epoch


__all__ = [ 'EpochTask', 'EpochWorker', 'Runner', 'run_epochs' ]

LOG = logging.getLogger(__name__)
LOG.addHandler(logging.NullHandler())

# block on the responses queue with a timeout so dead workers are noticed
RESPONSES_QUEUE_GET_TIMEOUT = 0.5

# maximum number of times to .terminate() an alive process
MAX_TERMINATE_ATTEMPTS = 5
# delay between calling .terminate()
TERMINATE_ATTEMPT_DELAY = 0.1


class EpochTask:

    """One epoch of one policy, run in a worker or inline"""

    def __init__(self, policy, epoch, seed):
        """
        args:
            policy: string, registered policy name
            epoch: int, 0-based epoch index
            seed: int, seed of the epoch generator
        """
        self.policy = policy
        self.epoch = epoch
        self.seed = seed

        # EpochResult on success
        self.result = None

        # (exception class name, message) on failure
        self.error = None

    def run(self, experiment, oracle):
        """Run the epoch, never raises"""
        try:
            self.result = run_epoch(self.policy, experiment,
                                    experiment.theta,
                                    stats.make_rng(self.seed),
                                    epoch=self.epoch, seed=self.seed,
                                    oracle=oracle)
        except Error as e:
            self.error = (e.__class__.__name__, str(e))
        # protect the runner from crashing if the epoch crashes
        except Exception as e:
            self.error = ('Error', '{} {}'.format(e.__class__.__name__, e))
            LOG.exception('{} crashed:\n{}'.format(str(self), e))

    @property
    def order(self):
        return (self.policy, self.epoch)

    def __str__(self):
        return ('EpochTask(policy: {} epoch: {} seed: {} error: {})'
                .format(self.policy, self.epoch, self.seed, self.error))


class EpochWorker(multiprocessing.Process):

    """Worker process, consumes tasks from the requests queue and puts
    them with their result onto the responses queue
    """

    def __init__(self, experiment, oracle, requests, responses):
        """
        args:
            experiment: ExperimentConfig
            oracle: OracleCard of the experiment
            requests: multiprocessing.Queue() of EpochTask, None to exit
            responses: multiprocessing.Queue() of finished EpochTask
        """
        super(EpochWorker, self).__init__()

        # flag the process as daemon so it's killed when the runner exits
        self.daemon = True

        self.experiment = experiment
        self.oracle = oracle
        self.requests = requests
        self.responses = responses

    def run(self):
        while True:
            task = self.requests.get()

            # poison pill, exit
            if task is None:
                LOG.debug('worker {} exiting'.format(os.getpid()))
                return

            task.run(self.experiment, self.oracle)
            self.responses.put(task)


def _raise_task_error(task):
    name, message = task.error
    exc_class = getattr(bitslab, name, Error)
    if not (isinstance(exc_class, type) and issubclass(exc_class, Error)):
        exc_class = Error
    log_msg = '{} epoch {} failed: {}'.format(task.policy, task.epoch,
                                              message)
    LOG.error(log_msg)
    raise exc_class(log_msg)


class Runner:

    """Runs every epoch of every policy of an experiment

    Epoch e of every policy uses seed + e, so all policies face the same
    impressions. Results do not depend on the number of workers.
    """

    def __init__(self, experiment, workers=None):
        self.experiment = experiment
        if workers is None:
            workers = config.BASE['NUM_WORKERS']
        self.workers = max(1, min(int(workers),
                                  experiment.epochs
                                  * len(experiment.policies)))

        # multiprocessing.Process() objects of the workers spawned
        self._processes = []

    def tasks(self):
        return [ EpochTask(policy, e, self.experiment.seed + e)
                 for policy in self.experiment.policies
                 for e in range(self.experiment.epochs) ]

    def run(self):
        """
        returns:
            list of EpochResult ordered by policy then epoch
        """
        experiment = self.experiment
        oracle = experiment.oracle()
        tasks = self.tasks()
        LOG.info('running {} epochs of {} on {} {} worker(s)'
                 .format(experiment.epochs, experiment.policies,
                         experiment.name or 'experiment', self.workers))

        if self.workers == 1:
            done = []
            for task in tasks:
                task.run(experiment, oracle)
                if task.error is not None:
                    _raise_task_error(task)
                self._log_task(task, len(done) + 1, len(tasks))
                done.append(task)
        else:
            done = self._run_parallel(tasks, oracle)

        order = dict((policy, i) for i, policy
                     in enumerate(experiment.policies))
        done.sort(key=lambda task: (order[task.policy], task.epoch))
        return [ task.result for task in done ]

    def _log_task(self, task, count, total):
        LOG.info('{} epoch {} done ({} of {}), rounds {} ATE {:.6g}'
                 .format(task.policy, task.epoch, count, total,
                         task.result.stopped_round,
                         task.result.ate_estimate))

    def _run_parallel(self, tasks, oracle):
        requests = multiprocessing.Queue()
        responses = multiprocessing.Queue()

        self._processes = [
            EpochWorker(self.experiment, oracle, requests, responses)
            for _ in range(self.workers) ]

        for task in tasks:
            requests.put(task)
        # one poison pill per worker
        for _ in self._processes:
            requests.put(None)

        for p in self._processes:
            p.start()

        ########################
        # workers started      #
        ########################

        # every exit path below must terminate the workers first
        done = []
        try:
            while len(done) < len(tasks):
                try:
                    task = responses.get(
                        block=True, timeout=RESPONSES_QUEUE_GET_TIMEOUT)
                except queue.Empty:
                    alive = sum(1 for p in self._processes if p.is_alive())
                    if alive == 0:
                        log_msg = ('all workers exited with {} of {} epochs '
                                   'done'.format(len(done), len(tasks)))
                        LOG.error(log_msg)
                        raise Error(log_msg)
                    continue

                if task.error is not None:
                    _raise_task_error(task)

                done.append(task)
                self._log_task(task, len(done), len(tasks))
        except BaseException:
            self._terminate_child_procs()
            raise

        for p in self._processes:
            p.join()

        ########################
        # workers exited       #
        ########################

        return done

    def _terminate_child_procs(self):
        """Terminate all the worker procs.

        A process does not always exit on .terminate(), it is attempted
        several times before resorting to SIGKILL.
        """
        LOG.info('terminating {} processes...'.format(len(self._processes)))

        i = 0
        while i < MAX_TERMINATE_ATTEMPTS:
            i += 1

            # call .terminate() on alive processes, this sends SIGTERM
            for p in self._processes:
                if p.is_alive():
                    p.terminate()

            # give the processes some time to terminate
            time.sleep(TERMINATE_ATTEMPT_DELAY)

            for p in self._processes:
                if p.is_alive():
                    LOG.warning('process {} is still running after '
                                'terminate() attempt {}'.format(p, i))
                    break
            # no processes are alive, exit out
            else:
                return

        LOG.error('Some processes may still be alive after all '
                  'termination attempts, SIGKILL-ing those')
        for p in self._processes:
            if p.is_alive():
                try:
                    os.kill(p.pid, signal.SIGKILL)
                except OSError:
                    pass


def run_epochs(experiment, workers=None):
    """Run an experiment, see Runner"""
    return Runner(experiment, workers=workers).run()

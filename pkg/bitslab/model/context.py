# -*- coding: utf-8 -*-

import logging

import numpy as np

from bitslab import Error


__all__ = [ 'ContextSpec', 'BidGrid', 'encode_context' ]

LOG = logging.getLogger(__name__)
LOG.addHandler(logging.NullHandler())

MAX_CONTEXTS = 64
MAX_ARMS = 256
PROBABILITY_SUM_TOLERANCE = 1e-12


def _readonly(values):
    arr = np.array(values, dtype=float)
    arr.setflags(write=False)
    return arr


def encode_context(p, P):
    """One-hot encoding of a context

    args:
        p: int, 1-based context label, 1 <= p <= P
        P: int, number of contexts

    returns:
        numpy int vector of length P with a single 1 at position p
    """
    if (not isinstance(P, (int, np.integer)) or P < 1
            or not isinstance(p, (int, np.integer)) or p < 1 or p > P):
        log_msg = ('context "{}" out of range for {} contexts'
                   .format(p, P))
        LOG.error(log_msg)
        raise Error(log_msg)

    x = np.zeros(int(P), dtype=int)
    x[int(p) - 1] = 1
    return x


class ContextSpec:

    """Categorical contexts x_1..x_P with distribution F_x"""

    def __init__(self, probabilities):
        """
        args:
            probabilities: list of P floats summing to 1
        """
        try:
            probs = np.array(probabilities, dtype=float).ravel()
        except (TypeError, ValueError):
            log_msg = ('context probabilities "{}" must be a list of numbers'
                       .format(probabilities))
            LOG.error(log_msg)
            raise Error(log_msg)

        if probs.size < 1 or probs.size > MAX_CONTEXTS:
            log_msg = ('number of contexts must be between 1 and {}'
                       .format(MAX_CONTEXTS))
            LOG.error(log_msg)
            raise Error(log_msg)

        if np.any(~np.isfinite(probs)) or np.any(probs < 0):
            log_msg = ('context probabilities "{}" must be non-negative'
                       .format(probabilities))
            LOG.error(log_msg)
            raise Error(log_msg)

        if abs(probs.sum() - 1.0) > PROBABILITY_SUM_TOLERANCE:
            log_msg = ('context probabilities "{}" must sum to 1'
                       .format(probabilities))
            LOG.error(log_msg)
            raise Error(log_msg)

        probs.setflags(write=False)
        self.probabilities = probs

    @property
    def count(self):
        return self.probabilities.size

    @classmethod
    def uniform(cls, P):
        return cls([1.0 / P] * P)

    @classmethod
    def from_config_dict(cls, obj):
        return cls(obj['probabilities'])

    def __eq__(self, other):
        return (isinstance(other, ContextSpec)
                and np.array_equal(self.probabilities, other.probabilities))

    def __repr__(self):
        return 'ContextSpec({})'.format(self.probabilities.tolist())


class BidGrid:

    """Per-context ordered sets of candidate bids (the arms)"""

    def __init__(self, bids):
        """
        args:
            bids: list with one list of bids per context, each strictly
                increasing and non-negative
        """
        if not isinstance(bids, (list, tuple)) or len(bids) == 0:
            log_msg = 'bid grid must be a non-empty list of per-context lists'
            LOG.error(log_msg)
            raise Error(log_msg)

        self._bids = []
        for p, context_bids in enumerate(bids):
            try:
                arr = np.array(context_bids, dtype=float).ravel()
            except (TypeError, ValueError):
                log_msg = ('bids "{}" of context {} must be numbers'
                           .format(context_bids, p + 1))
                LOG.error(log_msg)
                raise Error(log_msg)

            if arr.size < 1 or arr.size > MAX_ARMS:
                log_msg = ('context {} must have between 1 and {} bids'
                           .format(p + 1, MAX_ARMS))
                LOG.error(log_msg)
                raise Error(log_msg)

            if np.any(~np.isfinite(arr)) or np.any(arr < 0):
                log_msg = ('bids "{}" of context {} must be non-negative'
                           .format(arr.tolist(), p + 1))
                LOG.error(log_msg)
                raise Error(log_msg)

            if np.any(np.diff(arr) <= 0):
                log_msg = ('bids "{}" of context {} must be strictly '
                           'increasing'.format(arr.tolist(), p + 1))
                LOG.error(log_msg)
                raise Error(log_msg)

            self._bids.append(_readonly(arr))

    @property
    def count(self):
        """number of contexts"""
        return len(self._bids)

    @property
    def sizes(self):
        return [ arr.size for arr in self._bids ]

    def bids(self, p):
        """bids of 0-based context p"""
        return self._bids[p]

    def to_list(self):
        return [ arr.tolist() for arr in self._bids ]

    @classmethod
    def from_config_dict(cls, obj):
        return cls(obj)

    def __eq__(self, other):
        return (isinstance(other, BidGrid) and self.count == other.count
                and all(np.array_equal(a, b)
                        for a, b in zip(self._bids, other._bids)))

    def __repr__(self):
        return 'BidGrid({})'.format(self.to_list())

# -*- coding: utf-8 -*-

import logging

import numpy as np
import pandas as pd

from bitslab import DataError
from bitslab.model.params import AuctionFormat


__all__ = [
    'AuctionObservation',
    'AuctionData',
    'CP_OBSERVED',
    'CP_LOWER',
    'CP_UPPER',
    'CSV_COLUMNS',
]

LOG = logging.getLogger(__name__)
LOG.addHandler(logging.NullHandler())

# what the competing-bid field of a row holds
CP_OBSERVED = 'observed'
CP_LOWER = 'lower'
CP_UPPER = 'upper'
CP_KINDS = [ CP_OBSERVED, CP_LOWER, CP_UPPER ]

CSV_COLUMNS = [ 'bid', 'context', 'win', 'outcome', 'cp_kind', 'cp_value' ]


class AuctionObservation:

    """Feedback of a single auction

    context is 0-based here, the CSV format stores it 1-based.
    cp_value is the highest competing bid when cp_kind is "observed",
    otherwise the own bid acting as a lower ("lower") or upper ("upper")
    bound on it.
    """

    def __init__(self, bid, context, win, outcome, cp_value, cp_kind):
        if cp_kind not in CP_KINDS:
            log_msg = ('competing bid kind "{}" must be one of {}'
                       .format(cp_kind, CP_KINDS))
            LOG.error(log_msg)
            raise DataError(log_msg)

        self.bid = float(bid)
        self.context = int(context)
        self.win = bool(win)
        self.outcome = float(outcome)
        self.cp_value = float(cp_value)
        self.cp_kind = cp_kind

    def __eq__(self, other):
        return (isinstance(other, AuctionObservation)
                and self.__dict__ == other.__dict__)

    def __repr__(self):
        return ('AuctionObservation(bid={}, context={}, win={}, outcome={}, '
                'cp_value={}, cp_kind={})'.format(
                    self.bid, self.context, self.win, self.outcome,
                    self.cp_value, self.cp_kind))


class AuctionData:

    """Append-only columnar store of auction observations"""

    def __init__(self, context_count):
        self.context_count = int(context_count)
        self.bid = np.zeros(0)
        self.context = np.zeros(0, dtype=int)
        self.win = np.zeros(0, dtype=bool)
        self.outcome = np.zeros(0)
        self.cp_value = np.zeros(0)
        # index into CP_KINDS
        self.cp_code = np.zeros(0, dtype=np.int8)

    def __len__(self):
        return self.bid.size

    def extend(self, bid, context, win, outcome, cp_value, cp_code):
        """Append a batch of rows given as equal-length arrays"""
        columns = [ np.asarray(bid, dtype=float),
                    np.asarray(context, dtype=int),
                    np.asarray(win, dtype=bool),
                    np.asarray(outcome, dtype=float),
                    np.asarray(cp_value, dtype=float),
                    np.asarray(cp_code, dtype=np.int8) ]
        sizes = set(col.size for col in columns)
        if len(sizes) != 1:
            log_msg = 'auction batch columns differ in length {}'.format(
                sorted(sizes))
            LOG.error(log_msg)
            raise DataError(log_msg)

        if columns[1].size and (columns[1].min() < 0
                                or columns[1].max() >= self.context_count):
            log_msg = ('auction batch context out of range for {} contexts'
                       .format(self.context_count))
            LOG.error(log_msg)
            raise DataError(log_msg)

        if columns[5].size and (columns[5].min() < 0
                                or columns[5].max() >= len(CP_KINDS)):
            log_msg = 'auction batch has unknown competing bid kinds'
            LOG.error(log_msg)
            raise DataError(log_msg)

        self.bid = np.concatenate([ self.bid, columns[0].ravel() ])
        self.context = np.concatenate([ self.context, columns[1].ravel() ])
        self.win = np.concatenate([ self.win, columns[2].ravel() ])
        self.outcome = np.concatenate([ self.outcome, columns[3].ravel() ])
        self.cp_value = np.concatenate([ self.cp_value, columns[4].ravel() ])
        self.cp_code = np.concatenate([ self.cp_code, columns[5].ravel() ])

    def append(self, obs):
        self.extend([ obs.bid ], [ obs.context ], [ obs.win ],
                    [ obs.outcome ], [ obs.cp_value ],
                    [ CP_KINDS.index(obs.cp_kind) ])

    @classmethod
    def from_observations(cls, observations, context_count):
        data = cls(context_count)
        for obs in observations:
            data.append(obs)
        return data

    def __iter__(self):
        for i in range(len(self)):
            yield AuctionObservation(
                self.bid[i], self.context[i], self.win[i], self.outcome[i],
                self.cp_value[i], CP_KINDS[self.cp_code[i]])

    def subset(self, mask):
        new = AuctionData(self.context_count)
        new.extend(self.bid[mask], self.context[mask], self.win[mask],
                   self.outcome[mask], self.cp_value[mask],
                   self.cp_code[mask])
        return new

    @property
    def observed_cp(self):
        return self.cp_code == CP_KINDS.index(CP_OBSERVED)

    @property
    def lower_cp(self):
        return self.cp_code == CP_KINDS.index(CP_LOWER)

    @property
    def upper_cp(self):
        return self.cp_code == CP_KINDS.index(CP_UPPER)

    def validate(self, auction_format):
        """Check every row against the censoring rules of the format

        raises:
            DataError naming the first offending row
        """
        auction_format = AuctionFormat.parse(auction_format)

        bad = ~(self.outcome > 0) | (self.bid < 0) | ~np.isfinite(self.bid)
        if auction_format is AuctionFormat.SPA:
            # wins carry the observed competing bid, losses a lower bound,
            # a loss may also carry it when competing bids are disclosed
            bad |= self.win & ~(self.observed_cp
                                & (self.cp_value <= self.bid))
            bad |= ~self.win & ~(
                (self.lower_cp & (self.cp_value == self.bid))
                | (self.observed_cp & (self.cp_value > self.bid)))
        else:
            bad |= self.win & ~(self.upper_cp
                                & (self.cp_value == self.bid))
            bad |= ~self.win & ~(self.lower_cp
                                 & (self.cp_value == self.bid))

        if np.any(bad):
            i = int(np.flatnonzero(bad)[0])
            log_msg = ('malformed {} auction row {}: bid={} win={} '
                       'outcome={} cp_kind={} cp_value={}'
                       .format(auction_format.value, i, self.bid[i],
                               bool(self.win[i]), self.outcome[i],
                               CP_KINDS[self.cp_code[i]], self.cp_value[i]))
            LOG.error(log_msg)
            raise DataError(log_msg)

    ### CSV ###
    def to_frame(self):
        return pd.DataFrame({
            'bid': self.bid,
            'context': self.context + 1,
            'win': self.win.astype(int),
            'outcome': self.outcome,
            'cp_kind': [ CP_KINDS[c] for c in self.cp_code ],
            'cp_value': self.cp_value,
        }, columns=CSV_COLUMNS)

    @classmethod
    def from_frame(cls, frame, context_count=None):
        missing = [ c for c in CSV_COLUMNS if c not in frame.columns ]
        if missing:
            log_msg = 'auction data misses columns {}'.format(missing)
            LOG.error(log_msg)
            raise DataError(log_msg)

        kinds = frame['cp_kind'].astype(str)
        unknown = sorted(set(kinds) - set(CP_KINDS))
        if unknown:
            log_msg = 'unknown competing bid kinds {}'.format(unknown)
            LOG.error(log_msg)
            raise DataError(log_msg)

        contexts = frame['context'].to_numpy(dtype=int) - 1
        if context_count is None:
            context_count = int(contexts.max()) + 1 if contexts.size else 1

        data = cls(context_count)
        data.extend(frame['bid'].to_numpy(dtype=float), contexts,
                    frame['win'].to_numpy(dtype=int) != 0,
                    frame['outcome'].to_numpy(dtype=float),
                    frame['cp_value'].to_numpy(dtype=float),
                    [ CP_KINDS.index(k) for k in kinds ])
        return data

    def write_csv(self, path, float_format='%.17g'):
        self.to_frame().to_csv(path, index=False, float_format=float_format)

    @classmethod
    def read_csv(cls, path, context_count=None):
        try:
            frame = pd.read_csv(path, float_precision='round_trip')
        except (OSError, pd.errors.ParserError) as e:
            log_msg = ('unable to read auction data {} - {} {}'
                       .format(path, e.__class__.__name__, e))
            LOG.error(log_msg)
            raise DataError(log_msg)
        return cls.from_frame(frame, context_count)

# -*- coding: utf-8 -*-

from bitslab.model.context import ContextSpec, BidGrid, encode_context
from bitslab.model.params import (AuctionFormat, ModelParams, EquationPrior,
                                  PriorParams, CorrelatedPrior, true_cate,
                                  EQUATIONS)
from bitslab.model.data import (AuctionObservation, AuctionData,
                                CP_OBSERVED, CP_LOWER, CP_UPPER)
from bitslab.model.payoff import expected_payoff, bid_adjustment, chi


__all__ = [
    'ContextSpec',
    'BidGrid',
    'encode_context',
    'AuctionFormat',
    'ModelParams',
    'EquationPrior',
    'PriorParams',
    'CorrelatedPrior',
    'true_cate',
    'EQUATIONS',
    'AuctionObservation',
    'AuctionData',
    'CP_OBSERVED',
    'CP_LOWER',
    'CP_UPPER',
    'expected_payoff',
    'bid_adjustment',
    'chi',
]

"""Two-level pair-bid auctions for RAN slicing.

An MNO sells slices to MVNOs in an upper auction that respects CU/DU
placement and energy cost; MVNOs resell capacity to users in a lower
pair-bid auction. Both levels clear greedily and charge VCG prices floored
by a base price.
"""
from .estimators import LowerAuction, MarketSimulator, UpperAuction
from .exceptions import ConfigError, OracleLimitError, PairBidError, PreconditionError
from .lower import LowerAllocation, run_lower_greedy, validate_lower
from .model import CostMarkup, FlatPrice, MvnoProfile, Request, Slice, SliceSpec
from .network import GraphConfig, build_graph, check_placement
from .sim import RequestGenParams, Scenario, run_simulation
from .upper import NbWeights, UpperBid, run_upper_greedy

__version__ = "0.1.0"

__all__ = [
    "ConfigError", "CostMarkup", "FlatPrice", "GraphConfig", "LowerAllocation", "LowerAuction",
    "MarketSimulator", "MvnoProfile", "NbWeights", "OracleLimitError", "PairBidError",
    "PreconditionError", "Request", "RequestGenParams", "Scenario", "Slice", "SliceSpec", "UpperAuction",
    "UpperBid", "build_graph", "check_placement", "run_lower_greedy", "run_simulation",
    "run_upper_greedy", "validate_lower",
]

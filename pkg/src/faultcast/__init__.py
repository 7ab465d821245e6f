"""Simulator and verification harness for broadcasting in synchronous
point-to-point networks under adversarial fractional message loss with a
connectivity threshold: per step the adversary may destroy up to
max{c(G)-1, floor(alpha*m)} of the m messages sent."""

from . import bounds, validate
from .adversary import (AckSuppressor, AdversaryPolicy, FixedKillAdversary,
                        RandomAdversary, VictimGuard, ack_suppressor,
                        make_adversary, random_adversary, victim_guard)
from .engine import (ACK, INFO, NetworkState, SendBatch, Trace, classify_arc,
                     execute_step, fault_budget)
from .errors import (AdversaryViolation, ConfigError, InvalidParameterError,
                     PreconditionViolation, SimError, TooLargeError,
                     UnsupportedAlphaError, UnsupportedTopologyError)
from .harness import ExperimentConfig, RunReport, run, verify_regressions
from .protocols import (almost_complete_kn, broadcast_hypercube,
                        greedy_init_complete, greedy_init_hypercube,
                        make_driver, nosod_complete, simulate, sod_all_but_one,
                        sod_complete)
from .search import SearchResult, worst_case_search
from .topology import (ChordalLabeling, Topology, build_complete,
                       build_hypercube, chordal_labels, edge_boundary,
                       iso_lower_bound)
from .validate import validate_trace

__version__ = "0.1.0"

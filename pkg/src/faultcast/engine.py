"""Synchronous step execution under the adversarial loss budget.

One time step: informed vertices hand the engine a batch of at most one
message per arc, the adversary picks a kill set within
max{c(G)-1, floor(alpha*m)}, survivors are delivered, and every delivery over
an arc marks the opposite arc passive (the receiver now knows the far end is
informed).  Deliveries carrying the broadcast information make the receiver
informed.
"""

import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import AdversaryViolation, InvalidParameterError, PreconditionViolation
from .topology import COMPLETE, Topology

# Message payload kinds.
INFO = 0
ACK = 1
CANDS = 2
INFO_CANDS = 3

_CARRIES_INFO = (INFO, INFO_CANDS)

ACTIVE = "active"
PASSIVE = "passive"
HYPERACTIVE = "hyperactive"

_EMPTY = np.empty(0, dtype=np.int64)


@dataclass
class SendBatch:
    """Messages of one time step: parallel arrays of arc ids and payload kinds.

    ``payloads`` is only populated for candidate-carrying messages (a list
    aligned with ``arcs``); plain info/ack traffic leaves it None.
    """

    arcs: np.ndarray
    kinds: np.ndarray
    payloads: list | None = None

    @property
    def m(self) -> int:
        return int(self.arcs.shape[0])

    @staticmethod
    def empty() -> "SendBatch":
        return SendBatch(arcs=_EMPTY, kinds=np.empty(0, dtype=np.int8))

    @staticmethod
    def uniform(arcs: np.ndarray, kind: int, payloads: list | None = None) -> "SendBatch":
        return SendBatch(
            arcs=np.asarray(arcs, dtype=np.int64),
            kinds=np.full(len(arcs), kind, dtype=np.int8),
            payloads=payloads,
        )


@dataclass
class DeliveryReport:
    batch: SendBatch
    delivered_idx: np.ndarray  # indices into the batch
    lost_idx: np.ndarray
    budget: int

    @property
    def budget_used(self) -> int:
        return int(self.lost_idx.shape[0])

    @property
    def delivered_arcs(self) -> np.ndarray:
        return self.batch.arcs[self.delivered_idx]

    @property
    def acks_delivered(self) -> int:
        return int(np.count_nonzero(self.batch.kinds[self.delivered_idx] == ACK))


@dataclass(frozen=True)
class StepContext:
    step_index: int
    topo: Topology
    state: "NetworkState"


class NetworkState:
    """Informed set plus global per-arc passive marks; the evolving run object.

    ``version`` increments whenever a delivery may have changed anything, so
    callers can cache derived quantities.
    """

    __slots__ = ("topo", "informed", "passive", "step_index", "version", "initiator",
                 "_counts_version", "_counts")

    def __init__(self, topo: Topology, initiator: int = 0):
        if not 0 <= initiator < topo.n:
            raise InvalidParameterError(f"initiator {initiator} outside 0..{topo.n - 1}")
        self.topo = topo
        self.initiator = initiator
        self.informed = np.zeros(topo.n, dtype=bool)
        self.informed[initiator] = True
        self.passive = np.zeros(topo.num_arcs, dtype=bool)
        self.step_index = 0
        self.version = 0
        self._counts_version = -1
        self._counts = None

    def counts(self) -> tuple[int, int, int]:
        """(k uninformed, h hyperactive arcs, b passive arcs)."""
        if self._counts_version != self.version:
            _, h, b = _kernels.arc_state_counts(
                self.informed, self.passive, self.topo.arc_src, self.topo.arc_dst)
            k = self.topo.n - int(np.count_nonzero(self.informed))
            self._counts = (k, h, b)
            self._counts_version = self.version
        return self._counts

    @property
    def k(self) -> int:
        return self.counts()[0]

    def clone(self) -> "NetworkState":
        other = NetworkState.__new__(NetworkState)
        other.topo = self.topo
        other.initiator = self.initiator
        other.informed = self.informed.copy()
        other.passive = self.passive.copy()
        other.step_index = self.step_index
        other.version = self.version
        other._counts_version = -1
        other._counts = None
        return other


def fault_budget(m: int, c: int, alpha: float) -> int:
    """max{c-1, floor(alpha*m)} messages the adversary may destroy."""
    if not 0.0 < alpha < 1.0:
        raise InvalidParameterError(f"alpha must be in (0, 1), got {alpha}")
    if m < 0 or c < 1:
        raise InvalidParameterError(f"need m >= 0 and c >= 1, got m={m}, c={c}")
    return max(c - 1, math.floor(alpha * m))


def classify_arc(state: NetworkState, arc: int) -> str:
    """Definition-1 label of an out-arc of an informed vertex."""
    topo = state.topo
    if not state.informed[topo.arc_src[arc]]:
        raise PreconditionViolation(f"arc {arc} does not leave an informed vertex")
    if not state.informed[topo.arc_dst[arc]]:
        return ACTIVE
    if state.passive[arc]:
        return PASSIVE
    return HYPERACTIVE


def _validate_batch(state: NetworkState, batch: SendBatch) -> None:
    arcs = batch.arcs
    if arcs.size == 0:
        return
    if arcs.min() < 0 or arcs.max() >= state.topo.num_arcs:
        raise InvalidParameterError("batch references arcs outside the topology")
    if arcs.size > 1 and not np.all(np.diff(arcs) > 0):
        if np.unique(arcs).size != arcs.size:
            raise InvalidParameterError("batch sends more than one message per arc")
    if not np.all(state.informed[state.topo.arc_src[arcs]]):
        raise InvalidParameterError("only informed vertices may send")


def execute_step(state: NetworkState, batch: SendBatch, adversary, alpha: float,
                 validate: bool = True) -> DeliveryReport:
    """Run one synchronous step: adversary kill, delivery, bookkeeping.

    An adversary returning a kill set over budget or not drawn from the batch
    aborts the run with AdversaryViolation; it is never clamped.
    """
    if validate:
        _validate_batch(state, batch)
    m = batch.m
    budget = fault_budget(m, state.topo.edge_connectivity, alpha)
    ctx = StepContext(step_index=state.step_index, topo=state.topo, state=state)
    kills = np.asarray(adversary.decide(ctx, batch, budget), dtype=np.int64)
    if kills.size > budget:
        raise AdversaryViolation(
            f"{adversary.id} killed {kills.size} messages with budget {budget}")
    if kills.size:
        if kills.min() < 0 or kills.max() >= m:
            raise AdversaryViolation(f"{adversary.id} killed a message that was not sent")
        if np.unique(kills).size != kills.size:
            raise AdversaryViolation(f"{adversary.id} killed the same message twice")

    delivered_mask = np.ones(m, dtype=bool)
    delivered_mask[kills] = False
    delivered_idx = np.flatnonzero(delivered_mask)
    report = DeliveryReport(batch=batch, delivered_idx=delivered_idx,
                            lost_idx=np.sort(kills), budget=budget)

    if delivered_idx.size:
        darr = batch.arcs[delivered_idx]
        state.passive[state.topo.opp[darr]] = True
        info = np.isin(batch.kinds[delivered_idx], _CARRIES_INFO)
        if info.any():
            state.informed[state.topo.arc_dst[darr[info]]] = True
        state.version += 1
    state.step_index += 1
    return report


# ---------------------------------------------------------------------------
# Traces

_COLUMNS = ("step", "k", "h", "b", "m_sent", "m_lost", "acks", "M")


@dataclass
class Segment:
    kind: str
    start: int  # index of the first record in the segment
    meta: dict = field(default_factory=dict)


class Trace:
    """Columnar per-step records plus run summary and segment markers.

    One record per time step, taken after the step: k/h/b/M describe the
    post-step state, m_sent/m_lost/acks the step's traffic.  Segments let
    validators find round and loop boundaries without guessing.
    """

    def __init__(self, topo: Topology, track_boundary: bool = False):
        self.topo = topo
        self.m_coeff = 2 * (topo.n - 1) if topo.kind == COMPLETE else 2 * topo.d
        self._data = np.empty((256, len(_COLUMNS)), dtype=np.int64)
        self._len = 0
        self.track_boundary = track_boundary
        self._boundary = np.empty(256, dtype=np.int64) if track_boundary else None
        self.segments: list[Segment] = []
        self.summary: dict = {}

    def __len__(self) -> int:
        return self._len

    def _grow(self, need: int) -> None:
        cap = self._data.shape[0]
        if self._len + need <= cap:
            return
        new_cap = max(cap * 2, self._len + need)
        data = np.empty((new_cap, len(_COLUMNS)), dtype=np.int64)
        data[:self._len] = self._data[:self._len]
        self._data = data
        if self._boundary is not None:
            boundary = np.empty(new_cap, dtype=np.int64)
            boundary[:self._len] = self._boundary[:self._len]
            self._boundary = boundary

    def mark(self, kind: str, **meta) -> Segment:
        seg = Segment(kind=kind, start=self._len, meta=meta)
        self.segments.append(seg)
        return seg

    def record(self, state: NetworkState, m_sent: int, m_lost: int, acks: int) -> None:
        k, h, b = state.counts()
        self._grow(1)
        self._data[self._len] = (
            state.step_index, k, h, b, m_sent, m_lost, acks, self.m_coeff * k + h)
        if self._boundary is not None:
            self._boundary[self._len] = _kernels.edge_boundary_count(
                state.informed, self.topo.arc_src, self.topo.arc_dst)
        self._len += 1

    def record_step(self, state: NetworkState, report: DeliveryReport) -> None:
        self.record(state, report.batch.m, report.budget_used, report.acks_delivered)

    def record_inert(self, state: NetworkState, m_sent: int, count: int,
                     step_start: int) -> None:
        """Bulk-append records for steps where every message is destroyed.

        Only valid when the caller has proven the steps cannot change state
        (m_sent <= c-1 and an exhaustive adversary kills the whole batch).
        """
        if count <= 0:
            return
        k, h, b = state.counts()
        self._grow(count)
        rows = self._data[self._len:self._len + count]
        rows[:] = (0, k, h, b, m_sent, m_sent, 0, self.m_coeff * k + h)
        rows[:, 0] = np.arange(step_start + 1, step_start + count + 1)
        if self._boundary is not None:
            self._boundary[self._len:self._len + count] = _kernels.edge_boundary_count(
                state.informed, self.topo.arc_src, self.topo.arc_dst)
        self._len += count

    def column(self, name: str) -> np.ndarray:
        return self._data[:self._len, _COLUMNS.index(name)]

    def boundary_column(self) -> np.ndarray:
        if self._boundary is None:
            raise InvalidParameterError("trace was not recorded with boundary tracking")
        return self._boundary[:self._len]

    @property
    def final_k(self) -> int:
        return int(self.column("k")[-1]) if self._len else self.topo.n - 1

    @property
    def final_h(self) -> int:
        return int(self.column("h")[-1]) if self._len else 0

    @property
    def total_steps(self) -> int:
        return self._len

    def first_complete_step(self) -> int:
        """First step index at which k reached its final value."""
        k = self.column("k")
        if not k.size:
            return 0
        hits = np.flatnonzero(k == k[-1])
        return int(self.column("step")[hits[0]])

    def to_jsonl(self, path) -> None:
        with open(path, "w") as fh:
            for i in range(self._len):
                row = self._data[i]
                fh.write(json.dumps({name: int(row[j]) for j, name in enumerate(_COLUMNS)}))
                fh.write("\n")
            fh.write(json.dumps(self.summary))
            fh.write("\n")

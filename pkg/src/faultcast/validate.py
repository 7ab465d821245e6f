"""Trace validation: budget soundness, per-round inequalities, final bounds.

Each check walks a recorded trace and returns Violation records instead of
raising, so the harness can aggregate and strict mode can decide the exit
code.  Checks whose analysis only applies above n_min/d_min are downgraded to
informational below those sizes (level "info"); everything else is "error".
"""

import math
from dataclasses import dataclass

import numpy as np

from . import bounds
from .engine import Trace
from .topology import COMPLETE, HYPERCUBE

_TOL = 1e-9

ERROR = "error"
INFO = "info"


@dataclass
class Violation:
    check: str
    where: int  # record index (or segment start) in the trace
    message: str
    level: str = ERROR

    def __str__(self):
        return f"[{self.level}] {self.check} @ record {self.where}: {self.message}"


def check_budget(trace: Trace, alpha: float) -> list[Violation]:
    """m_lost <= max{c-1, floor(alpha*m_sent)} on every recorded step."""
    c = trace.topo.edge_connectivity
    m_sent = trace.column("m_sent")
    m_lost = trace.column("m_lost")
    budget = np.maximum(c - 1, np.floor(alpha * m_sent).astype(np.int64))
    bad = np.flatnonzero(m_lost > budget)
    return [Violation("budget", int(i),
                      f"lost {m_lost[i]} of {m_sent[i]} sent, budget {budget[i]}")
            for i in bad]


def check_monotone(trace: Trace) -> list[Violation]:
    """k never increases, passive count never decreases."""
    out = []
    k = trace.column("k")
    b = trace.column("b")
    for i in np.flatnonzero(np.diff(k) > 0):
        out.append(Violation("monotone_k", int(i + 1), f"k rose {k[i]} -> {k[i + 1]}"))
    for i in np.flatnonzero(np.diff(b) < 0):
        out.append(Violation("monotone_b", int(i + 1), f"b fell {b[i]} -> {b[i + 1]}"))
    return out


def _segment_spans(trace: Trace):
    """(segment, end) pairs with end = start of the next segment or trace length."""
    segs = trace.segments
    for i, seg in enumerate(segs):
        end = segs[i + 1].start if i + 1 < len(segs) else len(trace)
        yield seg, end


def _round_indices(start: int, end: int):
    """(pre, step_a, step_b) record indices for each full simple round."""
    for a in range(start, end - 1, 2):
        yield a - 1, a, a + 1


def check_kn_rounds(trace: Trace, alpha: float, eps: float) -> list[Violation]:
    """Complete-graph per-round checks on primary simple-round segments.

    While k > X*eps or h > X(n-2): the round's step B must deliver at least
    (1-alpha)^2 (k(n-k) + h) acks, and the measure M = 2(n-1)k + h must
    contract by a factor (1-c).  Both are analysis guarantees for n >= n_min;
    below that they are reported as informational.
    """
    if trace.topo.kind != COMPLETE:
        return []
    n = trace.topo.n
    cc = bounds.constants(alpha)
    level = ERROR if eps > 1.0 and n >= bounds.n_min(alpha, eps) else INFO
    k_col, h_col = trace.column("k"), trace.column("h")
    m_col, acks_col = trace.column("M"), trace.column("acks")
    out = []
    for seg, end in _segment_spans(trace):
        if seg.kind != "simple_rounds" or not seg.meta.get("primary"):
            continue
        for pre, _, b_rec in _round_indices(seg.start, end):
            if pre < 0:
                continue  # no pre-round record for a schedule-initial round
            k, h = int(k_col[pre]), int(h_col[pre])
            if not (k > cc.x * eps or h > cc.x * (n - 2)):
                continue
            need_acks = (1.0 - alpha) ** 2 * (k * (n - k) + h)
            if acks_col[b_rec] < need_acks - _TOL:
                out.append(Violation("thm2_acks", b_rec,
                                     f"{acks_col[b_rec]} acks < {need_acks:.3f} "
                                     f"(k={k}, h={h})", level))
            if m_col[b_rec] > (1.0 - cc.c) * m_col[pre] + _TOL:
                out.append(Violation("thm2_measure", b_rec,
                                     f"M {m_col[pre]} -> {m_col[b_rec]} exceeds "
                                     f"factor {1.0 - cc.c:.6f}", level))
    return out


def check_qd_rounds(trace: Trace, alpha: float, eps: float) -> list[Violation]:
    """Hypercube per-round checks: ack bound, passive growth, measure contraction.

    Ack bound (k > X/(1-eps) or h > X(d-1)): step B delivers at least
    (1-alpha)^2 (h + boundary) acks.  Passive growth (k >= (2/3)2^d): passive
    count grows by beta*boundary per round, and multiplicatively by
    (1 + beta*lg3/d) once b >= d.  Measure contraction (ack-bound gate and
    k <= (2/3)2^d): M = 2dk + h shrinks by factor 1 + beta*lg(2/3)/d.
    """
    if trace.topo.kind != HYPERCUBE:
        return []
    d = trace.topo.d
    n = trace.topo.n
    cc = bounds.constants(alpha)
    level = ERROR if 0.0 < eps < 1.0 and d >= bounds.d_min(alpha, eps) else INFO
    k_col, h_col, b_col = trace.column("k"), trace.column("h"), trace.column("b")
    m_col, acks_col = trace.column("M"), trace.column("acks")
    bd_col = trace.boundary_column()
    lg3 = math.log2(3.0)
    rho = 1.0 + cc.beta * math.log2(2.0 / 3.0) / d
    out = []
    for seg, end in _segment_spans(trace):
        if seg.kind != "simple_rounds" or not seg.meta.get("primary"):
            continue
        for pre, _, b_rec in _round_indices(seg.start, end):
            if pre < 0:
                continue
            k, h, b, bd = int(k_col[pre]), int(h_col[pre]), int(b_col[pre]), int(bd_col[pre])
            gate_ack = k > cc.x / (1.0 - eps) or h > cc.x * (d - 1)
            if gate_ack:
                need = (1.0 - alpha) ** 2 * (h + bd)
                if acks_col[b_rec] < need - _TOL:
                    out.append(Violation("lemma4_acks", b_rec,
                                         f"{acks_col[b_rec]} acks < {need:.3f} "
                                         f"(h={h}, boundary={bd})", level))
            if k >= (2.0 / 3.0) * n:
                if b_col[b_rec] < b + cc.beta * bd - _TOL:
                    out.append(Violation("lemma5_growth", b_rec,
                                         f"b {b} -> {b_col[b_rec]} < b + beta*{bd}", level))
                if b >= d and b_col[b_rec] < b * (1.0 + cc.beta * lg3 / d) - _TOL:
                    out.append(Violation("lemma5_factor", b_rec,
                                         f"b {b} -> {b_col[b_rec]} below factor "
                                         f"{1.0 + cc.beta * lg3 / d:.6f}", level))
            if gate_ack and k <= (2.0 / 3.0) * n:
                if m_col[b_rec] > rho * m_col[pre] + _TOL:
                    out.append(Violation("lemma6_measure", b_rec,
                                         f"M {m_col[pre]} -> {m_col[b_rec]} exceeds "
                                         f"factor {rho:.6f}", level))
    return out


def check_nosod_iterations(trace: Trace, alpha: float, eps: float) -> list[Violation]:
    """Each executed L2-iteration informs a new vertex or shrinks h by (1-Y/2).

    Applicable when the iteration started with h' <= X(n-2) and at least one
    uninformed vertex; iterations skipped by the inert fast-forward start from
    a frozen state with k = 0 and are not applicable by construction.
    """
    if trace.topo.kind != COMPLETE:
        return []
    n = trace.topo.n
    cc = bounds.constants(alpha)
    if cc.y <= 0.0:
        return []
    level = ERROR if eps > 1.0 and n >= bounds.n_min(alpha, eps) else INFO
    k_col, h_col = trace.column("k"), trace.column("h")
    out = []
    for seg, end in _segment_spans(trace):
        if seg.kind != "nosod_iter":
            continue
        last = seg.start + seg.meta["steps"] - 1
        if last >= end:
            continue
        k0, h0 = seg.meta["k0"], seg.meta["h0"]
        if k0 < 1 or h0 > cc.x * (n - 2):
            continue
        informed_new = k_col[last] < k0
        shrunk = h_col[last] <= (1.0 - cc.y / 2.0) * h0 + _TOL
        if not (informed_new or shrunk):
            out.append(Violation("nosod_iteration", seg.start,
                                 f"iteration (l1={seg.meta['l1']}, l2={seg.meta['l2']}) "
                                 f"kept k={k0} and h {h0} -> {h_col[last]}", level))
    return out


def check_phase2_quorum(trace: Trace, alpha: float, eps: float) -> list[Violation]:
    """At least 2n/3 vertices qualify as candidate senders in every phase 2."""
    if trace.topo.kind != COMPLETE:
        return []
    n = trace.topo.n
    below = eps <= 1.0 or n < bounds.n_min(alpha, eps)
    out = []
    for seg in trace.segments:
        if seg.kind != "sod_phase2":
            continue
        trivially = seg.meta["threshold"] >= n - 1
        level = INFO if below and not trivially else ERROR
        if seg.meta["qualifying"] < 2.0 * n / 3.0:
            out.append(Violation("phase2_quorum", seg.start,
                                 f"only {seg.meta['qualifying']} of {n} vertices "
                                 f"under threshold {seg.meta['threshold']}", level))
    return out


def check_final_bounds(trace: Trace, alpha: float, eps: float) -> list[Violation]:
    """Theorem-level final-state guarantees, chosen by the summary's protocol id."""
    protocol = trace.summary.get("protocol")
    if protocol is None:
        return []
    below = trace.summary.get("below_min", False)
    cc = bounds.constants(alpha)
    k, h = trace.final_k, trace.final_h
    out = []

    def bound(name, value, limit, level):
        if value > limit + _TOL:
            out.append(Violation(name, len(trace) - 1,
                                 f"final {value} > {limit:.3f}", level))

    if protocol == "almost-kn":
        level = INFO if below else ERROR
        bound("final_k", k, cc.x * eps, level)
        bound("final_h", h, cc.x * (trace.topo.n - 2), level)
    elif protocol == "hypercube":
        level = INFO if below else ERROR
        bound("final_k", k, cc.x / (1.0 - eps), level)
        bound("final_h", h, cc.x * (trace.topo.d - 1), level)
    elif protocol == "sod-all-but-one":
        bound("final_k", k, 1, ERROR)
    elif protocol in ("sod-complete", "nosod-complete"):
        bound("final_k", k, 0, ERROR)
    return out


def validate_trace(trace: Trace, alpha: float | None = None,
                   eps: float | None = None) -> list[Violation]:
    """Run every applicable check; alpha/eps default to the trace summary."""
    if alpha is None:
        alpha = trace.summary["alpha"]
    if eps is None:
        eps = trace.summary.get("eps", 2.0)
    out = []
    out += check_budget(trace, alpha)
    out += check_monotone(trace)
    out += check_kn_rounds(trace, alpha, eps)
    out += check_qd_rounds(trace, alpha, eps) if trace.topo.kind == HYPERCUBE else []
    out += check_nosod_iterations(trace, alpha, eps)
    out += check_phase2_quorum(trace, alpha, eps)
    out += check_final_bounds(trace, alpha, eps)
    return out


def errors_only(violations: list[Violation]) -> list[Violation]:
    return [v for v in violations if v.level == ERROR]

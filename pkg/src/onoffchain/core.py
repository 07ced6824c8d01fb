"""Domain model for linear on-off relay chains.

A chain is a contiguous run of nodes, each either off (0) or on (1).  Off
nodes turn on after independent exponential recovery times; signals enter
at the rightmost node and instantly switch off the maximal all-on suffix.
This module holds the configuration types, the event-log produced by the
simulator, the recovery/reception sequence abstraction with its axioms,
and the finite-window dynamics validators.
"""

from __future__ import annotations

import math
from bisect import bisect_left
from dataclasses import dataclass

import numpy as np

__all__ = [
    "RateSchedule",
    "InputModel",
    "SystemConfig",
    "EventLog",
    "SignalRecoverySequence",
    "OnOffTrajectory",
    "Violation",
    "ValidationReport",
    "DynamicsReport",
    "ScheduleError",
    "DegenerateRangeError",
    "DimensionMismatchError",
    "InvalidSequenceError",
    "validate_signal_recovery",
    "to_on_off",
    "switch_times",
    "check_dynamics",
    "log_to_sequence",
    "validate_event_log",
    "sequence_csv_lines",
]

# Event kinds used in EventLog tuples (kind, time, node_lo, node_hi).
INPUT = "input"
RECOVERY = "recovery"
RECEPTION = "reception"


class ScheduleError(ValueError):
    """A rate schedule is malformed or evaluated outside its domain."""


class DegenerateRangeError(ValueError):
    """An operation received an empty node range."""


class DimensionMismatchError(ValueError):
    """Two objects that must share node range / window do not."""


# ---------------------------------------------------------------------------
# Rate schedules
# ---------------------------------------------------------------------------

EXPLICIT = "explicit"
CONSTANT = "constant"
LINEAR = "linear"
LOG_FAMILY = "logfamily"
LOG_SQUARE = "logsquare"

_FAMILIES = (EXPLICIT, CONSTANT, LINEAR, LOG_FAMILY, LOG_SQUARE)


@dataclass(frozen=True)
class RateSchedule:
    """Recovery-rate assignment, either an explicit finite list or a
    parametric family evaluable at any node index >= 1.

    Parametric families:
      constant   rate(k) = c
      linear     rate(k) = c * k
      logfamily  rate(k) = log(k)/theta0 + alpha*log(log(k)), clamped at
                 index 3 so small indices stay strictly positive
      logsquare  rate(k) = log(k + 1)**2
    """

    family: str
    length: int | None = None          # None: unbounded (parametric only)
    values: tuple[float, ...] = ()     # explicit family only
    first_index: int = 1               # node index of values[0]
    c: float = 0.0
    theta0: float = 0.0
    alpha: float = 0.0

    def __post_init__(self):
        if self.family not in _FAMILIES:
            raise ScheduleError(f"unknown rate family {self.family!r}")
        if self.family == EXPLICIT:
            if not self.values:
                raise ScheduleError("explicit schedule needs at least one rate")
            if self.length != len(self.values):
                raise ScheduleError("explicit schedule length must match values")
            for v in self.values:
                if not (math.isfinite(v) and v > 0.0):
                    raise ScheduleError(f"rates must be positive and finite, got {v}")
        else:
            if self.length is not None and self.length < 1:
                raise ScheduleError("schedule length must be >= 1")
            if self.family in (CONSTANT, LINEAR) and not (math.isfinite(self.c) and self.c > 0.0):
                raise ScheduleError(f"coefficient must be positive, got {self.c}")
            if self.family == LOG_FAMILY:
                if not (math.isfinite(self.theta0) and self.theta0 > 0.0):
                    raise ScheduleError(f"theta0 must be positive, got {self.theta0}")
                if not (math.isfinite(self.alpha) and self.alpha >= 0.0):
                    raise ScheduleError(f"alpha must be >= 0, got {self.alpha}")

    # -- constructors -------------------------------------------------------

    @classmethod
    def explicit(cls, values, first_index: int = 1) -> "RateSchedule":
        vals = tuple(float(v) for v in values)
        return cls(EXPLICIT, length=len(vals), values=vals, first_index=first_index)

    @classmethod
    def constant(cls, c: float, length: int | None = None) -> "RateSchedule":
        return cls(CONSTANT, length=length, c=float(c))

    @classmethod
    def linear(cls, c: float, length: int | None = None) -> "RateSchedule":
        return cls(LINEAR, length=length, c=float(c))

    @classmethod
    def log_family(cls, theta0: float, alpha: float, length: int | None = None) -> "RateSchedule":
        return cls(LOG_FAMILY, length=length, theta0=float(theta0), alpha=float(alpha))

    @classmethod
    def log_square(cls, length: int | None = None) -> "RateSchedule":
        return cls(LOG_SQUARE, length=length)

    # -- evaluation ---------------------------------------------------------

    @property
    def unbounded(self) -> bool:
        return self.length is None

    def rate(self, k: int) -> float:
        """Recovery rate at node index k (strictly positive)."""
        if self.family == EXPLICIT:
            j = k - self.first_index
            if not 0 <= j < len(self.values):
                raise ScheduleError(f"index {k} outside explicit schedule "
                                    f"[{self.first_index}, {self.first_index + len(self.values) - 1}]")
            return self.values[j]
        if self.length is not None and not 1 <= k <= self.length:
            raise ScheduleError(f"index {k} outside schedule of length {self.length}")
        if self.family == CONSTANT:
            return self.c
        if k < 1:
            raise ScheduleError(f"parametric schedules are defined for k >= 1, got {k}")
        if self.family == LINEAR:
            return self.c * k
        if self.family == LOG_SQUARE:
            return math.log(k + 1) ** 2
        # logfamily; clamp below index 3 so log(log(k)) stays positive
        kk = max(k, 3)
        return math.log(kk) / self.theta0 + self.alpha * math.log(math.log(kk))

    def rates(self, lo: int, hi: int) -> tuple[float, ...]:
        return tuple(self.rate(k) for k in range(lo, hi + 1))

    def spec_string(self) -> str:
        """Round-trippable description in the CLI mini-grammar."""
        if self.family == EXPLICIT:
            return "explicit:" + ",".join(repr(v) for v in self.values)
        if self.family == CONSTANT:
            return f"const:{self.c!r}"
        if self.family == LINEAR:
            return f"linear:{self.c!r}"
        if self.family == LOG_FAMILY:
            return f"logfam:{self.theta0!r},{self.alpha!r}"
        return "logsq"


# ---------------------------------------------------------------------------
# Input models
# ---------------------------------------------------------------------------

PERMANENT = "permanent"
EXPONENTIAL = "exponential"
DETERMINISTIC = "deterministic"
EMPIRICAL = "empirical"


@dataclass(frozen=True, eq=False)
class InputModel:
    """Law of the gaps between consecutive signals entering the chain.

    ``permanent`` is the degenerate mode where the rightmost node receives a
    signal at each of its own recoveries; it has no interval law and must be
    eliminated (see ``analytic.permanent_reduce``) before any transform work.
    All proper laws put zero mass at 0.
    """

    kind: str
    rate: float = 0.0           # exponential
    duration: float = 0.0       # deterministic
    samples: np.ndarray | None = None  # empirical, sorted ascending

    def __post_init__(self):
        if self.kind not in (PERMANENT, EXPONENTIAL, DETERMINISTIC, EMPIRICAL):
            raise ValueError(f"unknown input kind {self.kind!r}")
        if self.kind == EXPONENTIAL and not (math.isfinite(self.rate) and self.rate > 0.0):
            raise ValueError(f"exponential input rate must be positive, got {self.rate}")
        if self.kind == DETERMINISTIC and not (math.isfinite(self.duration) and self.duration > 0.0):
            raise ValueError(f"deterministic input duration must be positive, got {self.duration}")
        if self.kind == EMPIRICAL:
            s = self.samples
            if s is None or len(s) == 0:
                raise ValueError("empirical input needs at least one sample")
            if not (np.all(np.isfinite(s)) and np.all(s > 0.0)):
                raise ValueError("empirical input samples must be positive and finite")

    @classmethod
    def permanent(cls) -> "InputModel":
        return cls(PERMANENT)

    @classmethod
    def exponential(cls, rate: float) -> "InputModel":
        return cls(EXPONENTIAL, rate=float(rate))

    @classmethod
    def deterministic(cls, duration: float) -> "InputModel":
        return cls(DETERMINISTIC, duration=float(duration))

    @classmethod
    def empirical(cls, samples) -> "InputModel":
        arr = np.sort(np.asarray(samples, dtype=np.float64))
        arr.setflags(write=False)
        return cls(EMPIRICAL, samples=arr)

    @property
    def is_permanent(self) -> bool:
        return self.kind == PERMANENT

    def quantile(self, u: np.ndarray) -> np.ndarray:
        """Map uniforms in [0, 1) to interval draws (shared-uniform coupling)."""
        if self.kind == EXPONENTIAL:
            return -np.log1p(-u) / self.rate
        if self.kind == DETERMINISTIC:
            return np.full_like(u, self.duration)
        if self.kind == EMPIRICAL:
            s = self.samples
            idx = np.minimum((u * len(s)).astype(np.int64), len(s) - 1)
            return s[idx]
        raise ValueError("permanent input has no interval law")

    def spec_string(self) -> str:
        if self.kind == PERMANENT:
            return "permanent"
        if self.kind == EXPONENTIAL:
            return f"exp:{self.rate!r}"
        if self.kind == DETERMINISTIC:
            return f"det:{self.duration!r}"
        return f"empirical:<{len(self.samples)} samples>"


# ---------------------------------------------------------------------------
# System configuration
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SystemConfig:
    """A chain on nodes [left_node, right_node] with its rates and input.

    ``right_node == left_node - 1`` denotes the empty chain, which arises as
    the reduction of a one-node chain with permanent input; it carries only
    the input renewal process.
    """

    left_node: int
    right_node: int
    rates: RateSchedule
    input: InputModel

    def __post_init__(self):
        if self.left_node < 0:
            raise ValueError("node indices must be >= 0")
        if self.right_node < self.left_node - 1:
            raise ValueError("right_node must be >= left_node - 1")
        if self.is_empty:
            if self.input.is_permanent:
                raise ValueError("an empty chain cannot take permanent input")
        else:
            # force evaluation so bad schedules fail here, not mid-run
            for k in range(self.left_node, self.right_node + 1):
                r = self.rates.rate(k)
                if not (math.isfinite(r) and r > 0.0):
                    raise ScheduleError(f"rate at node {k} is not positive: {r}")

    @property
    def is_empty(self) -> bool:
        return self.right_node < self.left_node

    @property
    def n_nodes(self) -> int:
        return self.right_node - self.left_node + 1

    def node_rates(self) -> tuple[float, ...]:
        return self.rates.rates(self.left_node, self.right_node)


# ---------------------------------------------------------------------------
# Event log
# ---------------------------------------------------------------------------

@dataclass(eq=False)
class EventLog:
    """Time-ordered record of one run.

    Events are tuples ``(kind, time, node_lo, node_hi)``:
      ("input", t, None, None)        a signal reaches the chain entrance
      ("recovery", t, i, i)           node i turns on
      ("reception", t, i, j)          nodes i..j switch off together (j is
                                      the rightmost node of the log)
    Within one instant the recorded order is recovery (permanent mode only),
    then input, then its reception block.  Equal timestamps occur only inside
    such a tick.
    """

    left_node: int
    right_node: int
    horizon: float
    permanent: bool
    events: list[tuple]
    restricted: bool = False

    def input_times(self) -> list[float]:
        return [e[1] for e in self.events if e[0] == INPUT]

    def recoveries_at(self, node: int) -> list[float]:
        return [e[1] for e in self.events if e[0] == RECOVERY and e[2] == node]

    def receptions_at(self, node: int) -> list[float]:
        return [e[1] for e in self.events
                if e[0] == RECEPTION and e[2] <= node <= e[3]]

    def reception_blocks(self) -> list[tuple[float, int, int]]:
        return [(e[1], e[2], e[3]) for e in self.events if e[0] == RECEPTION]

    def restrict(self, node_hi: int) -> "EventLog":
        """View of the log on nodes [left_node, node_hi].

        Reception blocks are clipped; input events are dropped (the restricted
        chain's effective input is the reception process at node_hi + 1).
        """
        if node_hi < self.left_node or node_hi > self.right_node:
            raise DimensionMismatchError(f"node {node_hi} outside log range")
        kept = []
        for e in self.events:
            kind = e[0]
            if kind == RECOVERY and e[2] <= node_hi:
                kept.append(e)
            elif kind == RECEPTION and e[2] <= node_hi:
                kept.append((RECEPTION, e[1], e[2], min(e[3], node_hi)))
        return EventLog(self.left_node, node_hi, self.horizon,
                        permanent=False, events=kept, restricted=True)

    def csv_lines(self):
        """Line-oriented serialization: kind,time,node_lo,node_hi."""
        for kind, t, lo, hi in self.events:
            a = "" if lo is None else str(lo)
            b = "" if hi is None else str(hi)
            yield f"{kind},{t!r},{a},{b}"


def validate_event_log(log: EventLog) -> None:
    """Replay a log and assert its structural invariants.

    Raises AssertionError on the first breach: non-monotone times, stray
    ties, broken per-node alternation, or a reception block that is not the
    maximal all-on suffix at that instant.
    """
    lo, hi = log.left_node, log.right_node
    n = hi - lo + 1
    on = [0] * max(n, 0)
    last_t = 0.0
    last_kind_per_node = {}
    pending_input = False
    prev = None
    for e in log.events:
        kind, t = e[0], e[1]
        assert t >= last_t, f"event times decrease at {e}"
        if t > last_t:
            pending_input = False
        if kind == INPUT:
            assert not log.restricted, "restricted logs carry no input events"
            pending_input = True
        elif kind == RECOVERY:
            node = e[2]
            assert lo <= node <= hi, f"recovery outside range: {e}"
            j = node - lo
            assert on[j] == 0, f"recovery of a node already on: {e}"
            on[j] = 1
            assert last_kind_per_node.get(node) != RECOVERY, \
                f"two recoveries without a reception at node {node}"
            last_kind_per_node[node] = RECOVERY
            if t == last_t and prev is not None:
                # only the permanent tick puts a recovery level with others,
                # and there it opens the tick
                assert not pending_input, f"recovery inside an input tick: {e}"
        else:
            a, b = e[2], e[3]
            assert lo <= a <= b <= hi, f"reception block outside range: {e}"
            if not log.restricted:
                assert pending_input and t >= last_t, \
                    f"reception without a same-instant input: {e}"
                assert b == hi, f"reception block must reach the right end: {e}"
            for node in range(a, b + 1):
                j = node - lo
                assert on[j] == 1, f"reception at an off node: {e}"
                on[j] = 0
                assert last_kind_per_node.get(node) == RECOVERY, \
                    f"reception without preceding recovery at node {node}"
                last_kind_per_node[node] = RECEPTION
            if a > lo:
                assert on[a - 1 - lo] == 0, \
                    f"block not maximal: node {a - 1} was on at {t}: {e}"
            pending_input = False
        last_t = t
        prev = e
        assert t <= log.horizon, f"event beyond horizon: {e}"


# ---------------------------------------------------------------------------
# Signal/recovery sequences and their axioms
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class SignalRecoverySequence:
    """Per-node reception times (with the conventional leading 0) and
    recovery times, interleaved, on a finite window.

    The axioms, checked by :func:`validate_signal_recovery`:
      interleaving   0 = s_0 < r_1 < s_1 < r_2 < ...  per node
      discreteness   each node's time set is finite within the window
      containment    every reception at a node is simultaneously a reception
                     at the node to its right
      blocked-gap    a reception present at node i+1 but absent at node i
                     falls in one of node i's off gaps (s_{k-1}, r_k]
    """

    node_lo: int
    node_hi: int
    window: float
    receptions: dict[int, tuple[float, ...]]   # each tuple starts with 0.0
    recoveries: dict[int, tuple[float, ...]]

    def nodes(self):
        return range(self.node_lo, self.node_hi + 1)


@dataclass(frozen=True)
class Violation:
    axiom: str       # "interleaving" | "discreteness" | "containment" | "blocked-gap"
    node: int
    time: float
    detail: str


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...]
    boundary_excluded: tuple[Violation, ...] = ()

    @property
    def consistent(self) -> bool:
        return not self.violations


class InvalidSequenceError(ValueError):
    def __init__(self, report: ValidationReport):
        self.report = report
        first = report.violations[0]
        super().__init__(f"sequence violates {first.axiom} at node {first.node}, "
                         f"t={first.time}: {first.detail}")


def validate_signal_recovery(seq: SignalRecoverySequence) -> ValidationReport:
    """Check the four sequence axioms on a finite window.

    Receptions of the right neighbour that land in a node's final off gap,
    still open at the window end, cannot be judged against the blocked-gap
    axiom (the closing recovery lies beyond the window); they are reported
    separately in ``boundary_excluded`` rather than as violations.
    """
    if seq.node_hi < seq.node_lo:
        raise DegenerateRangeError("sequence has an empty node range")
    violations: list[Violation] = []
    excluded: list[Violation] = []

    for node in seq.nodes():
        s = seq.receptions.get(node, (0.0,))
        r = seq.recoveries.get(node, ())
        if not s or s[0] != 0.0:
            violations.append(Violation("interleaving", node, 0.0,
                                        "reception list must start at the conventional 0"))
            continue
        for x in list(s) + list(r):
            if not math.isfinite(x):
                violations.append(Violation("discreteness", node, x, "non-finite time"))
        if len(r) not in (len(s) - 1, len(s)):
            violations.append(Violation("interleaving", node, s[-1],
                                        f"{len(r)} recoveries cannot interleave "
                                        f"{len(s) - 1} receptions"))
            continue
        ok = True
        for k, rk in enumerate(r):
            if not s[k] < rk:
                violations.append(Violation("interleaving", node, rk,
                                            f"recovery {k + 1} at {rk} not after reception at {s[k]}"))
                ok = False
                break
            if k + 1 < len(s) and not rk < s[k + 1]:
                violations.append(Violation("interleaving", node, s[k + 1],
                                            f"reception {k + 1} at {s[k + 1]} not after recovery at {rk}"))
                ok = False
                break
        if not ok:
            continue
        upper = max(s[-1], r[-1] if r else 0.0)
        if upper > seq.window:
            violations.append(Violation("discreteness", node, upper,
                                        "event beyond the declared window"))

    if violations:
        return ValidationReport(tuple(violations), tuple(excluded))

    for node in range(seq.node_lo, seq.node_hi):
        s_here = seq.receptions.get(node, (0.0,))
        s_right = set(seq.receptions.get(node + 1, (0.0,)))
        # containment: receptions here must also appear at the right neighbour
        for t in s_here[1:]:
            if t not in s_right:
                violations.append(Violation("containment", node, t,
                                            f"reception at {t} absent at node {node + 1}"))
        # blocked-gap: right-neighbour receptions missing here must fall in
        # an off gap (s_{k-1}, r_k] of this node
        here_set = set(s_here)
        r_here = seq.recoveries.get(node, ())
        for t in sorted(seq.receptions.get(node + 1, (0.0,))[1:]):
            if t in here_set:
                continue
            k = bisect_left(r_here, t)    # first recovery >= t
            if k < len(r_here):
                if t > s_here[k]:
                    continue              # lies in (s_{k-1}, r_k], allowed
                violations.append(Violation("blocked-gap", node, t,
                                            f"reception at {t} skipped node {node} "
                                            f"while it was on"))
            elif len(s_here) == len(r_here) + 1 and t > s_here[-1]:
                # node is off from its last reception to the window end; the
                # closing recovery lies outside the window: boundary caveat
                excluded.append(Violation("blocked-gap", node, t,
                                          "in the final off gap, still open at the window end"))
            else:
                violations.append(Violation("blocked-gap", node, t,
                                            f"reception at {t} skipped node {node} "
                                            f"while it was on"))
    return ValidationReport(tuple(violations), tuple(excluded))


# ---------------------------------------------------------------------------
# On-off trajectories
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class OnOffTrajectory:
    """Piecewise-constant 0/1 paths: per node, half-open on-intervals.

    An interval end of ``None`` means the node is still on when the window
    closes (no switch-off was observed); a numeric end is a true switch.
    """

    node_lo: int
    node_hi: int
    window: float
    intervals: dict[int, tuple[tuple[float, float | None], ...]]

    def state(self, node: int, t: float) -> int:
        """Value at t (right-continuous)."""
        for a, b in self.intervals[node]:
            if a <= t < (self.window if b is None else b):
                return 1
        return 0

    def state_before(self, node: int, t: float) -> int:
        """Left limit at t."""
        for a, b in self.intervals[node]:
            if a < t <= (self.window if b is None else b):
                return 1
        return 0

    def nodes(self):
        return range(self.node_lo, self.node_hi + 1)


def to_on_off(seq: SignalRecoverySequence) -> OnOffTrajectory:
    """Convert a valid sequence to its on-off trajectory.

    The node is off on [s_{k-1}, r_k) and on on [r_k, s_k); converting back
    with :func:`switch_times` recovers the sequence exactly.
    """
    report = validate_signal_recovery(seq)
    if not report.consistent:
        raise InvalidSequenceError(report)
    intervals = {}
    for node in seq.nodes():
        s = seq.receptions[node]
        r = seq.recoveries[node]
        pairs = []
        for k, rk in enumerate(r):
            end = s[k + 1] if k + 1 < len(s) else None
            pairs.append((rk, end))
        intervals[node] = tuple(pairs)
    return OnOffTrajectory(seq.node_lo, seq.node_hi, seq.window, intervals)


def switch_times(traj: OnOffTrajectory) -> SignalRecoverySequence:
    """Inverse of :func:`to_on_off`: read the switch instants back off."""
    receptions = {}
    recoveries = {}
    for node in traj.nodes():
        r = []
        s = [0.0]
        for a, b in traj.intervals[node]:
            r.append(a)
            if b is not None:
                s.append(b)
        receptions[node] = tuple(s)
        recoveries[node] = tuple(r)
    return SignalRecoverySequence(traj.node_lo, traj.node_hi, traj.window,
                                  receptions, recoveries)


# ---------------------------------------------------------------------------
# Dynamics checks on finite windows
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DynamicsReport:
    """Finite-window dynamics checks plus density diagnostics.

    ``persistence_violations``: a node switched off while some node to its
    right was off just before (it should have stayed on).
    ``suffix_violations``: a switch-off block that is not a contiguous batch
    reaching the rightmost node of the range.
    Density of reception times cannot be decided from finite data; the
    report only bins observed receptions and states the minimal gap seen.
    """

    cadlag_ok: bool
    structural_notes: tuple[str, ...]
    persistence_violations: tuple[tuple[int, float, int], ...]  # (node, t, off right node)
    suffix_violations: tuple[tuple[float, str], ...]
    reception_bins: tuple[tuple[float, float, int], ...]
    min_reception_gap: float | None

    @property
    def passed(self) -> bool:
        return self.cadlag_ok and not self.persistence_violations \
            and not self.suffix_violations


def check_dynamics(traj: OnOffTrajectory, seq: SignalRecoverySequence,
                   bins: int = 10) -> DynamicsReport:
    """Validate trajectory structure and the switch-off rules against the
    reception times of ``seq``, restricted to the available node range."""
    if (traj.node_lo, traj.node_hi) != (seq.node_lo, seq.node_hi):
        raise DimensionMismatchError("trajectory and sequence node ranges differ")
    if traj.window != seq.window:
        raise DimensionMismatchError("trajectory and sequence windows differ")

    notes = []
    cadlag_ok = True
    for node in traj.nodes():
        prev_end = 0.0
        for a, b in traj.intervals[node]:
            end = traj.window if b is None else b
            if not (prev_end < a < end <= traj.window):
                cadlag_ok = False
                notes.append(f"node {node}: malformed on-interval [{a}, {b})")
                break
            prev_end = end

    # group switch-offs by instant
    by_time: dict[float, list[int]] = {}
    for node in seq.nodes():
        for t in seq.receptions[node][1:]:
            by_time.setdefault(t, []).append(node)

    persistence = []
    suffix = []
    hi = traj.node_hi
    for t, nodes in by_time.items():
        nodes.sort()
        contiguous = nodes[-1] - nodes[0] + 1 == len(nodes)
        if not contiguous or nodes[-1] != hi:
            # some node above a switching one did not switch; classify by its
            # state just before t
            top = nodes[-1]
            probe = None
            if not contiguous:
                for a, b in zip(nodes, nodes[1:]):
                    if b != a + 1:
                        probe = a + 1
                        break
            else:
                probe = top + 1
            if probe is not None and probe <= hi:
                if traj.state_before(probe, t) == 0:
                    persistence.append((probe - 1, t, probe))
                else:
                    suffix.append((t, f"nodes {nodes} switched off but node {probe} "
                                      f"stayed on"))
            else:
                suffix.append((t, f"switch-off block {nodes} does not reach node {hi}"))

    all_receptions = sorted(t for node in seq.nodes() for t in seq.receptions[node][1:])
    w = traj.window if traj.window > 0 else 1.0
    edges = [w * i / bins for i in range(bins + 1)]
    counts = [0] * bins
    for t in all_receptions:
        idx = min(int(t / w * bins), bins - 1)
        counts[idx] += 1
    bin_rows = tuple((edges[i], edges[i + 1], counts[i]) for i in range(bins))
    distinct = sorted(set(all_receptions))
    min_gap = None
    if len(distinct) > 1:
        min_gap = min(b - a for a, b in zip(distinct, distinct[1:]))

    return DynamicsReport(cadlag_ok, tuple(notes), tuple(persistence),
                          tuple(suffix), bin_rows, min_gap)


# ---------------------------------------------------------------------------
# Log -> sequence conversion
# ---------------------------------------------------------------------------

def log_to_sequence(log: EventLog, include_permanent_right: bool = False) -> SignalRecoverySequence:
    """Extract the per-node recovery/reception sequence from a log.

    Under permanent input the rightmost node recovers and is switched off at
    the same instant, so its times cannot interleave strictly; it is dropped
    unless explicitly requested.
    """
    hi = log.right_node
    if log.permanent and not include_permanent_right:
        hi -= 1
    if hi < log.left_node:
        raise DegenerateRangeError("log has no observable nodes left of the input")
    receptions = {node: [0.0] for node in range(log.left_node, hi + 1)}
    recoveries = {node: [] for node in range(log.left_node, hi + 1)}
    for e in log.events:
        kind = e[0]
        if kind == RECOVERY and e[2] <= hi:
            recoveries[e[2]].append(e[1])
        elif kind == RECEPTION and e[2] <= hi:
            for node in range(e[2], min(e[3], hi) + 1):
                receptions[node].append(e[1])
    return SignalRecoverySequence(
        log.left_node, hi, log.horizon,
        {k: tuple(v) for k, v in receptions.items()},
        {k: tuple(v) for k, v in recoveries.items()})


def sequence_csv_lines(seq: SignalRecoverySequence):
    """Line-oriented serialization: kind,time,node_lo,node_hi."""
    rows = []
    for node in seq.nodes():
        rows.extend((t, RECOVERY, node) for t in seq.recoveries[node])
        rows.extend((t, RECEPTION, node) for t in seq.receptions[node][1:])
    rows.sort()
    for t, kind, node in rows:
        yield f"{kind},{t!r},{node},{node}"

"""Seed-deterministic discrete-event simulator for on-off chains.

Randomness is organized around *potential recovery points*: node i carries a
Poisson process of intensity rate(i), and a point turns the node on exactly
when the node is off at that instant (points falling on an on node are
ignored).  Input intervals are produced by pushing one shared uniform stream
through the input law's quantile map, so two runs that differ only in their
input law consume identical recovery-point realizations and comparable
input randomness.

Every substream is a keyed counter-based generator: replication r and node i
draw from Philox keyed ``(master_seed, r << 32 | (i + 1))``; the input stream
uses slot 0 of the same layout.  Streams are consumed in indexed counter
blocks, which makes replications allocation-free and embarrassingly parallel.
"""

from __future__ import annotations

import heapq
import math
import threading
import warnings
from bisect import bisect_right
from dataclasses import dataclass

import numpy as np

from .core import (
    EventLog,
    InputModel,
    SystemConfig,
    INPUT,
    RECOVERY,
    RECEPTION,
)

__all__ = [
    "RandomnessPlan",
    "StopRule",
    "EmpiricalDistribution",
    "DominanceResult",
    "simulate",
    "sample_first_reception",
    "sample_interreception",
    "coupled_compare",
    "ks_statistic",
    "ks_two_sample_critical",
    "ks_one_sample",
    "ks_one_sample_critical",
    "dkw_band",
    "dominance_check",
]


# ---------------------------------------------------------------------------
# Keyed substreams
# ---------------------------------------------------------------------------

# One Philox/Generator pair per thread; streams are realized by injecting
# (key, counter-block) state before each block draw.  Block index b of a
# stream occupies counter word 2, so blocks own disjoint 2**128 counter
# ranges and block 0 coincides with the plain keyed stream.
_local = threading.local()


def _machinery():
    m = getattr(_local, "m", None)
    if m is None:
        bitgen = np.random.Philox(key=[0, 0])
        gen = np.random.Generator(bitgen)
        state = bitgen.state
        m = (bitgen, gen, state, state["state"]["key"], state["state"]["counter"])
        _local.m = m
    return m


def _draw_block(key0: int, key1: int, block: int, size: int, kind: str) -> np.ndarray:
    bitgen, gen, state, key, counter = _machinery()
    key[0] = key0
    key[1] = key1
    counter[0] = 0
    counter[1] = 0
    counter[2] = block
    counter[3] = 0
    state["buffer_pos"] = 4
    state["has_uint32"] = 0
    state["uinteger"] = 0
    bitgen.state = state
    if kind == "exp":
        return gen.standard_exponential(size)
    return gen.random(size)


@dataclass(frozen=True)
class RandomnessPlan:
    """Names every random stream of one replication.

    The same plan always yields bit-identical streams; plans with different
    ``rep`` values (or seeds) never share a key.  Changing the input model
    does not touch any recovery stream.
    """

    master_seed: int
    rep: int = 0

    def __post_init__(self):
        if not 0 <= self.master_seed < 2 ** 64:
            raise ValueError("master_seed must fit in 64 bits")
        if not 0 <= self.rep < 2 ** 32:
            raise ValueError("rep must fit in 32 bits")

    def _key(self, slot: int) -> tuple[int, int]:
        if not 0 <= slot < 2 ** 32:
            raise ValueError("stream slot out of range")
        return self.master_seed, (self.rep << 32) | slot

    def recovery_key(self, node: int) -> tuple[int, int]:
        return self._key(node + 1)

    def input_key(self) -> tuple[int, int]:
        return self._key(0)

    def recovery_points(self, node: int, rate: float, upto: float) -> np.ndarray:
        """All potential recovery points of ``node`` up to time ``upto``.

        Diagnostic view of the same stream the simulator consumes; useful for
        asserting that runs with different inputs were offered identical
        points.
        """
        k0, k1 = self.recovery_key(node)
        pts = []
        t = 0.0
        block = 0
        size = _FIRST_BLOCK
        while t <= upto:
            gaps = _draw_block(k0, k1, block, size, "exp") / rate
            cum = t + np.cumsum(gaps)
            pts.append(cum)
            t = cum[-1]
            block += 1
            size = min(size * 4, _MAX_BLOCK)
        all_pts = np.concatenate(pts)
        return all_pts[all_pts <= upto]


_FIRST_BLOCK = 16
_MAX_BLOCK = 65536


class _PointStream:
    """Lazily grown potential-recovery point process for one node."""

    __slots__ = ("_k0", "_k1", "_rate", "_points", "_block", "_size", "_pos")

    def __init__(self, plan: RandomnessPlan, node: int, rate: float):
        self._k0, self._k1 = plan.recovery_key(node)
        self._rate = rate
        self._points: list[float] = []
        self._block = 0
        self._size = _FIRST_BLOCK
        self._pos = 0

    def _grow(self):
        gaps = _draw_block(self._k0, self._k1, self._block, self._size, "exp")
        self._block += 1
        self._size = min(self._size * 4, _MAX_BLOCK)
        last = self._points[-1] if self._points else 0.0
        self._points.extend((last + np.cumsum(gaps / self._rate)).tolist())

    def next_after(self, t: float) -> float:
        """First potential point strictly greater than t.

        Queries arrive in nondecreasing order (each node's switch-off times
        increase), so consumed points stay behind a moving cursor.
        """
        pts = self._points
        while not pts or pts[-1] <= t:
            self._grow()
            pts = self._points
        pos = self._pos
        p = pts[pos]
        if p <= t:
            pos = bisect_right(pts, t, pos + 1)
            p = pts[pos]
            self._pos = pos
        return p


class _InputStream:
    """Renewal input times from shared uniforms through the quantile map."""

    __slots__ = ("_k0", "_k1", "_model", "_times", "_idx", "_block", "_size", "_last")

    def __init__(self, plan: RandomnessPlan, model: InputModel):
        self._k0, self._k1 = plan.input_key()
        self._model = model
        self._times = None
        self._idx = 0
        self._block = 0
        self._size = _FIRST_BLOCK
        self._last = 0.0

    def _grow(self):
        u = _draw_block(self._k0, self._k1, self._block, self._size, "uniform")
        self._block += 1
        self._size = min(self._size * 4, _MAX_BLOCK)
        gaps = self._model.quantile(u)
        self._times = self._last + np.cumsum(gaps)
        self._last = float(self._times[-1])
        self._idx = 0

    def next(self) -> float:
        if self._times is None or self._idx >= len(self._times):
            self._grow()
        t = float(self._times[self._idx])
        self._idx += 1
        return t


# ---------------------------------------------------------------------------
# Stop rules
# ---------------------------------------------------------------------------

FIRST_RECEPTION = "first_reception"
HORIZON = "horizon"
RECEPTION_COUNT = "reception_count"


@dataclass(frozen=True)
class StopRule:
    kind: str
    node: int | None = None
    time: float | None = None
    count: int | None = None

    @classmethod
    def first_reception_at(cls, node: int) -> "StopRule":
        return cls(FIRST_RECEPTION, node=node)

    @classmethod
    def horizon(cls, time: float) -> "StopRule":
        if not time > 0:
            raise ValueError("horizon must be positive")
        return cls(HORIZON, time=float(time))

    @classmethod
    def reception_count(cls, node: int, count: int) -> "StopRule":
        if count < 1:
            raise ValueError("reception count must be >= 1")
        return cls(RECEPTION_COUNT, node=node, count=count)


# ---------------------------------------------------------------------------
# The engine
# ---------------------------------------------------------------------------

def simulate(config: SystemConfig, plan: RandomnessPlan, stop: StopRule) -> EventLog:
    """Run one chain realization; a pure function of its three arguments.

    All nodes start off at t = 0.  A potential recovery point is consumed
    only when its node is off; signals switch off the maximal all-on suffix.
    Under permanent input the rightmost node receives a signal at each of its
    recoveries, recorded as a recovery/input/reception tick sharing one
    timestamp.
    """
    lo, hi = config.left_node, config.right_node
    n = hi - lo + 1
    permanent = config.input.is_permanent

    if stop.kind in (FIRST_RECEPTION, RECEPTION_COUNT):
        if n == 0:
            raise ValueError("reception stop rules need a nonempty chain")
        if not lo <= stop.node <= hi:
            raise ValueError(f"stop node {stop.node} outside [{lo}, {hi}]")
    cap = stop.time if stop.kind == HORIZON else math.inf

    events: list[tuple] = []
    if n == 0:
        ins = _InputStream(plan, config.input)
        t = ins.next()
        while t <= cap:
            events.append((INPUT, t, None, None))
            t = ins.next()
        return EventLog(lo, hi, cap, permanent, events)

    rates = config.node_rates()
    streams = [_PointStream(plan, lo + j, rates[j]) for j in range(n)]
    on = bytearray(n)
    heap = [(streams[j].next_after(0.0), j) for j in range(n)]
    heapq.heapify(heap)
    ins = None if permanent else _InputStream(plan, config.input)
    next_in = math.inf if permanent else ins.next()

    stop_node = stop.node if stop.kind in (FIRST_RECEPTION, RECEPTION_COUNT) else None
    want = stop.count if stop.kind == RECEPTION_COUNT else (1 if stop.kind == FIRST_RECEPTION else 0)
    seen = 0
    horizon = cap
    push = heapq.heappush
    pop = heapq.heappop

    while True:
        t_rec = heap[0][0] if heap else math.inf
        if t_rec <= next_in:
            if t_rec > cap:
                break
            t, j = pop(heap)
            on[j] = 1
            events.append((RECOVERY, t, lo + j, lo + j))
            if not (permanent and j == n - 1):
                continue
            events.append((INPUT, t, None, None))
        else:
            t = next_in
            if t > cap:
                break
            events.append((INPUT, t, None, None))
            next_in = ins.next()
            if not on[n - 1]:
                continue
        # sweep the maximal all-on suffix
        a = n - 1
        while a > 0 and on[a - 1]:
            a -= 1
        events.append((RECEPTION, t, lo + a, hi))
        for k in range(a, n):
            on[k] = 0
            push(heap, (streams[k].next_after(t), k))
        if stop_node is not None and lo + a <= stop_node:
            seen += 1
            if seen >= want:
                horizon = t
                break

    return EventLog(lo, hi, horizon, permanent, events)


# ---------------------------------------------------------------------------
# Empirical distributions and statistics
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class EmpiricalDistribution:
    """Sorted nonnegative sample with the usual summary operations."""

    samples: np.ndarray

    def __post_init__(self):
        s = self.samples
        if s.ndim != 1 or len(s) == 0:
            raise ValueError("need a nonempty 1-d sample")
        if not (np.all(np.isfinite(s)) and np.all(s >= 0.0)):
            raise ValueError("samples must be finite and >= 0")
        if np.any(np.diff(s) < 0):
            raise ValueError("samples must be sorted ascending")

    @classmethod
    def from_values(cls, values) -> "EmpiricalDistribution":
        arr = np.sort(np.asarray(values, dtype=np.float64))
        arr.setflags(write=False)
        return cls(arr)

    @property
    def count(self) -> int:
        return len(self.samples)

    def mean(self) -> float:
        return float(np.mean(self.samples))

    def std(self) -> float:
        return float(np.std(self.samples, ddof=1)) if self.count > 1 else 0.0

    def stderr(self) -> float:
        return self.std() / math.sqrt(self.count)

    def cdf(self, x) -> np.ndarray | float:
        pos = np.searchsorted(self.samples, x, side="right") / self.count
        return float(pos) if np.isscalar(x) else pos

    def export_lines(self):
        """One value per line, text."""
        for v in self.samples:
            yield repr(float(v))


def ks_statistic(a: EmpiricalDistribution, b: EmpiricalDistribution) -> float:
    """Two-sample sup distance between empirical CDFs, in [0, 1]."""
    if a.count == 0 or b.count == 0:
        raise ValueError("need nonempty samples")
    xs = np.concatenate([a.samples, b.samples])
    fa = np.searchsorted(a.samples, xs, side="right") / a.count
    fb = np.searchsorted(b.samples, xs, side="right") / b.count
    return float(np.max(np.abs(fa - fb)))


def ks_two_sample_critical(na: int, nb: int, alpha: float) -> float:
    """Asymptotic two-sample rejection threshold at level alpha."""
    c = math.sqrt(-math.log(alpha / 2.0) / 2.0)
    return c * math.sqrt((na + nb) / (na * nb))


def ks_one_sample(dist: EmpiricalDistribution, cdf) -> float:
    """Sup distance between the empirical CDF and a reference CDF callable."""
    n = dist.count
    f = np.asarray(cdf(dist.samples), dtype=np.float64)
    hi = np.arange(1, n + 1) / n - f
    lo = f - np.arange(0, n) / n
    return float(max(np.max(hi), np.max(lo)))


def ks_one_sample_critical(n: int, alpha: float) -> float:
    return math.sqrt(-math.log(alpha / 2.0) / 2.0) / math.sqrt(n)


def dkw_band(n: int, alpha: float) -> float:
    """Half-width of the level-(1-alpha) uniform CDF confidence band."""
    return math.sqrt(math.log(2.0 / alpha) / (2.0 * n))


@dataclass(frozen=True)
class DominanceResult:
    dominates: bool
    witness: float | None = None
    max_deficit: float = 0.0


def dominance_check(lower: EmpiricalDistribution, upper: EmpiricalDistribution,
                    band: float) -> DominanceResult:
    """Decide whether ``upper`` stochastically dominates ``lower``.

    ``lower`` names the stochastically smaller sample, i.e. the one whose CDF
    should sit above.  Dominates iff cdf_lower(x) >= cdf_upper(x) - band for
    every x; otherwise the worst witness point is reported.
    """
    if band < 0:
        raise ValueError("band must be >= 0")
    xs = np.unique(np.concatenate([lower.samples, upper.samples]))
    fl = lower.cdf(xs)
    fu = upper.cdf(xs)
    deficit = fu - band - fl
    i = int(np.argmax(deficit))
    if deficit[i] > 0.0:
        return DominanceResult(False, witness=float(xs[i]), max_deficit=float(deficit[i]))
    return DominanceResult(True, max_deficit=float(deficit[i]))


# ---------------------------------------------------------------------------
# Monte Carlo harnesses
# ---------------------------------------------------------------------------

def sample_first_reception(config: SystemConfig, node: int, reps: int,
                           seed: int) -> EmpiricalDistribution:
    """First reception time at ``node`` over independent replications."""
    if reps < 1:
        raise ValueError("reps must be >= 1")
    stop = StopRule.first_reception_at(node)
    out = np.empty(reps, dtype=np.float64)
    for r in range(reps):
        log = simulate(config, RandomnessPlan(seed, r), stop)
        out[r] = log.horizon
    return EmpiricalDistribution.from_values(out)


def sample_interreception(config: SystemConfig, node: int, gap_count: int,
                          seed: int, max_horizon: float | None = None) -> EmpiricalDistribution:
    """Consecutive reception gaps at ``node`` from one long run.

    The gaps at a node form a renewal process, so a single replication
    yields iid gaps (the first gap is measured from t = 0).  If
    ``max_horizon`` is given and the run ends early, a warning is issued and
    the gaps observed so far are returned.
    """
    if gap_count < 1:
        raise ValueError("gap_count must be >= 1")
    plan = RandomnessPlan(seed, 0)
    if max_horizon is None:
        log = simulate(config, plan, StopRule.reception_count(node, gap_count))
    else:
        log = simulate(config, plan, StopRule.horizon(max_horizon))
    times = log.receptions_at(node)[:gap_count]
    if len(times) < gap_count:
        warnings.warn(f"only {len(times)} of {gap_count} receptions observed "
                      f"before the horizon; returning a partial sample")
    if not times:
        raise ValueError("no receptions observed; cannot form gaps")
    gaps = np.diff(np.concatenate([[0.0], np.asarray(times)]))
    return EmpiricalDistribution.from_values(gaps)


def coupled_compare(config_a: SystemConfig, config_b: SystemConfig, seed: int,
                    stop: StopRule) -> tuple[EventLog, EventLog]:
    """Run two configs that differ only in their input on shared randomness.

    Both runs see the same potential-recovery streams and the same input
    uniforms, so differences in the logs are attributable to the input law
    alone.
    """
    if (config_a.left_node, config_a.right_node) != (config_b.left_node, config_b.right_node):
        raise ValueError("coupled configs must share the node range")
    if config_a.node_rates() != config_b.node_rates():
        raise ValueError("coupled configs must share recovery rates")
    plan = RandomnessPlan(seed, 0)
    return simulate(config_a, plan, stop), simulate(config_b, plan, stop)

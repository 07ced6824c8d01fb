"""Truncation laboratory for the unbounded chain.

The infinite-chain behaviour is classified by the threshold
``theta = inf{t : sum_i exp(-rate(i) t) < infinity}``.  Only schedules with
theta = 0 (rates growing faster than logarithmically) support the regime of
interest, where signals keep arriving from far away; this module probes that
regime exclusively through finite truncations: first-reception laws on node
windows [k, l], their monotonicity in l, an explicit uniform-in-l lower
bound on their CDFs, certificates that receptions stay dense, and Cauchy
style convergence diagnostics along a ladder of truncations.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .core import (
    InputModel,
    RateSchedule,
    SystemConfig,
    EventLog,
    CONSTANT,
    LINEAR,
    LOG_FAMILY,
    LOG_SQUARE,
    EXPLICIT,
)
from .sim import (
    EmpiricalDistribution,
    RandomnessPlan,
    StopRule,
    dkw_band,
    dominance_check,
    DominanceResult,
    ks_statistic,
    sample_first_reception,
    simulate,
)
from .analytic import permanent_reduce

__all__ = [
    "TailClassification",
    "DenseSignalCertificate",
    "MonotonicityReport",
    "DiagnosticsTable",
    "ExtensionSample",
    "TailSumError",
    "CertificateUnavailableError",
    "classify_rates",
    "exp_tail_sum",
    "sample_truncation_law",
    "monotonicity_check",
    "cdf_lower_bound",
    "dense_signal_certificate",
    "interval_reception_bound",
    "convergence_diagnostics",
    "sample_extension",
]


class TailSumError(ArithmeticError):
    """The tail sum cannot be evaluated to the requested accuracy."""


class CertificateUnavailableError(RuntimeError):
    """No recovery-window certificate exists within the search budget."""


# ---------------------------------------------------------------------------
# Tail classification
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TailClassification:
    """Where ``sum_i exp(-rate(i) t)`` switches from divergent to convergent.

    case 1: theta = infinity (rates too small; nothing penetrates from afar)
    case 2: theta finite, sum still divergent at theta
    case 3: theta finite, sum convergent at theta (periodic penetration)
    case 4: theta = 0 (the regime with dense signals from afar)
    """

    theta: float
    case: int
    derivation: str            # "closed-form" | "numeric-estimate"
    note: str = ""

    @property
    def authoritative(self) -> bool:
        return self.derivation == "closed-form"


def classify_rates(rates: RateSchedule) -> TailClassification:
    """Classify a schedule by its tail threshold.

    Parametric families are classified in closed form.  Explicit finite
    schedules only admit a heuristic estimate (the threshold is a tail
    property no finite list determines); the result is flagged and a warning
    is emitted.
    """
    fam = rates.family
    if fam == CONSTANT:
        return TailClassification(math.inf, 1, "closed-form",
                                  "constant rates: the sum diverges for every t")
    if fam == LINEAR:
        return TailClassification(0.0, 4, "closed-form",
                                  "geometric tails converge for every t > 0")
    if fam == LOG_SQUARE:
        return TailClassification(0.0, 4, "closed-form",
                                  "exp(-t log^2 k) decays faster than any power")
    if fam == LOG_FAMILY:
        theta = rates.theta0
        # at t = theta the terms are ~ 1/(k (log k)^(theta*alpha))
        if rates.theta0 * rates.alpha > 1.0:
            return TailClassification(theta, 3, "closed-form",
                                      "sum converges at the threshold itself")
        return TailClassification(theta, 2, "closed-form",
                                  "sum still diverges at the threshold")
    # explicit: fit rate(k) ~ beta log k on the top half and guess
    n = rates.length
    ks = np.arange(max(2, n // 2), n + 1)
    if len(ks) < 2:
        est = math.inf
    else:
        vals = np.array([rates.rate(int(k)) for k in ks])
        logs = np.log(ks)
        beta = float(np.polyfit(logs, vals, 1)[0])
        est = math.inf if beta <= 1e-12 else 1.0 / beta
    if est == math.inf:
        case = 1
    elif est <= 0.05:
        case, est = 4, 0.0
    else:
        case = 2
    note = ("threshold estimated from a finite schedule; it is a tail "
            "property and this figure is not authoritative")
    warnings.warn(note)
    return TailClassification(est, case, "numeric-estimate", note)


def exp_tail_sum(rates: RateSchedule, x: float, start: int,
                 rel_tol: float = 1e-3) -> float:
    """Rigorous upper bound on ``sum_{j >= start} exp(-rate(j) x)``.

    Closed form for linear schedules (geometric); other unbounded families
    are summed term by term with an integral-comparison remainder, which must
    fall below ``rel_tol`` of the partial sum.  Returns ``inf`` when the sum
    diverges (or cannot be dominated), which downstream bounds treat as the
    trivial bound.
    """
    if x <= 0:
        raise ValueError("x must be positive")
    if start < 1:
        raise ValueError("start index must be >= 1")
    fam = rates.family
    if fam == CONSTANT:
        return math.inf
    if fam == LINEAR:
        r = math.exp(-rates.c * x)
        return r ** start / (1.0 - r)
    if fam == EXPLICIT:
        raise TailSumError("explicit schedules have no tail beyond their length; "
                           "tail sums need a parametric family")
    if fam == LOG_FAMILY:
        # terms <= u^(-x/theta0) for u >= 3; need the exponent > 1 to dominate
        p = x / rates.theta0
        if p <= 1.0:
            return math.inf
        total = 0.0
        j = start
        while True:
            total += math.exp(-rates.rate(j) * x)
            j += 1
            # sum_{k>=j} f(k) <= integral_{j-1}^inf u^-p du, valid once j-1 >= 3
            remainder = (j - 1) ** (1.0 - p) / (p - 1.0)
            if j - 1 >= 4 and remainder <= rel_tol * max(total, 1e-300):
                return total + remainder
            if j - start > 10_000_000:
                raise TailSumError("tail sum did not stabilize")
    # logsquare: dominate exp(-x log^2(u+1)) by (u+1)^(-x log j) for u >= j-1
    total = 0.0
    j = start
    while True:
        total += math.exp(-rates.rate(j) * x)
        j += 1
        p = x * math.log(j)
        if p > 1.0:
            remainder = j ** (1.0 - p) / (p - 1.0)
            if remainder <= rel_tol * max(total, 1e-300):
                return total + remainder
        if j - start > 10_000_000:
            raise TailSumError("tail sum did not stabilize")


# ---------------------------------------------------------------------------
# Truncation laws and their monotonicity
# ---------------------------------------------------------------------------

def _warn_if_not_case4(rates: RateSchedule):
    if rates.family == EXPLICIT:
        return
    cls = classify_rates(rates)
    if cls.case != 4:
        warnings.warn(f"schedule falls in case {cls.case}; truncation laws "
                      f"converge only in case 4")


def sample_truncation_law(k: int, l: int, rates: RateSchedule, reps: int,
                          seed: int) -> EmpiricalDistribution:
    """Sample the first reception time at node k of the chain on [k, l]
    fed permanently at the right end.

    Uses the permanent-input reduction: the chain [k, l-1] with exponential
    input at rate rate(l); for k = l the law is the bare exponential of
    rate(k), simulated directly.
    """
    if not 1 <= k <= l:
        raise ValueError("need 1 <= k <= l")
    _warn_if_not_case4(rates)
    full = SystemConfig(k, l, rates, InputModel.permanent())
    if l == k:
        return sample_first_reception(full, k, reps, seed)
    reduced = permanent_reduce(full)
    return sample_first_reception(reduced, k, reps, seed)


@dataclass(frozen=True)
class MonotonicityReport:
    rows: tuple[tuple[int, int, DominanceResult], ...]   # (l, l_next, result)
    band: float

    @property
    def all_dominate(self) -> bool:
        return all(r.dominates for _, _, r in self.rows)

    def failures(self):
        return [(a, b, r) for a, b, r in self.rows if not r.dominates]


def monotonicity_check(k: int, l_list, rates: RateSchedule, reps: int,
                       seed: int, alpha: float = 0.01) -> MonotonicityReport:
    """Check that longer truncations are stochastically larger.

    For consecutive l < l' in ``l_list``, the law on [k, l'] must dominate
    the law on [k, l] up to a two-sample uniform CDF band at level alpha.
    Ladder points share the seed, hence couple through common recovery
    streams; that only sharpens the comparison, the band stays valid.
    """
    ls = list(l_list)
    if ls != sorted(ls) or len(set(ls)) != len(ls):
        raise ValueError("l_list must be strictly ascending")
    band = dkw_band(reps, alpha / 2.0) * 2.0
    samples = {l: sample_truncation_law(k, l, rates, reps, seed) for l in ls}
    rows = []
    for a, b in zip(ls, ls[1:]):
        rows.append((a, b, dominance_check(samples[a], samples[b], band)))
    return MonotonicityReport(tuple(rows), band)


# ---------------------------------------------------------------------------
# Uniform-in-l bounds
# ---------------------------------------------------------------------------

def cdf_lower_bound(k: int, t: float, rates: RateSchedule) -> float:
    """Lower bound on the CDF at t of every truncation law on [k, l].

    Built from three independent events in an auxiliary chain fed at rate
    ``t**(-2/3)``: no input before sqrt(t), every node recovered by sqrt(t),
    and an input in (sqrt(t), t).  Valid for every l >= k; tends to 1 as t
    grows for schedules with theta = 0.
    """
    if not t > 1.0:
        raise ValueError("t must exceed 1 so that sqrt(t) < t")
    rho = t ** (-2.0 / 3.0)
    rt = math.sqrt(t)
    tail = exp_tail_sum(rates, rt, k)
    if math.isinf(tail):
        return 0.0
    return (math.exp(-rho * rt)
            * max(0.0, 1.0 - tail)
            * -math.expm1(-rho * (t - rt)))


@dataclass(frozen=True)
class DenseSignalCertificate:
    """A recovery window tau for node index k with small tail mass.

    ``tail_sum`` bounds ``sum_{j >= k} exp(-rate(j) tau)`` and is at most
    1/k; ``input_rate`` is the auxiliary rate 1/sqrt(tau).  ``bound``, when
    set, is the reception-probability lower bound derived for one interval.
    """

    node_index: int
    tau: float
    tail_sum: float
    input_rate: float
    bound: float | None = None

    def record(self) -> str:
        b = "" if self.bound is None else repr(self.bound)
        return f"{self.node_index},{self.tau!r},{self.tail_sum!r},{self.input_rate!r},{b}"


def dense_signal_certificate(rates: RateSchedule, k: int,
                             budget: float) -> DenseSignalCertificate:
    """Smallest recovery window tau in (0, budget] with tail mass <= 1/k.

    Binary search on the monotone tail sum; raises when even the full budget
    fails the target (constant-rate schedules never certify).
    """
    if k < 1:
        raise ValueError("node index must be >= 1")
    if not budget > 0:
        raise ValueError("budget must be positive")
    target = 1.0 / k

    def tail(tau: float) -> float:
        try:
            return exp_tail_sum(rates, tau, k, rel_tol=1e-3 * target)
        except TailSumError:
            return math.inf

    if tail(budget) > target:
        raise CertificateUnavailableError(
            f"no recovery window within budget {budget} brings the tail mass "
            f"at node {k} below 1/{k}")
    lo, hi = 0.0, budget
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if mid <= 0.0 or mid == lo or mid == hi:
            break
        if tail(mid) <= target:
            hi = mid
        else:
            lo = mid
    ts = tail(hi)
    return DenseSignalCertificate(k, hi, ts, 1.0 / math.sqrt(hi))


def interval_reception_bound(k: int, interval: tuple[float, float],
                             rates: RateSchedule,
                             certificate: DenseSignalCertificate | None = None,
                             ) -> DenseSignalCertificate:
    """Lower bound, uniform in the truncation length, on the probability that
    node k receives a signal inside the open interval.

    Requires a certificate window shorter than half the interval; one is
    computed when not supplied.  Returns the certificate with its ``bound``
    filled in.
    """
    t0, t1 = interval
    s = t1 - t0
    if not s > 0:
        raise ValueError("interval must have positive length")
    if certificate is None:
        certificate = dense_signal_certificate(rates, k, budget=s / 2 * (1 - 1e-12))
    tau = certificate.tau
    if not tau < s / 2:
        raise ValueError(f"certificate window {tau} must be below half the "
                         f"interval length {s / 2}")
    bound = (math.exp(-math.sqrt(tau))
             * max(0.0, 1.0 - certificate.tail_sum)
             * -math.expm1(-s / (2.0 * math.sqrt(tau))))
    return DenseSignalCertificate(certificate.node_index, tau,
                                  certificate.tail_sum, certificate.input_rate,
                                  bound=bound)


# ---------------------------------------------------------------------------
# Convergence diagnostics along a truncation ladder
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DiagnosticsTable:
    k: int
    rows: tuple[tuple[int, float, float | None], ...]   # (l, mean, ks to next)

    def csv_lines(self):
        yield "l,mean,ks_to_next"
        for l, m, ks in self.rows:
            yield f"{l},{m!r},{'' if ks is None else repr(ks)}"

    def means(self):
        return [m for _, m, _ in self.rows]

    def ks_column(self):
        return [ks for _, _, ks in self.rows if ks is not None]


def convergence_diagnostics(k: int, l_ladder, rates: RateSchedule, reps: int,
                            seed: int) -> DiagnosticsTable:
    """Means and successive two-sample distances along a truncation ladder.

    Under a theta = 0 schedule the means are nondecreasing and the distance
    column shrinks; a constant-rate schedule surfaces its pathology as means
    that keep growing.
    """
    ls = list(l_ladder)
    if ls != sorted(ls) or len(set(ls)) != len(ls):
        raise ValueError("ladder must be strictly ascending")
    samples = [sample_truncation_law(k, l, rates, reps, seed) for l in ls]
    rows = []
    for i, l in enumerate(ls):
        ks = ks_statistic(samples[i], samples[i + 1]) if i + 1 < len(ls) else None
        rows.append((l, samples[i].mean(), ks))
    return DiagnosticsTable(k, tuple(rows))


@dataclass(frozen=True)
class ExtensionSample:
    log: EventLog              # restricted to nodes [1, k]
    sensitivity_ks: float      # gap-law distance between truncations l and 2l


def sample_extension(k: int, l: int, horizon: float, rates: RateSchedule,
                     seed: int) -> ExtensionSample:
    """Simulate the permanently fed truncation [1, l] and restrict to [1, k].

    The restriction approximates the window onto the unbounded chain; the
    attached diagnostic is the two-sample distance between the node-k
    interreception gaps at truncation l and at 2l (same seed, coupled).
    """
    if not 1 <= k <= l:
        raise ValueError("need 1 <= k <= l")
    if l < 4 * k:
        warnings.warn(f"truncation l={l} is close to the observation window "
                      f"k={k}; prefer l >= 4k")
    _warn_if_not_case4(rates)

    def run(ll: int) -> EventLog:
        cfg = SystemConfig(1, ll, rates, InputModel.permanent())
        return simulate(cfg, RandomnessPlan(seed, 0), StopRule.horizon(horizon))

    log_l = run(l)
    log_2l = run(2 * l)

    def gaps(log: EventLog) -> EmpiricalDistribution:
        times = log.receptions_at(k)
        if not times:
            raise ValueError(f"no receptions at node {k} within the horizon; "
                             f"extend it")
        return EmpiricalDistribution.from_values(
            np.diff(np.concatenate([[0.0], np.asarray(times)])))

    ks = ks_statistic(gaps(log_l), gaps(log_2l))
    return ExtensionSample(log_l.restrict(k), ks)

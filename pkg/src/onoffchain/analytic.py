"""Transform algebra for interreception-interval laws and exact means.

For an interval law F with F(0) = 0 we work with
``phi(s) = 1 - integral exp(-s x) dF(x)``.  Passing a signal stream through
one node with recovery rate rho maps ``phi(s)`` to ``phi(s)/phi(s + rho)``;
iterating this step across a chain gives the interval transform seen at the
left end.  The chain result is invariant under permutations of the rates,
and for equal rates with permanent input the mean at the left end has an
exact product form evaluated here in high precision (the alternating sum
underneath cancels about one bit per node, hence the precision floor).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import mpmath
import numpy as np

from .core import (
    InputModel,
    RateSchedule,
    SystemConfig,
    EXPONENTIAL,
    DETERMINISTIC,
    EMPIRICAL,
)

__all__ = [
    "LaplaceEval",
    "HighPrecisionReal",
    "EULER_GAMMA",
    "EXP_EULER_GAMMA",
    "PermanentInputError",
    "ImproperTransformError",
    "InfiniteMeanError",
    "ComplexityError",
    "PrecisionError",
    "transform_of_input",
    "node_step",
    "chain_transform",
    "subset_expansion",
    "mean_from_transform",
    "permanent_reduce",
    "exact_mean_equal_rates",
    "exact_mean_small_fraction",
    "euler_ratio",
    "harmonic_lower_bound",
]

EULER_GAMMA = 0.57721566490153286
# exp(EULER_GAMMA), stored to 20 significant digits; comparison constant only
EXP_EULER_GAMMA_STR = "1.7810724179901979852"
EXP_EULER_GAMMA = float(EXP_EULER_GAMMA_STR)

_SUBSET_CAP = 25          # 2**len terms; hard complexity guard
_CHAIN_CAP = 25           # general-rate chains; equal rates collapse and are uncapped
_MEAN_H0 = 1e-3
_MEAN_REL_TOL = 1e-8
_MEAN_MAX_EVALS = 40


class PermanentInputError(ValueError):
    """Permanent input has no interval transform; reduce it away first."""


class ImproperTransformError(ValueError):
    """phi(0) != 0: not the transform of a proper interval law."""


class InfiniteMeanError(ArithmeticError):
    """phi(s)/s diverges as s -> 0: the law has no finite mean."""


class ComplexityError(RuntimeError):
    """An exact evaluation would need too many subset terms."""


class PrecisionError(ValueError):
    """Requested precision is below the cancellation floor."""


class LaplaceEval:
    """Evaluator for phi(s) = 1 - integral exp(-s x) dF(x), s >= 0.

    Invariants for proper laws: phi(0) = 0, phi nondecreasing, phi <= 1.
    ``kind`` is one of "closed-form", "composite", "empirical".
    """

    __slots__ = ("_fn", "kind", "label")

    def __init__(self, fn, kind: str, label: str = ""):
        if kind not in ("closed-form", "composite", "empirical"):
            raise ValueError(f"unknown transform kind {kind!r}")
        self._fn = fn
        self.kind = kind
        self.label = label

    def __call__(self, s: float) -> float:
        if s < 0:
            raise ValueError("transforms are evaluated at s >= 0")
        return float(self._fn(float(s)))

    def __repr__(self):
        return f"LaplaceEval({self.kind}: {self.label})"


def transform_of_input(model: InputModel) -> LaplaceEval:
    """Interval transform of a proper input law."""
    if model.is_permanent:
        raise PermanentInputError(
            "permanent input is the symbol [0], not an interval law; "
            "apply permanent_reduce to the configuration first")
    if model.kind == EXPONENTIAL:
        rho = model.rate
        return LaplaceEval(lambda s: s / (rho + s), "closed-form", f"exp({rho})")
    if model.kind == DETERMINISTIC:
        d = model.duration
        return LaplaceEval(lambda s: -math.expm1(-s * d), "closed-form", f"det({d})")
    samples = model.samples

    def emp(s):
        return float(np.mean(-np.expm1(-s * samples)))

    return LaplaceEval(emp, "empirical", f"empirical(n={len(samples)})")


def node_step(phi: LaplaceEval, rate: float) -> LaplaceEval:
    """Transform after the stream passes one node with the given rate."""
    if not rate > 0:
        raise ValueError("recovery rate must be positive")

    def stepped(s):
        return phi(s) / phi(s + rate)

    return LaplaceEval(stepped, "composite", f"{phi.label} -> node({rate})")


def chain_transform(model: InputModel, rates) -> LaplaceEval:
    """Transform after the input passes a whole chain of rates.

    ``rates`` is ordered from the entry node to the observed node.  The
    result does not depend on the order.  Equal-rate chains collapse to a
    binomial product and evaluate in linear time; general chains expand over
    subset sums (memoized on repeated shifted arguments) and are capped at
    length ``_CHAIN_CAP``.
    """
    base = transform_of_input(model)
    rs = [float(r) for r in rates]
    for r in rs:
        if not (math.isfinite(r) and r > 0):
            raise ValueError(f"recovery rates must be positive, got {r}")
    if not rs:
        return base
    label = f"{base.label} -> chain({len(rs)})"
    if all(r == rs[0] for r in rs):
        fn = _equal_rate_chain(base, rs[0], len(rs))
        return LaplaceEval(fn, "composite", label)
    if len(rs) > _CHAIN_CAP:
        raise ComplexityError(
            f"general-rate chains are capped at {_CHAIN_CAP} nodes "
            f"(2**len distinct shifted arguments); got {len(rs)}")
    fn = _general_chain(base, rs)
    return LaplaceEval(fn, "composite", label)


def _equal_rate_chain(base, rho: float, n: int):
    # after n equal-rate nodes: log phi = sum_j (-1)^j C(n, j) log base(s + j rho)
    coeffs = [math.comb(n, j) for j in range(n + 1)]

    def fn(s):
        if s == 0.0:
            return 0.0
        total = math.fsum(
            (-c if j & 1 else c) * math.log(base(s + j * rho))
            for j, c in enumerate(coeffs))
        return math.exp(total)

    return fn


def _general_chain(base, rs):
    L = len(rs)

    def fn(s):
        memo: dict[tuple[int, float], float] = {}

        def value(k: int, arg: float) -> float:
            if k == 0:
                return base(arg)
            key = (k, arg)
            v = memo.get(key)
            if v is None:
                v = value(k - 1, arg) / value(k - 1, arg + rs[k - 1])
                memo[key] = v
            return v

        return value(L, s)

    return fn


def subset_expansion(phi: LaplaceEval, rates, s: float) -> float:
    """Closed-form chain value at one point, expanded over rate subsets.

    The value is the ratio of products of ``phi(s + sum of subset)`` over
    even- and odd-sized subsets.  At s = 0 the empty-subset factor vanishes
    and the value is 0; extract the mean via :func:`mean_from_transform`
    instead of dividing here.
    """
    rs = [float(r) for r in rates]
    L = len(rs)
    if L > _SUBSET_CAP:
        raise ComplexityError(f"subset expansion is capped at {_SUBSET_CAP} rates, got {L}")
    if s < 0:
        raise ValueError("evaluate at s >= 0")
    if s == 0.0:
        return 0.0
    if L == 0:
        return phi(s)
    # subset sums by doubling, lowest index first: deterministic and compact
    sums = np.zeros(1, dtype=np.float64)
    parity = np.zeros(1, dtype=np.int8)
    for r in rs:
        sums = np.concatenate([sums, sums + r])
        parity = np.concatenate([parity, parity ^ 1])
    logs = np.fromiter((math.log(phi(s + x)) for x in sums), dtype=np.float64,
                       count=len(sums))
    total = float(np.sum(logs[parity == 0]) - np.sum(logs[parity == 1]))
    return math.exp(total)


def mean_from_transform(phi: LaplaceEval, rel_tol: float = _MEAN_REL_TOL,
                        max_evals: int = _MEAN_MAX_EVALS) -> float:
    """Mean of the interval law: the s -> 0+ limit of phi(s)/s.

    Uses Richardson extrapolation on a halving step, starting at 1e-3,
    until two successive extrapolants agree to ``rel_tol`` or the evaluation
    budget runs out (the last estimate is then returned).
    """
    if abs(phi(0.0)) > 1e-12:
        raise ImproperTransformError(f"phi(0) = {phi(0.0)}, expected 0")
    h = _MEAN_H0
    prev = None
    first = None
    est = math.nan
    growth = 0
    evals = 0
    while evals < max_evals:
        a0 = phi(h) / h
        a1 = phi(h / 2) / (h / 2)
        a2 = phi(h / 4) / (h / 4)
        evals += 3
        r1a = 2 * a1 - a0
        r1b = 2 * a2 - a1
        est = (4 * r1b - r1a) / 3
        if prev is not None:
            if abs(est - prev) <= rel_tol * max(abs(est), 1e-300):
                return est
            growth = growth + 1 if abs(est) > 1.02 * abs(prev) else 0
            if growth >= 6 and abs(est) > 8.0 * abs(first):
                raise InfiniteMeanError("phi(s)/s keeps growing as s -> 0")
        else:
            first = est
        prev = est
        h /= 2
    return est


def permanent_reduce(config: SystemConfig) -> SystemConfig:
    """Trade permanent input for its equivalent one-node-shorter chain.

    A permanently fed rightmost node emits signals as a Poisson process with
    its own recovery rate, so dropping it and feeding the remainder with
    exponential input of that rate leaves every observable at the remaining
    nodes unchanged.  Reducing a one-node chain yields the empty chain whose
    input process is the observable itself.
    """
    if not config.input.is_permanent:
        raise ValueError("only permanent-input configurations can be reduced")
    if config.is_empty:
        raise ValueError("nothing to reduce in an empty chain")
    rho = config.rates.rate(config.right_node)
    return SystemConfig(config.left_node, config.right_node - 1,
                        config.rates, InputModel.exponential(rho))


# ---------------------------------------------------------------------------
# Exact means for the equal-rate permanent chain
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HighPrecisionReal:
    """A value carried at a stated binary precision."""

    value: mpmath.mpf
    bits: int

    def __float__(self) -> float:
        return float(self.value)

    def digits(self, n: int) -> str:
        return mpmath.nstr(self.value, n, strip_zeros=False)


def exact_mean_equal_rates(n: int, precision_bits: int | None = None) -> HighPrecisionReal:
    """Mean first-reception time at the left end of an n-node equal-rate
    chain under permanent input, by the exact alternating product.

    Computed as exp(sum_k (-1)^k C(n, k) ln k) with exact integral binomials.
    The alternating sum cancels about n bits, so requests below n + 64 bits
    are refused; internally the sum carries extra guard bits and the result
    is rounded back to the requested precision.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    floor = n + 64
    if precision_bits is None:
        precision_bits = floor
    if precision_bits < floor:
        raise PrecisionError(
            f"precision_bits={precision_bits} is below the floor {floor}: the "
            f"alternating sum cancels about {n} bits, leaving fewer than 64 "
            f"trustworthy bits in the result")
    work = precision_bits + n + 32
    with mpmath.workprec(work):
        total = mpmath.mpf(0)
        for k in range(2, n + 1):          # k = 1 contributes ln 1 = 0
            term = mpmath.log(k) * math.comb(n, k)
            total = total - term if k & 1 else total + term
        value = mpmath.exp(total)
    with mpmath.workprec(precision_bits):
        value = +value                     # round to the stated precision
    return HighPrecisionReal(value, precision_bits)


def exact_mean_small_fraction(n: int) -> Fraction:
    """The same mean as an exact rational, for cross-checking small n."""
    if not 1 <= n <= 16:
        raise ValueError("rational cross-check is for n <= 16 (the exponents "
                         "are binomial coefficients)")
    num = 1
    den = 1
    for k in range(1, n + 1):
        if k & 1:
            den *= k ** math.comb(n, k)
        else:
            num *= k ** math.comb(n, k)
    return Fraction(num, den)


def euler_ratio(n: int) -> float:
    """exact_mean_equal_rates(n) / ln n; approaches exp(EULER_GAMMA)."""
    if n < 2:
        raise ValueError("n must be >= 2 (ln 1 = 0)")
    hp = exact_mean_equal_rates(n)
    with mpmath.workprec(hp.bits):
        return float(hp.value / mpmath.log(n))


def harmonic_lower_bound(n: int) -> float:
    """H_n = sum 1/i: every node must recover once, so the mean first
    reception at the left end is at least the mean maximum of n unit
    exponentials."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return math.fsum(1.0 / i for i in range(1, n + 1))

"""
Quasiharmonic functions on unweighted R.

Bounded extension across E by repeated odd reflection, bookkeeping of the
quasiharmonicity constant under reflection, and the lower bound f_Q that
forces extensions of u(t) = t to blow up.
"""

from __future__ import annotations

import logging
import math
from typing import Callable, List, Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, ValidationError, field_validator

from potlab.errors import ConditionFailed, InputError, LimitMissing, NotRemovable
from potlab.harmonic1d import Status1D, Verdict1D, decide_removable_1d
from potlab.weights1d import (
    Interval,
    OpenSet1D,
    RelClosed1D,
    Weight1D,
    components_minus,
    iter_components,
    lebesgue_ratio,
)

logger = logging.getLogger(__name__)

Rule = Literal["martio", "uppman", "uppman_small"]
Side = Literal["left", "right"]
RealFunction = Callable[[float], float]


class QuasiConstant(BaseModel):
    model_config = ConfigDict(frozen=True)

    Q: float

    @field_validator("Q")
    @classmethod
    def _at_least_one(cls, v: float) -> float:
        if not v >= 1.0:
            raise ValueError("Q must be >= 1")
        return v


def _quasi(Q: float) -> QuasiConstant:
    try:
        return QuasiConstant(Q=Q)
    except ValidationError as e:
        raise InputError(f"invalid quasiharmonicity constant {Q}", field="Q") from e


def _check_p(p: float) -> None:
    if not (1.0 < p < math.inf):
        raise InputError("p must satisfy 1 < p < infinity", field="p")


# ---------------------------------------------------------------------------
# Reflection
# ---------------------------------------------------------------------------

class ReflectedFunction(BaseModel):
    """
    base on its own side of pivot, 2*pivot_value - base(2*pivot - x) on the
    other. `side` names the half where base is the original function.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    base: Callable[[float], float]
    pivot: float
    pivot_value: float
    side: Side = "right"

    def original(self, x: float) -> bool:
        return x > self.pivot if self.side == "right" else x < self.pivot

    def __call__(self, x: float) -> float:
        if x == self.pivot:
            return self.pivot_value
        if self.original(x):
            return float(self.base(x))
        return 2.0 * self.pivot_value - float(self.base(2.0 * self.pivot - x))


def probe_limit(u: RealFunction, pivot: float, side: Side, delta: float = 1.0,
                tol: float = 1e-8, levels: Tuple[int, int] = (4, 40)) -> float:
    """
    One-sided limit of u at pivot from samples at pivot +- delta * 2^-k.

    The last eight samples must agree to tol (relative to max(1, |value|)).
    """
    sign = 1.0 if side == "right" else -1.0
    samples = [float(u(pivot + sign * delta * 2.0 ** -k)) for k in range(levels[0], levels[1] + 1)]
    if not all(math.isfinite(v) for v in samples):
        raise LimitMissing(f"u is not finite near {pivot}")
    tail = samples[-8:]
    spread = max(tail) - min(tail)
    scale = max(1.0, abs(tail[-1]))
    if spread > tol * scale:
        raise LimitMissing(f"u oscillates by {spread:.3g} at {pivot} from the {side}")
    return tail[-1]


def reflect(u: RealFunction, pivot: float, pivot_value: Optional[float] = None,
            side: Side = "right", delta: float = 1.0) -> ReflectedFunction:
    """Odd reflection of u about (pivot, pivot_value); the value is probed if omitted."""
    if pivot_value is None:
        pivot_value = probe_limit(u, pivot, side, delta)
    return ReflectedFunction(base=u, pivot=pivot, pivot_value=pivot_value, side=side)


# ---------------------------------------------------------------------------
# Constant bookkeeping
# ---------------------------------------------------------------------------

def uppman_small_range(p: float) -> float:
    """Upper end of the Q range where the improved one-reflection bound applies."""
    return max(1.0 / (2.0 - 2.0 ** (1.0 / p)), 1.0 / (2.0 - 2.0 ** (1.0 / p - 1.0)))


def q_update(Q: float, p: float, rule: Rule = "uppman") -> QuasiConstant:
    """Quasiharmonicity constant of an odd reflection of a Q-quasiharmonic function."""
    q = _quasi(Q).Q
    _check_p(p)
    if rule == "martio":
        return QuasiConstant(Q=2.0 ** p * q)
    if rule == "uppman":
        return QuasiConstant(Q=max(2.0, 2.0 ** (p - 1.0)) * q)
    if rule == "uppman_small":
        bound = uppman_small_range(p)
        if not q < bound:
            raise ConditionFailed(f"Q={q:g} outside the range Q < {bound:.6g} for p={p:g}")
        return QuasiConstant(Q=q * (2.0 - q ** (-1.0 / p)) ** p)
    raise InputError(f"unknown reflection rule {rule!r}", field="rule")


def q_after_reflections(Q: float, p: float, N: int, rule: Rule = "uppman") -> QuasiConstant:
    """q_update applied N times; uppman_small falls back to uppman once out of range."""
    if N < 0:
        raise InputError("reflection count must be nonnegative", field="N")
    q = _quasi(Q)
    for _ in range(N):
        if rule == "uppman_small" and not q.Q < uppman_small_range(p):
            q = q_update(q.Q, p, "uppman")
        else:
            q = q_update(q.Q, p, rule)
    return q


# ---------------------------------------------------------------------------
# Extension by reflection
# ---------------------------------------------------------------------------

class QuasiPiece(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    interval: Interval
    fn: Callable[[float], float]
    reflections: int
    oscillation: float


class QuasiExtension(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    pieces: Tuple[QuasiPiece, ...]
    Qprime: QuasiConstant
    N: int
    reflections_used: int

    def __call__(self, x: float) -> float:
        for pc in self.pieces:
            if pc.interval[0] < x < pc.interval[1]:
                return float(pc.fn(x))
        raise InputError(f"x={x} is outside the extension's domain", field="x")


def reflection_count(C: float) -> int:
    """N = ceil(log2 C): reflections needed to cover a component C times longer."""
    if not math.isfinite(C):
        raise NotRemovable("ratio is unbounded")
    if C <= 1.0:
        return 0
    return max(0, math.ceil(math.log2(C) - 1e-12))


def _sample_oscillation(fn: RealFunction, I: Interval, count: int = 1025) -> float:
    lo, hi = I
    xs = np.linspace(lo, hi, count + 2)[1:-1]
    values = np.array([fn(float(x)) for x in xs])
    return float(values.max() - values.min())


def _extend_component(u: RealFunction, I: Interval, J: Interval) -> Tuple[RealFunction, int]:
    """Reflect u from J until it covers I; the side with the larger gap goes first."""
    if math.isinf(J[0]) or math.isinf(J[1]):
        if J == I:
            return u, 0
        # bounded quasiharmonic functions on a half-line are constant
        anchor = J[1] - 1.0 if math.isinf(J[0]) else J[0] + 1.0
        probes = [float(u(anchor + s)) for s in (0.0, 1.0, 10.0, -0.5)]
        if max(probes) - min(probes) > 1e-9 * max(1.0, abs(probes[0])):
            raise InputError("a bounded quasiharmonic function on an unbounded interval is constant", field="u")
        value = probes[0]
        return (lambda x: value), 0

    f: RealFunction = u
    a, b = J
    used = 0
    while a > I[0] or b < I[1]:
        left_gap = a - I[0]
        right_gap = I[1] - b
        delta = min(1.0, 0.25 * (b - a))
        if right_gap >= left_gap:
            f = reflect(f, b, side="left", delta=delta)
            a, b = a, min(2.0 * b - a, I[1])
        else:
            f = reflect(f, a, side="right", delta=delta)
            a, b = max(2.0 * a - b, I[0]), b
        used += 1
    return f, used


def extend_quasi_1d(Omega: OpenSet1D, E: RelClosed1D, u: RealFunction, Q: float, p: float = 2.0,
                    rule: Rule = "uppman", depth: int = 32) -> QuasiExtension:
    """
    Bounded extension of a Q-quasiharmonic u from Omega minus E to Omega.

    Each component is covered by odd reflections about the endpoints of
    I minus E; Q' accounts for the largest number of reflections used.
    """
    q = _quasi(Q)
    _check_p(p)
    verdict = decide_removable_quasi_1d(Omega, E, Q=q.Q, p=p)
    if not verdict.removable:
        raise NotRemovable(f"E is not removable for quasiharmonic functions ({verdict.clause})", verdict=verdict)
    N = reflection_count(verdict.constant)

    pieces: List[QuasiPiece] = []
    used = 0
    for ref, pieces_E in iter_components(Omega, E, depth):
        I = ref.interval
        J = components_minus(I, pieces_E)[0]
        fn, k = _extend_component(u, I, J)
        used = max(used, k)
        osc = _sample_oscillation(fn, I) if math.isfinite(I[1] - I[0]) else 0.0
        pieces.append(QuasiPiece(interval=I, fn=fn, reflections=k, oscillation=osc))
        logger.debug("component %s: %d reflections, oscillation %.6g", I, k, osc)
    if used > N:
        logger.info("two-sided component needed %d reflections (ceil(log2 C) = %d)", used, N)
    Qprime = q_after_reflections(q.Q, p, used, rule)
    return QuasiExtension(pieces=tuple(pieces), Qprime=Qprime, N=N, reflections_used=used)


# ---------------------------------------------------------------------------
# Lower bound f_Q
# ---------------------------------------------------------------------------

class FQBound(BaseModel):
    model_config = ConfigDict(frozen=True)

    Q: float
    p: float
    x: float
    bound: Optional[float] = None

    @property
    def feasible(self) -> bool:
        return self.bound is not None


def _bisect(g: Callable[[float], float], lo: float, hi: float, tol: float) -> float:
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if g(mid) < 0.0:
            lo = mid
        else:
            hi = mid
    return hi


def f_q_bound(Q: float, p: float, x: float, tol: float = 1e-10, cap: float = 2.0 ** 40) -> FQBound:
    """
    Smallest a >= 1 with a^p Q >= x^(p-1) + (a-1)^p (1 - 1/x)^(1-p).

    Any Q-quasiharmonic extension U of u(t) = t from (0, 1) across [1, x]
    has U(x) >= this value. bound is None when no a qualifies.
    """
    q = _quasi(Q).Q
    _check_p(p)
    if not x > 1.0:
        raise InputError("f_Q needs x > 1", field="x")
    if q == 1.0:
        return FQBound(Q=q, p=p, x=x, bound=x)

    c = (1.0 - 1.0 / x) ** (1.0 - p)
    target = x ** (p - 1.0)

    def g(a: float) -> float:
        return a ** p * q - target - (a - 1.0) ** p * c

    if g(1.0) >= 0.0:
        return FQBound(Q=q, p=p, x=x, bound=1.0)

    r = (x / (x - 1.0)) * q ** (-1.0 / (p - 1.0))
    if r <= 1.0:
        hi = max(2.0 * x, 64.0)
        while g(hi) < 0.0:
            hi *= 2.0
            if hi > cap:
                return FQBound(Q=q, p=p, x=x)
        return FQBound(Q=q, p=p, x=x, bound=_bisect(g, 1.0, hi, tol))

    peak = r / (r - 1.0)
    top = g(peak)
    if abs(top) <= 1e-9 * target:
        return FQBound(Q=q, p=p, x=x, bound=peak)
    if top < 0.0:
        return FQBound(Q=q, p=p, x=x)
    return FQBound(Q=q, p=p, x=x, bound=_bisect(g, 1.0, peak, tol))


# ---------------------------------------------------------------------------
# Decision
# ---------------------------------------------------------------------------

def decide_removable_quasi_1d(Omega: OpenSet1D, E: RelClosed1D, Q: float = 1.0, p: float = 2.0,
                              depth: int = 32) -> Verdict1D:
    """
    Removability of E for bounded quasiharmonic functions on unweighted R.

    Same decision surface as the harmonic case with w = 1. A non-removable
    verdict carries f_Q values as the certificate that every extension of
    the witness blows up.
    """
    q = _quasi(Q).Q
    _check_p(p)
    verdict = decide_removable_1d(Omega, E, Weight1D.constant(1.0, p), depth)

    if verdict.status == Status1D.REMOVABLE:
        N = reflection_count(lebesgue_ratio(Omega, E).value)
        return verdict.model_copy(update={"reflections": N})
    if verdict.status == Status1D.DISCONNECTED:
        # a quasiharmonic function constant on an open subinterval is constant throughout
        return verdict.model_copy(update={"clause": "disconnected-component-constancy"})

    if verdict.clause == "case-1-unbounded-component":
        xs = [2.0 ** k for k in range(1, 21)]
    else:
        xs = [v for v in verdict.certificate if v > 1.0]
    certificate = tuple(b.bound for b in (f_q_bound(q, p, x) for x in xs) if b.feasible)
    return verdict.model_copy(update={"certificate": certificate})

"""
A-harmonic functions on weighted R.

On an interval every A-harmonic function is u(x) = b + a * nu((x0, x)), with
nu the dual measure of the effective weight, so extensions across E, the
bounded-removability decision and the counterexamples are all exact up to
the nu-quadrature.
"""

from __future__ import annotations

import logging
import math
from enum import Enum
from typing import List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator

from potlab import config
from potlab.errors import DegenerateInterval, Disconnected, InputError, NotRemovable
from potlab.weights1d import (
    INF,
    ComponentRef,
    Interval,
    OpenSet1D,
    RelClosed1D,
    Weight1D,
    check_pair,
    components_minus,
    iter_components,
    lebesgue_ratio,
    nu_measure,
    nu_ratio,
    nu_signed,
)

logger = logging.getLogger(__name__)


class AffineInNu(BaseModel):
    """u(x) = b + a * (signed nu-length from basepoint to x)."""

    model_config = ConfigDict(frozen=True)

    a: float
    b: float
    basepoint: float = 0.0
    weight: Weight1D

    @property
    def is_constant(self) -> bool:
        return self.a == 0.0

    def __call__(self, x):
        if np.ndim(x) == 0:
            return eval_affine(self, float(x))
        return eval_affine_many(self, np.asarray(x, dtype=float))


def eval_affine(f: AffineInNu, x: float, tol: Optional[float] = None) -> float:
    if not math.isfinite(x):
        raise InputError("evaluation point must be finite", field="x")
    if f.a == 0.0:
        return f.b
    return f.b + f.a * nu_signed(f.weight, f.basepoint, x, tol)


def eval_affine_many(f: AffineInNu, xs: np.ndarray, tol: Optional[float] = None) -> np.ndarray:
    """Vectorized eval_affine; the nu-primitive is accumulated along sorted points."""
    if f.a == 0.0:
        return np.full(xs.shape, f.b)
    flat = xs.ravel()
    grid = np.unique(np.concatenate([flat, [f.basepoint]]))
    steps = [nu_measure(f.weight, (lo, hi), tol) for lo, hi in zip(grid[:-1], grid[1:])]
    primitive = np.concatenate([[0.0], np.cumsum(steps)])
    primitive -= primitive[np.searchsorted(grid, f.basepoint)]
    values = f.b + f.a * primitive[np.searchsorted(grid, flat)]
    return values.reshape(xs.shape)


def fit_two_points(w: Weight1D, I: Interval, first: Tuple[float, float], second: Tuple[float, float],
                   tol: Optional[float] = None) -> AffineInNu:
    """The unique A-harmonic function on I through two points."""
    (x1, u1), (x2, u2) = first, second
    tol = config.POTLAB_QUAD_TOL if tol is None else tol
    for x in (x1, x2):
        if not (I[0] <= x <= I[1]) or not math.isfinite(x):
            raise InputError(f"fit point {x} is not in {I}", field="x")
    if x1 == x2:
        raise DegenerateInterval(f"fit points coincide at {x1}")
    d = nu_signed(w, x1, x2, tol)
    if abs(d) <= tol:
        raise DegenerateInterval(f"nu-length between {x1} and {x2} vanishes")
    return AffineInNu(a=(u2 - u1) / d, b=u1, basepoint=x1, weight=w)


class Piece(BaseModel):
    model_config = ConfigDict(frozen=True)

    interval: Interval
    f: AffineInNu


class PiecewiseHarmonic1D(BaseModel):
    """One AffineInNu per interval; evaluated only on its own interval."""

    model_config = ConfigDict(frozen=True)

    pieces: Tuple[Piece, ...]

    @property
    def domain(self) -> Tuple[Interval, ...]:
        return tuple(pc.interval for pc in self.pieces)

    def piece_at(self, x: float) -> Optional[Piece]:
        for pc in self.pieces:
            if pc.interval[0] < x < pc.interval[1]:
                return pc
        return None

    def __call__(self, x: float) -> float:
        pc = self.piece_at(x)
        if pc is None:
            raise InputError(f"x={x} is outside the function's domain", field="x")
        return eval_affine(pc.f, x)

    def sample(self, xs: Sequence[float]) -> np.ndarray:
        """Values at xs, NaN outside the domain."""
        return np.array([self(x) if self.piece_at(x) is not None else np.nan for x in xs])

    def piece_on(self, J: Interval) -> Optional[Piece]:
        mid = _interior_point(J)
        return self.piece_at(mid)


def _interior_point(J: Interval) -> float:
    lo, hi = J
    if math.isinf(lo) and math.isinf(hi):
        return 0.0
    if math.isinf(lo):
        return hi - 1.0
    if math.isinf(hi):
        return lo + 1.0
    return 0.5 * (lo + hi)


def restrict(f: AffineInNu, Omega: OpenSet1D, E: RelClosed1D, component: int = 0) -> PiecewiseHarmonic1D:
    """f restricted to the parts of one component of Omega outside E."""
    I = Omega.components[component]
    kept = components_minus(I, E.of_component(component))
    return PiecewiseHarmonic1D(pieces=tuple(Piece(interval=J, f=f) for J in kept))


def _kept_parts(Omega: OpenSet1D, E: RelClosed1D, depth: int) -> List[Tuple[ComponentRef, List[Interval]]]:
    return [(ref, components_minus(ref.interval, pieces)) for ref, pieces in iter_components(Omega, E, depth)]


def indicator_witness(Omega: OpenSet1D, E: RelClosed1D, w: Weight1D, V: Interval,
                      depth: int = 32) -> PiecewiseHarmonic1D:
    """chi_V on Omega minus E: 1 on the component V, 0 on the others."""
    pieces = []
    for _, kept in _kept_parts(Omega, E, depth):
        for J in kept:
            value = 1.0 if J == V else 0.0
            pieces.append(Piece(interval=J, f=AffineInNu(a=0.0, b=value, basepoint=_interior_point(J), weight=w)))
    return PiecewiseHarmonic1D(pieces=tuple(pieces))


def weak_extend(Omega: OpenSet1D, E: RelClosed1D, u: PiecewiseHarmonic1D, depth: int = 32) -> PiecewiseHarmonic1D:
    """
    The unique A-harmonic extension of u from Omega minus E to Omega.

    Raises Disconnected (with the chi_V witness) when some component of
    Omega minus E is not the only one inside its component of Omega.
    """
    check_pair(Omega, E)
    out = []
    for ref, kept in _kept_parts(Omega, E, depth):
        if len(kept) > 1:
            w = u.pieces[0].f.weight if u.pieces else Weight1D.constant()
            raise Disconnected(ref.interval, witness=indicator_witness(Omega, E, w, kept[0], depth))
        pc = u.piece_on(kept[0])
        if pc is None:
            raise InputError(f"function is not given on {kept[0]}", field="u")
        out.append(Piece(interval=ref.interval, f=pc.f))
    return PiecewiseHarmonic1D(pieces=tuple(out))


class Status1D(str, Enum):
    REMOVABLE = "Removable"
    WEAKLY_REMOVABLE_ONLY = "WeaklyRemovableOnly"
    DISCONNECTED = "NonRemovableDisconnected"
    UNBOUNDED = "NonRemovableUnbounded"


class Verdict1D(BaseModel):
    model_config = ConfigDict(frozen=True)

    status: Status1D
    constant: Optional[float] = None
    nu_constant: Optional[float] = None
    witness: Optional[PiecewiseHarmonic1D] = None
    clause: str
    worst: Optional[ComponentRef] = None
    certificate: Tuple[float, ...] = ()
    reflections: Optional[int] = None

    @model_validator(mode="after")
    def _consistent(self) -> "Verdict1D":
        if self.status == Status1D.REMOVABLE and (self.constant is None or not math.isfinite(self.constant)):
            raise ValueError("a removable verdict needs a finite constant")
        if self.status in (Status1D.DISCONNECTED, Status1D.UNBOUNDED) and self.witness is None:
            raise ValueError("a non-removable verdict needs a witness")
        return self

    @property
    def removable(self) -> bool:
        return self.status == Status1D.REMOVABLE


def ramp_witness(Omega: OpenSet1D, E: RelClosed1D, w: Weight1D, flagged: Sequence[ComponentRef],
                 depth: int = 32) -> PiecewiseHarmonic1D:
    """
    0 on every part of Omega minus E except on the flagged components, where
    it climbs from 0 to 1 across the (bounded) part left by E.
    """
    flagged_keys = {(r.family, r.index) for r in flagged}
    pieces = []
    for ref, kept in _kept_parts(Omega, E, depth):
        for J in kept:
            if (ref.family, ref.index) in flagged_keys:
                f = fit_two_points(w, J, (J[0], 0.0), (J[1], 1.0))
            else:
                f = AffineInNu(a=0.0, b=0.0, basepoint=_interior_point(J), weight=w)
            pieces.append(Piece(interval=J, f=f))
    return PiecewiseHarmonic1D(pieces=tuple(pieces))


def _escape_points(I: Interval, J: Interval, count: int = 7) -> List[float]:
    """Points of the unbounded component I running away from the bounded part J."""
    span = J[1] - J[0]
    if math.isinf(I[1]):
        return [J[1] + span * 10.0 ** k for k in range(count)]
    return [J[0] - span * 10.0 ** k for k in range(count)]


def decide_removable_1d(Omega: OpenSet1D, E: RelClosed1D, w: Weight1D, depth: int = 32) -> Verdict1D:
    """
    Removability of E for bounded A-harmonic functions on (R, w).

    Removable iff every component I has I minus E connected and
    |I| <= C |I minus E|. Otherwise the verdict carries a bounded function on
    Omega minus E whose extension does not exist or is unbounded.
    """
    check_pair(Omega, E)
    parts = _kept_parts(Omega, E, depth)
    for ref, kept in parts:
        if len(kept) > 1:
            return Verdict1D(
                status=Status1D.DISCONNECTED,
                witness=indicator_witness(Omega, E, w, kept[0], depth),
                clause="disconnected-component",
                worst=ref,
            )
    for k, fam in enumerate(Omega.families):
        for j, I, pieces in fam.members(fam.sample_indices()):
            kept = components_minus(I, pieces)
            if len(kept) > 1:
                ref = ComponentRef(index=j, family=k, interval=I)
                return Verdict1D(
                    status=Status1D.DISCONNECTED,
                    witness=indicator_witness(Omega, E, w, kept[0], depth),
                    clause="disconnected-component",
                    worst=ref,
                    certificate=(float(j),),
                )

    lr = lebesgue_ratio(Omega, E)
    if math.isfinite(lr.value):
        nr = nu_ratio(Omega, E, w)
        return Verdict1D(status=Status1D.REMOVABLE, constant=lr.value, nu_constant=nr.value,
                         clause="ratio-bounded", worst=lr.worst)

    # an unbounded component with bounded remainder
    for ref, kept in parts:
        I, J = ref.interval, kept[0]
        if ref.family is None and math.isinf(I[1] - I[0]) and math.isfinite(J[1] - J[0]):
            witness = ramp_witness(Omega, E, w, [ref], depth)
            U = weak_extend(Omega, E, witness, depth)
            certificate = tuple(abs(U(x)) for x in _escape_points(I, J))
            logger.info("unbounded component %s with bounded remainder %s", I, J)
            return Verdict1D(status=Status1D.UNBOUNDED, witness=witness, clause="case-1-unbounded-component",
                             worst=ref, certificate=certificate)

    # ratios blow up along a family
    flagged = [ref for ref, _ in parts if ref.family is not None]
    witness = ramp_witness(Omega, E, w, flagged, depth)
    certificate = []
    for ref, kept in parts:
        if ref.family is None:
            continue
        J = kept[0]
        certificate.append(nu_measure(w, ref.interval) / nu_measure(w, J))
    return Verdict1D(status=Status1D.UNBOUNDED, witness=witness, clause="case-2-ratio-blowup",
                     worst=lr.worst, certificate=tuple(certificate))


def weak_removability_1d(Omega: OpenSet1D, E: RelClosed1D, w: Weight1D, depth: int = 32) -> Verdict1D:
    """
    Like decide_removable_1d, but reports WeaklyRemovableOnly when every
    function extends yet bounded functions may extend unboundedly.
    """
    verdict = decide_removable_1d(Omega, E, w, depth)
    if verdict.status != Status1D.UNBOUNDED:
        return verdict
    return verdict.model_copy(update={"status": Status1D.WEAKLY_REMOVABLE_ONLY})


def bounded_extension_bound(Omega: OpenSet1D, E: RelClosed1D, w: Weight1D, sup_norm: float,
                            signed: bool = False) -> float:
    """
    Sup-norm bound for extensions of bounded functions.

    For 0 <= u <= sup_norm on Omega minus E the extension is bounded by
    C' * sup_norm with C' the nu-ratio. For signed data (|u| <= sup_norm) the
    oscillation bound gives (2C' - 1) * sup_norm.
    """
    verdict = decide_removable_1d(Omega, E, w)
    if not verdict.removable:
        raise NotRemovable(f"E is not removable ({verdict.clause})", verdict=verdict)
    c = nu_ratio(Omega, E, w).value
    if math.isinf(c):
        return INF
    return (2.0 * c - 1.0) * sup_norm if signed else c * sup_norm

"""
Removability verdicts in R^n from capacity facts.

Facts are structural (a small whitelist of rules), declared by the user,
or numeric. Numeric evidence never certifies a null set; it can only
support positivity when the user declares a floor.
"""

from __future__ import annotations

import json
import logging
from enum import Enum
from typing import Annotated, List, Literal, Optional, Sequence, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, model_validator

from potlab.capacitynd import BallGrowth, CapacityEstimate, Parabolicity, Trend, null_capacity_trend, parabolicity

logger = logging.getLogger(__name__)

Vector = Tuple[float, ...]


# ---------------------------------------------------------------------------
# Set descriptors
# ---------------------------------------------------------------------------

class _SetBase(BaseModel):
    model_config = ConfigDict(frozen=True)


class EmptySet(_SetBase):
    kind: Literal["empty"] = "empty"

    def label(self) -> str:
        return "{}"


class Points(_SetBase):
    kind: Literal["points"] = "points"
    points: Tuple[Vector, ...]

    def label(self) -> str:
        return "{" + ", ".join(str(tuple(x)) for x in self.points) + "}"


class CountablePoints(_SetBase):
    """A countable point family given by a generator text, e.g. '(1/j, 0), j >= 1'."""

    kind: Literal["countable_points"] = "countable_points"
    generator: str

    def label(self) -> str:
        return f"countable {{{self.generator}}}"


class BallSet(_SetBase):
    kind: Literal["ball"] = "ball"
    center: Vector
    radius: float
    closed: bool = True

    def label(self) -> str:
        return f"{'closed' if self.closed else 'open'} ball {tuple(self.center)} r={self.radius:g}"


class BoxSet(_SetBase):
    kind: Literal["box"] = "box"
    lo: Vector
    hi: Vector

    def label(self) -> str:
        return f"box {tuple(self.lo)}..{tuple(self.hi)}"


class Whole(_SetBase):
    kind: Literal["whole"] = "whole"

    def label(self) -> str:
        return "R^n"


class Complement(_SetBase):
    kind: Literal["complement"] = "complement"
    of: "SetDescriptor"

    def label(self) -> str:
        return f"R^n minus {self.of.label()}"


SetDescriptor = Annotated[Union[EmptySet, Points, CountablePoints, BallSet, BoxSet, Whole, Complement],
                          Field(discriminator="kind")]
Complement.model_rebuild()


def is_singleton(s: _SetBase) -> bool:
    return isinstance(s, Points) and len(set(s.points)) == 1


def has_interior(s: _SetBase) -> bool:
    if isinstance(s, BallSet):
        return s.radius > 0
    if isinstance(s, BoxSet):
        return all(b > a for a, b in zip(s.lo, s.hi))
    if isinstance(s, Whole):
        return True
    if isinstance(s, Complement):
        if isinstance(s.of, Complement):
            return has_interior(s.of.of)
        # complements of the bounded descriptors are unbounded open-ish sets
        return not isinstance(s.of, Whole)
    return False


def complement(s: _SetBase) -> _SetBase:
    if isinstance(s, Whole):
        return EmptySet()
    if isinstance(s, Complement):
        return s.of
    return Complement(of=s)


def without_point(s: _SetBase, x: Optional[Vector] = None) -> _SetBase:
    """E minus one point; sets with interior keep their descriptor."""
    if isinstance(s, Points):
        if x is None:
            rest = s.points[1:]
        else:
            rest = tuple(q for q in s.points if tuple(q) != tuple(x))
        return Points(points=rest) if rest else EmptySet()
    return s


# ---------------------------------------------------------------------------
# Capacity facts
# ---------------------------------------------------------------------------

ZERO_RULES = ("empty-set", "singleton-p-le-n", "countable-union")
POSITIVE_RULES = ("point-p-gt-n", "nonempty-interior")


class CapacityStatus(str, Enum):
    ZERO = "Zero"
    POSITIVE = "Positive"
    NUMERIC_TREND = "NumericTrend"


class Provenance(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: Literal["Structural", "Declared", "Numeric"]
    rule: Optional[str] = None

    def label(self) -> str:
        return f"{self.kind}({self.rule})" if self.rule else self.kind


class CapacityFact(BaseModel):
    model_config = ConfigDict(frozen=True)

    subject: SetDescriptor
    status: CapacityStatus
    provenance: Provenance
    trend: Optional[Trend] = None
    chain: Tuple[Tuple[float, float], ...] = ()

    @model_validator(mode="after")
    def _check(self) -> "CapacityFact":
        prov = self.provenance
        if prov.kind == "Structural":
            allowed = ZERO_RULES if self.status == CapacityStatus.ZERO else POSITIVE_RULES
            if prov.rule not in allowed:
                raise ValueError(f"no structural rule {prov.rule!r} for {self.status.value}")
        if self.status == CapacityStatus.ZERO and prov.kind == "Numeric":
            raise ValueError("numeric evidence cannot certify capacity zero")
        if self.status == CapacityStatus.NUMERIC_TREND and prov.kind != "Numeric":
            raise ValueError("trend facts are numeric")
        return self

    @classmethod
    def declared(cls, subject: _SetBase, zero: bool) -> "CapacityFact":
        return cls(subject=subject, status=CapacityStatus.ZERO if zero else CapacityStatus.POSITIVE,
                   provenance=Provenance(kind="Declared"))

    @property
    def decisive(self) -> bool:
        return self.status != CapacityStatus.NUMERIC_TREND


def _structural(subject: _SetBase, status: CapacityStatus, rule: str) -> CapacityFact:
    return CapacityFact(subject=subject, status=status, provenance=Provenance(kind="Structural", rule=rule))


def structural_capacity(subject: _SetBase, n: int, p: float, weighted: bool = False) -> Optional[CapacityFact]:
    """Capacity of `subject` when one of the whitelisted rules applies."""
    if isinstance(subject, EmptySet) or (isinstance(subject, Points) and not subject.points):
        return _structural(subject, CapacityStatus.ZERO, "empty-set")
    if isinstance(subject, Complement) and isinstance(subject.of, Whole):
        return _structural(subject, CapacityStatus.ZERO, "empty-set")
    if has_interior(subject):
        return _structural(subject, CapacityStatus.POSITIVE, "nonempty-interior")
    if weighted:
        return None
    if isinstance(subject, (Points, CountablePoints)):
        if p <= n:
            rule = "singleton-p-le-n" if is_singleton(subject) else "countable-union"
            return _structural(subject, CapacityStatus.ZERO, rule)
        return _structural(subject, CapacityStatus.POSITIVE, "point-p-gt-n")
    return None


def fact_from_trend(subject: _SetBase, estimate: CapacityEstimate, floor: Optional[float] = None,
                    p: Optional[float] = None) -> CapacityFact:
    """
    Numeric capacity evidence. A positive trend whose value clears a
    user-declared floor becomes Positive; nothing numeric becomes Zero.
    """
    trend = null_capacity_trend(estimate, p=p)
    chain = tuple(estimate.refinement_chain or ())
    if trend == Trend.POSITIVE and floor is not None and estimate.value > floor:
        return CapacityFact(subject=subject, status=CapacityStatus.POSITIVE,
                            provenance=Provenance(kind="Numeric", rule=f"floor {floor:g}"),
                            trend=trend, chain=chain)
    return CapacityFact(subject=subject, status=CapacityStatus.NUMERIC_TREND,
                        provenance=Provenance(kind="Numeric"), trend=trend, chain=chain)


def _lookup(subject: _SetBase, facts: Sequence[CapacityFact], n: int, p: float,
            weighted: bool) -> Optional[CapacityFact]:
    """A decisive supplied fact first, then a structural rule, then numeric evidence."""
    matching = [f for f in facts if f.subject == subject]
    for f in matching:
        if f.decisive:
            return f
    rule = structural_capacity(subject, n, p, weighted)
    if rule is not None:
        return rule
    return matching[0] if matching else None


def _is(fact: Optional[CapacityFact], status: CapacityStatus) -> bool:
    return fact is not None and fact.status == status


def _provably_positive(fact: Optional[CapacityFact]) -> bool:
    return _is(fact, CapacityStatus.POSITIVE) and fact.provenance.kind in ("Structural", "Declared")


# ---------------------------------------------------------------------------
# Verdicts
# ---------------------------------------------------------------------------

class Removability(str, Enum):
    YES = "Yes"
    YES_DEGENERATE = "YesDegenerate"
    NO = "No"
    UNKNOWN = "Unknown"


DEGENERATE_CLAUSE = "parabolic-singleton"


class CaseVerdict(BaseModel):
    model_config = ConfigDict(frozen=True)

    removable: Removability
    clause: str
    notes: Tuple[str, ...] = ()
    facts_used: Tuple[CapacityFact, ...] = ()

    @model_validator(mode="after")
    def _check(self) -> "CaseVerdict":
        if self.removable == Removability.YES_DEGENERATE and self.clause != DEGENERATE_CLAUSE:
            raise ValueError("YesDegenerate only comes from the parabolic-singleton clause")
        return self


def _unknown(fact: Optional[CapacityFact], used: List[CapacityFact]) -> CaseVerdict:
    clause = "numeric-evidence-only" if fact is not None else "no-capacity-fact"
    return CaseVerdict(removable=Removability.UNKNOWN, clause=clause, facts_used=tuple(used))


def classify_unweighted(n: int, p: float, Omega: _SetBase, E: _SetBase,
                        facts: Sequence[CapacityFact] = ()) -> CaseVerdict:
    """
    Unweighted R^n: E is removable iff C_p(E) = 0, except that for p > n a
    single point in Omega = R^n is removable because bounded p-harmonic
    functions on R^n minus a point are constant.
    """
    fE = _lookup(E, facts, n, p, weighted=False)
    used = [fE] if fE else []
    if _is(fE, CapacityStatus.ZERO):
        return CaseVerdict(removable=Removability.YES, clause="capacity-zero", facts_used=tuple(used))
    if p > n and isinstance(Omega, Whole) and is_singleton(E):
        return CaseVerdict(removable=Removability.YES_DEGENERATE, clause=DEGENERATE_CLAUSE,
                           notes=("bounded p-harmonic functions on R^n minus a point are constant",),
                           facts_used=tuple(used))
    if _is(fE, CapacityStatus.POSITIVE):
        return CaseVerdict(removable=Removability.NO, clause="capacity-positive", facts_used=tuple(used))
    return _unknown(fE, used)


def _candidate_atoms(E: _SetBase) -> List[Optional[Vector]]:
    if isinstance(E, Points):
        return [tuple(x) for x in dict.fromkeys(tuple(q) for q in E.points)]
    return [None]


def classify_weighted(n: int, p: float, growth: BallGrowth, Omega: _SetBase, E: _SetBase,
                      facts: Sequence[CapacityFact] = (), weighted: bool = True) -> CaseVerdict:
    """
    Weighted R^n with a p-admissible weight: removable iff C(E) = 0, or E
    has a point x0 with C(E minus x0) = C(R^n minus Omega) = 0 and the
    space is p-parabolic.
    """
    fE = _lookup(E, facts, n, p, weighted)
    used: List[CapacityFact] = [fE] if fE else []
    if _is(fE, CapacityStatus.ZERO):
        return CaseVerdict(removable=Removability.YES, clause="capacity-zero", facts_used=tuple(used))

    par = parabolicity(growth, p)
    f_out = _lookup(complement(Omega), facts, n, p, weighted)
    if f_out:
        used.append(f_out)
    all_fail = True
    for x0 in _candidate_atoms(E):
        f_rest = _lookup(without_point(E, x0), facts, n, p, weighted)
        if f_rest:
            used.append(f_rest)
        if _is(f_rest, CapacityStatus.ZERO) and _is(f_out, CapacityStatus.ZERO) and par == Parabolicity.PARABOLIC:
            return CaseVerdict(removable=Removability.YES_DEGENERATE, clause=DEGENERATE_CLAUSE,
                               notes=(f"x0 = {x0}", "(R^n, mu) is p-parabolic"), facts_used=tuple(used))
        fails = _provably_positive(f_rest) or _provably_positive(f_out) or par == Parabolicity.HYPERBOLIC
        all_fail = all_fail and fails

    if _is(fE, CapacityStatus.POSITIVE) and all_fail:
        notes = ("(R^n, mu) is p-hyperbolic",) if par == Parabolicity.HYPERBOLIC else ()
        return CaseVerdict(removable=Removability.NO, clause="capacity-positive", notes=notes,
                           facts_used=tuple(used))
    return _unknown(fE, used)


SUPERHARMONIC_SENSES = ("p-superharmonic", "A-superharmonic", "quasisuperharmonic", "quasisuperharmonic-bounded")


def classify_superharmonic(facts: Sequence[CapacityFact], E: Optional[_SetBase] = None,
                           n: Optional[int] = None, p: Optional[float] = None,
                           weighted: bool = True) -> CaseVerdict:
    """
    Removability for bounded (quasi)superharmonic functions: exactly the
    sets of capacity zero, in every sense, with Q preserved.
    """
    if E is None:
        if not facts:
            return _unknown(None, [])
        E = facts[0].subject
    if n is not None and p is not None:
        fE = _lookup(E, facts, n, p, weighted)
    else:
        matching = [f for f in facts if f.subject == E]
        fE = next((f for f in matching if f.decisive), matching[0] if matching else None)
    used = [fE] if fE else []
    notes = tuple(f"applies to {s} functions" for s in SUPERHARMONIC_SENSES) + ("Q is preserved",)
    if _is(fE, CapacityStatus.ZERO):
        return CaseVerdict(removable=Removability.YES, clause="capacity-zero", notes=notes, facts_used=tuple(used))
    if _is(fE, CapacityStatus.POSITIVE):
        return CaseVerdict(removable=Removability.NO, clause="capacity-positive", notes=notes,
                           facts_used=tuple(used))
    return _unknown(fE, used)


def verdict_json(verdict: CaseVerdict) -> str:
    """{removable, clause, facts_used[], provenance[]} as indented JSON."""
    payload = {
        "removable": verdict.removable.value,
        "clause": verdict.clause,
        "notes": list(verdict.notes),
        "facts_used": [f"{f.subject.label()}: {f.status.value}" for f in verdict.facts_used],
        "provenance": [f.provenance.label() for f in verdict.facts_used],
    }
    return json.dumps(payload, indent=2)

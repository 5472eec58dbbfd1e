"""
Weights on the real line and the measures built from them.

A weight w carries the exponent p. The dual measure nu has density
w^(1/(1-p)); one-dimensional A-harmonic functions are affine in the
nu-primitive, so almost every question on R reduces to nu-lengths of
intervals. Integrals are computed with Gauss-Kronrod panels, graded
geometrically toward points where the density may blow up or vanish.
"""

from __future__ import annotations

import csv
import logging
import math
from functools import cached_property
from pathlib import Path
from typing import Callable, Dict, Iterable, List, Literal, Optional, Sequence, Tuple

import numpy as np
import sympy
from pydantic import BaseModel, ConfigDict, field_validator, model_validator

from potlab import config
from potlab.errors import InputError, NonIntegrable

logger = logging.getLogger(__name__)

INF = math.inf
Interval = Tuple[float, float]

# Gauss-Kronrod 7/15 rule on [-1, 1]
_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

_NODES = np.concatenate([-_XGK[:7], [0.0], _XGK[6::-1]])
_KRONROD = np.concatenate([_WGK[:7], [_WGK[7]], _WGK[6::-1]])
# Gauss nodes are the odd-indexed Kronrod nodes (+-x1, +-x3, +-x5, 0)
_GAUSS = np.zeros(15)
for _i, _w in zip((1, 3, 5), _WG[:3]):
    _GAUSS[_i] = _w
    _GAUSS[14 - _i] = _w
_GAUSS[7] = _WG[3]


class Exponent(BaseModel):
    """The exponent p, 1 < p < infinity."""

    model_config = ConfigDict(frozen=True)

    p: float

    @field_validator("p")
    @classmethod
    def _in_range(cls, v: float) -> float:
        if not (1.0 < v < INF):
            raise ValueError("p must satisfy 1 < p < infinity")
        return v

    @property
    def dual(self) -> float:
        return self.p / (self.p - 1.0)

    @property
    def dual_power(self) -> float:
        """Exponent 1/(1-p) turning w into the nu-density."""
        return 1.0 / (1.0 - self.p)


class QuadResult(BaseModel):
    model_config = ConfigDict(frozen=True)

    value: float
    error: float


class Weight1D(BaseModel):
    """
    A positive weight on R.

    kind/param follow the weight grammar: const c, pow alpha (|x|^alpha),
    exp k (e^(kx)) and table (piecewise constant, midpoint convention).
    """

    model_config = ConfigDict(frozen=True)

    kind: Literal["const", "pow", "exp", "table"]
    param: float = 1.0
    p: Exponent
    xs: Optional[Tuple[float, ...]] = None
    ws: Optional[Tuple[float, ...]] = None
    source: Optional[str] = None

    @model_validator(mode="after")
    def _check(self) -> "Weight1D":
        if self.kind == "const" and not self.param > 0:
            raise ValueError("constant weight must be positive")
        if self.kind == "table":
            if not self.xs or not self.ws or len(self.xs) != len(self.ws):
                raise ValueError("table weight needs matching x and w columns")
            if any(b <= a for a, b in zip(self.xs, self.xs[1:])):
                raise ValueError("table x column must be strictly increasing")
            if any(not (v > 0) for v in self.ws):
                raise ValueError("table weights must be positive")
        return self

    @classmethod
    def constant(cls, c: float = 1.0, p: float = 2.0) -> "Weight1D":
        return cls(kind="const", param=c, p=Exponent(p=p))

    @classmethod
    def power(cls, alpha: float, p: float = 2.0) -> "Weight1D":
        return cls(kind="pow", param=alpha, p=Exponent(p=p))

    @classmethod
    def exponential(cls, k: float, p: float = 2.0) -> "Weight1D":
        return cls(kind="exp", param=k, p=Exponent(p=p))

    @classmethod
    def from_table(cls, xs: Sequence[float], ws: Sequence[float], p: float = 2.0,
                   source: Optional[str] = None) -> "Weight1D":
        return cls(kind="table", xs=tuple(float(x) for x in xs), ws=tuple(float(v) for v in ws),
                   p=Exponent(p=p), source=source)

    @cached_property
    def _midpoints(self) -> np.ndarray:
        xs = np.asarray(self.xs, dtype=float)
        return 0.5 * (xs[1:] + xs[:-1])

    def density(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.kind == "const":
            return np.full_like(x, self.param)
        if self.kind == "pow":
            with np.errstate(divide="ignore"):
                return np.abs(x) ** self.param
        if self.kind == "exp":
            with np.errstate(over="ignore"):
                return np.exp(self.param * x)
        idx = np.searchsorted(self._midpoints, x, side="right")
        return np.asarray(self.ws, dtype=float)[idx]

    def dual_density(self, x) -> np.ndarray:
        with np.errstate(divide="ignore", over="ignore"):
            return self.density(x) ** self.p.dual_power

    def singular_points(self) -> Tuple[float, ...]:
        if self.kind == "pow" and self.param != 0.0:
            return (0.0,)
        return ()

    def breakpoints(self) -> Tuple[float, ...]:
        if self.kind == "table":
            return tuple(float(m) for m in self._midpoints)
        return ()

    def describe(self) -> str:
        if self.kind == "table":
            return f"table {self.source or '<inline>'}"
        return f"{self.kind} {self.param:g}"

    def with_p(self, p: float) -> "Weight1D":
        return self.model_copy(update={"p": Exponent(p=p)})


def parse_weight(text: str, p: float) -> Weight1D:
    """Parse `const c`, `pow alpha`, `exp k` or `table <path>`."""
    parts = text.strip().split(None, 1)
    if len(parts) != 2:
        raise InputError(f"cannot parse weight {text!r}", field="weight")
    kind, arg = parts[0].lower(), parts[1].strip()
    try:
        if kind == "const":
            return Weight1D.constant(float(arg), p)
        if kind == "pow":
            return Weight1D.power(float(arg), p)
        if kind == "exp":
            return Weight1D.exponential(float(arg), p)
    except ValueError as e:
        raise InputError(str(e), field="weight") from e
    if kind == "table":
        return load_weight_table(Path(arg), p)
    raise InputError(f"unknown weight kind {kind!r}", field="weight")


def load_weight_table(path: Path, p: float) -> Weight1D:
    """Two-column CSV (x, w(x)); a non-numeric first row is taken as a header."""
    if not path.exists():
        raise InputError(f"weight table not found: {path}", field="weight")
    xs: List[float] = []
    ws: List[float] = []
    with open(path, newline="") as f:
        for lineno, row in enumerate(csv.reader(f), start=1):
            if not row or not "".join(row).strip():
                continue
            try:
                x, w = float(row[0]), float(row[1])
            except (ValueError, IndexError):
                if lineno == 1:
                    continue
                raise InputError(f"{path}:{lineno}: expected two numbers", field="weight")
            xs.append(x)
            ws.append(w)
    try:
        return Weight1D.from_table(xs, ws, p, source=str(path))
    except ValueError as e:
        raise InputError(f"{path}: {e}", field="weight") from e


# ---------------------------------------------------------------------------
# Quadrature
# ---------------------------------------------------------------------------

def _gk15(f: Callable, a: np.ndarray, b: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Kronrod values and |Kronrod - Gauss| for every panel [a_i, b_i]."""
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    x = mid[:, None] + half[:, None] * _NODES[None, :]
    fx = f(x)
    k = half * (fx @ _KRONROD)
    g = half * (fx @ _GAUSS)
    return k, np.abs(k - g)


def _smooth_integral(f: Callable, a: float, b: float, tol: float) -> Tuple[float, float]:
    """Adaptive bisection of the panels with the largest error."""
    los = np.array([a])
    his = np.array([b])
    vals, errs = _gk15(f, los, his)
    for _ in range(config.QUAD_PANEL_LIMIT):
        total_err = float(errs.sum())
        target = max(tol, 1e-13 * abs(float(vals.sum())))
        if total_err <= target or not np.isfinite(total_err) or len(los) > 20000:
            break
        bad = errs > target / len(errs)
        if not bad.any():
            bad = errs == errs.max()
        mids = 0.5 * (los[bad] + his[bad])
        new_lo = np.concatenate([los[~bad], los[bad], mids])
        new_hi = np.concatenate([his[~bad], mids, his[bad]])
        order = np.argsort(new_lo, kind="stable")
        los, his = new_lo[order], new_hi[order]
        vals, errs = _gk15(f, los, his)
    return math.fsum(vals), float(errs.sum())


def _graded_integral(f: Callable, s: float, t: float, cap: float) -> Tuple[float, float]:
    """
    Integral of a nonnegative f between a possibly singular endpoint s and t.

    Panels shrink geometrically toward s; the neglected tail is extrapolated
    from the ratio of the last increments. Non-decaying increments mean the
    integral diverges at s.
    """
    depth = config.QUAD_GRADING_DEPTH
    length = abs(t - s)
    sign = 1.0 if t > s else -1.0
    d = length * np.exp2(-np.arange(depth + 1, dtype=float))
    near = s + sign * d[1:]
    far = s + sign * d[:-1]
    lo = np.minimum(near, far)
    hi = np.maximum(near, far)
    with np.errstate(over="ignore", invalid="ignore"):
        inc, err = _gk15(f, lo, hi)
    if not np.all(np.isfinite(inc)):
        raise NonIntegrable((min(s, t), max(s, t)), near=s)
    partial = math.fsum(inc)
    if partial > cap:
        raise NonIntegrable((min(s, t), max(s, t)), near=s, partial=partial)
    tail_inc = inc[-9:]
    positive = tail_inc[:-1] > 0
    if positive.any():
        q = float(np.max(tail_inc[1:][positive] / tail_inc[:-1][positive]))
        if q >= 1.0 - 1e-6:
            logger.debug("graded increments do not decay near %g (ratio %.6f)", s, q)
            raise NonIntegrable((min(s, t), max(s, t)), near=s, partial=partial)
        tail = float(inc[-1]) * q / (1.0 - q)
    else:
        tail = 0.0
    return partial + tail, float(err.sum()) + abs(tail)


def integrate_density(f: Callable, I: Interval, singular: Iterable[float] = (),
                      breakpoints: Iterable[float] = (), tol: Optional[float] = None,
                      cap: Optional[float] = None) -> QuadResult:
    """Integral of a nonnegative density over a bounded interval."""
    tol = config.POTLAB_QUAD_TOL if tol is None else tol
    cap = config.POTLAB_QUAD_CAP if cap is None else cap
    a, b = float(I[0]), float(I[1])
    if b < a:
        a, b = b, a
    if a == b:
        return QuadResult(value=0.0, error=0.0)
    if math.isinf(a) or math.isinf(b):
        return QuadResult(value=INF, error=0.0)

    sing = sorted({s for s in singular if a <= s <= b})
    cuts = sorted({a, b, *sing, *(c for c in breakpoints if a < c < b)})
    pieces = list(zip(cuts[:-1], cuts[1:]))
    share = tol / max(len(pieces), 1)

    total = []
    error = 0.0
    for lo, hi in pieces:
        left = lo in sing
        right = hi in sing
        if left and right:
            mid = 0.5 * (lo + hi)
            v1, e1 = _graded_integral(f, lo, mid, cap)
            v2, e2 = _graded_integral(f, hi, mid, cap)
            total += [v1, v2]
            error += e1 + e2
        elif left:
            v, e = _graded_integral(f, lo, hi, cap)
            total.append(v)
            error += e
        elif right:
            v, e = _graded_integral(f, hi, lo, cap)
            total.append(v)
            error += e
        else:
            v, e = _smooth_integral(f, lo, hi, share)
            total.append(v)
            error += e
    value = math.fsum(total)
    if not math.isfinite(value) or value > cap:
        raise NonIntegrable((a, b), partial=value)
    return QuadResult(value=value, error=error)


def _is_bounded(I: Interval) -> bool:
    return not (math.isinf(I[0]) or math.isinf(I[1]))


def nu_measure_with_error(w: Weight1D, I: Interval, tol: Optional[float] = None) -> QuadResult:
    if I[1] <= I[0]:
        return QuadResult(value=0.0, error=0.0)
    if not _is_bounded(I):
        return QuadResult(value=INF, error=0.0)
    if w.kind == "const":
        return QuadResult(value=w.param ** w.p.dual_power * (I[1] - I[0]), error=0.0)
    return integrate_density(w.dual_density, I, w.singular_points(), w.breakpoints(), tol)


def nu_measure(w: Weight1D, I: Interval, tol: Optional[float] = None) -> float:
    """nu(I) = integral of w^(1/(1-p)) over I; +inf for unbounded I."""
    return nu_measure_with_error(w, I, tol).value


def mu_measure(w: Weight1D, I: Interval, tol: Optional[float] = None) -> float:
    """mu(I) = integral of w over I; +inf for unbounded I."""
    if I[1] <= I[0]:
        return 0.0
    if not _is_bounded(I):
        return INF
    if w.kind == "const":
        return w.param * (I[1] - I[0])
    return integrate_density(w.density, I, w.singular_points(), w.breakpoints(), tol).value


def nu_signed(w: Weight1D, x0: float, x1: float, tol: Optional[float] = None) -> float:
    """Signed nu-length from x0 to x1."""
    if x1 >= x0:
        return nu_measure(w, (x0, x1), tol)
    return -nu_measure(w, (x1, x0), tol)


# ---------------------------------------------------------------------------
# Muckenhoupt A_p probe
# ---------------------------------------------------------------------------

class ApEstimate(BaseModel):
    """Lower bound for the A_p constant over a probe family."""

    model_config = ConfigDict(frozen=True)

    value: float
    worst: Optional[Interval] = None
    probe: str
    count: int


def dyadic_probe(box: Interval = (-1.0, 1.0), scales: Tuple[int, int] = (-20, 20),
                 centers: int = 17, extra_centers: Iterable[float] = ()) -> List[Interval]:
    """Intervals (c - 2^k, c + 2^k) for lattice centers c in box and k in scales."""
    lattice = np.linspace(box[0], box[1], centers) if centers > 1 else np.array([0.5 * (box[0] + box[1])])
    cs = sorted({float(c) for c in lattice} | {float(c) for c in extra_centers})
    return [(c - 2.0 ** k, c + 2.0 ** k) for k in range(scales[0], scales[1] + 1) for c in cs]


def ap_ratio(w: Weight1D, I: Interval, tol: Optional[float] = None) -> float:
    """(average of w)(average of w^(1/(1-p)))^(p-1) on one bounded interval."""
    length = I[1] - I[0]
    try:
        mu_avg = mu_measure(w, I, tol) / length
        nu_avg = nu_measure(w, I, tol) / length
    except NonIntegrable:
        # e^(kx) overflows on large probe intervals; the quotient is unbounded there
        if w.kind == "exp":
            return INF
        raise
    with np.errstate(over="ignore", invalid="ignore"):
        value = mu_avg * nu_avg ** (w.p.p - 1.0)
    return float(value) if math.isfinite(value) else INF


def ap_constant(w: Weight1D, probe: Optional[Sequence[Interval]] = None,
                box: Interval = (-1.0, 1.0), tol: Optional[float] = None) -> ApEstimate:
    """
    Supremum of the A_p quotient over the probe intervals.

    The default probe is dyadic_probe over `box`, with the weight's singular
    points added as centers. The result is a lower bound for the A_p constant.
    """
    if probe is None:
        intervals = dyadic_probe(box, extra_centers=w.singular_points())
        label = f"dyadic scales 2^-20..2^20 over [{box[0]:g}, {box[1]:g}]"
    else:
        intervals = list(probe)
        label = f"{len(intervals)} supplied intervals"
    if not intervals:
        raise InputError("A_p probe is empty", field="probe")
    best = -INF
    worst = None
    for I in intervals:
        if not (I[1] > I[0]) or not _is_bounded(I):
            raise InputError(f"probe interval {I} must be bounded and nonempty", field="probe")
        r = ap_ratio(w, I, tol)
        if r > best:
            best, worst = r, I
    logger.debug("A_p probe for %s: %g on %s", w.describe(), best, worst)
    return ApEstimate(value=best, worst=worst, probe=label, count=len(intervals))


def power_weight_ap_exact(alpha: float, p: float) -> float:
    """A_p quotient of |x|^alpha on any interval centered at 0."""
    if not (-1.0 < alpha < p - 1.0):
        return INF
    beta = alpha / (p - 1.0)
    return (1.0 / (1.0 + alpha)) * (1.0 / (1.0 - beta)) ** (p - 1.0)


# ---------------------------------------------------------------------------
# Open sets, relatively closed sets and countable families
# ---------------------------------------------------------------------------

_J = sympy.Symbol("j", integer=True, positive=True)

# float endpoints stop resolving 1/j-sized features well before this
MAX_SAMPLE_INDEX = 2 ** 20


class IntervalFamily(BaseModel):
    """
    Countably many components I_j = (lo(j), hi(j)), j = start, start+1, ...

    `removed` lists the closed pieces [a(j), b(j)] of E inside I_j. All
    expressions are in the integer index j.
    """

    model_config = ConfigDict(frozen=True)

    lo: str
    hi: str
    start: int = 1
    stop: Optional[int] = None
    removed: Tuple[Tuple[str, str], ...] = ()

    @model_validator(mode="after")
    def _parse(self) -> "IntervalFamily":
        try:
            for text in (self.lo, self.hi, *(t for pair in self.removed for t in pair)):
                sympy.sympify(text, locals={"j": _J})
        except (sympy.SympifyError, SyntaxError, TypeError) as e:
            raise ValueError(f"cannot parse family expression: {e}") from e
        if self.stop is not None and self.stop < self.start:
            raise ValueError("family stop precedes start")
        return self

    @cached_property
    def _exprs(self):
        lo = sympy.sympify(self.lo, locals={"j": _J})
        hi = sympy.sympify(self.hi, locals={"j": _J})
        removed = [(sympy.sympify(a, locals={"j": _J}), sympy.sympify(b, locals={"j": _J}))
                   for a, b in self.removed]
        return lo, hi, removed

    @cached_property
    def _funcs(self):
        lo, hi, removed = self._exprs
        f = lambda e: sympy.lambdify(_J, e, "math")  # noqa: E731
        return f(lo), f(hi), [(f(a), f(b)) for a, b in removed]

    @property
    def infinite(self) -> bool:
        return self.stop is None

    def member(self, j: int) -> Tuple[Interval, Tuple[Interval, ...]]:
        lo, hi, removed = self._funcs
        I = (float(lo(j)), float(hi(j)))
        return I, tuple((float(a(j)), float(b(j))) for a, b in removed)

    def members(self, indices: Iterable[int]) -> Iterable[Tuple[int, Interval, Tuple[Interval, ...]]]:
        """member(j) for each index, stopping at the first one that overflows a float."""
        for j in indices:
            try:
                I, pieces = self.member(j)
            except (OverflowError, ZeroDivisionError):
                logger.debug("family member j=%d is not representable; sampling stops", j)
                return
            if not all(math.isfinite(v) for v in (*I, *(t for pc in pieces for t in pc))):
                return
            yield j, I, pieces

    def sample_indices(self, linear: int = 64, doublings: int = 30) -> List[int]:
        """Consecutive members from start plus a geometric run toward infinity, up to j = 2^20."""
        last = self.stop
        if last is not None and last - self.start <= 4096:
            return list(range(self.start, last + 1))
        out = list(range(self.start, self.start + linear))
        k = self.start + linear
        for _ in range(doublings):
            k *= 2
            if (last is not None and k > last) or k > MAX_SAMPLE_INDEX:
                break
            out.append(k)
        if last is not None and out[-1] != last:
            out.append(last)
        return out

    def lebesgue_ratio_limit(self) -> Optional[float]:
        """lim_{j -> oo} |I_j| / |I_j minus E| when sympy can decide it."""
        if not self.infinite:
            return None
        lo, hi, removed = self._exprs
        kept = (hi - lo) - sum((b - a for a, b in removed), sympy.Integer(0))
        try:
            lim = sympy.limit((hi - lo) / kept, _J, sympy.oo)
        except (NotImplementedError, ValueError, TypeError):
            return None
        if lim.is_infinite or lim == sympy.zoo:
            return INF
        if lim.is_real and lim.is_finite:
            return float(lim)
        return None


class OpenSet1D(BaseModel):
    """Finitely many open intervals plus countable families, pairwise disjoint."""

    model_config = ConfigDict(frozen=True)

    components: Tuple[Interval, ...] = ()
    families: Tuple[IntervalFamily, ...] = ()

    @model_validator(mode="after")
    def _check(self) -> "OpenSet1D":
        comps = self.components
        if not comps and not self.families:
            raise ValueError("Omega must be nonempty")
        for lo, hi in comps:
            if not lo < hi:
                raise ValueError(f"component ({lo}, {hi}) is empty")
        for (a0, b0), (a1, b1) in zip(comps, comps[1:]):
            if a1 < b0 or a1 <= a0:
                raise ValueError("components must be sorted and pairwise disjoint")
        return self

    @classmethod
    def of(cls, *intervals: Interval) -> "OpenSet1D":
        return cls(components=tuple(sorted((float(a), float(b)) for a, b in intervals)))

    @classmethod
    def real_line(cls) -> "OpenSet1D":
        return cls(components=((-INF, INF),))


class RelClosed1D(BaseModel):
    """
    E as closed pieces [a, b] per component of Omega; the piece stands for
    [a, b] intersected with the component, so endpoints on the component's
    boundary are not part of E.
    """

    model_config = ConfigDict(frozen=True)

    pieces: Dict[int, Tuple[Interval, ...]] = {}

    @classmethod
    def from_pieces(cls, Omega: OpenSet1D, pieces: Iterable[Interval]) -> "RelClosed1D":
        """Assign global closed pieces to the finite components they meet."""
        out: Dict[int, List[Interval]] = {}
        for a, b in pieces:
            a, b = float(a), float(b)
            if b < a:
                raise InputError(f"piece [{a}, {b}] is reversed", field="E")
            hit = False
            for i, I in enumerate(Omega.components):
                if _meets(I, (a, b)):
                    out.setdefault(i, []).append((max(a, I[0]), min(b, I[1])))
                    hit = True
            if not hit:
                raise InputError(f"piece [{a}, {b}] does not meet Omega", field="E")
        return cls(pieces={i: tuple(sorted(v)) for i, v in out.items()})

    def of_component(self, i: int) -> Tuple[Interval, ...]:
        return self.pieces.get(i, ())


def _meets(I: Interval, piece: Interval) -> bool:
    a, b = piece
    if a == b:
        return I[0] < a < I[1]
    return a < I[1] and b > I[0]


def components_minus(I: Interval, pieces: Iterable[Interval]) -> List[Interval]:
    """Open components of I minus the union of the closed pieces."""
    lo, hi = I
    clipped = sorted((max(a, lo), min(b, hi)) for a, b in pieces if _meets(I, (a, b)))
    out: List[Interval] = []
    cursor = lo
    for a, b in clipped:
        if a > cursor:
            out.append((cursor, a))
        cursor = max(cursor, b)
    if cursor < hi:
        out.append((cursor, hi))
    return out


def check_pair(Omega: OpenSet1D, E: RelClosed1D) -> None:
    """E inside Omega and no component of Omega swallowed by E."""
    for i, pieces in E.pieces.items():
        if not 0 <= i < len(Omega.components):
            raise InputError(f"E refers to component {i}, Omega has {len(Omega.components)}", field="E")
        I = Omega.components[i]
        for a, b in pieces:
            if b < a or a < I[0] or b > I[1]:
                raise InputError(f"piece [{a}, {b}] is not inside component {I}", field="E")
        if not components_minus(I, pieces):
            raise InputError(f"component {I} is contained in E", field="E")
    for k, fam in enumerate(Omega.families):
        for j, I, pieces in fam.members(fam.sample_indices(linear=8, doublings=4)):
            if not (I[0] < I[1]) or not _is_bounded(I):
                raise InputError(f"family {k} member {j} is not a bounded interval", field="Omega")
            if not components_minus(I, pieces):
                raise InputError(f"family {k} member {j} is contained in E", field="E")


def _length(I: Interval) -> float:
    return I[1] - I[0]


def _ratio(whole: float, kept: float) -> float:
    """whole / kept with inf/inf = 1."""
    if math.isinf(whole) and math.isinf(kept):
        return 1.0
    if math.isinf(whole):
        return INF
    return whole / kept


class ComponentRef(BaseModel):
    """A finite component (family=None) or member j of a family."""

    model_config = ConfigDict(frozen=True)

    index: int
    family: Optional[int] = None
    interval: Interval

    def label(self) -> str:
        if self.family is None:
            return f"component {self.index} {self.interval}"
        return f"family {self.family} member j={self.index} {self.interval}"


class RatioReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    value: float
    worst: Optional[ComponentRef] = None
    ratios: Tuple[float, ...] = ()
    exact: bool = True


def _component_ratio(measure: Callable[[Interval], float], I: Interval,
                     pieces: Sequence[Interval]) -> float:
    kept = components_minus(I, pieces)
    return _ratio(measure(I), math.fsum(measure(J) for J in kept))


def _ratio_report(Omega: OpenSet1D, E: RelClosed1D, measure: Callable[[Interval], float],
                  family_value: Callable[[IntervalFamily, float], float]) -> RatioReport:
    check_pair(Omega, E)
    best, worst = -INF, None
    ratios = []
    for i, I in enumerate(Omega.components):
        r = _component_ratio(measure, I, E.of_component(i))
        ratios.append(r)
        if r > best:
            best, worst = r, ComponentRef(index=i, interval=I)
    exact = True
    for k, fam in enumerate(Omega.families):
        sampled_best, sampled_j = -INF, fam.start
        for j, I, pieces in fam.members(fam.sample_indices()):
            r = _component_ratio(measure, I, pieces)
            if r > sampled_best:
                sampled_best, sampled_j = r, j
        r = family_value(fam, sampled_best)
        if fam.infinite and math.isfinite(r):
            exact = False
        if r > best:
            best, worst = r, ComponentRef(index=sampled_j, family=k, interval=fam.member(sampled_j)[0])
    return RatioReport(value=best, worst=worst, ratios=tuple(ratios), exact=exact)


def lebesgue_ratio(Omega: OpenSet1D, E: RelClosed1D) -> RatioReport:
    """sup over components I of |I| / |I minus E|, with inf/inf = 1."""

    def family_value(fam: IntervalFamily, sampled: float) -> float:
        lim = fam.lebesgue_ratio_limit()
        if lim is None:
            return sampled
        return max(sampled, lim)

    return _ratio_report(Omega, E, _length, family_value)


def nu_ratio(Omega: OpenSet1D, E: RelClosed1D, w: Weight1D, tol: Optional[float] = None) -> RatioReport:
    """sup over components I of nu(I) / nu(I minus E), with inf/inf = 1."""
    if w.kind == "const":
        return lebesgue_ratio(Omega, E)

    def family_value(fam: IntervalFamily, sampled: float) -> float:
        # nu-ratios of an A_p weight are bounded exactly when Lebesgue ratios are
        lim = fam.lebesgue_ratio_limit()
        if lim is not None and math.isinf(lim):
            return INF
        return sampled

    return _ratio_report(Omega, E, lambda I: nu_measure(w, I, tol), family_value)


def iter_components(Omega: OpenSet1D, E: RelClosed1D,
                    depth: int = 32) -> Iterable[Tuple[ComponentRef, Tuple[Interval, ...]]]:
    """Finite components, then the first `depth` members of every family."""
    for i, I in enumerate(Omega.components):
        yield ComponentRef(index=i, interval=I), E.of_component(i)
    for k, fam in enumerate(Omega.families):
        last = fam.start + depth - 1 if fam.stop is None else min(fam.stop, fam.start + depth - 1)
        for j, I, pieces in fam.members(range(fam.start, last + 1)):
            yield ComponentRef(index=j, family=k, interval=I), pieces


def component_measures(w: Weight1D, I: Interval, pieces: Sequence[Interval],
                       tol: Optional[float] = None) -> Dict[str, float]:
    """Lebesgue and nu measures of I and of I minus E, for reports."""
    kept = components_minus(I, pieces)
    return {
        "length": _length(I),
        "kept_length": math.fsum(_length(J) for J in kept),
        "nu": nu_measure(w, I, tol),
        "kept_nu": math.fsum(nu_measure(w, J, tol) for J in kept),
    }

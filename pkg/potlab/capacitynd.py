"""
Grid p-energy, condenser capacity and p-parabolicity.

Fields live on a uniform node grid over an axis-aligned box. Each cell
contributes |grad u|^p * w_cell * h^n, where |grad u|^2 sums, over the axes,
the mean of the squared differences along the 2^(n-1) parallel cell edges.
A cell counts only when all of its corners are active (in Omega or pinned).
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor, as_completed
from enum import Enum
from functools import cached_property
from typing import Callable, Dict, List, Literal, Optional, Sequence, Tuple, Union

import numpy as np
import sympy
from pydantic import BaseModel, ConfigDict, model_validator
from scipy import ndimage
from tqdm import tqdm

from potlab import config
from potlab.errors import InputError, NoConvergence
from potlab.shapes import Box, Shape, closed_mask, open_mask
from potlab.weights1d import integrate_density

logger = logging.getLogger(__name__)

ARMIJO_C = 1e-4
MAX_BACKTRACK = 60


# ---------------------------------------------------------------------------
# Grid
# ---------------------------------------------------------------------------

class GridWeight(BaseModel):
    """const c, pow alpha (radial |x|^alpha) or a raster of cell values."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    kind: Literal["const", "pow", "raster"] = "const"
    param: float = 1.0
    raster: Optional[np.ndarray] = None

    def cell_values(self, centers: np.ndarray) -> np.ndarray:
        shape = centers.shape[:-1]
        if self.kind == "const":
            return np.full(shape, self.param)
        if self.kind == "pow":
            with np.errstate(divide="ignore"):
                return np.linalg.norm(centers, axis=-1) ** self.param
        if self.raster is None or self.raster.shape != shape:
            raise InputError(f"raster weight must have one value per cell {shape}", field="weight")
        return np.asarray(self.raster, dtype=float)

    def describe(self) -> str:
        if self.kind == "raster":
            return "raster"
        return f"{self.kind} {self.param:g}"


def _lo(a: np.ndarray, axis: int) -> np.ndarray:
    idx = [slice(None)] * a.ndim
    idx[axis] = slice(None, -1)
    return a[tuple(idx)]


def _hi(a: np.ndarray, axis: int) -> np.ndarray:
    idx = [slice(None)] * a.ndim
    idx[axis] = slice(1, None)
    return a[tuple(idx)]


def _pad(a: np.ndarray, axis: int, before: int, after: int) -> np.ndarray:
    width = [(0, 0)] * a.ndim
    width[axis] = (before, after)
    return np.pad(a, width)


def _avg(a: np.ndarray, axis: int) -> np.ndarray:
    return 0.5 * (_lo(a, axis) + _hi(a, axis))


def _avg_adjoint(b: np.ndarray, axis: int) -> np.ndarray:
    return 0.5 * (_pad(b, axis, 0, 1) + _pad(b, axis, 1, 0))


class GridDomain(BaseModel):
    """
    Node grid with the masks of Omega, the plate K and punctured nodes.

    boundary_mask holds the nodes pinned to exterior data: every non-Omega
    node in the 3^n neighbourhood of Omega, plus Omega nodes on the box
    faces. Punctured nodes are neither in Omega nor pinned.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    lo: Tuple[float, ...]
    hi: Tuple[float, ...]
    h: float
    omega_mask: np.ndarray
    k_mask: np.ndarray
    punctured_mask: np.ndarray
    weight_cells: np.ndarray

    @model_validator(mode="after")
    def _check(self) -> "GridDomain":
        if self.n < 2:
            raise ValueError("grid dimension must be at least 2")
        if not self.omega_mask.any():
            raise ValueError("Omega has no grid nodes")
        if (self.k_mask & ~self.omega_mask).any():
            raise ValueError("K must lie inside Omega")
        if (self.k_mask & self.face_mask).any():
            raise ValueError("K nodes must be strictly interior to the box")
        w = self.weight_cells
        if w.shape != tuple(m - 1 for m in self.shape) or not np.all(np.isfinite(w)) or not np.all(w > 0):
            raise ValueError("cell weights must be positive and finite")
        return self

    @property
    def n(self) -> int:
        return len(self.lo)

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.omega_mask.shape

    @cached_property
    def axes(self) -> List[np.ndarray]:
        return [np.linspace(a, b, m) for a, b, m in zip(self.lo, self.hi, self.shape)]

    @cached_property
    def nodes(self) -> np.ndarray:
        return np.stack(np.meshgrid(*self.axes, indexing="ij"), axis=-1)

    @cached_property
    def face_mask(self) -> np.ndarray:
        out = np.zeros(self.shape, dtype=bool)
        for k in range(self.n):
            idx = [slice(None)] * self.n
            idx[k] = 0
            out[tuple(idx)] = True
            idx[k] = -1
            out[tuple(idx)] = True
        return out

    @cached_property
    def boundary_mask(self) -> np.ndarray:
        ring = ndimage.binary_dilation(self.omega_mask, structure=np.ones((3,) * self.n, dtype=bool))
        ring &= ~self.omega_mask & ~self.punctured_mask
        return ring | (self.omega_mask & self.face_mask)

    @cached_property
    def active(self) -> np.ndarray:
        return self.omega_mask | self.boundary_mask

    @cached_property
    def cell_mask(self) -> np.ndarray:
        m = self.active
        for k in range(self.n):
            m = _lo(m, k) & _hi(m, k)
        return m

    @cached_property
    def cell_coef(self) -> np.ndarray:
        return np.where(self.cell_mask, self.weight_cells, 0.0) * self.h ** self.n

    @property
    def free_mask(self) -> np.ndarray:
        """Nodes left to the minimizer when only the grid's own data is pinned."""
        return self.omega_mask & ~self.boundary_mask & ~self.k_mask

    def mask_of(self, shape: Shape) -> np.ndarray:
        return closed_mask(shape, self.nodes, self.axes)

    def with_puncture(self, mask: np.ndarray) -> "GridDomain":
        # a fresh instance; model_copy would carry the cached masks along
        mask = mask & self.omega_mask
        return GridDomain(lo=self.lo, hi=self.hi, h=self.h, omega_mask=self.omega_mask & ~mask,
                          k_mask=self.k_mask & ~mask, punctured_mask=self.punctured_mask | mask,
                          weight_cells=self.weight_cells)

    def with_plate(self, mask: np.ndarray) -> "GridDomain":
        return GridDomain(lo=self.lo, hi=self.hi, h=self.h, omega_mask=self.omega_mask, k_mask=mask,
                          punctured_mask=self.punctured_mask, weight_cells=self.weight_cells)


def build_grid(box: Box, h: float, omega: Shape, k: Optional[Shape] = None,
               weight: Optional[GridWeight] = None, puncture: Optional[Shape] = None) -> GridDomain:
    """Sample the shapes on the node grid of `box` with spacing h."""
    if not h > 0:
        raise InputError("grid spacing must be positive", field="h")
    counts = []
    for a, b in zip(box.lo, box.hi):
        steps = (b - a) / h
        if abs(steps - round(steps)) > 1e-6 or round(steps) < 2:
            raise InputError(f"box side {b - a:g} is not a multiple of h={h:g}", field="h")
        counts.append(int(round(steps)) + 1)
    axes = [np.linspace(a, b, m) for a, b, m in zip(box.lo, box.hi, counts)]
    nodes = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)

    omega_mask = open_mask(omega, nodes)
    k_mask = closed_mask(k, nodes, axes) if k is not None else np.zeros(omega_mask.shape, dtype=bool)
    punctured = np.zeros(omega_mask.shape, dtype=bool)
    if puncture is not None:
        punctured = closed_mask(puncture, nodes, axes) & omega_mask
        omega_mask &= ~punctured

    centers = nodes
    for axis in range(len(counts)):
        centers = _avg(centers, axis)
    weight = weight or GridWeight()
    cells = weight.cell_values(centers)
    try:
        return GridDomain(lo=tuple(box.lo), hi=tuple(box.hi), h=h, omega_mask=omega_mask,
                          k_mask=k_mask, punctured_mask=punctured, weight_cells=cells)
    except ValueError as e:
        raise InputError(str(e), field="grid") from e


class ScalarField(BaseModel):
    """Node values on a grid; pinned nodes carry their data exactly."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    grid: GridDomain
    values: np.ndarray
    pinned_mask: np.ndarray
    iterations: int = 0
    energy_history: Tuple[float, ...] = ()

    @model_validator(mode="after")
    def _finite(self) -> "ScalarField":
        if self.values.shape != self.grid.shape:
            raise ValueError("field shape does not match its grid")
        if not np.all(np.isfinite(self.values[self.grid.active])):
            raise ValueError("field values must be finite on active nodes")
        return self

    @property
    def free_mask(self) -> np.ndarray:
        return self.grid.active & ~self.pinned_mask

    def at(self, point: Sequence[float]) -> float:
        idx = tuple(int(np.argmin(np.abs(ax - c))) for ax, c in zip(self.grid.axes, point))
        return float(self.values[idx])


# ---------------------------------------------------------------------------
# Energy
# ---------------------------------------------------------------------------

def _edge_differences(u: np.ndarray, h: float) -> List[np.ndarray]:
    return [np.diff(u, axis=k) / h for k in range(u.ndim)]


def _edges_to_cells(a: np.ndarray, axis: int) -> np.ndarray:
    for m in range(a.ndim):
        if m != axis:
            a = _avg(a, m)
    return a


def _cells_to_edges(c: np.ndarray, axis: int) -> np.ndarray:
    for m in reversed(range(c.ndim)):
        if m != axis:
            c = _avg_adjoint(c, m)
    return c


def _gradient_sq(u: np.ndarray, g: GridDomain) -> Tuple[List[np.ndarray], np.ndarray]:
    diffs = _edge_differences(np.where(g.active, u, 0.0), g.h)
    g2 = sum(_edges_to_cells(d * d, k) for k, d in enumerate(diffs))
    return diffs, g2


def _energy(u: np.ndarray, g: GridDomain, p: float, eps: float = 0.0) -> float:
    _, g2 = _gradient_sq(u, g)
    base = g2 + eps * eps if eps else g2
    cells = g.cell_coef * base ** (0.5 * p)
    return math.fsum(cells.reshape(cells.shape[0], -1).sum(axis=1))


def _cell_coefficients(g2: np.ndarray, g: GridDomain, p: float, eps: float) -> np.ndarray:
    base = g2 + eps * eps if eps else g2
    with np.errstate(divide="ignore", invalid="ignore"):
        c = g.cell_coef * (0.5 * p) * base ** (0.5 * p - 1.0)
    return np.where((g.cell_coef > 0) & np.isfinite(c), c, 0.0)


def p_energy(u: Union[ScalarField, np.ndarray], g: GridDomain, p: float, eps: float = 0.0) -> float:
    """Discrete p-energy sum over active cells of |grad u|^p w_cell h^n."""
    values = u.values if isinstance(u, ScalarField) else u
    return _energy(values, g, p, eps)


def energy_gradient(u: Union[ScalarField, np.ndarray], g: GridDomain, p: float,
                    eps: float = 0.0) -> np.ndarray:
    """Exact gradient of p_energy with respect to every node value."""
    values = u.values if isinstance(u, ScalarField) else u
    diffs, g2 = _gradient_sq(values, g)
    c = _cell_coefficients(g2, g, p, eps)
    out = np.zeros(g.shape)
    for k, d in enumerate(diffs):
        e = 2.0 * d * _cells_to_edges(c, k)
        out += (_pad(e, k, 1, 0) - _pad(e, k, 0, 1)) / g.h
    return out


def _diagonal(u: np.ndarray, g: GridDomain, p: float, eps: float) -> np.ndarray:
    """Diagonal of the frozen-coefficient Hessian, used as preconditioner."""
    diffs, g2 = _gradient_sq(u, g)
    c = _cell_coefficients(g2, g, p, eps)
    out = np.zeros(g.shape)
    for k in range(g.n):
        s = _cells_to_edges(c, k)
        out += (2.0 / g.h ** 2) * (_pad(s, k, 1, 0) + _pad(s, k, 0, 1))
    return out


# ---------------------------------------------------------------------------
# Minimizer
# ---------------------------------------------------------------------------

class _Problem:
    def __init__(self, g: GridDomain, p: float, eps: float, free: np.ndarray):
        self.g, self.p, self.eps, self.free = g, p, eps, free

    def energy(self, x: np.ndarray) -> float:
        return _energy(x, self.g, self.p, self.eps)

    def gradient(self, x: np.ndarray) -> np.ndarray:
        return np.where(self.free, energy_gradient(x, self.g, self.p, self.eps), 0.0)

    def preconditioner(self, x: np.ndarray) -> np.ndarray:
        diag = np.where(self.free, _diagonal(x, self.g, self.p, self.eps), 0.0)
        top = diag.max() if diag.size else 0.0
        floor = 1e-12 * top if top > 0 else 1.0
        return np.where(self.free, 1.0 / np.maximum(diag, floor), 0.0)


def _secant_step(prob: _Problem, x: np.ndarray, grad: np.ndarray, d: np.ndarray, gd: float,
                 previous: Optional[float]) -> float:
    dmax = float(np.abs(d).max())
    sigma = 1e-6 * max(1.0, float(np.abs(x).max())) / dmax
    curvature = float(np.sum(d * (prob.gradient(x + sigma * d) - grad))) / sigma
    if curvature > 0:
        return -gd / curvature
    return 2.0 * previous if previous else 1.0


def _ncg(prob: _Problem, x: np.ndarray, tol: float, max_iter: int, history: List[float],
         used: int) -> Tuple[np.ndarray, int]:
    """Preconditioned Polak-Ribiere+ conjugate gradients with Armijo backtracking."""
    E = prob.energy(x)
    grad = prob.gradient(x)
    M = prob.preconditioner(x)
    z = M * grad
    rz = float(np.sum(grad * z))
    d = -z
    alpha = None
    steepest = True
    if not history or E < history[-1]:
        history.append(E)
    while True:
        gmax = float(np.abs(grad).max())
        if gmax <= tol:
            return x, used
        if used >= max_iter:
            raise NoConvergence(
                f"p-energy minimization did not converge in {max_iter} iterations",
                diagnostics={"iterations": used, "gradient_max": gmax, "energy": E, "tol": tol},
            )
        used += 1
        gd = float(np.sum(grad * d))
        if gd >= 0.0:
            d, gd, steepest = -z, -rz, True
        alpha = _secant_step(prob, x, grad, d, gd, alpha)
        for _ in range(MAX_BACKTRACK):
            trial = x + alpha * d
            E_trial = prob.energy(trial)
            if E_trial <= E + ARMIJO_C * alpha * gd:
                break
            alpha *= 0.5
        else:
            if not steepest:
                d, steepest = -z, True
                continue
            logger.warning("line search stalled at gradient %.3e (tol %.3e); keeping iterate", gmax, tol)
            return x, used

        x, E = trial, E_trial
        history.append(E)
        grad_new = prob.gradient(x)
        M = prob.preconditioner(x)
        z_new = M * grad_new
        rz_new = float(np.sum(grad_new * z_new))
        beta = max(0.0, (rz_new - float(np.sum(grad_new * z))) / rz) if rz > 0 else 0.0
        d = -z_new + beta * d
        steepest = beta == 0.0
        grad, z, rz = grad_new, z_new, rz_new
        if used % 500 == 0:
            logger.debug("iteration %d: energy %.12g, gradient %.3e", used, E, gmax)


def minimize_energy(g: GridDomain, p: float, pinned_values: np.ndarray,
                    pinned_mask: Optional[np.ndarray] = None, initial: Optional[np.ndarray] = None,
                    tol: Optional[float] = None, max_iter: Optional[int] = None) -> ScalarField:
    """
    Discrete p-harmonic field with the given pinned values.

    pinned_mask defaults to the grid's boundary nodes plus K. Stationarity is
    reached when the max-norm of the gradient over free nodes is below
    tol times the energy of the starting field. For p < 2 the integrand is
    regularized with eps = 1e-8, then eps is cut by 10 twice.
    """
    if not 1.0 < p < math.inf:
        raise InputError("p must satisfy 1 < p < infinity", field="p")
    tol = config.POTLAB_GRAD_TOL if tol is None else tol
    max_iter = config.POTLAB_MAX_ITER if max_iter is None else max_iter
    pinned = (g.boundary_mask | g.k_mask) if pinned_mask is None else pinned_mask & g.active
    if not pinned.any():
        raise InputError("at least one node must be pinned", field="pinned")
    free = g.active & ~pinned

    x = np.where(pinned, pinned_values, 0.0).astype(float)
    scale = _energy(x, g, p)
    tol_abs = tol * scale if scale > 0 else tol
    if initial is not None:
        x = np.where(free, initial, x)
    elif p != 2.0 and free.any():
        x = minimize_energy(g, 2.0, pinned_values, pinned, tol=tol, max_iter=max_iter).values

    history: List[float] = []
    used = 0
    if free.any():
        schedule = [config.REGULARIZATION_EPS * 0.1 ** k for k in range(3)] if p < 2.0 else [0.0]
        for eps in schedule:
            x, used = _ncg(_Problem(g, p, eps, free), x, tol_abs, max_iter, history, used)
        lo, hi = float(x[pinned].min()), float(x[pinned].max())
        clipped = np.where(free, np.clip(x, lo, hi), x)
        if not np.array_equal(clipped, x):
            E_clipped = _energy(clipped, g, p, schedule[-1])
            if E_clipped <= history[-1]:
                x = clipped
                history.append(E_clipped)
    else:
        history.append(scale)
    logger.debug("minimize_energy p=%g h=%g: %d iterations, energy %.12g", p, g.h, used, history[-1])
    return ScalarField(grid=g, values=np.where(g.active, x, 0.0), pinned_mask=pinned,
                       iterations=used, energy_history=tuple(history))


# ---------------------------------------------------------------------------
# Capacity
# ---------------------------------------------------------------------------

class CapacityEstimate(BaseModel):
    model_config = ConfigDict(frozen=True)

    value: float
    h: float
    iterations: int
    energy_history: Tuple[float, ...] = ()
    refinement_chain: Optional[Tuple[Tuple[float, float], ...]] = None

    @model_validator(mode="after")
    def _check(self) -> "CapacityEstimate":
        if self.value < 0:
            raise ValueError("capacity must be nonnegative")
        hist = self.energy_history
        if any(b > a for a, b in zip(hist, hist[1:])):
            raise ValueError("energy history must be nonincreasing")
        return self


def variational_capacity(g: GridDomain, p: float, tol: Optional[float] = None,
                         max_iter: Optional[int] = None) -> CapacityEstimate:
    """cap_p(K, Omega): minimal energy with u = 1 on K and u = 0 off Omega."""
    if not g.k_mask.any():
        raise InputError("condenser plate K has no grid nodes", field="K")
    values = np.where(g.k_mask, 1.0, 0.0)
    u = minimize_energy(g, p, values, tol=tol, max_iter=max_iter)
    value = p_energy(u, g, p)
    logger.info("capacity p=%g h=%g: %.8g (%d iterations)", p, g.h, value, u.iterations)
    return CapacityEstimate(value=value, h=g.h, iterations=u.iterations, energy_history=u.energy_history)


def capacity_chain(builder: Callable[[float], GridDomain], hs: Sequence[float], p: float,
                   tol: Optional[float] = None, max_iter: Optional[int] = None) -> CapacityEstimate:
    """variational_capacity at every spacing; the finest level is the headline value."""
    hs = sorted(set(hs), reverse=True)
    if not hs:
        raise InputError("refinement chain needs at least one spacing", field="hs")
    results: Dict[float, CapacityEstimate] = {}
    with ThreadPoolExecutor(max_workers=max(1, min(config.POTLAB_THREADS, len(hs)))) as executor:
        futures = {executor.submit(variational_capacity, builder(h), p, tol, max_iter): h for h in hs}
        for future in tqdm(as_completed(futures), total=len(futures), desc="Refinement levels",
                           disable=not config.POTLAB_PROGRESS):
            results[futures[future]] = future.result()
    finest = results[hs[-1]]
    chain = tuple((h, results[h].value) for h in hs)
    return finest.model_copy(update={"refinement_chain": chain})


class Trend(str, Enum):
    ZERO = "TrendZero"
    POSITIVE = "TrendPositive"
    INCONCLUSIVE = "Inconclusive"


def null_capacity_trend(chain: Union[CapacityEstimate, Sequence[Tuple[float, float]]],
                        p: Optional[float] = None, rho: Optional[float] = None,
                        floor: float = 0.0) -> Trend:
    """
    Numerical proxy for capacity zero along a refinement chain.

    Geometric decay (every ratio <= rho) gives TrendZero; values within 5%
    over the last two refinements and above floor give TrendPositive; with p
    known, s = value^(-1/(p-1)) growing by non-shrinking increments (the
    logarithmic decay of a point condenser at p = n) gives TrendZero.
    """
    rho = config.POTLAB_TREND_RHO if rho is None else rho
    pairs = chain.refinement_chain if isinstance(chain, CapacityEstimate) else chain
    pairs = list(pairs or ())
    if len(pairs) < 3:
        logger.info("trend needs at least three levels, got %d", len(pairs))
        return Trend.INCONCLUSIVE
    hs = [h for h, _ in pairs]
    if any(b >= a for a, b in zip(hs, hs[1:])):
        raise InputError("refinement chain must have strictly decreasing h", field="chain")
    values = [v for _, v in pairs]
    if any(v < 0 or not math.isfinite(v) for v in values):
        raise InputError("capacity values must be finite and nonnegative", field="chain")

    ratios = [b / a if a > 0 else 0.0 for a, b in zip(values, values[1:])]
    if all(r <= rho for r in ratios):
        return Trend.ZERO

    changes = [abs(b - a) / a for a, b in zip(values[-3:], values[-2:]) if a > 0]
    if len(changes) == 2 and all(c <= config.TREND_PLATEAU for c in changes) and values[-1] > floor:
        return Trend.POSITIVE

    if p is not None and all(v > 0 for v in values):
        s = [v ** (-1.0 / (p - 1.0)) for v in values]
        steps = [b - a for a, b in zip(s, s[1:])]
        if all(st > 0 for st in steps) and all(b >= rho * a for a, b in zip(steps, steps[1:])):
            return Trend.ZERO
    return Trend.INCONCLUSIVE


# ---------------------------------------------------------------------------
# Parabolicity
# ---------------------------------------------------------------------------

_R = sympy.Symbol("r", positive=True)


class BallGrowth(BaseModel):
    """mu(B(0, r)): power law c r^d, or a closed-form expression in r."""

    model_config = ConfigDict(frozen=True)

    kind: Literal["power", "closed"] = "power"
    c: float = 1.0
    d: float = 2.0
    expr: Optional[str] = None

    @model_validator(mode="after")
    def _check(self) -> "BallGrowth":
        if self.kind == "power":
            if not (self.c > 0 and self.d > 0):
                raise ValueError("power-law growth needs c > 0 and d > 0")
            return self
        if not self.expr:
            raise ValueError("closed-form growth needs an expression in r")
        try:
            f = sympy.lambdify(_R, sympy.sympify(self.expr, locals={"r": _R}), "numpy")
            rs = 2.0 ** np.arange(-10, 61, dtype=float)
            vals = np.asarray(f(rs), dtype=float) * np.ones_like(rs)
        except (sympy.SympifyError, SyntaxError, TypeError, ValueError) as e:
            raise ValueError(f"cannot evaluate growth {self.expr!r}: {e}") from e
        if not np.all(vals > 0) or np.any(np.diff(vals) < 0):
            raise ValueError("ball measure must be positive and nondecreasing in r")
        return self

    @cached_property
    def _symbolic(self):
        if self.kind == "power":
            return sympy.Float(self.c) * _R ** sympy.Float(self.d)
        return sympy.sympify(self.expr, locals={"r": _R})

    @cached_property
    def _numeric(self):
        return sympy.lambdify(_R, self._symbolic, "numpy")

    def measure(self, r):
        r = np.asarray(r, dtype=float)
        return np.asarray(self._numeric(r), dtype=float) * np.ones_like(r)


class Parabolicity(str, Enum):
    PARABOLIC = "Parabolic"
    HYPERBOLIC = "Hyperbolic"
    INCONCLUSIVE = "Inconclusive"


def _growth_exponent(growth: BallGrowth) -> Optional[float]:
    try:
        lim = sympy.limit(sympy.log(growth._symbolic) / sympy.log(_R), _R, sympy.oo)
    except (NotImplementedError, ValueError, TypeError):
        return None
    if lim.is_real and lim.is_finite:
        return float(lim)
    return None


def parabolicity(growth: BallGrowth, p: float, blocks: int = 60) -> Parabolicity:
    """
    Divergence of the integral of (r / mu(B(0, r)))^(1/(p-1)) at infinity.

    Power laws are decided exactly (parabolic iff p >= d). Closed forms use
    the growth exponent when it differs from p, otherwise dyadic block
    integrals: non-decaying blocks mean divergence, geometric decay
    convergence.
    """
    if not 1.0 < p < math.inf:
        raise InputError("p must satisfy 1 < p < infinity", field="p")
    if growth.kind == "power":
        return Parabolicity.PARABOLIC if p >= growth.d else Parabolicity.HYPERBOLIC

    d = _growth_exponent(growth)
    if d is not None and abs(d - p) > 1e-9:
        return Parabolicity.PARABOLIC if p > d else Parabolicity.HYPERBOLIC

    def integrand(r):
        with np.errstate(over="ignore", divide="ignore"):
            return (r / growth.measure(r)) ** (1.0 / (p - 1.0))

    sums = [integrate_density(integrand, (2.0 ** k, 2.0 ** (k + 1)), cap=math.inf).value for k in range(blocks)]
    tail = sums[-10:]
    ratios = [b / a for a, b in zip(tail, tail[1:]) if a > 0]
    if ratios and min(ratios) >= 0.999:
        return Parabolicity.PARABOLIC
    if ratios and max(ratios) <= 0.95:
        return Parabolicity.HYPERBOLIC
    logger.info("dyadic blocks neither stay put nor decay: ratios %s", ratios)
    return Parabolicity.INCONCLUSIVE


def unit_ball_volume(n: int) -> float:
    return math.pi ** (0.5 * n) / math.gamma(0.5 * n + 1.0)


def ball_growth_for_power_weight(n: int, alpha: float) -> BallGrowth:
    """mu(B(0, r)) for w = |x|^alpha on R^n: omega_n n / (n + alpha) r^(n + alpha)."""
    if n < 1:
        raise InputError("dimension must be positive", field="n")
    if not alpha > -n:
        raise InputError(f"|x|^{alpha:g} is not locally integrable on R^{n}", field="alpha")
    return BallGrowth(kind="power", c=unit_ball_volume(n) * n / (n + alpha), d=n + alpha)

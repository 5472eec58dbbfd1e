"""
Discrete p-harmonic Dirichlet problems and the experiments built on them:
maximum principles, Harnack ratios, removability of small sets, limits at
punctures and a bounded-data Liouville probe.
"""

from __future__ import annotations

import csv
import logging
import math
from concurrent.futures import ThreadPoolExecutor, as_completed
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator
from tqdm import tqdm

from potlab import config
from potlab.capacitynd import GridDomain, ScalarField, build_grid, minimize_energy, p_energy
from potlab.errors import BallTooLarge, InputError
from potlab.shapes import Box, Shape

logger = logging.getLogger(__name__)

BoundaryData = Union[float, np.ndarray, Callable[[np.ndarray], np.ndarray]]


def _boundary_values(g: GridDomain, boundary: BoundaryData) -> np.ndarray:
    if callable(boundary):
        values = np.asarray(boundary(g.nodes), dtype=float)
    else:
        values = np.asarray(boundary, dtype=float)
    return np.broadcast_to(values, g.shape).astype(float)


def dirichlet_solve(g: GridDomain, p: float, boundary: BoundaryData,
                    pinned_mask: Optional[np.ndarray] = None, tol: Optional[float] = None,
                    max_iter: Optional[int] = None) -> ScalarField:
    """
    Discrete p-harmonic field equal to `boundary` on the pinned nodes.

    boundary is a constant, a node array, or a function of the (..., n)
    node coordinates.
    """
    return minimize_energy(g, p, _boundary_values(g, boundary), pinned_mask=pinned_mask,
                           tol=tol, max_iter=max_iter)


class PrincipleCheck(BaseModel):
    model_config = ConfigDict(frozen=True)

    passed: bool
    location: Tuple[float, ...]
    free_extreme: float
    pinned_extreme: float
    constant: bool


def _principle_check(u: ScalarField, sign: float, tol: float) -> PrincipleCheck:
    g = u.grid
    free = u.free_mask & g.omega_mask
    pinned = u.pinned_mask & g.active
    v = sign * u.values
    active_vals = u.values[g.active]
    scale = max(1.0, float(np.abs(active_vals).max()))
    constant = float(active_vals.max() - active_vals.min()) <= tol * scale
    free_ext = float(v[free].max()) if free.any() else -math.inf
    pinned_ext = float(v[pinned].max())
    where = np.where(g.active, v, -np.inf)
    idx = np.unravel_index(int(np.argmax(where)), g.shape)
    location = tuple(float(g.nodes[idx][k]) for k in range(g.n))
    passed = constant or free_ext <= pinned_ext + tol * scale
    return PrincipleCheck(passed=passed, location=location, free_extreme=sign * free_ext,
                          pinned_extreme=sign * pinned_ext, constant=constant)


def max_principle_check(u: ScalarField, tol: float = 1e-9) -> PrincipleCheck:
    """The maximum over free nodes does not exceed the maximum over pinned nodes."""
    return _principle_check(u, 1.0, tol)


def min_principle_check(u: ScalarField, tol: float = 1e-9) -> PrincipleCheck:
    return _principle_check(u, -1.0, tol)


def harnack_ratio(u: ScalarField, center: Sequence[float], radius: float, tol: float = 1e-9) -> float:
    """sup_B u / inf_B u on the ball B; 6B must lie in Omega."""
    g = u.grid
    if not radius > 0:
        raise InputError("ball radius must be positive", field="radius")
    dist = np.linalg.norm(g.nodes - np.asarray(center, dtype=float), axis=-1)
    big = dist <= 6.0 * radius
    lo, hi = np.asarray(g.lo), np.asarray(g.hi)
    c = np.asarray(center, dtype=float)
    if np.any(c - 6.0 * radius < lo) or np.any(c + 6.0 * radius > hi) or not np.all(g.omega_mask[big]):
        raise BallTooLarge(f"6B with center {tuple(center)} and radius {radius:g} leaves Omega")
    vals = u.values[g.omega_mask]
    if vals.min() < -tol:
        raise InputError("Harnack ratio needs a nonnegative field", field="u")
    ball = u.values[dist <= radius]
    if ball.size == 0:
        raise InputError("ball contains no grid nodes", field="radius")
    inf = max(float(ball.min()), 0.0)
    sup = float(ball.max())
    if inf <= tol:
        return math.inf
    return sup / inf


# ---------------------------------------------------------------------------
# Experiments
# ---------------------------------------------------------------------------

class ExperimentReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    quantity: str
    hs: Tuple[float, ...]
    values: Tuple[float, ...]
    oscillations: Tuple[float, ...] = ()
    verdict: str
    tolerances: Dict[str, float] = {}
    limit: Optional[float] = None

    @model_validator(mode="after")
    def _check(self) -> "ExperimentReport":
        if len(self.hs) != len(self.values):
            raise ValueError("one value per refinement level")
        if self.oscillations and len(self.oscillations) != len(self.hs):
            raise ValueError("one oscillation per refinement level")
        if not all(math.isfinite(v) for v in self.values + self.oscillations):
            raise ValueError("experiment values must be finite")
        return self


def _contraction_verdict(values: Sequence[float], rho: float, floor: float,
                         good: str, bad: str) -> str:
    if all(v <= floor for v in values):
        return good
    ratios = [b / a for a, b in zip(values, values[1:]) if a > floor]
    if len(ratios) == len(values) - 1 and all(r <= rho for r in ratios):
        return good
    tail = values[-3:]
    if len(tail) == 3 and tail[-1] > floor:
        changes = [abs(b - a) / a for a, b in zip(tail, tail[1:])]
        if all(c <= config.TREND_PLATEAU for c in changes):
            return bad
    return "Inconclusive"


def _sup_difference(a: ScalarField, b: ScalarField, mask: np.ndarray) -> float:
    if not mask.any():
        return 0.0
    return float(np.abs(a.values[mask] - b.values[mask]).max())


def _removability_level(g: GridDomain, E: Shape, p: float, boundary: BoundaryData,
                        probe_value: Optional[float], tol: Optional[float]) -> float:
    e_mask = g.mask_of(E) & g.omega_mask & ~g.boundary_mask
    if not e_mask.any():
        return 0.0
    data = _boundary_values(g, boundary)
    free_solve = dirichlet_solve(g, p, data, tol=tol)
    punctured = g.with_puncture(e_mask)
    removed_solve = dirichlet_solve(punctured, p, data, tol=tol)
    keep = g.omega_mask & ~e_mask & ~g.boundary_mask
    diff = _sup_difference(free_solve, removed_solve, keep)
    if probe_value is not None:
        pinned = g.boundary_mask | g.k_mask | e_mask
        probe_data = np.where(e_mask, probe_value, data)
        pinned_solve = minimize_energy(g, p, probe_data, pinned_mask=pinned, tol=tol)
        diff = max(diff, _sup_difference(free_solve, pinned_solve, keep))
    logger.info("removability h=%g: |E|=%d nodes, sup difference %.6g", g.h, int(e_mask.sum()), diff)
    return diff


def removability_experiment(builder: Callable[[float], GridDomain], E: Shape, p: float,
                            boundary: BoundaryData, hs: Sequence[float],
                            probe_value: Optional[float] = None, rho: Optional[float] = None,
                            floor: Optional[float] = None, tol: Optional[float] = None) -> ExperimentReport:
    """
    Compare solves with E free, E removed (natural boundary) and, when
    probe_value is given, E pinned to probe_value, along a refinement chain.

    The reported value per level is the sup-node difference over Omega minus
    E. Differences contracting by rho per level are RemovableConsistent;
    differences settling above floor are Obstructed.
    """
    rho = config.POTLAB_TREND_RHO if rho is None else rho
    floor = 10.0 * config.POTLAB_GRAD_TOL if floor is None else floor
    hs = sorted(set(hs), reverse=True)
    diffs: Dict[float, float] = {}
    with ThreadPoolExecutor(max_workers=max(1, min(config.POTLAB_THREADS, len(hs)))) as executor:
        futures = {executor.submit(_removability_level, builder(h), E, p, boundary, probe_value, tol): h
                   for h in hs}
        for future in tqdm(as_completed(futures), total=len(futures), desc="Removability levels",
                           disable=not config.POTLAB_PROGRESS):
            diffs[futures[future]] = future.result()
    values = tuple(diffs[h] for h in hs)
    verdict = _contraction_verdict(values, rho, floor, "RemovableConsistent", "Obstructed")
    return ExperimentReport(quantity="sup-difference", hs=tuple(hs), values=values, verdict=verdict,
                            tolerances={"rho": rho, "floor": floor})


def puncture_limit_probe(fields: Sequence[ScalarField], x0: Sequence[float],
                         floor: Optional[float] = None) -> ExperimentReport:
    """Oscillation of u over the annulus 2h <= |x - x0| <= 4h at every level."""
    floor = 10.0 * config.POTLAB_GRAD_TOL if floor is None else floor
    ordered = sorted(fields, key=lambda u: -u.grid.h)
    hs, oscs = [], []
    limit = None
    for u in ordered:
        g = u.grid
        dist = np.linalg.norm(g.nodes - np.asarray(x0, dtype=float), axis=-1)
        ring = (dist >= 2.0 * g.h - 1e-12) & (dist <= 4.0 * g.h + 1e-12) & g.omega_mask
        if not ring.any():
            raise InputError(f"no Omega nodes around {tuple(x0)} at h={g.h:g}", field="x0")
        vals = u.values[ring]
        hs.append(g.h)
        oscs.append(float(vals.max() - vals.min()))
        limit = float(vals.mean())
    decreasing = all(b < a for a, b in zip(oscs, oscs[1:]))
    verdict = "LimitSupported" if all(o <= floor for o in oscs) or decreasing else "NoLimitEvidence"
    return ExperimentReport(quantity="annulus-oscillation", hs=tuple(hs), values=tuple(oscs),
                            oscillations=tuple(oscs), verdict=verdict, tolerances={"floor": floor},
                            limit=limit)


class SpotCheck(BaseModel):
    model_config = ConfigDict(frozen=True)

    passed: bool
    worst_ratio: float
    trials: int


def quasiminimizer_spot_check(u: ScalarField, p: float, Q: float = 1.0, trials: int = 100,
                              seed: Optional[int] = None, slack: float = 1e-9,
                              amplitude: float = 1e-2) -> SpotCheck:
    """
    energy(u) <= Q energy(u + phi) for random bumps phi supported on free
    nodes; worst_ratio is the largest energy(u) / energy(u + phi) seen.
    """
    g = u.grid
    rng = np.random.default_rng(config.POTLAB_SEED if seed is None else seed)
    free = u.free_mask & g.omega_mask
    centers = np.argwhere(free)
    if len(centers) == 0:
        raise InputError("field has no free nodes to perturb", field="u")
    base = p_energy(u, g, p)
    spread = float(np.ptp(u.values[g.active])) or 1.0
    worst = 0.0
    passed = True
    for _ in range(trials):
        c = g.nodes[tuple(centers[rng.integers(len(centers))])]
        radius = g.h * (1.0 + rng.integers(1, 4))
        dist = np.linalg.norm(g.nodes - c, axis=-1)
        bump = np.clip(1.0 - (dist / radius) ** 2, 0.0, None) * free
        phi = amplitude * spread * rng.standard_normal() * bump
        perturbed = p_energy(u.values + phi, g, p)
        ratio = base / perturbed if perturbed > 0 else (0.0 if base == 0 else math.inf)
        worst = max(worst, ratio)
        if base > Q * perturbed * (1.0 + slack):
            passed = False
    return SpotCheck(passed=passed, worst_ratio=worst, trials=trials)


def liouville_probe(p: float, radii: Sequence[float] = (2.0, 4.0, 8.0, 16.0), nodes_per_axis: int = 33,
                    n: int = 2, rho: Optional[float] = None, tol: Optional[float] = None) -> ExperimentReport:
    """
    Bounded data x_1 / R on [-R, R]^n for growing R; the oscillation on the
    unit ball must die out if bounded p-harmonic functions on R^n are constant.
    """
    rho = config.POTLAB_TREND_RHO if rho is None else rho
    if nodes_per_axis < 5 or nodes_per_axis % 2 == 0:
        raise InputError("nodes_per_axis must be odd and at least 5", field="nodes_per_axis")
    radii = sorted(radii)
    hs, oscs = [], []
    for R in radii:
        box = Box(lo=(-R,) * n, hi=(R,) * n)
        h = 2.0 * R / (nodes_per_axis - 1)
        g = build_grid(box, h, box)
        u = dirichlet_solve(g, p, lambda x, R=R: x[..., 0] / R, tol=tol)
        ball = np.linalg.norm(g.nodes, axis=-1) <= 1.0
        vals = u.values[ball]
        hs.append(h)
        oscs.append(float(vals.max() - vals.min()))
        logger.info("Liouville probe R=%g: oscillation on the unit ball %.6g", R, oscs[-1])
    ratios = [b / a for a, b in zip(oscs, oscs[1:]) if a > 0]
    verdict = "ConstantInLimit" if ratios and all(r <= rho for r in ratios) else "Inconclusive"
    return ExperimentReport(quantity="unit-ball-oscillation", hs=tuple(hs), values=tuple(oscs),
                            oscillations=tuple(oscs), verdict=verdict, tolerances={"rho": rho})


def write_report_csv(report: ExperimentReport, path: Union[str, Path]) -> Path:
    """Columns h, value, oscillation, verdict; one row per refinement level."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["h", "value", "oscillation", "verdict"])
        for i, (h, v) in enumerate(zip(report.hs, report.values)):
            osc = repr(float(report.oscillations[i])) if report.oscillations else ""
            writer.writerow([repr(float(h)), repr(float(v)), osc, report.verdict])
    return path

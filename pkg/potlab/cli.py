"""
Scenario-file driver.

    potlab run <scenario.json> [--out DIR] [--verbose]
    potlab validate <scenario.json>
    potlab demo <name> [--out DIR]
    potlab demo --list

Every run writes <name>.csv and <name>.json into the output directory.
Exit codes: 0 success (any verdict), 1 input error, 2 domain error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from pathlib import Path
from typing import Annotated, Any, Callable, Dict, List, Literal, Optional, Sequence, Tuple, Union

import numpy as np
import sympy
from pydantic import BaseModel, ConfigDict, Field, TypeAdapter, ValidationError

from potlab import config
from potlab.capacitynd import (
    BallGrowth,
    GridDomain,
    GridWeight,
    ball_growth_for_power_weight,
    build_grid,
    capacity_chain,
    null_capacity_trend,
    parabolicity,
)
from potlab.errors import InputError, PotlabError
from potlab.harmonic1d import (
    AffineInNu,
    Piece,
    PiecewiseHarmonic1D,
    bounded_extension_bound,
    decide_removable_1d,
    restrict,
    weak_extend,
)
from potlab.harmonicnd import (
    ExperimentReport,
    dirichlet_solve,
    harnack_ratio,
    liouville_probe,
    max_principle_check,
    min_principle_check,
    puncture_limit_probe,
    quasiminimizer_spot_check,
    removability_experiment,
    write_report_csv,
)
from potlab.quasi1d import decide_removable_quasi_1d, extend_quasi_1d, f_q_bound
from potlab.shapes import Box, Point, Shape
from potlab.verdict import (
    CapacityFact,
    SetDescriptor,
    Whole,
    classify_superharmonic,
    classify_unweighted,
    classify_weighted,
    verdict_json,
)
from potlab.weights1d import (
    IntervalFamily,
    OpenSet1D,
    RelClosed1D,
    ap_constant,
    check_pair,
    component_measures,
    iter_components,
    mu_measure,
    nu_measure,
    nu_ratio,
    parse_weight,
)

logger = logging.getLogger(__name__)

SCENARIO_DIR = Path(__file__).resolve().parent.parent / "scenarios"

Endpoint = Union[float, str]
Row = Sequence[Any]


def _num(v: Endpoint) -> float:
    try:
        return float(v)
    except (TypeError, ValueError) as e:
        raise InputError(f"not a number: {v!r}", field="endpoint") from e


# ---------------------------------------------------------------------------
# Scenario schema
# ---------------------------------------------------------------------------

class _Scenario(BaseModel):
    model_config = ConfigDict(extra="forbid")

    version: Literal[1] = 1
    name: Optional[str] = None


class _Sets1D(_Scenario):
    """Omega as open intervals (and families); E as closed pieces clipped to Omega."""

    omega: List[Tuple[Endpoint, Endpoint]] = []
    families: List[IntervalFamily] = []
    E: List[Tuple[Endpoint, Endpoint]] = []

    def sets(self) -> Tuple[OpenSet1D, RelClosed1D]:
        comps = tuple(sorted((_num(a), _num(b)) for a, b in self.omega))
        try:
            Omega = OpenSet1D(components=comps, families=tuple(self.families))
        except ValidationError as e:
            raise InputError(str(e.errors()[0]["msg"]), field="omega") from e
        E = RelClosed1D.from_pieces(Omega, [(_num(a), _num(b)) for a, b in self.E])
        check_pair(Omega, E)
        return Omega, E


class Decide1DScenario(_Sets1D):
    kind: Literal["decide1d"]
    weight: str = "const 1"
    p: float = 2.0
    sup_norm: Optional[float] = None
    signed: bool = False


class Extend1DScenario(_Sets1D):
    kind: Literal["extend1d"]
    weight: str = "const 1"
    p: float = 2.0
    a: float
    b: float
    basepoint: float = 0.0
    samples: List[float] = []


class Quasi1DScenario(_Sets1D):
    kind: Literal["quasi1d"]
    Q: float = 1.0
    p: float = 2.0
    rule: Literal["martio", "uppman", "uppman_small"] = "uppman"
    u: str = "t"
    samples: List[float] = []


class FQScenario(_Scenario):
    kind: Literal["fq"]
    Q: float = 1.0
    p: float = 2.0
    xs: List[float]


class WeightsScenario(_Scenario):
    kind: Literal["weights"]
    weight: str
    p: float = 2.0
    box: Tuple[float, float] = (-1.0, 1.0)
    probe: Optional[List[Tuple[float, float]]] = None
    intervals: List[Tuple[float, float]] = []


class GridWeightSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kind: Literal["const", "pow", "raster"] = "const"
    param: float = 1.0
    path: Optional[str] = None

    def build(self) -> GridWeight:
        if self.kind != "raster":
            return GridWeight(kind=self.kind, param=self.param)
        if not self.path or not Path(self.path).exists():
            raise InputError(f"raster weight file not found: {self.path}", field="weight.path")
        return GridWeight(kind="raster", raster=np.load(self.path))


class GridSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    box: Box
    omega: Shape
    k: Optional[Shape] = None
    weight: GridWeightSpec = GridWeightSpec()

    def builder(self, puncture: Optional[Shape] = None) -> Callable[[float], GridDomain]:
        weight = self.weight.build()
        return lambda h: build_grid(self.box, h, self.omega, self.k, weight, puncture)


class CapacityScenario(_Scenario):
    kind: Literal["capacity"]
    grid: GridSpec
    p: float = 2.0
    hs: List[float]
    floor: Optional[float] = None


class ParabolicScenario(_Scenario):
    kind: Literal["parabolic"]
    ps: List[float]
    growths: List[BallGrowth] = []
    power_weights: List[Tuple[int, float]] = []


class SolveScenario(_Scenario):
    kind: Literal["solve"]
    grid: GridSpec
    p: float = 2.0
    h: float
    boundary: str = "0"
    ball: Optional[Tuple[Tuple[float, ...], float]] = None
    spot_checks: int = 100


class ExperimentScenario(_Scenario):
    kind: Literal["experiment"]
    grid: GridSpec
    E: Shape
    p: float = 2.0
    boundary: str = "0"
    hs: List[float]
    probe_value: Optional[float] = None


class PunctureScenario(_Scenario):
    kind: Literal["puncture"]
    grid: GridSpec
    x0: Tuple[float, ...]
    p: float = 2.0
    boundary: str = "0"
    hs: List[float]


class LiouvilleScenario(_Scenario):
    kind: Literal["liouville"]
    p: float = 2.0
    n: int = 2
    radii: List[float] = [2.0, 4.0, 8.0, 16.0]
    nodes_per_axis: int = 33


class DeclaredFact(BaseModel):
    model_config = ConfigDict(extra="forbid")

    subject: SetDescriptor
    zero: bool


class VerdictCase(BaseModel):
    model_config = ConfigDict(extra="forbid")

    mode: Literal["unweighted", "weighted", "superharmonic"] = "unweighted"
    n: int
    p: float
    omega: SetDescriptor = Whole()
    E: SetDescriptor
    facts: List[DeclaredFact] = []
    growth: Optional[BallGrowth] = None
    weight_alpha: Optional[float] = None

    def capacity_facts(self) -> List[CapacityFact]:
        return [CapacityFact.declared(f.subject, f.zero) for f in self.facts]


class VerdictScenario(_Scenario):
    kind: Literal["verdict"]
    cases: List[VerdictCase]


Scenario = Annotated[
    Union[Decide1DScenario, Extend1DScenario, Quasi1DScenario, FQScenario, WeightsScenario,
          CapacityScenario, ParabolicScenario, SolveScenario, ExperimentScenario, PunctureScenario,
          LiouvilleScenario, VerdictScenario],
    Field(discriminator="kind"),
]
_SCENARIO = TypeAdapter(Scenario)


def load_scenario(path: Union[str, Path]):
    path = Path(path)
    if not path.exists():
        raise InputError(f"scenario file not found: {path}", field="file")
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as e:
        raise InputError(f"line {e.lineno} column {e.colno}: {e.msg}", field="json") from e
    return _SCENARIO.validate_python(raw)


# ---------------------------------------------------------------------------
# Expressions
# ---------------------------------------------------------------------------

_T = sympy.Symbol("t", real=True)


def _line_function(text: str) -> Callable[[float], float]:
    try:
        f = sympy.lambdify(_T, sympy.sympify(text, locals={"t": _T}), "math")
    except (sympy.SympifyError, SyntaxError, TypeError) as e:
        raise InputError(f"cannot parse {text!r}: {e}", field="u") from e
    return lambda x: float(f(x))


def _node_function(text: str, n: int) -> Callable[[np.ndarray], np.ndarray]:
    """Expression in x, y, z (or x0, x1, ...) evaluated on (..., n) node arrays."""
    symbols = sympy.symbols(" ".join(f"x{k}" for k in range(n)), real=True)
    names = {f"x{k}": s for k, s in enumerate(symbols)}
    names.update(dict(zip(("x", "y", "z"), symbols)))
    try:
        expr = sympy.sympify(text, locals=names)
        f = sympy.lambdify(symbols, expr, "numpy")
    except (sympy.SympifyError, SyntaxError, TypeError) as e:
        raise InputError(f"cannot parse boundary {text!r}: {e}", field="boundary") from e
    return lambda nodes: np.broadcast_to(
        np.asarray(f(*(nodes[..., k] for k in range(n))), dtype=float), nodes.shape[:-1])


# ---------------------------------------------------------------------------
# Handlers
# ---------------------------------------------------------------------------

class Outcome(BaseModel):
    header: List[str]
    rows: List[List[Any]]
    payload: Dict[str, Any]
    report: Optional[ExperimentReport] = None


def _decide1d(s: Decide1DScenario) -> Outcome:
    Omega, E = s.sets()
    w = parse_weight(s.weight, s.p)
    verdict = decide_removable_1d(Omega, E, w)
    rows = []
    for ref, pieces in iter_components(Omega, E, depth=8):
        m = component_measures(w, ref.interval, pieces)
        rows.append([ref.label(), m["length"], m["kept_length"], m["nu"], m["kept_nu"]])
    payload = {
        "removable": verdict.removable,
        "status": verdict.status.value,
        "C": verdict.constant,
        "C_nu": verdict.nu_constant,
        "clause": verdict.clause,
        "worst": verdict.worst.label() if verdict.worst else None,
        "certificate": list(verdict.certificate),
    }
    if verdict.removable and s.sup_norm is not None:
        payload["extension_bound"] = bounded_extension_bound(Omega, E, w, s.sup_norm, signed=s.signed)
    return Outcome(header=["component", "length", "kept_length", "nu", "kept_nu"], rows=rows, payload=payload)


def _extend1d(s: Extend1DScenario) -> Outcome:
    Omega, E = s.sets()
    w = parse_weight(s.weight, s.p)
    f = AffineInNu(a=s.a, b=s.b, basepoint=s.basepoint, weight=w)
    pieces: List[Piece] = []
    for i in range(len(Omega.components)):
        pieces.extend(restrict(f, Omega, E, i).pieces)
    u = PiecewiseHarmonic1D(pieces=tuple(pieces))
    U = weak_extend(Omega, E, u)
    rows = [[x, u.sample([x])[0], U.sample([x])[0]] for x in s.samples]
    payload: Dict[str, Any] = {"pieces": [list(pc.interval) for pc in U.pieces]}
    verdict = decide_removable_1d(Omega, E, w)
    payload["removable"] = verdict.removable
    if verdict.removable:
        payload["C_nu"] = nu_ratio(Omega, E, w).value
    return Outcome(header=["x", "u", "extension"], rows=rows, payload=payload)


def _quasi1d(s: Quasi1DScenario) -> Outcome:
    Omega, E = s.sets()
    verdict = decide_removable_quasi_1d(Omega, E, Q=s.Q, p=s.p)
    payload: Dict[str, Any] = {"removable": verdict.removable, "status": verdict.status.value,
                               "clause": verdict.clause, "C": verdict.constant}
    if not verdict.removable:
        payload["certificate"] = list(verdict.certificate)
        rows = [[k, v] for k, v in enumerate(verdict.certificate)]
        return Outcome(header=["index", "f_Q"], rows=rows, payload=payload)
    ext = extend_quasi_1d(Omega, E, _line_function(s.u), s.Q, s.p, s.rule)
    payload.update({"Qprime": ext.Qprime.Q, "N": ext.N, "reflections_used": ext.reflections_used,
                    "oscillation": [pc.oscillation for pc in ext.pieces]})
    return Outcome(header=["x", "U"], rows=[[x, ext(x)] for x in s.samples], payload=payload)


def _fq(s: FQScenario) -> Outcome:
    bounds = [f_q_bound(s.Q, s.p, x) for x in s.xs]
    rows = [[b.x, b.bound] for b in bounds]
    return Outcome(header=["x", "f_Q"], rows=rows,
                   payload={"Q": s.Q, "p": s.p, "bounds": [b.bound for b in bounds]})


def _weights(s: WeightsScenario) -> Outcome:
    w = parse_weight(s.weight, s.p)
    est = ap_constant(w, s.probe, box=s.box)
    rows = [[a, b, mu_measure(w, (a, b)), nu_measure(w, (a, b))] for a, b in s.intervals]
    payload = {"weight": w.describe(), "p": s.p, "ap_lower_bound": est.value,
               "worst_interval": list(est.worst) if est.worst else None, "probe": est.probe}
    return Outcome(header=["a", "b", "mu", "nu"], rows=rows, payload=payload)


def _capacity(s: CapacityScenario) -> Outcome:
    est = capacity_chain(s.grid.builder(), s.hs, s.p)
    trend = null_capacity_trend(est, p=s.p, floor=s.floor or 0.0)
    rows = [[h, v] for h, v in est.refinement_chain]
    return Outcome(header=["h", "capacity"], rows=rows,
                   payload={"value": est.value, "h": est.h, "trend": trend.value, "iterations": est.iterations})


def _parabolic(s: ParabolicScenario) -> Outcome:
    growths = [(g.expr or f"{g.c:g} r^{g.d:g}", g) for g in s.growths]
    growths += [(f"|x|^{alpha:g} on R^{n}", ball_growth_for_power_weight(n, alpha)) for n, alpha in s.power_weights]
    rows = []
    for label, g in growths:
        for p in s.ps:
            rows.append([label, g.d if g.kind == "power" else "", p, parabolicity(g, p).value])
    table = [{"growth": r[0], "p": r[2], "parabolic": r[3] == "Parabolic"} for r in rows]
    return Outcome(header=["growth", "d", "p", "verdict"], rows=rows, payload={"table": table})


def _solve(s: SolveScenario) -> Outcome:
    g = s.grid.builder()(s.h)
    u = dirichlet_solve(g, s.p, _node_function(s.boundary, g.n))
    top, bottom = max_principle_check(u), min_principle_check(u)
    spot = quasiminimizer_spot_check(u, s.p, trials=s.spot_checks)
    payload: Dict[str, Any] = {"iterations": u.iterations, "max_principle": top.passed,
                               "min_principle": bottom.passed, "spot_check": spot.passed,
                               "worst_ratio": spot.worst_ratio}
    if s.ball is not None:
        payload["harnack_ratio"] = harnack_ratio(u, s.ball[0], s.ball[1])
    idx = np.argwhere(g.active)
    rows = [[*(float(g.nodes[tuple(i)][k]) for k in range(g.n)), float(u.values[tuple(i)])] for i in idx]
    header = [f"x{k}" for k in range(g.n)] + ["u"]
    return Outcome(header=header, rows=rows, payload=payload)


def _report_outcome(report: ExperimentReport) -> Outcome:
    return Outcome(header=[], rows=[], payload=json.loads(report.model_dump_json()), report=report)


def _experiment(s: ExperimentScenario) -> Outcome:
    builder = s.grid.builder()
    n = s.grid.box.dimension()
    report = removability_experiment(builder, s.E, s.p, _node_function(s.boundary, n), s.hs,
                                     probe_value=s.probe_value)
    return _report_outcome(report)


def _puncture(s: PunctureScenario) -> Outcome:
    builder = s.grid.builder(puncture=Point(x=s.x0))
    n = s.grid.box.dimension()
    data = _node_function(s.boundary, n)
    fields = [dirichlet_solve(builder(h), s.p, data) for h in sorted(s.hs, reverse=True)]
    return _report_outcome(puncture_limit_probe(fields, s.x0))


def _liouville(s: LiouvilleScenario) -> Outcome:
    return _report_outcome(liouville_probe(s.p, s.radii, s.nodes_per_axis, s.n))


def _verdict(s: VerdictScenario) -> Outcome:
    rows, verdicts = [], []
    for case in s.cases:
        facts = case.capacity_facts()
        if case.mode == "unweighted":
            v = classify_unweighted(case.n, case.p, case.omega, case.E, facts)
        elif case.mode == "weighted":
            growth = case.growth
            if growth is None:
                growth = ball_growth_for_power_weight(case.n, case.weight_alpha or 0.0)
            v = classify_weighted(case.n, case.p, growth, case.omega, case.E, facts)
        else:
            v = classify_superharmonic(facts, case.E, case.n, case.p)
        rows.append([case.mode, case.n, case.p, case.omega.label(), case.E.label(), v.removable.value, v.clause])
        verdicts.append(json.loads(verdict_json(v)))
    return Outcome(header=["mode", "n", "p", "omega", "E", "removable", "clause"], rows=rows,
                   payload={"verdicts": verdicts})


DISPATCH: Dict[str, Callable[[Any], Outcome]] = {
    "decide1d": _decide1d,
    "extend1d": _extend1d,
    "quasi1d": _quasi1d,
    "fq": _fq,
    "weights": _weights,
    "capacity": _capacity,
    "parabolic": _parabolic,
    "solve": _solve,
    "experiment": _experiment,
    "puncture": _puncture,
    "liouville": _liouville,
    "verdict": _verdict,
}


# ---------------------------------------------------------------------------
# Output
# ---------------------------------------------------------------------------

def _cell(v: Any) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return ""
        return repr(v)
    return str(v)


def _jsonable(v: Any) -> Any:
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        if math.isnan(v):
            return None
    return v


def write_outputs(name: str, outcome: Outcome, out_dir: Path) -> Tuple[Path, Path]:
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / f"{name}.csv"
    json_path = out_dir / f"{name}.json"
    if outcome.report is not None:
        write_report_csv(outcome.report, csv_path)
    else:
        with open(csv_path, "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(outcome.header)
            for row in outcome.rows:
                writer.writerow([_cell(v) for v in row])
    json_path.write_text(json.dumps(_jsonable(outcome.payload), indent=2) + "\n")
    return csv_path, json_path


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def run(path: Union[str, Path], out: Optional[Union[str, Path]] = None) -> Dict[str, Any]:
    """Run one scenario and write its artifacts; returns the JSON payload."""
    path = Path(path)
    scenario = load_scenario(path)
    name = scenario.name or path.stem
    print(f"Running {scenario.kind} scenario '{name}'...")
    outcome = DISPATCH[scenario.kind](scenario)
    csv_path, json_path = write_outputs(name, outcome, Path(out or config.RESULTS_DIR))
    print(f"✅ {name}: wrote {csv_path} and {json_path}")
    return _jsonable(outcome.payload)


def _semantic_checks(scenario) -> None:
    if isinstance(scenario, _Sets1D):
        scenario.sets()
    weight = getattr(scenario, "weight", None)
    if isinstance(weight, str):
        parse_weight(weight, scenario.p)
    grid = getattr(scenario, "grid", None)
    if isinstance(grid, GridSpec):
        hs = getattr(scenario, "hs", None) or [scenario.h]
        builder = grid.builder()
        for h in hs:
            builder(h)
    if isinstance(scenario, (SolveScenario, ExperimentScenario, PunctureScenario)):
        _node_function(scenario.boundary, scenario.grid.box.dimension())
    if isinstance(scenario, Quasi1DScenario):
        _line_function(scenario.u)


def validate(path: Union[str, Path]) -> List[str]:
    """Schema and consistency diagnostics; an empty list means the file is valid."""
    try:
        scenario = load_scenario(path)
        _semantic_checks(scenario)
    except ValidationError as e:
        return [f"{'.'.join(str(x) for x in err['loc'])}: {err['msg']}" for err in e.errors()]
    except InputError as e:
        return [str(e)]
    return []


def demo_names() -> List[str]:
    return sorted(p.stem for p in SCENARIO_DIR.glob("*.json"))


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = argparse.ArgumentParser(prog="potlab", description="Removable singularities lab")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="Run a scenario file")
    p_run.add_argument("file")
    p_run.add_argument("--out", default=None, help="Output directory (default: ./results)")
    p_run.add_argument("--verbose", action="store_true")

    p_val = sub.add_parser("validate", help="Check a scenario file without running it")
    p_val.add_argument("file")

    p_demo = sub.add_parser("demo", help="Run a shipped example")
    p_demo.add_argument("name", nargs="?")
    p_demo.add_argument("--list", action="store_true")
    p_demo.add_argument("--out", default=None)
    p_demo.add_argument("--verbose", action="store_true")

    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if getattr(args, "verbose", False) else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")

    if args.command == "validate":
        diagnostics = validate(args.file)
        if diagnostics:
            for d in diagnostics:
                print(f"❌ {d}")
            return 1
        print(f"✅ {args.file} is valid")
        return 0

    if args.command == "demo":
        if args.list or not args.name:
            for name in demo_names():
                print(name)
            return 0
        path = SCENARIO_DIR / f"{args.name}.json"
        if not path.exists():
            print(f"❌ Unknown demo '{args.name}'. Available: {', '.join(demo_names())}")
            return 1
    else:
        path = Path(args.file)

    try:
        run(path, args.out)
    except (InputError, ValidationError) as e:
        print(f"❌ Input error: {e}")
        return 1
    except PotlabError as e:
        print(f"❌ {type(e).__name__}: {e}")
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())

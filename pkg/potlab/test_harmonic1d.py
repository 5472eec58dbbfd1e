import math

import numpy as np
import pytest

from potlab.errors import DegenerateInterval, Disconnected, NotRemovable
from potlab.harmonic1d import (
    AffineInNu,
    PiecewiseHarmonic1D,
    Status1D,
    bounded_extension_bound,
    decide_removable_1d,
    eval_affine,
    fit_two_points,
    restrict,
    weak_extend,
    weak_removability_1d,
)
from potlab.weights1d import INF, IntervalFamily, OpenSet1D, RelClosed1D, Weight1D

ONE = Weight1D.constant(1.0, 2.0)
ROOT = Weight1D.power(0.5, 2.0)


def _pair(components, pieces):
    Omega = OpenSet1D.of(*components)
    return Omega, RelClosed1D.from_pieces(Omega, pieces)


def _identity(w=ONE):
    return AffineInNu(a=1.0, b=0.0, basepoint=0.0, weight=w)


def test_eval_affine():
    assert eval_affine(_identity(), 3.0) == 3.0
    assert eval_affine(_identity(ROOT), 1.0) == pytest.approx(2.0, rel=1e-8)
    assert eval_affine(AffineInNu(a=0.0, b=7.0, weight=ROOT), -12.5) == 7.0


def test_eval_affine_many_matches_pointwise():
    f = AffineInNu(a=0.5, b=1.0, basepoint=0.3, weight=ROOT)
    xs = np.array([-1.0, 0.3, 0.9, 2.0])
    expected = [eval_affine(f, float(x)) for x in xs]
    assert np.allclose(f(xs), expected, rtol=1e-9, atol=1e-12)


def test_fit_two_points_linear():
    f = fit_two_points(ONE, (0.0, 5.0), (1.0, 2.0), (4.0, 4.0))
    assert f.a == pytest.approx(2.0 / 3.0)
    assert eval_affine(f, 0.0) == pytest.approx(4.0 / 3.0)
    assert eval_affine(f, 1.0) == pytest.approx(2.0, rel=1e-12)
    assert eval_affine(f, 4.0) == pytest.approx(4.0, rel=1e-12)


def test_fit_two_points_constant():
    f = fit_two_points(ONE, (0.0, 1.0), (0.0, 5.0), (1.0, 5.0))
    assert f.is_constant
    assert eval_affine(f, 0.5) == 5.0


def test_fit_two_points_power_weight():
    f = fit_two_points(ROOT, (0.0, 1.0), (0.0, 0.0), (1.0, 2.0))
    assert f.a == pytest.approx(1.0, rel=1e-8)
    assert eval_affine(f, 0.25) == pytest.approx(1.0, rel=1e-8)


def test_fit_two_points_degenerate():
    with pytest.raises(DegenerateInterval):
        fit_two_points(ONE, (0.0, 1.0), (0.5, 0.0), (0.5, 1.0))


def test_weak_extend_slope_persists():
    Omega, E = _pair([(0.0, 2.0)], [(1.0, 2.0)])
    u = restrict(_identity(), Omega, E)
    U = weak_extend(Omega, E, u)
    xs = np.linspace(0.01, 1.99, 100)
    assert np.max(np.abs(U.sample(xs) - xs)) <= 1e-10


def test_weak_extend_round_trip_weighted():
    Omega, E = _pair([(-1.0, 3.0)], [(-1.0, 0.5), (2.0, 3.0)])
    f = AffineInNu(a=-1.3, b=0.4, basepoint=1.0, weight=ROOT)
    U = weak_extend(Omega, E, restrict(f, Omega, E))
    for x in (-0.9, 0.0, 0.7, 2.9):
        assert U(x) == pytest.approx(eval_affine(f, x), rel=1e-9, abs=1e-12)


def test_weak_extend_disconnected():
    Omega, E = _pair([(-1.0, 1.0)], [(-0.5, 0.0)])
    u = restrict(_identity(), Omega, E)
    with pytest.raises(Disconnected) as exc:
        weak_extend(Omega, E, u)
    witness = exc.value.witness
    assert {witness(0.5), witness(-0.75)} == {0.0, 1.0}


def test_weak_extend_unbounded():
    """u = x on (0,1) extends to x on R"""
    Omega, E = _pair([(-INF, INF)], [(-INF, 0.0), (1.0, INF)])
    U = weak_extend(Omega, E, restrict(_identity(), Omega, E))
    assert U(1000.0) == pytest.approx(1000.0)
    assert U(-50.0) == pytest.approx(-50.0)


def test_decide_removable_bounded_component():
    Omega, E = _pair([(0.0, 2.0)], [(1.0, 2.0)])
    verdict = decide_removable_1d(Omega, E, ONE)
    assert verdict.status == Status1D.REMOVABLE
    assert verdict.constant == 2.0
    assert verdict.clause == "ratio-bounded"


def test_decide_removable_half_line():
    Omega, E = _pair([(-INF, INF)], [(0.0, INF)])
    verdict = decide_removable_1d(Omega, E, ONE)
    assert verdict.removable
    assert verdict.constant == 1.0


def test_decide_disconnected():
    Omega, E = _pair([(-1.0, 1.0)], [(-0.5, 0.0)])
    verdict = decide_removable_1d(Omega, E, ONE)
    assert verdict.status == Status1D.DISCONNECTED
    assert {verdict.witness(0.5), verdict.witness(-0.75)} == {0.0, 1.0}


def test_case_one_witness_is_bounded_with_unbounded_extension():
    Omega, E = _pair([(-INF, INF)], [(-INF, 0.0), (1.0, INF)])
    verdict = decide_removable_1d(Omega, E, ONE)
    assert verdict.status == Status1D.UNBOUNDED
    assert verdict.clause == "case-1-unbounded-component"
    xs = np.linspace(0.001, 0.999, 50)
    values = verdict.witness.sample(xs)
    assert np.all(np.abs(values) <= 1.0)
    U = weak_extend(Omega, E, verdict.witness)
    assert U(1000.0) > 1e3 - 1e-6
    assert max(verdict.certificate) > 1e6


def test_case_two_ratio_blowup():
    """(j, j+1) minus [j + 1/j, j + 1): the remaining part shrinks like 1/j"""
    fam = IntervalFamily(lo="j", hi="j + 1", start=1, removed=(("j + 1/j", "j + 1"),))
    Omega = OpenSet1D(families=(fam,))
    verdict = decide_removable_1d(Omega, RelClosed1D(), ONE)
    assert verdict.status == Status1D.UNBOUNDED
    assert verdict.clause == "case-2-ratio-blowup"
    assert verdict.certificate[:3] == pytest.approx((1.0, 2.0, 3.0))
    # oscillation 1 on the part of each member left by E
    j = 5
    J = (j, j + 1.0 / j)
    lo = verdict.witness(J[0] + 1e-9)
    hi = verdict.witness(J[1] - 1e-9)
    assert hi - lo == pytest.approx(1.0, abs=1e-6)
    # the extension keeps the slope across the removed part, so it grows like j
    U = weak_extend(Omega, RelClosed1D(), verdict.witness)
    ends = [abs(U(j + 1.0 - 1e-9)) for j in (2, 5, 10, 20, 30)]
    assert all(b > a for a, b in zip(ends, ends[1:]))
    assert ends[-1] > 25.0


def test_weak_removability_reports_weak_only():
    Omega, E = _pair([(-INF, INF)], [(-INF, 0.0), (1.0, INF)])
    verdict = weak_removability_1d(Omega, E, ONE)
    assert verdict.status == Status1D.WEAKLY_REMOVABLE_ONLY
    assert not verdict.removable


def test_bounded_extension_bound():
    Omega, E = _pair([(0.0, 2.0)], [(1.0, 2.0)])
    assert bounded_extension_bound(Omega, E, ONE, 1.0) == 2.0
    assert bounded_extension_bound(Omega, E, ONE, 1.0, signed=True) == 3.0
    assert bounded_extension_bound(Omega, E, ROOT, 1.0) == pytest.approx(math.sqrt(2.0), rel=1e-8)
    Omega, E = _pair([(-INF, INF)], [(0.0, INF)])
    assert bounded_extension_bound(Omega, E, ONE, 1.0) == 1.0


def test_bounded_extension_bound_rejects_non_removable():
    Omega, E = _pair([(-1.0, 1.0)], [(-0.5, 0.0)])
    with pytest.raises(NotRemovable):
        bounded_extension_bound(Omega, E, ONE, 1.0)


def test_extensions_respect_the_bound():
    """0 <= u <= 1 on Omega minus E extends below the nu-ratio"""
    rng = np.random.default_rng(7)
    Omega, E = _pair([(0.0, 3.0), (4.0, 6.0)], [(2.0, 3.0), (4.0, 4.5)])
    bound = bounded_extension_bound(Omega, E, ROOT, 1.0)
    xs = np.concatenate([np.linspace(0.01, 2.99, 40), np.linspace(4.01, 5.99, 40)])
    for _ in range(10):
        pieces = []
        for i, I in enumerate(Omega.components):
            kept = restrict(_identity(ROOT), Omega, E, i).pieces[0].interval
            lo_val, hi_val = rng.uniform(0.0, 1.0, size=2)
            f = fit_two_points(ROOT, kept, (kept[0], lo_val), (kept[1], hi_val))
            pieces.append(restrict(f, Omega, E, i).pieces[0])
        U = weak_extend(Omega, E, PiecewiseHarmonic1D(pieces=tuple(pieces)))
        assert np.max(np.abs(U.sample(xs))) <= bound + 1e-8

import math

import pytest

from potlab.errors import ConditionFailed, InputError, LimitMissing, NotRemovable
from potlab.harmonic1d import Status1D
from potlab.quasi1d import (
    decide_removable_quasi_1d,
    extend_quasi_1d,
    f_q_bound,
    q_after_reflections,
    q_update,
    reflect,
    reflection_count,
    uppman_small_range,
)
from potlab.weights1d import INF, IntervalFamily, OpenSet1D, RelClosed1D


def _pair(components, pieces):
    Omega = OpenSet1D.of(*components)
    return Omega, RelClosed1D.from_pieces(Omega, pieces)


def test_reflect_identity():
    u = reflect(lambda t: t, 0.0, 0.0)
    for x in (-0.9, -0.3, 0.0, 0.4):
        assert u(x) == pytest.approx(x, abs=1e-12)


def test_reflect_square():
    u = reflect(lambda t: t * t, 0.0, 0.0)
    assert u(-0.5) == pytest.approx(-0.25)
    assert u(0.5) == pytest.approx(0.25)


def test_reflect_constant():
    u = reflect(lambda t: 4.0, 1.0)
    assert u(0.2) == 4.0
    assert u(1.7) == 4.0


def test_odd_symmetry():
    u = reflect(lambda t: math.exp(t) - 0.3 * t, 0.5, side="left")
    c = u.pivot_value
    for d in (0.01, 0.2, 0.45):
        assert u(0.5 - d) + u(0.5 + d) == pytest.approx(2.0 * c, abs=1e-12)


def test_probe_limit_oscillating():
    with pytest.raises(LimitMissing):
        reflect(lambda t: math.sin(1.0 / t), 0.0)


def test_q_update_rules():
    assert q_update(1.0, 2.0, "uppman").Q == 2.0
    assert q_update(1.0, 3.0, "uppman").Q == 4.0
    assert q_update(1.0, 2.0, "martio").Q == 4.0
    assert q_update(1.0, 2.0, "uppman_small").Q == pytest.approx(1.0)


@pytest.mark.parametrize("p", [1.5, 2.0, 3.0])
def test_uppman_small_fixes_one(p):
    assert q_update(1.0, p, "uppman_small").Q == pytest.approx(1.0, rel=1e-12)


@pytest.mark.parametrize("p", [1.2, 2.0, 3.5, 6.0])
def test_q_update_monotone(p):
    for Q in (1.0, 1.3, 2.5):
        martio = q_update(Q, p, "martio").Q
        uppman = q_update(Q, p, "uppman").Q
        assert uppman >= Q
        assert uppman <= martio
        if Q < uppman_small_range(p):
            assert q_update(Q, p, "uppman_small").Q >= Q


def test_uppman_small_outside_range():
    with pytest.raises(ConditionFailed):
        q_update(5.0, 2.0, "uppman_small")


def test_q_after_reflections_exact_powers():
    assert q_after_reflections(1.5, 3.0, 3).Q == 96.0
    assert q_after_reflections(1.0, 2.0, 0).Q == 1.0
    assert q_after_reflections(1.0, 2.0, 5, "martio").Q == 4.0 ** 5


def test_reflection_count():
    assert reflection_count(1.0) == 0
    assert reflection_count(2.0) == 1
    assert reflection_count(3.0) == 2
    assert reflection_count(4.0) == 2
    with pytest.raises(NotRemovable):
        reflection_count(INF)


def test_extend_single_reflection():
    """Omega = (-1, 1), E = (-1, 0], u(t) = t"""
    Omega, E = _pair([(-1.0, 1.0)], [(-1.0, 0.0)])
    ext = extend_quasi_1d(Omega, E, lambda t: t, Q=1.0, p=2.0)
    assert ext.N == 1
    assert ext.Qprime.Q == 2.0
    for x in (-0.8, -0.1, 0.5):
        assert ext(x) == pytest.approx(x, abs=1e-9)


def test_extend_two_reflections():
    """Omega = (0, 4), E = [1, 4): two reflections cover the component"""
    Omega, E = _pair([(0.0, 4.0)], [(1.0, 4.0)])
    ext = extend_quasi_1d(Omega, E, lambda t: t, Q=1.0, p=2.0)
    assert ext.N == 2
    assert ext.reflections_used == 2
    assert ext.Qprime.Q == 4.0
    assert ext(3.5) == pytest.approx(3.5, abs=1e-9)
    assert ext.pieces[0].oscillation <= 4.0 + 1e-9


def test_extend_constant_across_half_line():
    Omega, E = _pair([(-INF, INF)], [(0.0, INF)])
    ext = extend_quasi_1d(Omega, E, lambda t: 3.0, Q=1.5, p=2.0)
    assert ext(100.0) == 3.0
    assert ext.Qprime.Q == 1.5


def test_extend_rejects_nonconstant_on_half_line():
    Omega, E = _pair([(-INF, INF)], [(0.0, INF)])
    with pytest.raises(InputError):
        extend_quasi_1d(Omega, E, lambda t: math.atan(t), Q=1.0, p=2.0)


def test_extend_not_removable():
    Omega, E = _pair([(-INF, INF)], [(-INF, 0.0), (1.0, INF)])
    with pytest.raises(NotRemovable):
        extend_quasi_1d(Omega, E, lambda t: t, Q=1.0, p=2.0)


def test_decide_quasi_removable():
    Omega, E = _pair([(0.0, 2.0)], [(1.0, 2.0)])
    verdict = decide_removable_quasi_1d(Omega, E)
    assert verdict.removable
    assert verdict.constant == 2.0
    assert verdict.reflections == 1


def test_decide_quasi_case_one():
    Omega, E = _pair([(-INF, INF)], [(-INF, 0.0), (1.0, INF)])
    verdict = decide_removable_quasi_1d(Omega, E, Q=2.0)
    assert verdict.status == Status1D.UNBOUNDED
    assert verdict.clause == "case-1-unbounded-component"
    assert list(verdict.certificate) == sorted(verdict.certificate)
    assert verdict.certificate[-1] > 100.0


def test_decide_quasi_case_two():
    fam = IntervalFamily(lo="j", hi="j + 1", start=1, removed=(("j + 1/j", "j + 1"),))
    verdict = decide_removable_quasi_1d(OpenSet1D(families=(fam,)), RelClosed1D(), Q=1.0)
    assert verdict.clause == "case-2-ratio-blowup"
    # f_1(j) = j
    assert verdict.certificate[:3] == pytest.approx((2.0, 3.0, 4.0), rel=1e-9)


def test_decide_quasi_disconnected():
    Omega, E = _pair([(-1.0, 1.0)], [(-0.5, 0.0)])
    verdict = decide_removable_quasi_1d(Omega, E)
    assert verdict.status == Status1D.DISCONNECTED
    assert verdict.clause == "disconnected-component-constancy"


@pytest.mark.parametrize("p", [1.5, 2.0, 3.0])
@pytest.mark.parametrize("x", [2.0, 5.0, 10.0])
def test_f_q_equality_case(p, x):
    assert f_q_bound(1.0, p, x).bound == pytest.approx(x, abs=1e-8)


def test_f_q_quadratic_oracle():
    # 0.5 a^2 + 3 a - 4.5 = 0
    a, b, c = 0.5, 3.0, -4.5
    root = (-b + math.sqrt(b * b - 4 * a * c)) / (2 * a)
    assert f_q_bound(2.0, 2.0, 3.0).bound == pytest.approx(root, abs=1e-6)
    assert root == pytest.approx(-3.0 + math.sqrt(18.0))


def test_f_q_large_x():
    assert f_q_bound(2.0, 2.0, 100.0).bound == pytest.approx(9.13, abs=0.01)


def test_f_q_monotone_and_unbounded():
    bounds = [f_q_bound(2.0, 2.0, 2.0 ** k).bound for k in range(1, 23)]
    assert all(b > a for a, b in zip(bounds, bounds[1:]))
    assert bounds[-1] > 1e3


def test_f_q_bound_never_exceeds_x():
    """a = x always satisfies the inequality once Q >= 1"""
    for Q in (1.01, 2.0, 5.0):
        for p in (1.5, 3.0, 6.0):
            for x in (1.05, 3.0, 50.0):
                result = f_q_bound(Q, p, x)
                assert result.feasible
                assert 1.0 <= result.bound <= x + 1e-8


def test_f_q_requires_x_above_one():
    with pytest.raises(InputError):
        f_q_bound(2.0, 2.0, 1.0)

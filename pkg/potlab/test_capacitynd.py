import math

import numpy as np
import pytest

from potlab.capacitynd import (
    BallGrowth,
    GridWeight,
    Parabolicity,
    Trend,
    ball_growth_for_power_weight,
    build_grid,
    capacity_chain,
    energy_gradient,
    minimize_energy,
    null_capacity_trend,
    p_energy,
    parabolicity,
    variational_capacity,
)
from potlab.errors import InputError
from potlab.shapes import Box, Disc, Point

DISC_CAPACITY = 2.0 * math.pi / math.log(4.0)

UNIT_SQUARE = Box(lo=(0.0, 0.0), hi=(1.0, 1.0))
SQUARE = Box(lo=(-1.0, -1.0), hi=(1.0, 1.0))
UNIT_DISC = Disc(center=(0.0, 0.0), radius=1.0)
INNER_DISC = Disc(center=(0.0, 0.0), radius=0.25)


def _condenser(h, k=INNER_DISC, omega=UNIT_DISC, box=SQUARE):
    return build_grid(box, h, omega, k)


@pytest.fixture(scope="module")
def disc_chain():
    return capacity_chain(_condenser, [1 / 32, 1 / 64, 1 / 128], 2.0)


def test_energy_of_constant():
    g = build_grid(UNIT_SQUARE, 1 / 8, UNIT_SQUARE)
    assert p_energy(np.full(g.shape, 3.0), g, 2.0) == 0.0


def test_energy_of_linear_field():
    g = build_grid(UNIT_SQUARE, 1 / 8, UNIT_SQUARE)
    x = g.nodes[..., 0]
    assert p_energy(x, g, 2.0) == pytest.approx(1.0, rel=1e-12)
    assert p_energy(2.0 * x, g, 3.0) == pytest.approx(8.0, rel=1e-12)


def test_energy_is_h_independent_for_linear_fields():
    for h in (1 / 4, 1 / 16):
        g = build_grid(UNIT_SQUARE, h, UNIT_SQUARE)
        assert p_energy(g.nodes[..., 1], g, 2.0) == pytest.approx(1.0, rel=1e-12)


def test_weighted_energy():
    g = build_grid(UNIT_SQUARE, 1 / 8, UNIT_SQUARE, weight=GridWeight(kind="const", param=2.5))
    assert p_energy(g.nodes[..., 0], g, 2.0) == pytest.approx(2.5, rel=1e-12)


def test_energy_gradient_matches_finite_differences():
    rng = np.random.default_rng(3)
    g = build_grid(UNIT_SQUARE, 1 / 8, UNIT_SQUARE)
    u = rng.standard_normal(g.shape)
    grad = energy_gradient(u, g, 3.0)
    for idx in [(3, 4), (1, 1), (5, 2)]:
        bump = np.zeros(g.shape)
        bump[idx] = 1e-6
        fd = (p_energy(u + bump, g, 3.0) - p_energy(u - bump, g, 3.0)) / 2e-6
        assert grad[idx] == pytest.approx(fd, rel=1e-5, abs=1e-5)


def test_all_pinned_to_a_constant():
    g = build_grid(SQUARE, 1 / 8, UNIT_DISC)
    u = minimize_energy(g, 2.0, np.full(g.shape, 0.7))
    assert np.allclose(u.values[g.active], 0.7, atol=1e-4)
    assert p_energy(u, g, 2.0) == pytest.approx(0.0, abs=1e-8)


def test_strip_with_pinned_ends_is_a_ramp():
    h = 1 / 16
    g = build_grid(Box(lo=(0.0, 0.0), hi=(1.0, 2 * h)), h, Box(lo=(-1.0, -1.0), hi=(2.0, 2.0)))
    x = g.nodes[..., 0]
    ends = np.isclose(x, 0.0) | np.isclose(x, 1.0)
    u = minimize_energy(g, 2.0, x, pinned_mask=ends)
    assert np.allclose(u.values, x, atol=1e-5)


@pytest.mark.parametrize("p", [1.5, 3.0])
def test_energy_history_nonincreasing_and_clipped(p):
    g = _condenser(1 / 16)
    u = minimize_energy(g, p, np.where(g.k_mask, 1.0, 0.0))
    hist = u.energy_history
    assert all(b <= a for a, b in zip(hist, hist[1:]))
    vals = u.values[g.active]
    assert vals.min() >= -1e-8 and vals.max() <= 1.0 + 1e-8


def test_annulus_log_profile():
    g = _condenser(1 / 128)
    u = minimize_energy(g, 2.0, np.where(g.k_mask, 1.0, 0.0))
    r = np.linalg.norm(g.nodes, axis=-1)
    ring = (r > 0.25) & (r < 1.0) & u.free_mask
    exact = np.log(r[ring]) / math.log(0.25)
    assert np.max(np.abs(u.values[ring] - exact)) <= 0.02


def test_disc_capacity_oracle(disc_chain):
    assert disc_chain.h == 1 / 128
    assert disc_chain.value == pytest.approx(DISC_CAPACITY, rel=0.05)
    assert [h for h, _ in disc_chain.refinement_chain] == [1 / 32, 1 / 64, 1 / 128]


def test_disc_chain_trend_positive(disc_chain):
    assert null_capacity_trend(disc_chain, p=2.0) == Trend.POSITIVE


def test_point_condenser_trend_zero():
    chain = capacity_chain(lambda h: _condenser(h, k=Point(x=(0.0, 0.0))), [1 / 16, 1 / 32, 1 / 64, 1 / 128], 2.0)
    values = [v for _, v in chain.refinement_chain]
    assert all(b < a for a, b in zip(values, values[1:]))
    assert null_capacity_trend(chain, p=2.0) == Trend.ZERO


def test_capacity_monotone_in_k_and_omega():
    small = variational_capacity(_condenser(1 / 16), 2.0).value
    bigger_k = variational_capacity(_condenser(1 / 16, k=Disc(center=(0.0, 0.0), radius=0.5)), 2.0).value
    smaller_omega = variational_capacity(_condenser(1 / 16, omega=Disc(center=(0.0, 0.0), radius=0.8)), 2.0).value
    assert small <= bigger_k
    assert small <= smaller_omega


def test_capacity_scaling_law():
    """n = p = 2: only the radius ratio matters"""
    a = variational_capacity(_condenser(1 / 16), 2.0).value
    b = variational_capacity(
        build_grid(Box(lo=(-2.0, -2.0), hi=(2.0, 2.0)), 1 / 8, Disc(center=(0.0, 0.0), radius=2.0),
                   Disc(center=(0.0, 0.0), radius=0.5)),
        2.0,
    ).value
    assert b == pytest.approx(a, rel=0.02)


def test_trend_rules():
    assert null_capacity_trend([(0.5, 1.0), (0.25, 0.5), (0.125, 0.25)]) == Trend.ZERO
    assert null_capacity_trend([(0.5, 4.3), (0.25, 4.45), (0.125, 4.5)]) == Trend.POSITIVE
    assert null_capacity_trend([(0.5, 1.0), (0.25, 0.9)]) == Trend.INCONCLUSIVE
    # below the floor a plateau is not evidence of positive capacity
    assert null_capacity_trend([(0.5, 4.3), (0.25, 4.45), (0.125, 4.5)], floor=10.0) == Trend.INCONCLUSIVE
    with pytest.raises(InputError):
        null_capacity_trend([(0.25, 1.0), (0.5, 0.5), (0.125, 0.25)])


def test_trend_logarithmic_decay():
    """value = 1 / log(1/h): increments of 1/value stay constant"""
    chain = [(2.0 ** -k, 1.0 / (k * math.log(2.0))) for k in (4, 5, 6, 7)]
    assert null_capacity_trend(chain) == Trend.INCONCLUSIVE
    assert null_capacity_trend(chain, p=2.0) == Trend.ZERO


@pytest.mark.parametrize("n", [2, 3, 4])
@pytest.mark.parametrize("p", [1.5, 2.0, 3.0, 4.5])
def test_parabolicity_lattice(n, p):
    expected = Parabolicity.PARABOLIC if p >= n else Parabolicity.HYPERBOLIC
    assert parabolicity(BallGrowth(kind="power", c=1.0, d=float(n)), p) == expected


def test_parabolicity_fractional_growth():
    assert parabolicity(BallGrowth(d=2.5), 2.0) == Parabolicity.HYPERBOLIC


def test_parabolicity_closed_forms():
    assert parabolicity(BallGrowth(kind="closed", expr="r**2 + r"), 3.0) == Parabolicity.PARABOLIC
    assert parabolicity(BallGrowth(kind="closed", expr="r**3/(1 + r)"), 1.5) == Parabolicity.HYPERBOLIC
    # exponent equals p: decided by dyadic blocks of 1/(2r)
    assert parabolicity(BallGrowth(kind="closed", expr="2*r**2"), 2.0) == Parabolicity.PARABOLIC


def test_closed_growth_must_be_increasing():
    with pytest.raises(ValueError):
        BallGrowth(kind="closed", expr="1/r")


def test_power_weight_growth():
    g = ball_growth_for_power_weight(2, 0.0)
    assert g.c == pytest.approx(math.pi)
    assert g.d == 2.0
    assert ball_growth_for_power_weight(3, 1.0).d == 4.0
    with pytest.raises(InputError):
        ball_growth_for_power_weight(2, -2.0)


def test_build_grid_rejects_bad_spacing():
    with pytest.raises(InputError):
        build_grid(UNIT_SQUARE, 0.3, UNIT_SQUARE)
    with pytest.raises(InputError):
        build_grid(UNIT_SQUARE, -0.1, UNIT_SQUARE)


def test_k_outside_omega_rejected():
    with pytest.raises(InputError):
        build_grid(SQUARE, 1 / 8, INNER_DISC, Disc(center=(0.0, 0.0), radius=0.5))


def test_puncture_removes_nodes():
    g = build_grid(SQUARE, 1 / 8, UNIT_DISC, puncture=Point(x=(0.0, 0.0)))
    center = (8, 8)
    assert not g.omega_mask[center]
    assert not g.boundary_mask[center]
    assert g.punctured_mask[center]
    assert not g.cell_mask[7:9, 7:9].any()

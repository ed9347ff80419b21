import math

import numpy as np
import pytest

from massmoment.body import (
    AffineDensity, Ball, Box, ConstantDensity, Cylinder, GridMidpoint, HalfBall, MonteCarlo,
    RadialDensity, ReferenceBody, SubBall, SubBox, SubPart, TagSelector, WHOLE_BODY, discretize,
    sample_subparts,
)
from massmoment.errors import GeometryError
from massmoment.geometry import Axis
from massmoment.motion import observed_order

from oracles import box_integral

UNIT_BOX = ReferenceBody(Box((0, 0, 0), (1, 1, 1)))
UNIT_BALL = ReferenceBody(Ball((0, 0, 0), 1.0))
SHAPES = {
    "box": Box((1, 0, 0), (2, 1, 1)),
    "ball": Ball((0.5, -1, 2), 0.7),
    "half_ball": HalfBall((0, 0, 0), 1.0, (1, 1, 0)),
    "cylinder": Cylinder(Axis((1, 0, 1), (0, 0, 0)), 0.5, 1.0),
}


def test_midpoint_box_two_per_axis():
    cloud = discretize(UNIT_BOX, GridMidpoint(2))
    assert len(cloud) == 8
    np.testing.assert_array_equal(cloud.weights, np.full(8, 1 / 8))
    assert set(map(tuple, cloud.reference_positions)) == {
        (a, b, c) for a in (0.25, 0.75) for b in (0.25, 0.75) for c in (0.25, 0.75)}


def test_ball_volume_at_64():
    cloud = discretize(UNIT_BALL, GridMidpoint(64))
    assert cloud.weights.sum() == pytest.approx(4 * math.pi / 3, rel=0.01)


@pytest.mark.parametrize("name", SHAPES)
def test_weights_sum_to_volume_and_nodes_inside(name):
    body = ReferenceBody(SHAPES[name])
    cloud = discretize(body, GridMidpoint(32))
    assert cloud.weights.sum() == pytest.approx(body.volume, rel=0.005)
    assert np.all(cloud.weights > 0)
    assert np.all(body.shape.contains(cloud.reference_positions))
    lo, hi = body.shape.bounding_box()
    assert np.all(cloud.reference_positions >= lo - 1e-12)
    assert np.all(cloud.reference_positions <= hi + 1e-12)


@pytest.mark.parametrize("name", SHAPES)
def test_monte_carlo_weights_and_reproducibility(name):
    body = ReferenceBody(SHAPES[name])
    a = discretize(body, MonteCarlo(500, seed=7))
    b = discretize(body, MonteCarlo(500, seed=7))
    c = discretize(body, MonteCarlo(500, seed=8))
    assert np.array_equal(a.reference_positions, b.reference_positions)
    assert not np.array_equal(a.reference_positions, c.reference_positions)
    assert len(a) == 500
    assert np.all(a.weights == body.volume / 500)
    assert np.all(body.shape.contains(a.reference_positions))


def test_grid_midpoint_is_second_order_on_boxes():
    body = ReferenceBody(Box((0, 0, 0), (1, 2, 0.5)), AffineDensity(1.0, (0.2, 0.1, 0.0)))

    def f(x, y, z):
        return math.exp(x) * math.cos(y) * (1 + z * z)

    exact = box_integral(f, (0, 0, 0), (1, 2, 0.5))
    ns = [4, 8, 16, 32]
    errs = []
    for n in ns:
        cloud = discretize(body, GridMidpoint(n))
        X = cloud.reference_positions
        vals = np.exp(X[:, 0]) * np.cos(X[:, 1]) * (1 + X[:, 2] ** 2)
        errs.append(abs(math.fsum(cloud.weights * vals) - exact))
    assert observed_order([1 / n for n in ns], errs) >= 1.9


def test_ball_midpoint_is_second_order():
    ns = [8, 16, 32, 64]
    errs = [abs(discretize(UNIT_BALL, GridMidpoint(n)).weights.sum() - 4 * math.pi / 3) for n in ns]
    assert observed_order([1 / n for n in ns], errs) >= 1.9


def test_monte_carlo_error_scales_like_inverse_sqrt():
    counts = [250, 1000, 4000, 16000]
    rms = []
    for n in counts:
        errs = []
        for seed in range(10):
            X = discretize(UNIT_BOX, MonteCarlo(n, seed)).reference_positions
            errs.append(np.mean(X[:, 0] ** 2) - 1 / 3)
        rms.append(math.sqrt(np.mean(np.square(errs))))
    order = observed_order(counts, rms)
    assert -0.8 <= order <= -0.2


def test_densities_are_sampled():
    body = ReferenceBody(Ball((0, 0, 0), 1.0), RadialDensity((0, 0, 0), (2.0, 0.0, -1.0)))
    cloud = discretize(body, GridMidpoint(8))
    r = np.linalg.norm(cloud.reference_positions, axis=1)
    np.testing.assert_allclose(cloud.reference_densities, 2.0 - r ** 2)


def test_nonpositive_density_rejected():
    with pytest.raises(GeometryError):
        ReferenceBody(Box((0, 0, 0), (1, 1, 1)), AffineDensity(0.5, (-1.0, 0, 0)))
    with pytest.raises(GeometryError):
        ReferenceBody(Ball((0, 0, 0), 2.0), RadialDensity((0, 0, 0), (1.0, 0.0, -1.0)))
    with pytest.raises(GeometryError):
        ReferenceBody(Box((0, 0, 0), (1, 1, 1)), ConstantDensity(-1.0))


def test_degenerate_shapes_rejected():
    with pytest.raises(GeometryError):
        Ball((0, 0, 0), 0.0)
    with pytest.raises(GeometryError):
        Box((0, 0, 0), (1, 0, 1))
    with pytest.raises(GeometryError):
        Cylinder(Axis((0, 0, 1)), 1.0, -1.0)


def test_cloud_is_immutable():
    cloud = discretize(UNIT_BOX, GridMidpoint(2))
    with pytest.raises(ValueError):
        cloud.weights[0] = 2.0


def test_subparts_whole_body_first():
    assert sample_subparts(UNIT_BALL, 1, seed=3) == [WHOLE_BODY]


@pytest.mark.parametrize("name", SHAPES)
def test_subparts_are_reproducible_and_bounded(name):
    body = ReferenceBody(SHAPES[name])
    a = sample_subparts(body, 5, seed=11)
    b = sample_subparts(body, 5, seed=11)
    assert len(a) == 5 and a[0] == WHOLE_BODY
    assert [p.to_dict() for p in a] == [p.to_dict() for p in b]
    lo, hi = body.shape.bounding_box()
    bbox_vol = float(np.prod(hi - lo))
    probe = discretize(body, GridMidpoint(16))
    for part in sample_subparts(body, 40, seed=2)[1:]:
        sel = part.selector
        assert 0.05 * bbox_vol <= sel.volume * (1 + 1e-12) and sel.volume <= 0.5 * bbox_vol * (1 + 1e-12)
        if isinstance(sel, SubBox):
            assert np.all(sel.lo >= lo) and np.all(sel.hi <= hi)
        else:
            assert np.all(sel.center - sel.radius >= lo - 1e-12)
            assert np.all(sel.center + sel.radius <= hi + 1e-12)
        assert part.mask(probe).any()


def test_subpart_membership_is_lagrangian():
    cloud = discretize(UNIT_BOX, GridMidpoint(4))
    part = SubPart(SubBall((0.5, 0.5, 0.5), 0.3), "p")
    m = part.mask(cloud)
    assert m.sum() == 8
    # mask depends on reference positions only; nothing about time enters
    assert np.array_equal(m, part.mask(cloud))


def test_tag_selector():
    cloud = discretize(UNIT_BOX, GridMidpoint(4)).with_tags(lambda X: np.where(X[:, 0] < 0.5, "left", "right"))
    left = SubPart(TagSelector("left"), "left").mask(cloud)
    assert left.sum() == 32
    with pytest.raises(ValueError):
        SubPart(TagSelector("left")).mask(discretize(UNIT_BOX, GridMidpoint(2)))

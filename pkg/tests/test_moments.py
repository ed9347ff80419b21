import math

import numpy as np
import pytest

from massmoment.body import (
    Ball, Box, ConstantDensity, GridMidpoint, MaterialPointCloud, ReferenceBody, SubPart, TagSelector,
    WHOLE_BODY, discretize,
)
from massmoment.evolution import Frozen, MassConsistent
from massmoment.geometry import Axis, Plane, Point
from massmoment.moments import (
    ConstantOne, CoordinateSquare, InertiaSeptet, MomentParameter, Polynomial, SquaredDistance,
    check_identities, evaluate_moment, evaluate_reduced_density, inertia_about, inertia_septet,
    mass,
)
from massmoment.motion import Identity, RigidRotation, SimpleShear, UniformDilation

from oracles import ball_integral, box_integral

UNIT_BOX = ReferenceBody(Box((0, 0, 0), (1, 1, 1)))
UNIT_BALL = ReferenceBody(Ball((0, 0, 0), 1.0))


@pytest.fixture(scope="module")
def box_cloud():
    return discretize(UNIT_BOX, GridMidpoint(48))


@pytest.fixture(scope="module")
def ball_cloud():
    return discretize(UNIT_BALL, GridMidpoint(48))


def test_reduced_density_examples():
    assert evaluate_reduced_density(SquaredDistance(Point((0, 0, 0))), (1, 2, 2), 0.0) == 9.0
    assert evaluate_reduced_density(SquaredDistance(Plane((0, 0, 1), 0.0)), (5, 7, -3), 0.0) == 9.0
    assert evaluate_reduced_density(SquaredDistance(Axis((0, 0, 1))), (3, 4, 10), 0.0) == 25.0
    assert evaluate_reduced_density(ConstantOne(), (3, 4, 10), 0.0) == 1.0
    assert evaluate_reduced_density(CoordinateSquare(2), (3, 4, 10), 0.0) == 16.0


def test_entities_normalize():
    pl = Plane((0, 0, 2), 4.0)  # the plane x3 = 2
    assert np.linalg.norm(pl.normal) == pytest.approx(1.0, abs=1e-12)
    assert pl.squared_distance(np.array([0.0, 0.0, 5.0])) == pytest.approx(9.0)
    ax = Axis((0, 3, 4), (1, 0, 0))
    assert abs(np.linalg.norm(ax.direction) - 1.0) <= 1e-12


def test_polynomial_density():
    p = Polynomial((((2, 0, 0), 1.0), ((1, 1, 1), -2.0), ((0, 0, 4), 0.5)))
    x = np.array([1.5, -2.0, 0.5])
    assert p(x) == pytest.approx(1.5**2 - 2 * 1.5 * -2.0 * 0.5 + 0.5 * 0.5**4)
    with pytest.raises(ValueError):
        Polynomial((((3, 1, 1), 1.0),))


def test_squared_distances_nonnegative():
    X = np.random.default_rng(0).normal(size=(100, 3)) * 10
    for e in (Point((1, 2, 3)), Plane((1, -1, 0.5), 2.0), Axis((1, 1, 1), (0, 5, 0))):
        assert np.all(SquaredDistance(e)(X) >= 0)


def test_box_mass_and_point_inertia(box_cloud):
    assert evaluate_moment(mass(), box_cloud, WHOLE_BODY, Identity(), MassConsistent(), 0.0) == pytest.approx(1.0, abs=1e-12)
    oracle = box_integral(lambda x, y, z: x * x + y * y + z * z, (0, 0, 0), (1, 1, 1))
    assert oracle == pytest.approx(1.0, abs=1e-10)
    got = evaluate_moment(inertia_about(Point((0, 0, 0))), box_cloud, WHOLE_BODY, Identity())
    assert got == pytest.approx(oracle, rel=1e-3)


def test_ball_axis_inertia(ball_cloud):
    oracle = ball_integral(lambda x, y, z: x * x + y * y)
    assert oracle == pytest.approx(8 * math.pi / 15, rel=1e-9)
    got = evaluate_moment(inertia_about(Axis((0, 0, 1))), ball_cloud, WHOLE_BODY, Identity())
    assert got == pytest.approx(oracle, rel=0.01)


def test_box_septet(box_cloud):
    s = inertia_septet(box_cloud, Identity(), MassConsistent(), 0.0)
    assert s.I_Ox2x3 == pytest.approx(1 / 3, rel=1e-3)
    assert s.I_x3 == pytest.approx(2 / 3, rel=1e-3)
    assert s.I_O == pytest.approx(1.0, rel=1e-3)


def test_ball_septet_symmetry(ball_cloud):
    s = inertia_septet(ball_cloud, Identity())
    assert s.I_x1 == pytest.approx(s.I_x2, rel=1e-3) and s.I_x2 == pytest.approx(s.I_x3, rel=1e-3)
    assert s.I_Ox1x2 == pytest.approx(s.I_Ox2x3, rel=1e-3) and s.I_Ox2x3 == pytest.approx(s.I_Ox3x1, rel=1e-3)


@pytest.mark.parametrize("motion", [Identity(), RigidRotation(Axis((1, 2, 3), (0.5, 0, 0)), 1.3),
                                    SimpleShear(0.7), UniformDilation(0.5)])
def test_identities_hold_on_produced_septets(box_cloud, motion):
    for t in (0.0, 0.5, 1.0):
        s = inertia_septet(box_cloud, motion, MassConsistent(), t, origin=(0.2, -0.1, 0.3))
        results = check_identities(s, 1e-12)
        assert len(results) == 11
        assert all(r.passed for r in results), results


def test_identity_violation_is_reported():
    s = InertiaSeptet(I_O=3.0, I_x1=2.0, I_x2=2.0, I_x3=2.0, I_Ox1x2=1.0, I_Ox2x3=1.0, I_Ox3x1=1.0)
    assert all(r.passed and r.residual == 0.0 for r in check_identities(s))
    bumped = InertiaSeptet(I_O=4.0, I_x1=2.0, I_x2=2.0, I_x3=2.0, I_Ox1x2=1.0, I_Ox2x3=1.0, I_Ox3x1=1.0)
    res = {r.id: r for r in check_identities(bumped)}
    assert res["point_plane_sum"].residual == 1.0
    assert not res["point_plane_sum"].passed
    zero = InertiaSeptet(*([0.0] * 7))
    assert all(r.residual == 0.0 and r.passed for r in check_identities(zero))


def test_septet_members_match_individual_moments(box_cloud):
    from massmoment.moments import septet_parameters

    motion = SimpleShear(0.4)
    s = inertia_septet(box_cloud, motion, MassConsistent(), 0.7, origin=(1, 0, 0))
    for name, P in septet_parameters((1, 0, 0)).items():
        assert evaluate_moment(P, box_cloud, WHOLE_BODY, motion, MassConsistent(), 0.7) == pytest.approx(
            getattr(s, name), rel=1e-14)


def test_additive_and_homogeneous(box_cloud):
    tagged = box_cloud.with_tags(lambda X: X[:, 0] + X[:, 1] < 1.0)
    P = inertia_about(Point((0.3, 0.3, 0.3)))
    motion = UniformDilation(0.6)
    whole = evaluate_moment(P, tagged, WHOLE_BODY, motion, MassConsistent(), 0.8)
    a = evaluate_moment(P, tagged, SubPart(TagSelector(True), "a"), motion, MassConsistent(), 0.8)
    b = evaluate_moment(P, tagged, SubPart(TagSelector(False), "b"), motion, MassConsistent(), 0.8)
    assert a + b == pytest.approx(whole, rel=1e-14)
    heavy = MaterialPointCloud(box_cloud.reference_positions, box_cloud.weights,
                               3.0 * box_cloud.reference_densities, box_cloud.generator)
    assert evaluate_moment(P, heavy, WHOLE_BODY, motion, MassConsistent(), 0.8) == pytest.approx(
        3.0 * evaluate_moment(P, box_cloud, WHOLE_BODY, motion, MassConsistent(), 0.8), rel=1e-14)


def test_rigid_motion_keeps_mass(ball_cloud):
    motion = RigidRotation(Axis((1, 1, 0), (0, 2, 0)), 2.0)
    m0 = evaluate_moment(mass(), ball_cloud, WHOLE_BODY, motion, MassConsistent(), 0.0)
    for t in np.linspace(0, 3, 7):
        assert evaluate_moment(mass(), ball_cloud, WHOLE_BODY, motion, MassConsistent(), t) == pytest.approx(m0, rel=1e-14)


def test_frozen_density_under_dilation_gains_mass(box_cloud):
    m1 = evaluate_moment(mass(), box_cloud, WHOLE_BODY, UniformDilation(1.0), Frozen(), 1.0)
    assert m1 == pytest.approx(8.0, rel=1e-12)


def test_sum_is_independent_of_node_order(box_cloud):
    perm = np.random.default_rng(1).permutation(len(box_cloud))
    shuffled = MaterialPointCloud(box_cloud.reference_positions[perm], box_cloud.weights[perm],
                                  box_cloud.reference_densities[perm], box_cloud.generator)
    P = MomentParameter("p", SquaredDistance(Axis((1, 2, 0.5), (0.1, 0, 0))))
    motion = RigidRotation(Axis((0, 1, 0)), 0.9)
    assert evaluate_moment(P, shuffled, WHOLE_BODY, motion, MassConsistent(), 0.6) == \
        evaluate_moment(P, box_cloud, WHOLE_BODY, motion, MassConsistent(), 0.6)


def test_weighted_density_body():
    body = ReferenceBody(Box((0, 0, 0), (1, 1, 1)), ConstantDensity(2.5))
    cloud = discretize(body, GridMidpoint(4))
    assert evaluate_moment(mass(), cloud, WHOLE_BODY, Identity()) == pytest.approx(2.5, abs=1e-14)

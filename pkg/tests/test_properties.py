import numpy as np
from hypothesis import given, settings, strategies as st

from massmoment.body import Box, GridMidpoint, ReferenceBody, WHOLE_BODY, discretize
from massmoment.evolution import MassConsistent
from massmoment.geometry import Axis, Point
from massmoment.moments import SEPTET_MATRIX, InertiaSeptet, check_identities, evaluate_moment, inertia_about, mass
from massmoment.motion import (
    Composite, IncompressibleVortex, RigidRotation, SimpleShear, Translation, UniformDilation,
    deformation_state, place,
)

finite = st.floats(-5, 5, allow_nan=False)
vec = st.tuples(finite, finite, finite)
direction = vec.filter(lambda v: np.linalg.norm(v) > 0.1)
speed = st.floats(-2, 2)

motions = st.one_of(
    st.builds(Translation, direction, speed),
    st.builds(RigidRotation, st.builds(Axis, direction, vec), speed),
    st.builds(UniformDilation, st.floats(0, 2), vec),
    st.builds(SimpleShear, speed, st.sampled_from([(1, 2), (2, 3), (3, 1), (2, 1)])),
    st.builds(IncompressibleVortex, st.builds(Axis, direction, vec), st.floats(-1, 1), speed),
)
CLOUD = discretize(ReferenceBody(Box((-1, 0, 0.5), (1, 1, 2))), GridMidpoint(4))


@settings(max_examples=60, deadline=None)
@given(m=st.lists(motions, min_size=1, max_size=3), X=vec)
def test_reference_placement_is_identity(m, X):
    motion = Composite(tuple(m)) if len(m) > 1 else m[0]
    assert np.array_equal(place(motion, X, 0.0), np.asarray(X, dtype=float))


@settings(max_examples=60, deadline=None)
@given(m=motions, t=st.floats(0, 1))
def test_jacobian_is_positive_and_matches_gradient(m, t):
    s = deformation_state(m, CLOUD.reference_positions, t)
    assert np.all(s.jacobian > 0)
    np.testing.assert_allclose(s.jacobian, np.linalg.det(s.deformation_gradient), rtol=1e-12)


@settings(max_examples=100, deadline=None)
@given(q=st.tuples(*[st.floats(0, 1e3)] * 3))
def test_identities_hold_for_any_generated_septet(q):
    s = InertiaSeptet(*(SEPTET_MATRIX @ np.array(q)))
    assert all(r.passed for r in check_identities(s, 1e-12))


@settings(max_examples=40, deadline=None)
@given(axis=st.builds(Axis, direction, vec), w=speed, t=st.floats(0, 3))
def test_rotation_conserves_mass_and_axis_inertia(axis, w, t):
    rot = RigidRotation(axis, w)
    for P in (mass(), inertia_about(axis)):
        a = evaluate_moment(P, CLOUD, WHOLE_BODY, rot, MassConsistent(), 0.0)
        b = evaluate_moment(P, CLOUD, WHOLE_BODY, rot, MassConsistent(), t)
        assert abs(b - a) <= 1e-11 * (1 + abs(a))


@settings(max_examples=40, deadline=None)
@given(v=direction, c=speed, t=st.floats(0, 3))
def test_translation_point_inertia_parallel_axis(v, c, t):
    # I_O(t) = I_O(0) + 2 s . first moment + |s|^2 mass, with s the displacement
    tr = Translation(v, c)
    s = place(tr, (0.0, 0.0, 0.0), t)
    X = CLOUD.reference_positions
    w = CLOUD.weights
    expect = np.sum(w * (X * X).sum(1)) + 2 * s @ (w @ X) + (s @ s) * w.sum()
    got = evaluate_moment(inertia_about(Point((0, 0, 0))), CLOUD, WHOLE_BODY, tr, MassConsistent(), t)
    assert abs(got - expect) <= 1e-10 * (1 + abs(expect))

import math

import numpy as np
import numpy.testing as npt
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from squaretwist import quat as Q
from squaretwist.errors import AxisUndefined, DegenerateCenter, NotSpecialOrthogonal, TraceMismatch
from squaretwist.quat import I, J, K, ONE, UnitQuaternion

from conftest import quaternion_arrays, unit_quaternions

angles = st.floats(-10.0, 10.0, allow_nan=False)


def close(p, q, tol=1e-12):
    return np.max(np.abs(p.as_array() - q.as_array())) < tol


def test_multiplication_table():
    assert close(Q.mul(I, J), K)
    assert close(Q.mul(J, K), I)
    assert close(Q.mul(K, I), J)
    assert close(Q.mul(I, I), -ONE)


@given(unit_quaternions)
def test_identity_and_inverse(q):
    assert close(Q.mul(ONE, q), q)
    assert close(Q.mul(q, Q.inverse(q)), ONE, 1e-14)


def test_trace_and_theta_values():
    assert Q.trace(ONE) == 2.0
    assert Q.trace(-ONE) == -2.0
    assert Q.trace(I) == 0.0
    assert Q.theta(ONE) == 0.0
    npt.assert_allclose(Q.theta(-ONE), math.pi)
    npt.assert_allclose(Q.theta(I), math.pi / 2)


@given(unit_quaternions)
def test_theta_matches_arccos(q):
    npt.assert_allclose(Q.theta(q), math.acos(np.clip(Q.trace(q) / 2, -1, 1)), atol=1e-7)


def test_unit_quaternion_rejects_non_unit():
    with pytest.raises(ValueError):
        UnitQuaternion(1.0, 1.0, 0.0, 0.0)
    q = UnitQuaternion.from_array([1.0, 1.0, 0.0, 0.0])
    npt.assert_allclose(np.linalg.norm(q.as_array()), 1.0)


def test_one_param_examples():
    assert close(Q.one_param(I, math.pi / 2), I)
    assert close(Q.one_param(J, 0.0), ONE)
    assert close(Q.one_param(K, 2 * math.pi), ONE)
    with pytest.raises(AxisUndefined):
        Q.one_param(ONE, 1.0)
    with pytest.raises(AxisUndefined):
        Q.axis(-ONE)


@given(unit_quaternions.filter(lambda q: not Q.is_central(q, 1e-6)))
def test_one_param_passes_through_q(q):
    assert close(Q.one_param(q, Q.theta(q)), q)


@given(unit_quaternions.filter(lambda q: not Q.is_central(q, 1e-6)), angles, angles)
def test_one_param_homomorphism(q, s, t):
    lhs = Q.mul(Q.one_param(q, s), Q.one_param(q, t))
    assert close(lhs, Q.one_param(q, s + t))


@given(unit_quaternions.filter(lambda q: not Q.is_central(q, 1e-6)), unit_quaternions, angles)
def test_one_param_conjugation_equivariance(q, p, t):
    pq = Q.mul(Q.mul(p, q), Q.inverse(p))
    lhs = Q.mul(Q.mul(p, Q.one_param(q, t)), Q.inverse(p))
    assert close(lhs, Q.one_param(pq, t))


@given(unit_quaternions, unit_quaternions, quaternion_arrays, quaternion_arrays)
def test_bi_invariance(p, q, x, y):
    px = Q.qmul(Q.qmul(p.as_array(), x), q.as_array())
    py = Q.qmul(Q.qmul(p.as_array(), y), q.as_array())
    npt.assert_allclose(Q.qdot(px, py), Q.qdot(x, y), atol=1e-12)


@given(unit_quaternions, unit_quaternions)
def test_parallelogram_identity(x, y):
    lhs = Q.trace(Q.mul(x, y)) + Q.trace(Q.mul(x, Q.inverse(y)))
    npt.assert_allclose(lhs, Q.trace(x) * Q.trace(y), atol=1e-12)
    npt.assert_allclose(Q.trace(Q.mul(x, Q.inverse(y))), Q.trace(Q.mul(y, Q.inverse(x))), atol=1e-12)


def conj(x, p):
    return Q.mul(Q.mul(x, p), Q.inverse(x))


def test_conj_solve_examples():
    for t in (0.0, 0.7, 3.0):
        assert close(Q.conj_solve(I, I, t), Q.one_param(I, t))
    x0 = Q.conj_solve(I, J, 0.0)
    assert np.linalg.norm(conj(x0, I).as_array() - J.as_array()) < 1e-10
    half = UnitQuaternion.from_array([0.0, 1.0, 1.0, 0.0])
    assert np.linalg.norm(conj(half, I).as_array() - J.as_array()) < 1e-12
    with pytest.raises(TraceMismatch):
        Q.conj_solve(I, UnitQuaternion.from_array([0.5, -0.9 * 0.8, 0.2, 0.0]), 0.0)
    with pytest.raises(DegenerateCenter):
        Q.conj_solve(ONE, ONE, 0.0)


@settings(max_examples=50)
@given(unit_quaternions.filter(lambda q: not Q.is_central(q, 1e-6)), unit_quaternions, angles, angles)
def test_conj_solve_circle(p, g, t, s):
    q = conj(g, p)
    x = Q.conj_solve(p, q, t)
    assert np.linalg.norm(conj(x, p).as_array() - q.as_array()) < 1e-10
    # closure: times any centralizer element of p is again a solution
    y = Q.mul(x, Q.one_param(p, s))
    assert np.linalg.norm(conj(y, p).as_array() - q.as_array()) < 1e-10


def test_conj_solve_antipodal_axes():
    p = UnitQuaternion.from_array([0.3, 0.0, 0.0, math.sqrt(1 - 0.09)])
    q = UnitQuaternion.from_array([0.3, 0.0, 1e-9, -math.sqrt(1 - 0.09 - 1e-18)])
    x = Q.conj_solve(p, q, 1.0)
    assert np.linalg.norm(conj(x, p).as_array() - q.as_array()) < 1e-10


def test_phi_map_centralizer():
    m = Q.phi_map(I, I)
    assert m.rank == 2
    # kernel is span{1, i}
    proj = m.kernel @ m.kernel.T
    npt.assert_allclose(proj, np.diag([1.0, 1.0, 0.0, 0.0]), atol=1e-12)


@given(unit_quaternions.filter(lambda q: not Q.is_central(q, 1e-3)), unit_quaternions)
def test_phi_map_conjugate_pair(a, g):
    b = conj(g, a)
    m = Q.phi_map(a, b)
    assert m.rank == 2
    # kernel elements conjugate a to b
    for col in m.kernel.T:
        x = col / np.linalg.norm(col)
        lhs = Q.qmul(Q.qmul(a.as_array(), x), Q.qconj(b.as_array()))
        npt.assert_allclose(lhs, x, atol=1e-9)
    if np.linalg.norm(a.as_array() - b.as_array()) > 1e-3:
        # the image is not purely imaginary
        assert np.max(np.abs(m.image[0])) > 1e-6


def test_phi_map_equal_arguments_kernel_contains_one_and_a():
    a = UnitQuaternion.from_array([0.3, 0.4, -0.5, 0.2])
    m = Q.phi_map(a, a)
    proj = m.kernel @ m.kernel.T
    for v in (ONE.as_array(), a.as_array()):
        npt.assert_allclose(proj @ v, v, atol=1e-12)


def test_so4_factor_examples():
    p, q = Q.so4_factor(Q.Isometry4(np.eye(4)))
    assert abs(abs(p.w) - 1) < 1e-12 and abs(abs(q.w) - 1) < 1e-12
    p, q = Q.so4_factor(Q.Isometry4(Q.left_matrix(I.as_array())))
    x = np.array([0.1, 0.2, 0.3, 0.4])
    npt.assert_allclose(Q.qmul(Q.qmul(p.as_array(), x), q.as_array()), Q.qmul(I.as_array(), x), atol=1e-12)
    assert abs(abs(p.x) - 1) < 1e-12 and abs(abs(q.w) - 1) < 1e-12


@given(unit_quaternions, unit_quaternions)
def test_so4_factor_round_trip(p0, q0):
    phi = Q.Isometry4.two_sided(p0, q0)
    p, q = Q.so4_factor(phi)
    sign = np.sign(np.dot(p.as_array(), p0.as_array()))
    npt.assert_allclose(p.as_array(), sign * p0.as_array(), atol=1e-12)
    npt.assert_allclose(q.as_array(), sign * q0.as_array(), atol=1e-12)


def test_so4_factor_rejects_reflection():
    with pytest.raises(NotSpecialOrthogonal):
        Q.so4_factor(Q.Isometry4(np.diag([1.0, 1.0, 1.0, -1.0])))
    with pytest.raises(ValueError):
        Q.Isometry4(2 * np.eye(4))


def test_haar_determinism_and_moments():
    a = Q.haar(np.random.default_rng(5))
    b = Q.haar(np.random.default_rng(5))
    assert a == b
    x = Q.haar_array(np.random.default_rng(0), 100_000)
    tr = Q.qtrace(x)
    assert abs(tr.mean()) < 0.02
    assert abs((tr**2).mean() - 1) < 0.02


def test_projective_direction():
    with pytest.raises(ValueError):
        Q.ProjectiveDirection.from_array([1e-10, 0, 0])
    u = Q.ProjectiveDirection.from_array([1.0, 2.0, 3.0])
    v = Q.ProjectiveDirection.from_array([-2.0, -4.0, -6.0])
    assert u.distance(v) == 0.0
    w = Q.ProjectiveDirection.from_array([0.0, 3.0, -2.0])
    npt.assert_allclose(u.distance(w), math.pi / 2)

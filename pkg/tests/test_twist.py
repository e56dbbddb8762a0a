import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose, assert_array_equal

from conftest import unit_quaternions
from squaretwist import twist as T
from squaretwist.errors import CentralHolonomy, ParseError
from squaretwist.origami import HORIZONTAL, VERTICAL, core_word, cylinder, cylinders, presentation_of, registry
from squaretwist.quat import qtheta
from squaretwist.repvar import Representation, evaluate_word, residual, rng_for, sample_propagate


def _core_traces(rep, o, direction):
    out = []
    for cyl in cylinders(o, direction):
        out.append(evaluate_word(rep, core_word(o, cyl, cyl.cycle[0])).trace())
    return np.array(out)


def _theta(rep, o, direction, number):
    cyl = cylinder(o, direction, number)
    return float(qtheta(evaluate_word(rep, core_word(o, cyl, cyl.cycle[0])).as_array()))


def test_parse_and_format():
    w = T.TwistWord.parse("V1^2 H1^-1 v2")
    assert str(w) == "V1^2 H1^-1 V2"
    assert [g.direction for g in w] == [VERTICAL, HORIZONTAL, VERTICAL]
    assert str(T.TwistWord.parse("  H2^0 V1 ")) == "V1"
    assert str(w.inverse()) == "V2^-1 H1 V1^-2"
    assert len(w * w.inverse()) == 6


@pytest.mark.parametrize("text,position", [("V1 X2", 3), ("V", 0), ("H1 ^2", 3)])
def test_parse_errors(text, position):
    with pytest.raises(ParseError) as err:
        T.TwistWord.parse(text)
    assert err.value.position == position


def test_generator_validation():
    with pytest.raises(ValueError):
        T.TwistGenerator("diagonal", 1)
    with pytest.raises(ValueError):
        T.TwistGenerator(VERTICAL, 0)


def test_alphabet_and_random_word():
    o = registry("sprime")
    assert T.all_cylinders(o) == [(HORIZONTAL, 1), (HORIZONTAL, 2), (VERTICAL, 1)]
    assert len(T.alphabet(o, 2)) == 12
    w = T.random_word(rng_for(3), o, 50, max_exponent=2)
    assert len(w) == 50
    assert all(0 < abs(g.exponent) <= 2 for g in w)
    assert str(w) == str(T.random_word(rng_for(3), o, 50, max_exponent=2))


def test_exponent_zero_and_empty_word(samples):
    o, reps = samples["fig1"]
    rep = reps[0]
    assert_array_equal(T.twist(rep, o, T.TwistGenerator(VERTICAL, 1, 0)).values, rep.values)
    assert_array_equal(T.apply_word(rep, o, "").values, rep.values)


def test_trivial_representation_fixed():
    o = registry("fig1")
    triv = Representation.constant(presentation_of(o), [1, 0, 0, 0])
    assert_array_equal(T.apply_word(triv, o, "V1 H1^-2").values, triv.values)


def test_wrong_presentation():
    with pytest.raises(ValueError):
        T.twist(sample_propagate(registry("sprime"), 0), registry("fig1"), T.TwistGenerator(VERTICAL, 1))


@pytest.mark.parametrize("name", ["fig1", "sprime", "l22"])
def test_twist_preserves_relations_and_core_traces(samples, name):
    o, reps = samples[name]
    for rep in reps:
        for direction, number in T.all_cylinders(o):
            for n in (1, -1, 3):
                g = T.TwistGenerator(direction, number, n)
                out = T.twist(rep, o, g)
                assert residual(out).max < max(10 * residual(rep).max, 1e-12)
                assert_allclose(_core_traces(out, o, direction), _core_traces(rep, o, direction), atol=1e-12)
                # the other family of generators is untouched
                fixed = slice(o.d, None) if direction == HORIZONTAL else slice(0, o.d)
                assert_array_equal(out.values[fixed], rep.values[fixed])


@pytest.mark.parametrize("name", ["sprime", "l22"])
def test_same_direction_twists_commute(samples, name):
    o, reps = samples[name]
    for rep in reps:
        for direction in (HORIZONTAL, VERTICAL):
            k = len(cylinders(o, direction))
            for i in range(1, k + 1):
                for j in range(i + 1, k + 1):
                    u = T.apply_word(rep, o, T.TwistWord((T.TwistGenerator(direction, i), T.TwistGenerator(direction, j))))
                    v = T.apply_word(rep, o, T.TwistWord((T.TwistGenerator(direction, j), T.TwistGenerator(direction, i))))
                    assert np.abs(u.values - v.values).max() < 1e-11


def test_flow_identity_periodicity_and_group_law(samples):
    o, reps = samples["fig1"]
    rep = reps[2]
    for cyl in T.all_cylinders(o):
        assert_allclose(T.goldman_flow(rep, o, cyl, 0.0).values, rep.values, atol=1e-15)
        assert_allclose(T.goldman_flow(rep, o, cyl, 2 * np.pi).values, rep.values, atol=1e-11)
        s, t = 0.7, -2.1
        two = T.goldman_flow(T.goldman_flow(rep, o, cyl, t), o, cyl, s)
        assert_allclose(two.values, T.goldman_flow(rep, o, cyl, s + t).values, atol=1e-11)


@pytest.mark.parametrize("name", ["fig1", "sprime", "l22"])
def test_twist_is_flow_at_theta(samples, name):
    o, reps = samples[name]
    for rep in reps:
        for direction, number in T.all_cylinders(o):
            theta = _theta(rep, o, direction, number)
            for n in (1, 2, -1):
                tw = T.twist(rep, o, T.TwistGenerator(direction, number, n))
                fl = T.goldman_flow(rep, o, (direction, number), n * theta)
                assert np.abs(tw.values - fl.values).max() < 1e-10


def test_flow_central_holonomy():
    o = registry("fig1")
    triv = Representation.constant(presentation_of(o), [1, 0, 0, 0])
    with pytest.raises(CentralHolonomy):
        T.goldman_flow(triv, o, (VERTICAL, 1), 0.3)


def test_fiber_move_touches_only_crossing_generators(samples):
    o, reps = samples["sprime"]
    rep = reps[0]
    cyl = (HORIZONTAL, 2)
    crossing = T.crossing_generators(o, cyl)
    assert crossing == ("a2", "a3")
    moved = T.fiber_move(rep, o, cyl, 1.3)
    names = rep.presentation.generators
    for k, name in enumerate(names):
        if name not in crossing:
            assert_array_equal(moved.values[k], rep.values[k])
    assert abs(evaluate_word(moved, "a2 b1").trace() - evaluate_word(rep, "a2 b1").trace()) > 1e-6


@pytest.mark.parametrize("name", ["fig1", "sprime", "l22"])
def test_short_word_round_trip(samples, name):
    # words of about 20 letters; longer words amplify rounding exponentially
    o, reps = samples[name]
    for k, rep in enumerate(reps):
        w = T.random_word(rng_for(k), o, 20)
        back = T.apply_word(T.apply_word(rep, o, w), o, w.inverse())
        assert np.abs(back.values - rep.values).max() < 1e-9


def test_long_word_keeps_relations(samples):
    o, reps = samples["fig1"]
    w = T.random_word(rng_for(1), o, 1000)
    out = T.apply_word(reps[0], o, w)
    assert residual(out).max < 1e-9


def test_orbit_arrays_matches_random_words(samples):
    o, reps = samples["l22"]
    x = np.stack([r.values for r in reps[:3]])
    seeds = [(4, k) for k in range(3)]
    for step, choice, y in T.orbit_arrays(x, o, seeds, 15):
        pass
    assert step == 15
    for k in range(3):
        w = T.random_word(rng_for(seeds[k]), o, 15)
        assert_array_equal(y[k], T.apply_word(reps[k], o, w).values)


@settings(max_examples=20, deadline=None)
@given(unit_quaternions, st.integers(0, 5), st.integers(-2, 2).filter(bool))
def test_equivariance(p, which, n):
    o = registry("l22")
    rep = sample_propagate(o, which)
    direction, number = T.all_cylinders(o)[which % 4]
    g = T.TwistGenerator(direction, number, n)
    lhs = T.twist(rep.conjugate(p), o, g)
    rhs = T.twist(rep, o, g).conjugate(p)
    assert np.abs(lhs.values - rhs.values).max() < 1e-12

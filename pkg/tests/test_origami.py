import math

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from squaretwist import origami as O
from squaretwist.errors import BasepointOutsideCylinder, NotTransitive, ParseError, UnknownName
from squaretwist.origami import HORIZONTAL, VERTICAL, GeneratorWord, Origami


@st.composite
def origamis(draw, max_d=7):
    d = draw(st.integers(1, max_d))
    s = tuple(draw(st.permutations(range(d))))
    sp = tuple(draw(st.permutations(range(d))))
    o = Origami(s, sp)
    assume(len(O.orbits(o)) == 1)
    return o


def test_parse_cycles_grammar():
    assert O.parse_cycles("(1 2 3 4)") == (1, 2, 3, 0)
    assert O.parse_cycles("(1,3)(2)") == (2, 1, 0)
    assert O.parse_cycles("(1 3)", d=4) == (2, 1, 0, 3)
    assert O.parse_cycles("()".replace("()", "(1)")) == (0,)
    assert O.format_cycles(O.parse_cycles("(2 3)", 3)) == "(1)(2 3)"


@pytest.mark.parametrize(
    "text,position",
    [("(1 2", 4), ("(1 (2))", 3), ("1 2", 0), ("(1 x)", 3), ("(0 1)", 1), ("(1 2)(2)", None)],
)
def test_parse_cycles_errors(text, position):
    with pytest.raises(ParseError) as err:
        O.parse_cycles(text)
    assert err.value.position == position


def test_parse_cycles_degree_too_small():
    with pytest.raises(ParseError):
        O.parse_cycles("(1 5)", d=3)


def test_validate():
    O.validate(O.registry("fig1"))
    O.validate(Origami((0,), (0,)))
    with pytest.raises(NotTransitive) as err:
        O.validate(Origami((0, 1), (0, 1)))
    assert len(err.value.orbits) == 2


def test_registry():
    assert O.registry("fig1").sigma == O.parse_cycles("(1 2 3 4)")
    assert O.registry("S'").name == "sprime"
    assert O.registry("n4").tag == "n4"
    with pytest.raises(UnknownName):
        O.registry("nope")


@pytest.mark.parametrize(
    "name,vertices,genus",
    [("fig1", 2, 2), ("sprime", 1, 2), ("l22", None, 2)],
)
def test_registry_topology(name, vertices, genus):
    top = O.topology(O.registry(name))
    assert top.genus == genus
    if vertices is not None:
        assert top.vertex_count == vertices


def test_torus_topology():
    top = O.topology(Origami((0,), (0,)))
    assert (top.vertex_count, top.euler_characteristic, top.genus) == (1, 0, 1)


def test_cylinder_examples():
    fig1 = O.registry("fig1")
    (v,) = O.cylinders(fig1, VERTICAL)
    assert v.circumference == 4
    sprime = O.registry("sprime")
    assert sorted(c.circumference for c in O.cylinders(sprime, HORIZONTAL)) == [1, 2]
    assert [c.circumference for c in O.cylinders(sprime, VERTICAL)] == [3]


def test_core_words():
    fig1 = O.registry("fig1")
    (v,) = O.cylinders(fig1, VERTICAL)
    assert str(O.core_word(fig1, v, 1)) == "a1 a3 a2 a4"
    sprime = O.registry("sprime")
    (v,) = O.cylinders(sprime, VERTICAL)
    assert str(O.core_word(sprime, v, 1)) == "a1 a2 a3"
    h1 = O.cylinders(sprime, HORIZONTAL)[0]
    assert str(O.core_word(sprime, h1, 1)) == "b1"
    with pytest.raises(BasepointOutsideCylinder):
        O.core_word(sprime, h1, 2)


def test_square_relators():
    sprime = O.registry("sprime")
    assert str(O.square_relator(sprime, 1)) == "a1 b2 a1^-1 b1^-1"
    torus = Origami((0,), (0,))
    assert [str(r) for r in O.square_relators(torus).relators] == ["a1 b1 a1^-1 b1^-1"]
    fig1 = O.square_relators(O.registry("fig1"))
    assert len(fig1.relators) == 4
    assert str(fig1.relators[0]) == "a1 b3 a2^-1 b1^-1"
    assert fig1.generators == ("a1", "a2", "a3", "a4", "b1", "b2", "b3", "b4")


@pytest.mark.parametrize(
    "name,horizontal,vertical",
    [
        ("fig1", [[1, 4], [0, 1]], [[1, 0], [4, 1]]),
        ("sprime", [[1, 2], [0, 1]], [[1, 0], [3, 1]]),
        ("l22", [[1, 2], [0, 1]], [[1, 0], [2, 1]]),
    ],
)
def test_multitwist_matrices(name, horizontal, vertical):
    o = O.registry(name)
    assert O.to_matrix(O.multitwist_matrix(o, HORIZONTAL)).tolist() == horizontal
    assert O.to_matrix(O.multitwist_matrix(o, VERTICAL)).tolist() == vertical


def test_generator_word_parsing_and_reduction():
    w = GeneratorWord.parse("a1 b2^-1 B1")
    assert str(w) == "a1 b2^-1 b1^-1"
    assert str(GeneratorWord.parse("a1 a1^-1 b2")) == "b2"
    assert str(GeneratorWord.parse("")) == "1"
    assert str(w * w.inverse()) == "1"
    with pytest.raises(ParseError):
        GeneratorWord.parse("a1 x2")


def test_presentation_rejects_unknown_generator():
    with pytest.raises(ValueError):
        O.SurfacePresentation(("a1",), (GeneratorWord.parse("a2"),), "bad")


@given(origamis())
def test_euler_relation(o):
    top = O.topology(o)
    assert top.vertex_count - 2 * o.d + o.d == 2 - 2 * top.genus
    assert top.euler_characteristic % 2 == 0


@given(origamis())
def test_cylinders_partition(o):
    for direction in O.DIRECTIONS:
        squares = sorted(i for c in O.cylinders(o, direction) for i in c.cycle)
        assert squares == list(range(1, o.d + 1))


@given(origamis(), st.data())
def test_core_words_rotate(o, data):
    cyl = data.draw(st.sampled_from(O.cylinders(o, VERTICAL) + O.cylinders(o, HORIZONTAL)))
    p, q = data.draw(st.sampled_from(cyl.cycle)), data.draw(st.sampled_from(cyl.cycle))
    u = list(O.core_word(o, cyl, p))
    v = list(O.core_word(o, cyl, q))
    assert len(u) == cyl.circumference
    assert any(u[k:] + u[:k] == v for k in range(len(u)))


@given(origamis())
def test_multitwist_exponents(o):
    for direction in O.DIRECTIONS:
        mt = O.multitwist_matrix(o, direction)
        circ = [c.circumference for c in O.cylinders(o, direction)]
        assert {e * c for e, c in zip(mt.exponents, circ)} == {mt.shear}
        assert mt.shear == math.lcm(*circ)
        assert round(np.linalg.det(O.to_matrix(mt))) == 1

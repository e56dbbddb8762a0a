"""Dehn twists and Goldman flows on origami representations.

For a vertical cylinder with cycle ``i -> sigma'(i) -> ...`` the based core
holonomy is ``V_i = A_i A_sigma'(i) ... ``.  The positive twist replaces
``B_i`` by ``V_i^n B_i`` for every square of the cylinder and leaves all
other generators alone.  Horizontal cylinders act the same way with the
roles of ``A`` and ``B`` exchanged: ``A_i -> H_i^n A_i`` where
``H_i = B_i B_sigma(i) ...``.  Because ``V_sigma'(i) = A_i^-1 V_i A_i`` the
square relations survive verbatim.

The Goldman flow replaces the power ``V_i^n`` by the one-parameter subgroup
element ``xi_{V_i}(t)``; at ``t = theta(V_i)`` it agrees with the unit twist.

Twist words are written ``"V1^2 H1^-1 V2"``: ``V``/``H`` select the
direction, the integer is the one-based cylinder number in canonical order
(see :func:`squaretwist.origami.cylinders`) and ``^k`` an optional nonzero
exponent.  Generators act from left to right, so the leftmost is applied
first.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from . import _holonomy as H
from .errors import CentralHolonomy, ParseError
from .origami import HORIZONTAL, VERTICAL, Cylinder, cylinder, cylinders, square_relators
from .repvar import rng_for

_LETTER = {"H": HORIZONTAL, "V": VERTICAL}
_TOKEN = re.compile(r"\s*([HVhv])(\d+)(?:\^([+-]?\d+))?")


@dataclass(frozen=True)
class TwistGenerator:
    direction: str
    cylinder: int  # one-based, canonical order
    exponent: int = 1

    def __post_init__(self):
        if self.direction not in (HORIZONTAL, VERTICAL):
            raise ValueError(f"unknown direction {self.direction!r}")
        if self.cylinder < 1:
            raise ValueError("cylinder numbers are one-based")

    def inverse(self):
        return TwistGenerator(self.direction, self.cylinder, -self.exponent)

    def __str__(self):
        s = ("H" if self.direction == HORIZONTAL else "V") + str(self.cylinder)
        return s if self.exponent == 1 else f"{s}^{self.exponent}"


@dataclass(frozen=True)
class TwistWord:
    generators: tuple = ()

    @classmethod
    def parse(cls, text):
        gens = []
        pos = 0
        while pos < len(text):
            if text[pos:].strip() == "":
                break
            m = _TOKEN.match(text, pos)
            if m is None:
                skip = len(text[pos:]) - len(text[pos:].lstrip())
                raise ParseError("expected H<n> or V<n>, optionally ^<k>", text, pos + skip)
            exp = int(m.group(3)) if m.group(3) is not None else 1
            if exp != 0:
                gens.append(TwistGenerator(_LETTER[m.group(1).upper()], int(m.group(2)), exp))
            pos = m.end()
        return cls(tuple(gens))

    def inverse(self):
        """Formal inverse: reversed order, negated exponents."""
        return TwistWord(tuple(g.inverse() for g in reversed(self.generators)))

    def __mul__(self, other):
        return TwistWord(self.generators + other.generators)

    def __len__(self):
        return len(self.generators)

    def __iter__(self):
        return iter(self.generators)

    def __str__(self):
        return " ".join(str(g) for g in self.generators)


def all_cylinders(o):
    """Every cylinder as (direction, number) pairs, horizontal first."""
    return [(direction, k + 1) for direction in (HORIZONTAL, VERTICAL) for k in range(len(cylinders(o, direction)))]


def alphabet(o, max_exponent=1):
    """All generators with nonzero exponent of size at most ``max_exponent``."""
    exps = [e for e in range(-max_exponent, max_exponent + 1) if e != 0]
    return [TwistGenerator(d, c, e) for d, c in all_cylinders(o) for e in exps]


def random_choices(rng, o, length, max_exponent=1):
    """Indices into :func:`alphabet` for a random word of ``length`` letters."""
    n_exp = 2 * max_exponent
    picks = rng.integers(len(all_cylinders(o)), size=length)
    signs = rng.integers(n_exp, size=length)
    return picks * n_exp + signs


def random_word(rng, o, length, max_exponent=1):
    """Uniform cylinder and uniform nonzero exponent in [-max_exponent, max_exponent] per letter."""
    letters = alphabet(o, max_exponent)
    choices = random_choices(rng, o, length, max_exponent)
    return TwistWord(tuple(letters[c] for c in choices))


def _resolve(o, cyl):
    if isinstance(cyl, Cylinder):
        return cyl
    if isinstance(cyl, TwistGenerator):
        return cylinder(o, cyl.direction, cyl.cylinder)
    direction, number = cyl
    return cylinder(o, direction, number)


def _check(rep, o):
    expected = square_relators(o).generators
    if rep.presentation.generators != expected:
        raise ValueError("representation does not belong to this origami")


# ---------------------------------------------------------------------------
# array layer: x has shape (..., 2d, 4)
# ---------------------------------------------------------------------------

def twist_arrays(x, o, g):
    cyl = _resolve(o, g)
    return H.twist_arrays(x, o.d, cyl.direction, cyl.cycle, g.exponent)


def flow_arrays(x, o, cyl, t):
    """Goldman flow on a batch; raises CentralHolonomy if any holonomy is central."""
    cyl = _resolve(o, cyl)
    hol = H.core_holonomies(x, o.d, cyl.direction, cyl.cycle)
    if np.any(H.central_mask(hol)):
        raise CentralHolonomy(f"core holonomy of {cyl.direction} cylinder {cyl.cycle} is +-1")
    moving = H.moving_rows(o.d, cyl.direction, cyl.cycle)
    return H.apply_left(x, moving, H.flow_factors(hol, t))


def word_arrays(x, o, word):
    for g in word:
        x = twist_arrays(x, o, g)
    return x


def orbit_step_arrays(x, o, generators, choice):
    """Apply ``generators[choice[k]]`` to row ``k`` of the batch ``x`` (n, 2d, 4)."""
    out = x.copy()
    for k, g in enumerate(generators):
        rows = np.nonzero(choice == k)[0]
        if len(rows):
            out[rows] = twist_arrays(x[rows], o, g)
    return out


def orbit_arrays(x, o, seeds, steps, max_exponent=1):
    """Random twist orbits of a batch, one word per row drawn from ``seeds``.

    Yields ``(step, letters, x)`` after every step, where ``letters`` holds
    the alphabet index applied to each row.  Row ``k`` follows the same word
    as ``random_word(rng_for(seeds[k]), o, steps, max_exponent)``.
    """
    letters = alphabet(o, max_exponent)
    choices = np.zeros((len(seeds), steps), dtype=int)
    for k, s in enumerate(seeds):
        choices[k] = random_choices(rng_for(s), o, steps, max_exponent)
    for t in range(steps):
        x = orbit_step_arrays(x, o, letters, choices[:, t])
        yield t + 1, choices[:, t], x


# ---------------------------------------------------------------------------
# representation layer
# ---------------------------------------------------------------------------

def twist(rep, o, g):
    """Twist ``rep`` along the cylinder of ``g`` with exponent ``g.exponent``."""
    _check(rep, o)
    return rep.with_values(twist_arrays(rep.values, o, g))


def goldman_flow(rep, o, cyl, t):
    """Flow ``rep`` for time ``t`` along ``cyl``.

    ``cyl`` is a :class:`Cylinder`, a :class:`TwistGenerator` or a
    ``(direction, number)`` pair.  Raises :class:`CentralHolonomy` when the
    core holonomy is ``+-1``, where the flow is undefined.
    """
    _check(rep, o)
    return rep.with_values(flow_arrays(rep.values, o, cyl, t))


def apply_word(rep, o, word):
    if isinstance(word, str):
        word = TwistWord.parse(word)
    _check(rep, o)
    return rep.with_values(word_arrays(rep.values, o, word))


def fiber_move(rep, o, cyl, t):
    """Move along the circle fiber of the projection that forgets the
    generators crossing ``cyl``.

    Same map as :func:`goldman_flow`; only the crossing generators
    (``b``'s of a vertical cylinder, ``a``'s of a horizontal one) change.
    """
    return goldman_flow(rep, o, cyl, t)


def crossing_generators(o, cyl):
    """Names of the generators moved by twists along ``cyl``."""
    cyl = _resolve(o, cyl)
    names = square_relators(o).generators
    return tuple(names[r] for r in H.moving_rows(o.d, cyl.direction, cyl.cycle))

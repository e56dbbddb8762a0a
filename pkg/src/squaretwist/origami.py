"""Square-tiled surfaces encoded by a pair of permutations.

Square ``i`` has left edge ``a_i`` and bottom edge ``b_i``; ``sigma(i)`` is
the square to its right and ``sigma_prime(i)`` the square above.  Square
indices are one-based in every public surface (names, cycle notation,
cylinder cycles) and zero-based only inside permutation tuples.

Cycle notation grammar accepted by :func:`parse_cycles`::

    perm   := cycle*            (empty text is the identity)
    cycle  := "(" int (sep int)* ")"
    sep    := whitespace | "," (surrounded by optional whitespace)

Integers are one-based; fixed points may be omitted.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import BasepointOutsideCylinder, NotTransitive, ParseError, UnknownName

HORIZONTAL = "horizontal"
VERTICAL = "vertical"
DIRECTIONS = (HORIZONTAL, VERTICAL)


def _check_direction(direction):
    d = direction.lower()
    if d in ("h", HORIZONTAL):
        return HORIZONTAL
    if d in ("v", VERTICAL):
        return VERTICAL
    raise ValueError(f"unknown direction {direction!r}")


# ---------------------------------------------------------------------------
# permutations
# ---------------------------------------------------------------------------

_TOKEN = re.compile(r"\s*(\(|\)|,|\d+)")


def parse_cycles(text, d=None):
    """Parse one-indexed cycle notation into a zero-based image tuple.

    ``d`` defaults to the largest integer that appears.

    >>> parse_cycles("(1 3)(2)")
    (2, 1, 0)
    >>> parse_cycles("(1,2,3,4)")
    (1, 2, 3, 0)
    """
    cycles = []
    current = None
    pos = 0
    text = text or ""
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if m is None:
            bad = pos + len(text[pos:]) - len(text[pos:].lstrip())
            raise ParseError(f"unexpected character {text[bad]!r}", text, bad)
        tok = m.group(1)
        tok_pos = m.start(1)
        pos = m.end()
        if tok == "(":
            if current is not None:
                raise ParseError("nested parenthesis", text, tok_pos)
            current = []
        elif tok == ")":
            if current is None:
                raise ParseError("unbalanced ')'", text, tok_pos)
            if not current:
                raise ParseError("empty cycle", text, tok_pos)
            cycles.append(current)
            current = None
        elif tok == ",":
            if current is None or not current:
                raise ParseError("misplaced ','", text, tok_pos)
        else:
            if current is None:
                raise ParseError("integer outside a cycle", text, tok_pos)
            value = int(tok)
            if value < 1:
                raise ParseError("indices are one-based", text, tok_pos)
            current.append(value)
    if current is not None:
        raise ParseError("unterminated cycle", text, len(text))

    seen = set()
    for cyc in cycles:
        for v in cyc:
            if v in seen:
                raise ParseError(f"index {v} appears twice", text)
            seen.add(v)
    n = max(seen, default=0)
    if d is None:
        d = max(n, 1)
    elif n > d:
        raise ParseError(f"index {n} exceeds degree {d}", text)

    images = list(range(d))
    for cyc in cycles:
        for k, v in enumerate(cyc):
            images[v - 1] = cyc[(k + 1) % len(cyc)] - 1
    return tuple(images)


def cycles_of(perm):
    """Cycles of a zero-based permutation, one-based, canonical order.

    Each cycle starts at its smallest element; cycles are sorted by it.
    """
    seen = [False] * len(perm)
    out = []
    for start in range(len(perm)):
        if seen[start]:
            continue
        cyc = []
        i = start
        while not seen[i]:
            seen[i] = True
            cyc.append(i + 1)
            i = perm[i]
        out.append(tuple(cyc))
    return out


def format_cycles(perm, fixed_points=True):
    parts = [
        "(" + " ".join(str(v) for v in cyc) + ")"
        for cyc in cycles_of(perm)
        if fixed_points or len(cyc) > 1
    ]
    return "".join(parts) or "()"


def compose(p, q):
    """p after q: i -> p[q[i]]."""
    return tuple(p[q[i]] for i in range(len(q)))


def invert(p):
    inv = [0] * len(p)
    for i, j in enumerate(p):
        inv[j] = i
    return tuple(inv)


# ---------------------------------------------------------------------------
# words and presentations
# ---------------------------------------------------------------------------

class Letter(NamedTuple):
    kind: str  # "a", "b" (or "c" for hand-coded presentations)
    index: int  # one-based
    exp: int  # +1 or -1

    @property
    def generator(self):
        return f"{self.kind}{self.index}"

    def inverse(self):
        return Letter(self.kind, self.index, -self.exp)

    def __str__(self):
        return self.generator + ("" if self.exp == 1 else "^-1")


def _reduce(letters):
    out = []
    for letter in letters:
        if out and out[-1].kind == letter.kind and out[-1].index == letter.index and out[-1].exp == -letter.exp:
            out.pop()
        else:
            out.append(letter)
    return tuple(out)


@dataclass(frozen=True)
class GeneratorWord:
    """Freely reduced word in the edge generators."""

    letters: tuple = ()

    def __post_init__(self):
        letters = tuple(Letter(*l) for l in self.letters)
        for l in letters:
            if l.exp not in (1, -1):
                raise ValueError(f"exponent must be +-1, got {l.exp}")
        object.__setattr__(self, "letters", _reduce(letters))

    @classmethod
    def parse(cls, text):
        """Parse words like ``a1 b2 a1^-1`` or ``a1*b2*A1`` (capital = inverse)."""
        letters = []
        for m in re.finditer(r"([abcABC])(\d+)(\^-1)?|\S", text.replace("*", " ").replace(".", " ")):
            if m.group(1) is None:
                raise ParseError(f"unexpected {m.group(0)!r} in word", text, m.start())
            kind = m.group(1)
            exp = -1 if kind.isupper() else 1
            if m.group(3):
                exp = -exp
            letters.append(Letter(kind.lower(), int(m.group(2)), exp))
        return cls(tuple(letters))

    def inverse(self):
        return GeneratorWord(tuple(l.inverse() for l in reversed(self.letters)))

    def __mul__(self, other):
        return GeneratorWord(self.letters + other.letters)

    def __len__(self):
        return len(self.letters)

    def __iter__(self):
        return iter(self.letters)

    def __str__(self):
        return " ".join(str(l) for l in self.letters) or "1"

    def generators(self):
        return {l.generator for l in self.letters}


@dataclass(frozen=True)
class SurfacePresentation:
    generators: tuple
    relators: tuple
    tag: str = "origami"

    def __post_init__(self):
        gens = set(self.generators)
        for r in self.relators:
            missing = r.generators() - gens
            if missing:
                raise ValueError(f"relator {r} uses unknown generators {sorted(missing)}")

    def index(self, name):
        return self.generators.index(name)


# ---------------------------------------------------------------------------
# origamis
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Cylinder:
    direction: str
    cycle: tuple  # one-based square indices

    @property
    def circumference(self):
        return len(self.cycle)


@dataclass(frozen=True)
class Topology:
    vertex_count: int
    euler_characteristic: int
    genus: int


@dataclass(frozen=True)
class Origami:
    sigma: tuple
    sigma_prime: tuple
    name: str = field(default="", compare=False)

    def __post_init__(self):
        s, sp = tuple(self.sigma), tuple(self.sigma_prime)
        if len(s) != len(sp):
            raise ValueError("sigma and sigma_prime act on different sets")
        for perm in (s, sp):
            if sorted(perm) != list(range(len(perm))):
                raise ValueError(f"{perm} is not a permutation of 0..{len(perm) - 1}")
        object.__setattr__(self, "sigma", s)
        object.__setattr__(self, "sigma_prime", sp)

    @classmethod
    def from_cycles(cls, sigma, sigma_prime, d=None, name=""):
        if d is None:
            d = max(len(parse_cycles(sigma)), len(parse_cycles(sigma_prime)))
        return cls(parse_cycles(sigma, d), parse_cycles(sigma_prime, d), name=name)

    @property
    def d(self):
        return len(self.sigma)

    def __str__(self):
        return f"sigma={format_cycles(self.sigma)} sigma'={format_cycles(self.sigma_prime)}"

    def right(self, i):
        """One-based right neighbour of square ``i``."""
        return self.sigma[i - 1] + 1

    def top(self, i):
        return self.sigma_prime[i - 1] + 1


def orbits(o):
    """Orbit partition of <sigma, sigma'> by flood fill (one-based)."""
    seen = [False] * o.d
    out = []
    for start in range(o.d):
        if seen[start]:
            continue
        stack = [start]
        seen[start] = True
        orb = []
        while stack:
            i = stack.pop()
            orb.append(i + 1)
            for j in (o.sigma[i], o.sigma_prime[i]):
                if not seen[j]:
                    seen[j] = True
                    stack.append(j)
        out.append(tuple(sorted(orb)))
    return out


def validate(o):
    orb = orbits(o)
    if len(orb) != 1:
        raise NotTransitive(orb)
    return o


def corner_permutation(o):
    """c = sigma'^-1 . sigma^-1 . sigma' . sigma; its cycles are the vertices."""
    s, sp = o.sigma, o.sigma_prime
    return compose(invert(sp), compose(invert(s), compose(sp, s)))


def topology(o):
    v = len(cycles_of(corner_permutation(o)))
    chi = v - 2 * o.d + o.d
    return Topology(vertex_count=v, euler_characteristic=chi, genus=(2 - chi) // 2)


def cylinders(o, direction):
    direction = _check_direction(direction)
    perm = o.sigma if direction == HORIZONTAL else o.sigma_prime
    return [Cylinder(direction, cyc) for cyc in cycles_of(perm)]


def cylinder(o, direction, number):
    """Cylinder ``number`` (one-based, canonical order) in ``direction``."""
    cyls = cylinders(o, direction)
    if not 1 <= number <= len(cyls):
        raise ValueError(f"{direction} cylinder {number} out of range 1..{len(cyls)}")
    return cyls[number - 1]


def cycle_from(cyl, basepoint):
    if basepoint not in cyl.cycle:
        raise BasepointOutsideCylinder(f"square {basepoint} is not in {cyl.direction} cylinder {cyl.cycle}")
    k = cyl.cycle.index(basepoint)
    return cyl.cycle[k:] + cyl.cycle[:k]


def core_word(o, cyl, basepoint):
    """Core curve of ``cyl`` based at square ``basepoint``.

    Horizontal: b_i b_sigma(i) ...; vertical: a_i a_sigma'(i) ...
    """
    kind = "b" if cyl.direction == HORIZONTAL else "a"
    return GeneratorWord(tuple(Letter(kind, i, 1) for i in cycle_from(cyl, basepoint)))


def square_relator(o, i):
    """a_i b_sigma'(i) a_sigma(i)^-1 b_i^-1 for the one-based square ``i``."""
    return GeneratorWord(
        (
            Letter("a", i, 1),
            Letter("b", o.top(i), 1),
            Letter("a", o.right(i), -1),
            Letter("b", i, -1),
        )
    )


def generator_names(o):
    return tuple(f"a{i}" for i in range(1, o.d + 1)) + tuple(f"b{i}" for i in range(1, o.d + 1))


def square_relators(o):
    return SurfacePresentation(
        generators=generator_names(o),
        relators=tuple(square_relator(o, i) for i in range(1, o.d + 1)),
        tag=f"origami:{o.name}" if o.name else "origami",
    )


@dataclass(frozen=True)
class Multitwist:
    direction: str
    matrix: tuple  # ((a, b), (c, d)) integers
    exponents: tuple  # per cylinder, canonical order
    shear: int


def multitwist_matrix(o, direction):
    """Parabolic of the affine multitwist in ``direction``.

    With c the lcm of the circumferences, cylinder j is twisted c / circ(j)
    times; the linear part is [[1, c], [0, 1]] (horizontal) or
    [[1, 0], [c, 1]] (vertical).
    """
    direction = _check_direction(direction)
    cyls = cylinders(o, direction)
    c = math.lcm(*(cyl.circumference for cyl in cyls))
    exps = tuple(c // cyl.circumference for cyl in cyls)
    if direction == HORIZONTAL:
        mat = ((1, c), (0, 1))
    else:
        mat = ((1, 0), (c, 1))
    return Multitwist(direction, mat, exps, c)


# ---------------------------------------------------------------------------
# named examples
# ---------------------------------------------------------------------------

_ORIGAMIS = {
    # two filling curves on a genus-2 surface
    "fig1": ("(1 2 3 4)", "(1 3 2 4)", 4),
    # three squares, one vertex
    "sprime": ("(1)(2 3)", "(1 2 3)", 3),
    # L-shaped, two cylinders in each direction (labels reconstructed)
    "l22": ("(1 2)(3)", "(1 3)(2)", 3),
}


def n4_presentation():
    """Hand-coded genus-4 non-orientable example.

    a1 b1 = b2 a2,  c2^-1 a1 c1 = a2,  c2^-1 b1 c1 = b2.
    """
    w = GeneratorWord.parse
    return SurfacePresentation(
        generators=("a1", "a2", "b1", "b2", "c1", "c2"),
        relators=(
            w("a1 b1 a2^-1 b2^-1"),
            w("c2^-1 a1 c1 a2^-1"),
            w("c2^-1 b1 c1 b2^-1"),
        ),
        tag="n4",
    )


NAMES = tuple(_ORIGAMIS) + ("n4",)


def registry(name):
    key = name.lower().replace("'", "prime").replace("_", "")
    if key == "n4":
        return n4_presentation()
    if key not in _ORIGAMIS:
        raise UnknownName(f"unknown surface {name!r}; known: {', '.join(NAMES)}")
    s, sp, d = _ORIGAMIS[key]
    return Origami.from_cycles(s, sp, d, name=key)


def presentation_of(surface):
    """SurfacePresentation for an Origami or pass a presentation through."""
    if isinstance(surface, Origami):
        return square_relators(surface)
    return surface


def to_matrix(mt):
    return np.array(mt.matrix, dtype=int)

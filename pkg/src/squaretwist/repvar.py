"""Points of the SU(2) representation variety and samplers for it.

A :class:`Representation` assigns a unit quaternion to every generator of a
:class:`~squaretwist.origami.SurfacePresentation`.  For an origami the
generators are ``a1..ad, b1..bd`` and the relators are the square relations
``A_i B_sigma'(i) = B_i A_sigma(i)``.

Three samplers are provided:

* :func:`sample_descent` works on any presentation.  It starts from Haar
  random generators and runs projected gradient descent on
  ``F = sum ||rho(r) - 1||^2`` over the product of unit spheres, with
  Barzilai-Borwein trial steps and step halving.
* :func:`sample_propagate` builds origami representations constructively:
  Haar ``A``'s, one trace repair per vertical cylinder, then ``B``'s read off
  a circle of conjugating elements and propagated along the cylinder.
* :func:`sample_n4` builds representations of the hand-coded N4 surface with
  prescribed ``(A1, A2)``.

The raw output laws of the first two samplers differ.  Both therefore finish
with ``mix_rounds`` rounds of circle moves along every cylinder at uniform
random times.  These moves preserve the natural measure on the variety, and
after a few rounds the two samplers agree in law; ``mix_rounds=0`` gives the
raw constructions.

Serialization format (:func:`dumps` / :func:`loads`): one line per
generator, ``name w x y z`` with each coordinate written with 17 significant
digits, preceded by a ``# tag`` line.  Reading it back is exact.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _holonomy as H
from . import _kernels
from .errors import (
    DegenerateCycle,
    DegenerateSphere,
    NoConvergence,
    UnassignedGenerator,
)
from .origami import (
    HORIZONTAL,
    VERTICAL,
    GeneratorWord,
    Origami,
    SurfacePresentation,
    cylinders,
    n4_presentation,
    presentation_of,
)
from .quat import (
    Isometry4,
    UnitQuaternion,
    _arr,
    haar_array,
    qconj,
    qdot,
    qexp_axis,
    qmul,
    qnormalize,
    qtrace,
    so4_factor,
)

ONE = H.ONE
DEFAULT_MIX_ROUNDS = 4


def rng_for(seed):
    """Generator for ``seed``: an int, a sequence such as (master, task), or a Generator."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def derive_seed(master, index):
    """Per-task seed derived from a master seed and a task index."""
    return (int(master), int(index))


# ---------------------------------------------------------------------------
# representations
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Representation:
    presentation: SurfacePresentation
    values: np.ndarray  # (n_generators, 4)

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != (len(self.presentation.generators), 4):
            raise ValueError(
                f"expected values of shape ({len(self.presentation.generators)}, 4), got {v.shape}"
            )
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def tag(self):
        return self.presentation.tag

    def __getitem__(self, name):
        try:
            k = self.presentation.index(name)
        except ValueError:
            raise UnassignedGenerator(f"generator {name!r} not assigned") from None
        return UnitQuaternion.from_array(self.values[k], normalize=False)

    def array(self, name):
        try:
            return self.values[self.presentation.index(name)]
        except ValueError:
            raise UnassignedGenerator(f"generator {name!r} not assigned") from None

    def with_values(self, values):
        return Representation(self.presentation, values)

    def as_dict(self):
        return {g: self[g] for g in self.presentation.generators}

    @classmethod
    def from_dict(cls, presentation, assignment):
        missing = [g for g in presentation.generators if g not in assignment]
        if missing:
            raise UnassignedGenerator(f"missing generators {missing}")
        values = np.array([_arr(assignment[g]) for g in presentation.generators])
        return cls(presentation, values)

    @classmethod
    def constant(cls, presentation, q):
        values = np.tile(_arr(q), (len(presentation.generators), 1))
        return cls(presentation, values)

    def conjugate(self, p):
        """The representation g -> p rho(g) p^-1."""
        p = _arr(p)
        return self.with_values(qmul(qmul(p, self.values), qconj(p)))


def dumps(rep):
    lines = [f"# {rep.tag}"]
    for name, row in zip(rep.presentation.generators, rep.values):
        lines.append(name + " " + " ".join(f"{c:.17g}" for c in row))
    return "\n".join(lines) + "\n"


def loads(text, presentation):
    assignment = {}
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        name, *coords = line.split()
        if len(coords) != 4:
            raise ValueError(f"bad record {line!r}")
        assignment[name] = np.array([float(c) for c in coords])
    missing = [g for g in presentation.generators if g not in assignment]
    if missing:
        raise UnassignedGenerator(f"missing generators {missing}")
    return Representation(presentation, np.array([assignment[g] for g in presentation.generators]))


def evaluate_word(rep, word):
    if isinstance(word, str):
        word = GeneratorWord.parse(word)
    try:
        compiled = H.compile_word(rep.presentation, word)
    except ValueError as exc:
        raise UnassignedGenerator(str(exc)) from None
    return UnitQuaternion.from_array(H.evaluate_compiled(rep.values, compiled))


@dataclass(frozen=True)
class Residual:
    per_relator: np.ndarray
    max: float

    def __float__(self):
        return self.max


def relator_deviation(presentation, x):
    """||rho(r) - 1|| for every relator, shape (..., n_relators)."""
    out = [
        np.linalg.norm(H.evaluate_compiled(x, H.compile_word(presentation, r)) - ONE, axis=-1)
        for r in presentation.relators
    ]
    if not out:
        return np.zeros(x.shape[:-2] + (0,))
    return np.stack(out, axis=-1)


def residual(rep):
    dev = relator_deviation(rep.presentation, rep.values)
    return Residual(per_relator=dev, max=float(dev.max(initial=0.0)))


def probe(rep, words):
    """Traces of the images of ``words``."""
    return np.array([evaluate_word(rep, w).trace() for w in words])


def relator_jacobian_rank(rep, tol=1e-8):
    """Numerical rank of the relator map's derivative at ``rep``.

    Columns are tangent directions of the unit spheres, rows the imaginary
    parts of the relator values; ``3 * n_gen - rank`` is the local dimension
    of the solution set at smooth points.
    """
    x = rep.values
    pres = rep.presentation
    eps = 1e-6
    cols = []
    for g in range(len(pres.generators)):
        for axis in np.eye(3):
            step = qexp_axis(axis, eps)
            xp = x.copy()
            xm = x.copy()
            xp[g] = qmul(step, x[g])
            xm[g] = qmul(qconj(step), x[g])
            fp = _relator_values(pres, xp)[..., 1:]
            fm = _relator_values(pres, xm)[..., 1:]
            cols.append(((fp - fm) / (2 * eps)).ravel())
    jac = np.array(cols).T
    s = np.linalg.svd(jac, compute_uv=False)
    return int(np.sum(s > tol * max(1.0, s[0])))


def _relator_values(pres, x):
    return np.stack([H.evaluate_compiled(x, H.compile_word(pres, r)) for r in pres.relators])


# ---------------------------------------------------------------------------
# shared sampling helpers
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SampleBatch:
    """Outcome of a batch of sampler runs, one row per seed."""

    presentation: SurfacePresentation
    values: np.ndarray  # (n, n_gen, 4)
    residuals: np.ndarray  # (n,)
    ok: np.ndarray  # (n,) bool

    def __len__(self):
        return len(self.values)

    def representation(self, k):
        return Representation(self.presentation, self.values[k])

    def representations(self, only_ok=True):
        return [self.representation(k) for k in range(len(self)) if self.ok[k] or not only_ok]


def _mix_times(rng, rounds, n_cyl):
    return rng.uniform(0.0, 2.0 * np.pi, size=(rounds, n_cyl))


def _mix(x, origami, times):
    """Circle moves along every cylinder; ``times`` has shape (batch, rounds, n_cyl).

    Rows whose core holonomy is central are left unmoved by that step.
    """
    cyls = cylinders(origami, HORIZONTAL) + cylinders(origami, VERTICAL)
    d = origami.d
    for r in range(times.shape[1]):
        for c, cyl in enumerate(cyls):
            hol = H.core_holonomies(x, d, cyl.direction, cyl.cycle)
            central = np.any(H.central_mask(hol), axis=-1)
            moved = H.apply_left(
                x,
                H.moving_rows(d, cyl.direction, cyl.cycle),
                H.flow_factors(hol, times[:, r, c]),
            )
            x = np.where(central[:, None, None], x, moved)
    return x


def _n_cylinders(origami):
    return len(cylinders(origami, HORIZONTAL)) + len(cylinders(origami, VERTICAL))


# ---------------------------------------------------------------------------
# projected gradient descent
# ---------------------------------------------------------------------------

def _compile_relators(presentation):
    rels = [H.compile_word(presentation, r) for r in presentation.relators]
    width = max((len(r) for r in rels), default=1)
    gens = np.zeros((len(rels), width), dtype=np.int64)
    exps = np.zeros((len(rels), width), dtype=np.int64)
    lens = np.array([len(r) for r in rels], dtype=np.int64)
    for k, rel in enumerate(rels):
        for m, (g, e) in enumerate(rel):
            gens[k, m] = g
            exps[k, m] = e
    return gens, exps, lens


def _descend(presentation, x, tol, max_iter):
    gens, exps, lens = _compile_relators(presentation)
    res = np.empty(len(x))
    for k in range(len(x)):
        res[k] = _kernels.descend_one(x[k], gens, exps, lens, tol, max_iter)
    return x, res


def descent_batch(surface, seeds, tol=1e-12, max_iter=5000, mix_rounds=DEFAULT_MIX_ROUNDS):
    """Run :func:`sample_descent` for every seed at once.

    Each row depends only on its own seed: the batch is the stack of the
    single-seed results.
    """
    pres = presentation_of(surface)
    origami = surface if isinstance(surface, Origami) else None
    n_gen = len(pres.generators)
    rngs = [rng_for(s) for s in seeds]
    x = np.stack([haar_array(r, n_gen) for r in rngs]) if rngs else np.zeros((0, n_gen, 4))
    x, res = _descend(pres, x, tol, max_iter)
    if origami is not None and mix_rounds > 0 and len(x):
        times = np.stack([_mix_times(r, mix_rounds, _n_cylinders(origami)) for r in rngs])
        x = _mix(x, origami, times)
        res = relator_deviation(pres, x).max(axis=-1, initial=0.0)
    ok = res < 10 * tol
    return SampleBatch(pres, x, res, ok)


def sample_descent(surface, seed, tol=1e-12, max_iter=5000, mix_rounds=DEFAULT_MIX_ROUNDS):
    """A point of the variety by projected gradient descent from a Haar start.

    ``surface`` is an :class:`Origami` or any :class:`SurfacePresentation`.
    Raises :class:`NoConvergence` if the residual is not below ``10 * tol``
    after ``max_iter`` iterations.
    """
    batch = descent_batch(surface, [seed], tol=tol, max_iter=max_iter, mix_rounds=mix_rounds)
    if not batch.ok[0]:
        raise NoConvergence(
            f"residual {batch.residuals[0]:.3e} after {max_iter} iterations", batch.residuals[0]
        )
    return batch.representation(0)


# ---------------------------------------------------------------------------
# cycle propagation
# ---------------------------------------------------------------------------

def _cycle_words(origami):
    """For each vertical cylinder: zero-based (cycle, sigma-images)."""
    out = []
    for cyl in cylinders(origami, VERTICAL):
        cyc = [i - 1 for i in cyl.cycle]
        out.append((cyc, [origami.sigma[i] for i in cyc]))
    return out


def _chain(a, idx):
    acc = np.broadcast_to(ONE, a.shape[:-2] + (4,)).copy()
    for i in idx:
        acc = qmul(acc, a[..., i, :])
    return acc


def _trace_gap(a, cycles):
    """tr(L) - tr(R) for each vertical cylinder, shape (..., m)."""
    return np.stack([qtrace(_chain(a, lw)) - qtrace(_chain(a, rw)) for lw, rw in cycles], axis=-1)


def _trace_gap_gradient(a, lw, rw, j):
    """Ambient gradient of tr(L) - tr(R) with respect to A_j (linear in A_j)."""
    grad = np.zeros(a.shape[:-2] + (4,))
    for word, sign in ((lw, 1.0), (rw, -1.0)):
        if j in word:
            k = word.index(j)
            p = _chain(a, word[:k])
            s = _chain(a, word[k + 1 :])
            # tr(P X S) = 2 <X, conj(S P)>
            grad = grad + sign * 2.0 * qconj(qmul(s, p))
    return grad


def _tangent(g, x):
    return g - qdot(g, x)[..., None] * x


def _designate(a, cycles, min_grad=1e-6):
    """Repair index per cycle for one sample (None when the gap vanishes identically)."""
    used = set()
    chosen = []
    for lw, rw in cycles:
        pick = None
        for j in sorted(lw):
            if j in used:
                continue
            g = _tangent(_trace_gap_gradient(a, lw, rw, j), a[j])
            if np.linalg.norm(g) >= min_grad:
                pick = j
                break
        if pick is not None:
            used.add(pick)
        chosen.append(pick)
    return tuple(chosen)


def _repair(a, cycles, designated, gap_tol=1e-14, max_newton=50):
    """Newton iteration on the designated A's until every trace gap vanishes.

    ``a`` has shape (batch, d, 4) and all rows share ``designated``.  Each gap
    is linear in each single A, so the minimum-norm Newton step followed by
    renormalization converges in a handful of iterations.  Returns the repaired
    array and a success mask.
    """
    a = a.copy()
    cols = [j for j in designated if j is not None]
    for _ in range(max_newton):
        if not cols:
            break
        active = np.nonzero(np.any(np.abs(_trace_gap(a, cycles)) >= gap_tol, axis=-1))[0]
        if len(active) == 0:
            break
        sub = a[active]
        gap = _trace_gap(sub, cycles)
        jac = np.zeros((len(active), len(cycles), 4 * len(cols)))
        for c, (lw, rw) in enumerate(cycles):
            for k, j in enumerate(cols):
                jac[:, c, 4 * k : 4 * k + 4] = _tangent(_trace_gap_gradient(sub, lw, rw, j), sub[:, j])
        delta = -np.einsum("bij,bj->bi", np.linalg.pinv(jac), gap)
        for k, j in enumerate(cols):
            sub[:, j] = qnormalize(sub[:, j] + delta[:, 4 * k : 4 * k + 4])
        a[active] = sub
    gap = _trace_gap(a, cycles)
    return a, np.all(np.abs(gap) < 1e-12, axis=-1)


def _conj_circle(p, q, angle, tol=1e-12):
    """Vectorized X with X p X^-1 = q at circle parameter ``angle``; NaN if p central."""
    u = p[..., 1:]
    v = q[..., 1:]
    nu = np.linalg.norm(u, axis=-1, keepdims=True)
    nv = np.linalg.norm(v, axis=-1, keepdims=True)
    central = (nu[..., 0] <= tol) | (nv[..., 0] <= tol)
    with np.errstate(invalid="ignore", divide="ignore"):
        u = u / nu
        v = v / nv
    dot = np.sum(u * v, axis=-1)
    # shortest arc when u.v >= 0, otherwise half-turn then shortest arc
    trial = np.eye(3)[np.argmin(np.abs(u), axis=-1)]
    w = np.cross(u, trial)
    with np.errstate(invalid="ignore", divide="ignore"):
        w = w / np.linalg.norm(w, axis=-1, keepdims=True)
    flip = np.concatenate([np.zeros(w.shape[:-1] + (1,)), w], axis=-1)
    src = np.where((dot >= 0)[..., None], u, -u)
    arc = np.concatenate([1.0 + np.sum(src * v, axis=-1, keepdims=True), np.cross(src, v)], axis=-1)
    with np.errstate(invalid="ignore", divide="ignore"):
        arc = qnormalize(arc)
    x0 = np.where((dot >= 0)[..., None], arc, qmul(arc, flip))
    x = qmul(x0, qexp_axis(u, angle))
    x[central] = np.nan
    return x, central


def propagate_batch(origami, seeds, mix_rounds=DEFAULT_MIX_ROUNDS):
    """Run :func:`sample_propagate` for every seed; failures are flagged, not raised."""
    pres = presentation_of(origami)
    d = origami.d
    cycles = _cycle_words(origami)
    rngs = [rng_for(s) for s in seeds]
    n = len(rngs)
    a = np.stack([haar_array(r, d) for r in rngs]) if n else np.zeros((0, d, 4))
    angles = np.stack([r.uniform(0.0, 2.0 * np.pi, size=len(cycles)) for r in rngs]) if n else np.zeros((0, len(cycles)))
    ok = np.ones(n, dtype=bool)

    designations = [_designate(a[k], cycles) for k in range(n)]
    gap0 = _trace_gap(a, cycles) if n else np.zeros((0, len(cycles)))
    for k in range(n):
        for c, j in enumerate(designations[k]):
            if j is None and abs(gap0[k, c]) >= 1e-12:
                ok[k] = False
    for key in set(designations):
        rows = [k for k in range(n) if designations[k] == key]
        repaired, good = _repair(a[rows], cycles, key)
        a[rows] = repaired
        ok[rows] &= good

    b = np.zeros_like(a)
    for c, (lw, rw) in enumerate(cycles):
        hol = _chain(a, lw)
        right = _chain(a, rw)
        x, central = _conj_circle(right, hol, angles[:, c])
        ok &= ~central
        b[:, lw[0]] = x
        for k in range(len(lw) - 1):
            i = lw[k]
            b[:, lw[k + 1]] = qmul(qmul(qconj(a[:, i]), b[:, i]), a[:, origami.sigma[i]])
    x = np.concatenate([a, b], axis=1)
    x[~ok] = np.nan
    if mix_rounds > 0 and n:
        times = np.stack([_mix_times(r, mix_rounds, _n_cylinders(origami)) for r in rngs])
        x[ok] = _mix(x[ok], origami, times[ok])
    res = np.full(n, np.inf)
    if ok.any():
        res[ok] = relator_deviation(pres, x[ok]).max(axis=-1, initial=0.0)
    ok &= res < 1e-12
    return SampleBatch(pres, x, res, ok)


def sample_propagate(origami, seed, mix_rounds=DEFAULT_MIX_ROUNDS):
    """Constructive origami representation.

    Draw Haar ``A``'s.  Around a vertical cylinder ``i0 -> i1 -> ...`` the
    square relations force ``B_{i_{k+1}} = A_{i_k}^-1 B_{i_k} A_{sigma(i_k)}``,
    so ``B_{i0}`` must conjugate ``R = A_sigma(i0) A_sigma(i1) ...`` to the
    core holonomy ``L = A_i0 A_i1 ...``.  One designated ``A`` per cylinder is
    moved to make ``tr L = tr R``; ``B_i0`` is then a uniform point on the
    circle of solutions and the other ``B``'s follow.
    """
    batch = propagate_batch(origami, [seed], mix_rounds=mix_rounds)
    if not batch.ok[0]:
        raise DegenerateCycle("trace repair or circle construction degenerated; resample")
    return batch.representation(0)


# ---------------------------------------------------------------------------
# N4
# ---------------------------------------------------------------------------

def _n4_sphere_normal(a1, a2):
    """Normal u of the hyperplane {X : tr(X A1^-1) = tr(A1 X A2^-2)} in R^4."""
    a1inv = qconj(a1)
    a2inv2 = qmul(qconj(a2), qconj(a2))
    basis = np.eye(4)
    return np.array(
        [qtrace(qmul(e, a1inv)) - qtrace(qmul(qmul(a1, e), a2inv2)) for e in basis]
    )


def _oriented_frame(first, second, rng):
    """Orthonormal positively oriented basis of R^4 starting with ``first``, ``second``."""
    m = np.column_stack([first, second, rng.standard_normal(4), rng.standard_normal(4)])
    q, r = np.linalg.qr(m)
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 3] = -q[:, 3]
    return q


def sample_n4(a1, a2, seed, tol=1e-9):
    """N4 representation with prescribed ``A1 = a1`` and ``A2 = a2``.

    ``B1`` is drawn uniformly on the great sphere tr(B1 A1^-1) = tr(A1 B1 A2^-2),
    which says that A1, B1 and A2, B2 = A1 B1 A2^-1 span the same angle.  An
    orientation-preserving isometry Phi of H with Phi(A1) = A2 and
    Phi(B1) = B2 is then built from matched orthonormal frames (the free
    rotation in the complementary plane is random) and factored as
    X -> C2^-1 X C1.
    """
    rng = rng_for(seed)
    a1 = _arr(a1)
    a2 = _arr(a2)
    normal = _n4_sphere_normal(a1, a2)
    g = rng.standard_normal(4)
    nn = np.linalg.norm(normal)
    if nn > tol:
        g = g - (g @ normal) / (nn * nn) * normal
    if np.linalg.norm(g) < tol:
        raise DegenerateSphere("could not draw a point on the B1 sphere")
    b1 = g / np.linalg.norm(g)
    b2 = qnormalize(qmul(qmul(a1, b1), qconj(a2)))

    e2 = b1 - (b1 @ a1) * a1
    f2 = b2 - (b2 @ a2) * a2
    if np.linalg.norm(e2) < tol or np.linalg.norm(f2) < tol:
        raise DegenerateSphere("B1 is parallel to A1; the frame is undefined")
    e2 /= np.linalg.norm(e2)
    f2 /= np.linalg.norm(f2)
    src = _oriented_frame(a1, e2, rng)
    dst = _oriented_frame(a2, f2, rng)
    phi = Isometry4(dst @ src.T)
    p, q = so4_factor(phi)
    c2 = p.inverse()
    c1 = q
    pres = n4_presentation()
    values = np.array([a1, a2, b1, b2, c1.as_array(), c2.as_array()])
    return Representation(pres, values)

"""Command line driver: ``squaretwist {info,sample,orbit,certify,foliation}``.

Every run is determined by its configuration.  Task ``k`` of a run with
master seed ``s`` draws from the stream ``(s, k)``, and results are written in
task order, so ``--workers`` never changes the output bytes.  Wall-clock
times only appear on stderr.

Output
    JSON lines, one record per sample, orbit step or point, followed by a
    ``summary`` record; written to ``<out>.jsonl`` (or stdout).  With
    ``--out`` a CSV table of per-task summaries is written to ``<out>.csv``.

Config files
    ``--config FILE`` reads ``key = value`` lines (``#`` starts a comment).
    Keys are the long option names with ``-`` or ``_``; command line flags
    take precedence.

Probes
    ``--probes 'tr(a1);tr(a1 b2^-1)'``: semicolon separated traces of
    generator words.

Exit codes
    0 success, 2 parse or usage error, 3 sampler convergence failure,
    4 certification contract violated.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import foliation as fol
from .errors import (
    Degenerate,
    NoConvergence,
    ParseError,
    SquareTwistError,
    UndefinedRatio,
    UnknownName,
)
from .invariants import (
    direction_drift_batch,
    locate_rectangles,
    n4_invariant,
    rectangle_directions,
    spread,
)
from .origami import (
    HORIZONTAL,
    VERTICAL,
    GeneratorWord,
    Origami,
    core_word,
    cylinders,
    format_cycles,
    multitwist_matrix,
    parse_cycles,
    presentation_of,
    registry,
    topology,
    validate,
)
from .quat import haar_array, qtrace
from .repvar import (
    Representation,
    derive_seed,
    descent_batch,
    propagate_batch,
    relator_deviation,
    rng_for,
    sample_n4,
)
from . import _holonomy as H
from .twist import alphabet, orbit_arrays

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_CONVERGENCE = 3
EXIT_CERTIFICATION = 4

DRIFT_TOL = 1e-8
SPREAD_MIN = 0.1
N4_RESIDUAL_TOL = 1e-10
N4_SUCCESS_MIN = 0.99
N4_RATIO_SPREAD_MIN = 0.5
N4_TRACE_GUARD = 0.5


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------

def read_config(path):
    """``key = value`` pairs from a UTF-8 file; ``#`` starts a comment."""
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ParseError(f"{path}:{lineno}: expected key = value", raw, 0)
            key, _, value = line.partition("=")
            out[key.strip().replace("-", "_")] = value.strip()
    return out


def parse_probes(text):
    """Split ``'tr(a1);tr(b1 a2^-1)'`` into generator words."""
    words = []
    offset = 0
    for part in text.split(";"):
        item = part.strip()
        if item:
            if not (item.startswith("tr(") and item.endswith(")")):
                raise ParseError("probe must look like tr(<word>)", text, offset + part.find(item))
            words.append(GeneratorWord.parse(item[3:-1]))
        offset += len(part) + 1
    return words


def resolve_surface(args):
    if getattr(args, "sigma", None) or getattr(args, "sigma_prime", None):
        if not (args.sigma and args.sigma_prime):
            raise UsageError("--sigma and --sigma-prime go together")
        s = parse_cycles(args.sigma, args.d)
        d = args.d or len(s)
        sp_ = parse_cycles(args.sigma_prime, d)
        if len(s) != len(sp_):
            d = max(len(s), len(sp_))
            s = parse_cycles(args.sigma, d)
            sp_ = parse_cycles(args.sigma_prime, d)
        o = Origami(s, sp_, name="custom")
        validate(o)
        return o
    if not args.surface:
        raise UsageError("give --surface or --sigma/--sigma-prime")
    return registry(args.surface)


# ---------------------------------------------------------------------------
# output
# ---------------------------------------------------------------------------

def _clean(obj):
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, float) and not np.isfinite(obj):
        return None
    return obj


class Sink:
    """JSON-lines stream plus an optional CSV summary table."""

    def __init__(self, out):
        self.out = out
        self.fh = open(out + ".jsonl", "w", encoding="utf-8") if out else sys.stdout
        self.rows = []

    def record(self, rec):
        self.fh.write(json.dumps(_clean(rec), sort_keys=True) + "\n")

    def row(self, row):
        self.rows.append(_clean(row))

    def close(self):
        if self.out:
            self.fh.close()
            if self.rows:
                with open(self.out + ".csv", "w", newline="", encoding="utf-8") as fh:
                    writer = csv.DictWriter(fh, fieldnames=list(self.rows[0]))
                    writer.writeheader()
                    writer.writerows(self.rows)
        else:
            self.fh.flush()


def _chunks(n, size):
    return [list(range(k, min(n, k + size))) for k in range(0, n, size)]


def _orbit_chunks(n, workers):
    """Rows per task: the whole batch for one worker, an even split otherwise."""
    size = max(1, -(-n // max(1, workers or 1)))
    return _chunks(n, size)


def _pool_map(fn, tasks, workers):
    if workers and workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, tasks))
    return [fn(t) for t in tasks]


# ---------------------------------------------------------------------------
# info
# ---------------------------------------------------------------------------

def info_report(surface):
    """Combinatorial summary of an origami or presentation as a dict."""
    if not isinstance(surface, Origami):
        pres = surface
        return {
            "surface": pres.tag,
            "generators": list(pres.generators),
            "relators": [str(r) for r in pres.relators],
        }
    o = surface
    top = topology(o)
    rep = {
        "surface": o.name or "custom",
        "d": o.d,
        "sigma": format_cycles(o.sigma),
        "sigma_prime": format_cycles(o.sigma_prime),
        "vertices": top.vertex_count,
        "euler_characteristic": top.euler_characteristic,
        "genus": top.genus,
    }
    for direction in (HORIZONTAL, VERTICAL):
        cyls = cylinders(o, direction)
        mt = multitwist_matrix(o, direction)
        rep[direction] = {
            "cylinders": [list(c.cycle) for c in cyls],
            "circumferences": [c.circumference for c in cyls],
            "core_words": [str(core_word(o, c, c.cycle[0])) for c in cyls],
            "multitwist_matrix": [list(r) for r in mt.matrix],
            "exponents": list(mt.exponents),
        }
    rep["relators"] = [str(r) for r in presentation_of(o).relators]
    return rep


def _format_info(rep):
    lines = []
    if "d" not in rep:
        lines.append(f"surface    {rep['surface']}")
        lines.append("generators " + " ".join(rep["generators"]))
        lines += ["relator    " + r for r in rep["relators"]]
        return "\n".join(lines)
    lines.append(f"surface    {rep['surface']}  d={rep['d']}")
    lines.append(f"sigma      {rep['sigma']}")
    lines.append(f"sigma'     {rep['sigma_prime']}")
    lines.append(
        f"vertices   {rep['vertices']}  euler {rep['euler_characteristic']}  genus {rep['genus']}"
    )
    for direction in (HORIZONTAL, VERTICAL):
        part = rep[direction]
        lines.append(f"{direction} cylinders")
        for cyc, word in zip(part["cylinders"], part["core_words"]):
            lines.append(f"  {tuple(cyc)}  core {word}")
        lines.append(f"  multitwist {part['multitwist_matrix']}  exponents {part['exponents']}")
    lines += ["relator    " + r for r in rep["relators"]]
    return "\n".join(lines)


def cmd_info(args):
    rep = info_report(resolve_surface(args))
    if args.json:
        print(json.dumps(rep, sort_keys=True))
    else:
        print(_format_info(rep))
    return EXIT_OK


# ---------------------------------------------------------------------------
# sample
# ---------------------------------------------------------------------------

def _sample_chunk(task):
    surface, sampler, master, indices, tol = task
    seeds = [derive_seed(master, k) for k in indices]
    if sampler == "propagate":
        if not isinstance(surface, Origami):
            raise UsageError("the propagate sampler needs an origami")
        batch = propagate_batch(surface, seeds)
        return batch.values, batch.residuals, batch.ok
    if sampler == "descent":
        batch = descent_batch(surface, seeds, tol=tol)
        return batch.values, batch.residuals, batch.ok
    if sampler == "n4":
        values, res = [], []
        for s in seeds:
            rng = rng_for(s)
            a1, a2 = haar_array(rng, 2)
            try:
                rep = sample_n4(a1, a2, rng)
                values.append(rep.values)
                res.append(relator_deviation(rep.presentation, rep.values).max())
            except SquareTwistError:
                values.append(np.full((6, 4), np.nan))
                res.append(np.inf)
        res = np.array(res)
        return np.array(values), res, res < N4_RESIDUAL_TOL
    raise UsageError(f"unknown sampler {sampler!r}")


def run_samples(surface, sampler, master, n, tol=1e-12, workers=1, chunk=256):
    tasks = [(surface, sampler, master, idx, tol) for idx in _chunks(n, chunk)]
    parts = _pool_map(_sample_chunk, tasks, workers)
    if not parts:
        return np.zeros((0,)), np.zeros(0), np.zeros(0, dtype=bool)
    return (
        np.concatenate([p[0] for p in parts]),
        np.concatenate([p[1] for p in parts]),
        np.concatenate([p[2] for p in parts]),
    )


def _probe_values(x, pres, words):
    return np.stack(
        [qtrace(H.evaluate_compiled(x, H.compile_word(pres, w))) for w in words], axis=-1
    ) if words else np.zeros(x.shape[:-2] + (0,))


def cmd_sample(args):
    surface = resolve_surface(args)
    pres = presentation_of(surface)
    if args.sampler == "n4" and pres.tag != "n4":
        raise UsageError("the n4 sampler only applies to --surface n4")
    words = parse_probes(args.probes) if args.probes else []
    t0 = time.perf_counter()
    values, res, ok = run_samples(surface, args.sampler, args.seed, args.samples, args.tol, args.workers)
    probes = _probe_values(values, pres, words)
    sink = Sink(args.out)
    for k in range(len(values)):
        rec = {
            "kind": "sample",
            "index": k,
            "seed": list(derive_seed(args.seed, k)),
            "sampler": args.sampler,
            "ok": bool(ok[k]),
            "residual": float(res[k]),
            "values": {g: values[k, j] for j, g in enumerate(pres.generators)},
        }
        if words:
            rec["probes"] = {f"tr({w})": probes[k, j] for j, w in enumerate(words)}
        sink.record(rec)
        row = {"index": k, "ok": int(ok[k]), "residual": float(res[k])}
        for j, w in enumerate(words):
            row[f"tr({w})"] = probes[k, j]
        sink.row(row)
    rate = float(ok.mean()) if len(ok) else 0.0
    sink.record({"kind": "summary", "samples": len(ok), "success_rate": rate,
                 "max_residual_ok": float(res[ok].max()) if ok.any() else None})
    sink.close()
    print(f"sampled {len(ok)} in {time.perf_counter() - t0:.2f}s, success {rate:.4f}", file=sys.stderr)
    return EXIT_OK if rate >= args.min_success else EXIT_CONVERGENCE


# ---------------------------------------------------------------------------
# orbit
# ---------------------------------------------------------------------------

def _initial_batch(o, sampler, master, n, tol, workers):
    values, res, ok = run_samples(o, sampler, master, n, tol, workers)
    if not ok.all():
        bad = int((~ok).sum())
        raise NoConvergence(f"{bad} of {n} initial samples failed", float(np.max(res)))
    return values


def _orbit_task(task):
    o, x, seeds, steps, words, every, max_exponent = task
    pres = presentation_of(o)
    letters = alphabet(o, max_exponent)
    records = []
    p0 = _probe_values(x, pres, words)
    stats = [[p0[k]] for k in range(len(x))]
    max_res = relator_deviation(pres, x).max(axis=-1, initial=0.0)
    for step, choice, y in orbit_arrays(x, o, seeds, steps, max_exponent):
        p = _probe_values(y, pres, words)
        res = relator_deviation(pres, y).max(axis=-1, initial=0.0)
        max_res = np.maximum(max_res, res)
        for k in range(len(y)):
            stats[k].append(p[k])
            if every and step % every == 0:
                records.append((k, step, str(letters[choice[k]]), p[k], res[k]))
    return records, [np.array(s) for s in stats], max_res


def cmd_orbit(args):
    o = resolve_surface(args)
    if not isinstance(o, Origami):
        raise UsageError("orbits need an origami surface")
    words = parse_probes(args.probes) if args.probes else []
    x = _initial_batch(o, args.sampler, args.seed, args.seeds, args.tol, args.workers)
    word_seeds = [(args.seed, k, 1) for k in range(args.seeds)]
    tasks = [
        (o, x[idx], [word_seeds[k] for k in idx], args.steps, words, args.every, args.max_exponent)
        for idx in _orbit_chunks(args.seeds, args.workers)
    ]
    parts = _pool_map(_orbit_task, tasks, args.workers)
    sink = Sink(args.out)
    names = [f"tr({w})" for w in words]
    steps = []
    for idx, (records, _, _) in zip(_orbit_chunks(args.seeds, args.workers), parts):
        steps += [(idx[k], step, letter, p, res) for k, step, letter, p, res in records]
    # orbit-major order, independent of how orbits were split across workers
    for orbit, step, letter, p, res in sorted(steps, key=lambda r: (r[0], r[1])):
        sink.record({"kind": "step", "orbit": orbit, "step": step, "generator": letter,
                     "residual": res, "probes": dict(zip(names, p))})
    for idx, (_, stats, max_res) in zip(_orbit_chunks(args.seeds, args.workers), parts):
        for k, series in enumerate(stats):
            summary = {"kind": "orbit", "orbit": idx[k], "steps": args.steps, "max_residual": max_res[k]}
            for j, name in enumerate(names):
                col = series[:, j]
                summary[name] = {"min": col.min(), "max": col.max(), "mean": col.mean(),
                                 "std": col.std(), "spread": col.max() - col.min()}
                sink.row({"orbit": idx[k], "probe": name, "min": col.min(), "max": col.max(),
                          "mean": col.mean(), "std": col.std(), "spread": col.max() - col.min(),
                          "max_residual": max_res[k]})
            sink.record(summary)
    sink.close()
    return EXIT_OK


# ---------------------------------------------------------------------------
# certify
# ---------------------------------------------------------------------------

def _certify_directions(args, o, sink):
    rects = locate_rectangles(o)
    if not rects:
        violations = ["no rectangle with certified conjugate sides"]
        sink.record({"kind": "summary", "certified": False, "violations": violations})
        return violations
    rect = rects[0]
    x = _initial_batch(o, args.sampler, args.seed, args.seeds, args.tol, args.workers)
    seeds = [(args.seed, k, 1) for k in range(args.seeds)]
    chunks = _orbit_chunks(args.seeds, args.workers)
    tasks = [(o, x[idx], [seeds[k] for k in idx], args.orbit_steps, rect) for idx in chunks]
    parts = _pool_map(_drift_task, tasks, args.workers)
    worst = 0.0
    for idx, d in zip(chunks, parts):
        for k in range(len(idx)):
            rec = {"kind": "orbit", "orbit": idx[k], "steps": args.orbit_steps,
                   "max_drift": d.max_drift[k], "max_pair_distance": d.max_pair_distance[k],
                   "max_residual": d.max_residual[k], "min_difference": d.min_difference[k]}
            sink.record(rec)
            sink.row({"orbit": idx[k], "max_drift": d.max_drift[k],
                      "max_pair_distance": d.max_pair_distance[k], "max_residual": d.max_residual[k]})
            worst = max(worst, d.max_drift[k], d.max_pair_distance[k])

    y = _initial_batch(o, args.sampler, args.seed + 1, args.samples, args.tol, args.workers)
    dirs = []
    for k in range(len(y)):
        try:
            dirs.append(rectangle_directions(Representation(presentation_of(o), y[k]), rect).a_side)
        except Degenerate:
            continue
    sp_ = spread(dirs)
    ok_drift = worst < DRIFT_TOL
    ok_spread = sp_ >= SPREAD_MIN
    summary = {"kind": "summary", "rectangle": str(rect), "max_drift": worst,
               "drift_tol": DRIFT_TOL, "spread": sp_, "spread_min": SPREAD_MIN,
               "spread_samples": len(dirs), "certified": bool(ok_drift and ok_spread)}
    violations = []
    if not ok_drift:
        violations.append(f"drift {worst:.3e} >= {DRIFT_TOL:g}")
    if not ok_spread:
        violations.append(f"spread {sp_:.3e} < {SPREAD_MIN:g}")
    summary["violations"] = violations
    sink.record(summary)
    return violations


def _drift_task(task):
    o, x, seeds, steps, rect = task
    return direction_drift_batch(o, x, seeds, steps, rect)


def _certify_n4(args, sink):
    values, res, ok = run_samples(registry("n4"), "n4", args.seed, args.samples, args.tol, args.workers)
    pres = registry("n4")
    product_worst = 0.0
    ratios = []
    for k in range(len(values)):
        rec = {"kind": "sample", "index": k, "ok": bool(ok[k]), "residual": res[k]}
        if ok[k]:
            rep = Representation(pres, values[k])
            report = n4_invariant(rep, strict=False)
            diag = report.diagnostics
            product_worst = max(product_worst, abs(diag["product_residual"]))
            rec["product_residual"] = diag["product_residual"]
            rec["ratio"] = report.value
            t = qtrace(values[k])
            if report.defined and np.all(np.abs(t[:4]) > N4_TRACE_GUARD):
                ratios.append(report.value)
        sink.record(rec)
        sink.row({"index": k, "ok": int(ok[k]), "residual": res[k],
                  "product_residual": rec.get("product_residual"), "ratio": rec.get("ratio")})
    # descent-sampled representations must satisfy the same identity
    dvals, dres, dok = run_samples(pres, "descent", args.seed + 1, args.descent_samples, 1e-12, args.workers)
    for k in np.nonzero(dok)[0]:
        report = n4_invariant(Representation(pres, dvals[k]), strict=False)
        product_worst = max(product_worst, abs(report.diagnostics["product_residual"]))
    rate = float(ok.mean()) if len(ok) else 0.0
    sp_ = spread(ratios)
    violations = []
    if rate < N4_SUCCESS_MIN:
        violations.append(f"success rate {rate:.4f} < {N4_SUCCESS_MIN}")
    if product_worst >= N4_RESIDUAL_TOL:
        violations.append(f"product residual {product_worst:.3e} >= {N4_RESIDUAL_TOL:g}")
    if sp_ < N4_RATIO_SPREAD_MIN:
        violations.append(f"ratio spread {sp_:.3e} < {N4_RATIO_SPREAD_MIN}")
    sink.record({"kind": "summary", "samples": len(ok), "success_rate": rate,
                 "descent_samples": int(dok.sum()), "max_product_residual": product_worst,
                 "ratio_spread": sp_, "guarded_samples": len(ratios),
                 "certified": not violations, "violations": violations})
    return violations


def cmd_certify(args):
    surface = resolve_surface(args)
    sink = Sink(args.out)
    try:
        if isinstance(surface, Origami):
            violations = _certify_directions(args, surface, sink)
        else:
            violations = _certify_n4(args, sink)
    finally:
        sink.close()
    for v in violations:
        print(f"certification failed: {v}", file=sys.stderr)
    return EXIT_CERTIFICATION if violations else EXIT_OK


# ---------------------------------------------------------------------------
# foliation
# ---------------------------------------------------------------------------

def _system_from_args(args):
    if args.matrices:
        mats = []
        for block in args.matrices.split(";"):
            entries = [float(v) for v in block.replace(",", " ").split()]
            n = args.dimension
            if len(entries) != n * n:
                raise ParseError(f"expected {n * n} matrix entries", args.matrices, 0)
            mats.append(np.array(entries).reshape(n, n))
        level = [float(v) for v in args.level.replace(",", " ").split()] if args.level else None
        return fol.BilinearSystem(args.dimension, mats, level, name="custom")
    if args.system not in fol.SYSTEMS:
        raise UnknownName(f"unknown system {args.system!r}; known: {', '.join(fol.SYSTEMS)}")
    return fol.SYSTEMS[args.system]()


def cmd_foliation(args):
    sys_ = _system_from_args(args)
    sink = Sink(args.out)
    for k in range(args.samples):
        point = fol.random_point(sys_, rng_for(derive_seed(args.seed, k)))
        times = rng_for((args.seed, k, 1)).uniform(-1.0, 1.0, args.steps)
        end = fol.alternate(sys_, point, times)
        rec = {"kind": "point", "index": k, "a": point.a, "b": point.b,
               "bracket_rank": fol.bracket_rank(sys_, point.a, point.b),
               "tangent_dimension": sys_.tangent_dimension(point.a, point.b),
               "end_deviation": sys_.deviation(end.a, end.b)}
        if sys_.name == "example1":
            rec["invariant_drift"] = fol.line_distance(
                fol.example1_invariant(point), fol.example1_invariant(end)
            )
        sink.record(rec)
        sink.row({key: rec[key] for key in rec if key not in ("kind", "a", "b")})
    sink.close()
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def _add_surface(p):
    p.add_argument("--surface", help="named surface: fig1, sprime, l22, n4")
    p.add_argument("--sigma", help="right-neighbour permutation in cycle notation, e.g. '(1 2 3)'")
    p.add_argument("--sigma-prime", dest="sigma_prime", help="top-neighbour permutation")
    p.add_argument("--d", type=int, default=None, help="number of squares (default: largest label)")


def _add_common(p):
    p.add_argument("--config", help="key = value configuration file")
    p.add_argument("--seed", type=int, default=0, help="master seed")
    p.add_argument("--tol", type=float, default=1e-12, help="descent tolerance")
    p.add_argument("--out", help="output prefix for <out>.jsonl and <out>.csv")
    p.add_argument("--workers", type=int, default=1, help="worker processes")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="squaretwist",
        description="Square-tiled surfaces, SU(2) representations and twist dynamics.",
        epilog="Twist words read left to right: the leftmost generator acts first.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("info", help="combinatorics of a surface")
    _add_surface(p)
    p.add_argument("--config")
    p.add_argument("--json", action="store_true", help="print one JSON object")
    p.set_defaults(func=cmd_info)

    p = sub.add_parser("sample", help="sample the representation variety")
    _add_surface(p)
    _add_common(p)
    p.add_argument("--sampler", choices=("descent", "propagate", "n4"), default="descent")
    p.add_argument("--samples", type=int, default=100)
    p.add_argument("--probes", help="e.g. 'tr(a1);tr(b1)'")
    p.add_argument("--min-success", dest="min_success", type=float, default=0.95,
                   help="exit 3 below this success rate")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("orbit", help="random twist orbits with trace probes")
    _add_surface(p)
    _add_common(p)
    p.add_argument("--sampler", choices=("descent", "propagate"), default="propagate")
    p.add_argument("--seeds", type=int, default=1, help="number of orbits")
    p.add_argument("--steps", type=int, default=1000)
    p.add_argument("--every", type=int, default=1, help="emit a step record every N steps (0: none)")
    p.add_argument("--max-exponent", dest="max_exponent", type=int, default=1)
    p.add_argument("--probes", default="tr(a1);tr(b1)")
    p.set_defaults(func=cmd_orbit)

    p = sub.add_parser("certify", help="certify an invariant function")
    _add_surface(p)
    _add_common(p)
    p.add_argument("--sampler", choices=("descent", "propagate"), default="propagate")
    p.add_argument("--seeds", type=int, default=32, help="orbits for the drift test")
    p.add_argument("--orbit-steps", "--steps", dest="orbit_steps", type=int, default=1000)
    p.add_argument("--samples", type=int, default=100, help="independent samples for the spread test")
    p.add_argument("--descent-samples", dest="descent_samples", type=int, default=100,
                   help="n4 only: descent samples checked against the product identity")
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("foliation", help="leaf alternation and bracket ranks")
    p.add_argument("--system", default="example1", help=", ".join(fol.SYSTEMS))
    p.add_argument("--dimension", type=int, default=2)
    p.add_argument("--matrices", help="row-major entries, matrices separated by ';'")
    p.add_argument("--level", help="one level per matrix")
    p.add_argument("--samples", type=int, default=100, help="starting points")
    p.add_argument("--steps", type=int, default=20, help="leaf alternations per point")
    _add_common(p)
    p.set_defaults(func=cmd_foliation)
    return parser


def _apply_config(parser, argv):
    """Parse ``argv`` with values from ``--config`` filling unset options."""
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return parser.parse_args(argv)
    given = {a[2:].split("=")[0].replace("-", "_") for a in argv if a.startswith("--")}
    extra = []
    for key, value in read_config(known.config).items():
        if key in given or key == "config":
            continue
        flag = "--" + key.replace("_", "-")
        if value.lower() in ("true", "yes", "on"):
            extra.append(flag)
        elif value.lower() not in ("false", "no", "off"):
            extra.append(f"{flag}={value}")
    return parser.parse_args(argv + extra)


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    try:
        args = _apply_config(parser, argv)
        return args.func(args)
    except (ParseError, UsageError, UnknownName) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (NoConvergence,) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except (UndefinedRatio, Degenerate) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CERTIFICATION
    except SquareTwistError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE


if __name__ == "__main__":
    sys.exit(main())

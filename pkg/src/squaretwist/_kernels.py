"""Compiled per-sample loop for projected gradient descent.

The objective is F = sum_r ||rho(r) - 1||^2 over the product of unit
spheres.  Trial steps use the Barzilai-Borwein length of the previous
accepted step and are halved until F decreases.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def _qmul(a, b, out):
    out[0] = a[0] * b[0] - a[1] * b[1] - a[2] * b[2] - a[3] * b[3]
    out[1] = a[0] * b[1] + a[1] * b[0] + a[2] * b[3] - a[3] * b[2]
    out[2] = a[0] * b[2] - a[1] * b[3] + a[2] * b[0] + a[3] * b[1]
    out[3] = a[0] * b[3] + a[1] * b[2] - a[2] * b[1] + a[3] * b[0]


@njit(cache=True)
def _letter(x, g, e, out):
    out[0] = x[g, 0]
    s = 1.0 if e == 1 else -1.0
    out[1] = s * x[g, 1]
    out[2] = s * x[g, 2]
    out[3] = s * x[g, 3]


@njit(cache=True)
def _objective(x, gens, exps, lens):
    total = 0.0
    worst = 0.0
    acc = np.empty(4)
    tmp = np.empty(4)
    q = np.empty(4)
    for r in range(lens.shape[0]):
        acc[0] = 1.0
        acc[1] = 0.0
        acc[2] = 0.0
        acc[3] = 0.0
        for m in range(lens[r]):
            _letter(x, gens[r, m], exps[r, m], q)
            _qmul(acc, q, tmp)
            acc[:] = tmp
        acc[0] -= 1.0
        sq = acc[0] ** 2 + acc[1] ** 2 + acc[2] ** 2 + acc[3] ** 2
        total += sq
        dev = np.sqrt(sq)
        if dev > worst:
            worst = dev
    return total, worst


@njit(cache=True)
def _gradient(x, gens, exps, lens, grad):
    grad[:, :] = 0.0
    width = gens.shape[1]
    prefix = np.empty((width + 1, 4))
    q = np.empty(4)
    tmp = np.empty(4)
    suf = np.empty(4)
    z = np.empty(4)
    for r in range(lens.shape[0]):
        n = lens[r]
        prefix[0, 0] = 1.0
        prefix[0, 1:] = 0.0
        for m in range(n):
            _letter(x, gens[r, m], exps[r, m], q)
            _qmul(prefix[m], q, prefix[m + 1])
        dev = prefix[n].copy()
        dev[0] -= 1.0
        suf[0] = 1.0
        suf[1:] = 0.0
        for m in range(n - 1, -1, -1):
            g = gens[r, m]
            e = exps[r, m]
            # gradient of <dev, P dq S> is conj(P) dev conj(S)
            pc = prefix[m].copy()
            pc[1:] = -pc[1:]
            _qmul(pc, dev, tmp)
            sc = suf.copy()
            sc[1:] = -sc[1:]
            _qmul(tmp, sc, z)
            if e == 1:
                for c in range(4):
                    grad[g, c] += 2.0 * z[c]
            else:
                grad[g, 0] += 2.0 * z[0]
                for c in range(1, 4):
                    grad[g, c] -= 2.0 * z[c]
            _letter(x, g, e, q)
            _qmul(q, suf, tmp)
            suf[:] = tmp
    for g in range(x.shape[0]):
        dot = 0.0
        for c in range(4):
            dot += grad[g, c] * x[g, c]
        for c in range(4):
            grad[g, c] -= dot * x[g, c]


@njit(cache=True)
def _step(x, grad, step, out):
    for g in range(x.shape[0]):
        norm = 0.0
        for c in range(4):
            out[g, c] = x[g, c] - step * grad[g, c]
            norm += out[g, c] ** 2
        norm = np.sqrt(norm)
        for c in range(4):
            out[g, c] /= norm


@njit(cache=True)
def descend_one(x, gens, exps, lens, tol, max_iter):
    """Descend in place from ``x``; returns the final max relator deviation."""
    f, res = _objective(x, gens, exps, lens)
    grad = np.empty_like(x)
    gtrial = np.empty_like(x)
    trial = np.empty_like(x)
    _gradient(x, gens, exps, lens, grad)
    step = 0.1
    for _ in range(max_iter):
        if res < tol:
            break
        _step(x, grad, step, trial)
        ft, rt = _objective(trial, gens, exps, lens)
        if not ft < f:
            step *= 0.5
            if step < 1e-300:
                break
            continue
        _gradient(trial, gens, exps, lens, gtrial)
        sy = 0.0
        ss = 0.0
        for g in range(x.shape[0]):
            for c in range(4):
                s = trial[g, c] - x[g, c]
                y = gtrial[g, c] - grad[g, c]
                sy += s * y
                ss += s * s
        if sy > 0:
            step = ss / sy
        else:
            step = 2.0 * step
        if step < 1e-8:
            step = 1e-8
        elif step > 10.0:
            step = 10.0
        x[:, :] = trial
        grad[:, :] = gtrial
        f = ft
        res = rt
    return res

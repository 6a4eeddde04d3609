"""Pure-Python/numpy kernels, used when the compiled extension is unavailable.

Every function here has a twin in ``_ckernels.pyx`` with the same signature
and, for all integer outputs, bit-identical results.
"""

from __future__ import annotations

import math

import numpy as np

from .fixedpoint import MASK, INV_SCALE

TWO_PI = 2.0 * math.pi
_BLOCK = 1024


def ms_step(z, coef, freq, phase):
    """One step of the circle map z -> z + coef*sin(freq*(z - phase)) mod 1."""
    v = z + coef * math.sin(freq * (z - phase))
    v = v - math.floor(v)
    if v >= 1.0:
        v = 0.0
    return v


def _matmul_mod(p, q):
    (a, b, c, d), (e, f, g, h) = p, q
    return ((a * e + b * g) & MASK, (a * f + b * h) & MASK,
            (c * e + d * g) & MASK, (c * f + d * h) & MASK)


def _matpow_mod(m, k):
    out = (1, 0, 0, 1)
    while k:
        if k & 1:
            out = _matmul_mod(out, m)
        m = _matmul_mod(m, m)
        k >>= 1
    return out


def orbit_chunk(cat, alphas, center, torus, z, n, stride):
    """Sample ``n`` points spaced ``stride`` steps apart, starting at the given state.

    Returns ``(T, Z, torus_next, z_next)`` where ``T`` is uint64 of shape
    ``(n, 2 + r)``, ``Z`` is float64 of shape ``(n,)`` (``None`` without a
    center map) and the trailing pair is the state after ``n * stride`` steps.
    """
    alphas = np.asarray(alphas, dtype=np.uint64)
    torus = np.asarray(torus, dtype=np.uint64)
    r = alphas.shape[0]
    T = np.empty((n, 2 + r), dtype=np.uint64)

    step = _matpow_mod(tuple(int(v) & MASK for v in cat), stride)
    x, y = int(torus[0]), int(torus[1])
    head = min(n, _BLOCK)
    for i in range(head):
        T[i, 0] = x
        T[i, 1] = y
        x, y = (step[0] * x + step[1] * y) & MASK, (step[2] * x + step[3] * y) & MASK
    # later blocks are linear images of the first one
    jump = _matpow_mod(step, head)
    power = jump
    start = head
    while start < n:
        stop = min(n, start + head)
        bx = T[: stop - start, 0]
        by = T[: stop - start, 1]
        a, b, c, d = (np.uint64(v) for v in power)
        T[start:stop, 0] = a * bx + b * by
        T[start:stop, 1] = c * bx + d * by
        power = _matmul_mod(power, jump)
        start = stop
    total = _matpow_mod(step, n)
    x0, y0 = int(torus[0]), int(torus[1])
    x_next = (total[0] * x0 + total[1] * y0) & MASK
    y_next = (total[2] * x0 + total[3] * y0) & MASK

    idx = np.arange(n, dtype=np.uint64) * np.uint64(stride)
    w_next = []
    for i in range(r):
        a = np.uint64(alphas[i])
        T[:, 2 + i] = torus[2 + i] + idx * a
        w_next.append((int(torus[2 + i]) + n * stride * int(a)) & MASK)

    torus_next = np.array([x_next, y_next] + w_next, dtype=np.uint64)

    if center is None:
        return T, None, torus_next, z
    ell, eps, phase = center
    coef = eps / (TWO_PI * ell)
    freq = TWO_PI * ell
    Z = np.empty(n, dtype=np.float64)
    for i in range(n):
        Z[i] = z
        for _ in range(stride):
            z = ms_step(z, coef, freq, phase)
    return T, Z, torus_next, z


def classify_z(z0, ell, eps, phase, max_iter, radius, source_tol):
    """Sink label (or -1) and iteration count for each initial center coordinate."""
    z0 = np.asarray(z0, dtype=np.float64)
    coef = eps / (TWO_PI * ell)
    freq = TWO_PI * ell
    labels = np.full(z0.shape[0], -1, dtype=np.int64)
    iters = np.zeros(z0.shape[0], dtype=np.int64)
    for s in range(z0.shape[0]):
        z = float(z0[s])
        t = z - phase
        u = (t - math.floor(t)) * ell
        i = math.floor(u)
        if min(u - i, i + 1 - u) / ell < source_tol:
            continue
        for it in range(max_iter + 1):
            t = z - phase
            u = (t - math.floor(t)) * ell
            i = math.floor(u)
            if abs(u - i - 0.5) / ell < radius:
                labels[s] = i % ell
                iters[s] = it
                break
            z = ms_step(z, coef, freq, phase)
        else:
            iters[s] = max_iter
    return labels, iters


def weyl_chunk(T, Z, freqs, jfreq):
    """Per-frequency sums of exp(2*pi*i*<freq, point>) over a chunk of samples."""
    T = np.asarray(T, dtype=np.uint64)
    freqs = np.asarray(freqs, dtype=np.int64)
    out = np.empty(freqs.shape[0], dtype=np.complex128)
    for f in range(freqs.shape[0]):
        ph = np.zeros(T.shape[0], dtype=np.uint64)
        for col in range(T.shape[1]):
            c = int(freqs[f, col])
            if c:
                ph += np.uint64(c & MASK) * T[:, col]
        ang = ph.astype(np.float64) * INV_SCALE
        if Z is not None and jfreq[f]:
            ang = ang + float(jfreq[f]) * Z
        ang = TWO_PI * ang
        # numpy's pairwise summation: error grows like log(n), not n
        out[f] = complex(np.cos(ang).sum(), np.sin(ang).sum())
    return out

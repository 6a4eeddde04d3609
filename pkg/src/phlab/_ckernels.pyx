# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels. Signatures and integer results match ``_pykernels``."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sin, cos, floor, fabs
from libc.stdint cimport uint64_t, int64_t

cnp.import_array()

cdef double TWO_PI = 6.283185307179586
cdef double INV_SCALE = 5.421010862427522e-20  # 2**-64


cdef inline double _ms_step(double z, double coef, double freq, double phase) nogil:
    cdef double v = z + coef * sin(freq * (z - phase))
    v = v - floor(v)
    if v >= 1.0:
        v = 0.0
    return v


def orbit_chunk(cat, alphas, center, torus, double z, Py_ssize_t n, Py_ssize_t stride):
    cdef cnp.ndarray[uint64_t, ndim=1] al = np.ascontiguousarray(alphas, dtype=np.uint64)
    cdef cnp.ndarray[uint64_t, ndim=1] st = np.array(torus, dtype=np.uint64)
    cdef Py_ssize_t r = al.shape[0]
    cdef Py_ssize_t d = 2 + r
    cdef cnp.ndarray[uint64_t, ndim=2] T = np.empty((n, d), dtype=np.uint64)
    cdef cnp.ndarray[double, ndim=1] Z
    cdef uint64_t a = <uint64_t>(int(cat[0]) & 0xFFFFFFFFFFFFFFFF)
    cdef uint64_t b = <uint64_t>(int(cat[1]) & 0xFFFFFFFFFFFFFFFF)
    cdef uint64_t c = <uint64_t>(int(cat[2]) & 0xFFFFFFFFFFFFFFFF)
    cdef uint64_t dd = <uint64_t>(int(cat[3]) & 0xFFFFFFFFFFFFFFFF)
    cdef uint64_t x = st[0], y = st[1], xn
    cdef Py_ssize_t i, s, k
    cdef bint has_center = center is not None
    cdef double coef = 0.0, freq = 0.0, phase = 0.0
    cdef double[:] zv
    if has_center:
        ell, eps, ph = center
        coef = float(eps) / (TWO_PI * int(ell))
        freq = TWO_PI * int(ell)
        phase = float(ph)
        Z = np.empty(n, dtype=np.float64)
        zv = Z
    cdef uint64_t[:] w = st[2:]
    cdef uint64_t[:] alv = al
    cdef uint64_t[:, :] Tv = T
    with nogil:
        for i in range(n):
            Tv[i, 0] = x
            Tv[i, 1] = y
            for k in range(r):
                Tv[i, 2 + k] = w[k]
            if has_center:
                zv[i] = z
            for s in range(stride):
                xn = a * x + b * y
                y = c * x + dd * y
                x = xn
                for k in range(r):
                    w[k] = w[k] + alv[k]
                if has_center:
                    z = _ms_step(z, coef, freq, phase)
    st[0] = x
    st[1] = y
    if has_center:
        return T, Z, st, z
    return T, None, st, z


def classify_z(z0, long ell, double eps, double phase, long max_iter,
               double radius, double source_tol):
    cdef cnp.ndarray[double, ndim=1] zs = np.ascontiguousarray(z0, dtype=np.float64)
    cdef Py_ssize_t m = zs.shape[0]
    cdef cnp.ndarray[int64_t, ndim=1] labels = np.full(m, -1, dtype=np.int64)
    cdef cnp.ndarray[int64_t, ndim=1] iters = np.zeros(m, dtype=np.int64)
    cdef double coef = eps / (TWO_PI * ell)
    cdef double freq = TWO_PI * ell
    cdef double z, t, u, src
    cdef long i, it
    cdef Py_ssize_t s
    cdef bint done
    with nogil:
        for s in range(m):
            z = zs[s]
            t = z - phase
            u = (t - floor(t)) * ell
            i = <long>floor(u)
            src = u - i
            if i + 1 - u < src:
                src = i + 1 - u
            if src / ell < source_tol:
                continue
            done = False
            for it in range(max_iter + 1):
                t = z - phase
                u = (t - floor(t)) * ell
                i = <long>floor(u)
                if fabs(u - i - 0.5) / ell < radius:
                    labels[s] = i % ell
                    iters[s] = it
                    done = True
                    break
                z = _ms_step(z, coef, freq, phase)
            if not done:
                iters[s] = max_iter
    return labels, iters


def weyl_chunk(T, Z, freqs, jfreq):
    cdef uint64_t[:, :] Tv = np.ascontiguousarray(T, dtype=np.uint64)
    cdef int64_t[:, :] Fv = np.ascontiguousarray(freqs, dtype=np.int64)
    cdef int64_t[:] Jv = np.ascontiguousarray(jfreq, dtype=np.int64)
    cdef Py_ssize_t n = Tv.shape[0], d = Tv.shape[1], nf = Fv.shape[0]
    cdef bint has_z = Z is not None
    cdef double[:] Zv
    if has_z:
        Zv = np.ascontiguousarray(Z, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=2] out = np.zeros((nf, 2), dtype=np.float64)
    cdef Py_ssize_t f, i, col
    cdef uint64_t ph
    cdef uint64_t[16] coeff
    cdef double ang, jf, v, sr, cr, si, ci, tmp
    if d > 16:
        raise ValueError("at most 14 rotation factors supported")
    with nogil:
        for f in range(nf):
            for col in range(d):
                coeff[col] = <uint64_t>Fv[f, col]
            jf = <double>Jv[f]
            sr = 0.0
            cr = 0.0
            si = 0.0
            ci = 0.0
            for i in range(n):
                ph = 0
                for col in range(d):
                    ph = ph + coeff[col] * Tv[i, col]
                ang = <double>ph * INV_SCALE
                if has_z and jf != 0.0:
                    ang = ang + jf * Zv[i]
                ang = TWO_PI * ang
                # Neumaier compensated sums
                v = cos(ang)
                tmp = sr + v
                if fabs(sr) >= fabs(v):
                    cr = cr + ((sr - tmp) + v)
                else:
                    cr = cr + ((v - tmp) + sr)
                sr = tmp
                v = sin(ang)
                tmp = si + v
                if fabs(si) >= fabs(v):
                    ci = ci + ((si - tmp) + v)
                else:
                    ci = ci + ((v - tmp) + si)
                si = tmp
            out[f, 0] = sr + cr
            out[f, 1] = si + ci
    return out[:, 0] + 1j * out[:, 1]

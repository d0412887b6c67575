# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled batched kernels for stacks of small complex matrices.

Hermitian eigenproblems use cyclic complex Jacobi rotations; for r = 2 a
single rotation is the closed-form diagonalization.  Inversion is
Gauss-Jordan elimination with partial pivoting.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt

cnp.import_array()

ctypedef double complex cplx

cdef enum:
    MAXR = 16
    MAX_SWEEPS = 60


def matmul(const cplx[:, :, ::1] a, const cplx[:, :, ::1] b):
    cdef Py_ssize_t N = a.shape[0], r = a.shape[1], m = b.shape[2]
    cdef Py_ssize_t s, i, j, k
    cdef cplx acc
    if b.shape[0] != N or b.shape[1] != r:
        raise ValueError("incompatible stacks")
    out = np.empty((N, r, m), dtype=np.complex128)
    cdef cplx[:, :, ::1] o = out
    with nogil:
        for s in range(N):
            for i in range(r):
                for j in range(m):
                    acc = 0
                    for k in range(r):
                        acc = acc + a[s, i, k] * b[s, k, j]
                    o[s, i, j] = acc
    return out


cdef void _jacobi(cplx* A, cplx* V, double* w, Py_ssize_t r, bint vectors) nogil:
    """Diagonalize the Hermitian r x r matrix A in place (row-major)."""
    cdef Py_ssize_t p, q, k, sweep
    cdef double off, tot, m, tau, t, c, sn, tmpw
    cdef cplx ph, apk, aqk, akp, akq, tmpv
    if vectors:
        for p in range(r):
            for q in range(r):
                V[p * r + q] = 1.0 if p == q else 0.0
    for sweep in range(MAX_SWEEPS):
        off = 0.0
        tot = 0.0
        for p in range(r):
            for q in range(r):
                m = abs(A[p * r + q])
                tot = tot + m * m
                if p != q:
                    off = off + m * m
        if off <= 1e-32 * tot or off == 0.0:
            break
        for p in range(r - 1):
            for q in range(p + 1, r):
                m = abs(A[p * r + q])
                if m == 0.0:
                    continue
                ph = A[p * r + q] / m
                tau = (A[q * r + q].real - A[p * r + p].real) / (2.0 * m)
                if tau >= 0:
                    t = 1.0 / (tau + sqrt(1.0 + tau * tau))
                else:
                    t = -1.0 / (-tau + sqrt(1.0 + tau * tau))
                c = 1.0 / sqrt(1.0 + t * t)
                sn = t * c
                # A <- A J, columns p and q
                for k in range(r):
                    akp = A[k * r + p]
                    akq = A[k * r + q]
                    A[k * r + p] = c * akp - sn * ph.conjugate() * akq
                    A[k * r + q] = sn * ph * akp + c * akq
                # A <- J^* A, rows p and q
                for k in range(r):
                    apk = A[p * r + k]
                    aqk = A[q * r + k]
                    A[p * r + k] = c * apk - sn * ph * aqk
                    A[q * r + k] = sn * ph.conjugate() * apk + c * aqk
                A[p * r + q] = 0.0
                A[q * r + p] = 0.0
                if vectors:
                    for k in range(r):
                        akp = V[k * r + p]
                        akq = V[k * r + q]
                        V[k * r + p] = c * akp - sn * ph.conjugate() * akq
                        V[k * r + q] = sn * ph * akp + c * akq
    for p in range(r):
        w[p] = A[p * r + p].real
    # insertion sort, ascending, carrying eigenvector columns
    for p in range(1, r):
        q = p
        while q > 0 and w[q - 1] > w[q]:
            tmpw = w[q - 1]
            w[q - 1] = w[q]
            w[q] = tmpw
            if vectors:
                for k in range(r):
                    tmpv = V[k * r + q - 1]
                    V[k * r + q - 1] = V[k * r + q]
                    V[k * r + q] = tmpv
            q -= 1


def eigh(const cplx[:, :, ::1] a):
    cdef Py_ssize_t N = a.shape[0], r = a.shape[1]
    cdef Py_ssize_t s, i, j
    cdef cplx buf[MAXR * MAXR]
    if r > MAXR:
        raise ValueError(f"rank {r} exceeds compiled limit {MAXR}")
    w_out = np.empty((N, r), dtype=np.float64)
    v_out = np.empty((N, r, r), dtype=np.complex128)
    cdef double[:, ::1] w = w_out
    cdef cplx[:, :, ::1] v = v_out
    with nogil:
        for s in range(N):
            for i in range(r):
                for j in range(r):
                    buf[i * r + j] = a[s, i, j]
            _jacobi(buf, &v[s, 0, 0], &w[s, 0], r, True)
    return w_out, v_out


def eigvalsh(const cplx[:, :, ::1] a):
    cdef Py_ssize_t N = a.shape[0], r = a.shape[1]
    cdef Py_ssize_t s, i, j
    cdef cplx buf[MAXR * MAXR]
    if r > MAXR:
        raise ValueError(f"rank {r} exceeds compiled limit {MAXR}")
    w_out = np.empty((N, r), dtype=np.float64)
    cdef double[:, ::1] w = w_out
    with nogil:
        for s in range(N):
            for i in range(r):
                for j in range(r):
                    buf[i * r + j] = a[s, i, j]
            _jacobi(buf, NULL, &w[s, 0], r, False)
    return w_out


def inv(const cplx[:, :, ::1] a):
    cdef Py_ssize_t N = a.shape[0], r = a.shape[1]
    cdef Py_ssize_t s, i, j, k, piv
    cdef double best, m
    cdef cplx f, tmp
    cdef cplx buf[MAXR * MAXR]
    cdef bint singular = False
    if r > MAXR:
        raise ValueError(f"rank {r} exceeds compiled limit {MAXR}")
    out = np.empty((N, r, r), dtype=np.complex128)
    cdef cplx[:, :, ::1] o = out
    with nogil:
        for s in range(N):
            for i in range(r):
                for j in range(r):
                    buf[i * r + j] = a[s, i, j]
                    o[s, i, j] = 1.0 if i == j else 0.0
            for k in range(r):
                piv = k
                best = abs(buf[k * r + k])
                for i in range(k + 1, r):
                    m = abs(buf[i * r + k])
                    if m > best:
                        best = m
                        piv = i
                if best == 0.0:
                    singular = True
                    break
                if piv != k:
                    for j in range(r):
                        tmp = buf[k * r + j]
                        buf[k * r + j] = buf[piv * r + j]
                        buf[piv * r + j] = tmp
                        tmp = o[s, k, j]
                        o[s, k, j] = o[s, piv, j]
                        o[s, piv, j] = tmp
                f = 1.0 / buf[k * r + k]
                for j in range(r):
                    buf[k * r + j] = buf[k * r + j] * f
                    o[s, k, j] = o[s, k, j] * f
                for i in range(r):
                    if i == k:
                        continue
                    f = buf[i * r + k]
                    if f == 0:
                        continue
                    for j in range(r):
                        buf[i * r + j] = buf[i * r + j] - f * buf[k * r + j]
                        o[s, i, j] = o[s, i, j] - f * o[s, k, j]
            if singular:
                break
    if singular:
        raise np.linalg.LinAlgError("Singular matrix")
    return out

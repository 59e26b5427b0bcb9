# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled SGD kernels. Mirrors ``_pykernels`` operation for operation."""

from libc.math cimport exp, log, isfinite
from libc.stdint cimport int64_t
from libc.stdlib cimport malloc, free


cdef Py_ssize_t _listwise(double[:, ::1] U, double[:, ::1] V,
                          const int64_t[::1] users, const int64_t[::1] items,
                          double lr, double eps, double cap) noexcept nogil:
    cdef Py_ssize_t n, k, d = U.shape[1]
    cdef int64_t u, j
    cdef double x, lx, s, uk, vk, nu, nv
    for n in range(users.shape[0]):
        u = users[n]
        j = items[n]
        x = 0.0
        for k in range(d):
            x = x + U[u, k] * V[j, k]
        if x < eps:
            x = eps
        lx = log(x)
        s = exp(x * lx) * (1.0 + lx)
        for k in range(d):
            uk = U[u, k]
            vk = V[j, k]
            nu = uk + lr * s * vk
            nv = vk + lr * s * uk
            if not (isfinite(nu) and isfinite(nv)):
                return n
            if nu < 0.0:
                nu = 0.0
            elif nu > cap:
                nu = cap
            if nv < 0.0:
                nv = 0.0
            elif nv > cap:
                nv = cap
            U[u, k] = nu
            V[j, k] = nv
    return -1


cdef Py_ssize_t _mf(double[:, ::1] U, double[:, ::1] V,
                    const int64_t[::1] users, const int64_t[::1] items,
                    const double[::1] values, double lr) noexcept nogil:
    cdef Py_ssize_t n, k, d = U.shape[1]
    cdef int64_t u, j
    cdef double e, uk, vk, nu, nv
    for n in range(users.shape[0]):
        u = users[n]
        j = items[n]
        e = 0.0
        for k in range(d):
            e = e + U[u, k] * V[j, k]
        e = values[n] - e
        for k in range(d):
            uk = U[u, k]
            vk = V[j, k]
            nu = uk + 2.0 * lr * e * vk
            nv = vk + 2.0 * lr * e * uk
            if not (isfinite(nu) and isfinite(nv)):
                return n
            U[u, k] = nu
            V[j, k] = nv
    return -1


cdef Py_ssize_t _bpr(double[:, ::1] U, double[:, ::1] V,
                     const int64_t[::1] I, const int64_t[::1] J,
                     const int64_t[::1] K, const int64_t[::1] T,
                     double lr, double *buf) noexcept nogil:
    cdef Py_ssize_t n, k, d = U.shape[1]
    cdef int64_t i, j, kk, t
    cdef double xij, xkt, a
    cdef double *ui = buf
    cdef double *vj = buf + d
    cdef double *uk = buf + 2 * d
    cdef double *vt = buf + 3 * d
    for n in range(I.shape[0]):
        i = I[n]
        j = J[n]
        kk = K[n]
        t = T[n]
        xij = 0.0
        xkt = 0.0
        for k in range(d):
            ui[k] = U[i, k]
            vj[k] = V[j, k]
            uk[k] = U[kk, k]
            vt[k] = V[t, k]
            xij = xij + ui[k] * vj[k]
            xkt = xkt + uk[k] * vt[k]
        a = lr * (1.0 / (1.0 + exp(xij - xkt)))
        for k in range(d):
            U[i, k] = U[i, k] + a * vj[k]
            V[j, k] = V[j, k] + a * ui[k]
            U[kk, k] = U[kk, k] - a * vt[k]
            V[t, k] = V[t, k] - a * uk[k]
        for k in range(d):
            if not (isfinite(U[i, k]) and isfinite(V[j, k])
                    and isfinite(U[kk, k]) and isfinite(V[t, k])):
                return n
    return -1


def listwise_steps(double[:, ::1] U, double[:, ::1] V,
                   const int64_t[::1] users, const int64_t[::1] items,
                   double lr, double eps, double cap):
    cdef Py_ssize_t failed
    with nogil:
        failed = _listwise(U, V, users, items, lr, eps, cap)
    return failed


def mf_steps(double[:, ::1] U, double[:, ::1] V,
             const int64_t[::1] users, const int64_t[::1] items,
             const double[::1] values, double lr):
    cdef Py_ssize_t failed
    with nogil:
        failed = _mf(U, V, users, items, values, lr)
    return failed


def bpr_steps(double[:, ::1] U, double[:, ::1] V,
              const int64_t[::1] I, const int64_t[::1] J,
              const int64_t[::1] K, const int64_t[::1] T, double lr):
    cdef Py_ssize_t failed
    cdef double *buf = <double *> malloc(4 * U.shape[1] * sizeof(double))
    if buf == NULL:
        raise MemoryError()
    with nogil:
        failed = _bpr(U, V, I, J, K, T, lr, buf)
    free(buf)
    return failed

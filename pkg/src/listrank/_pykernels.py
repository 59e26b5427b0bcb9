"""Pure-Python SGD kernels.

Used when the compiled extension is unavailable. Each function performs the
same floating-point operations in the same order as ``_core.pyx``, so both
backends produce bit-identical factors.
"""

import math

import numpy as np


def _rows(M):
    return M.tolist()


def _store(M, rows):
    M[...] = np.asarray(rows, dtype=np.float64).reshape(M.shape)


def listwise_steps(U, V, users, items, lr, eps, cap):
    Ul, Vl = _rows(U), _rows(V)
    d = U.shape[1]
    log, exp, isfinite = math.log, math.exp, math.isfinite
    failed = -1
    for n, (u, j) in enumerate(zip(users.tolist(), items.tolist())):
        ur, vr = Ul[u], Vl[j]
        x = 0.0
        for k in range(d):
            x = x + ur[k] * vr[k]
        if x < eps:
            x = eps
        lx = log(x)
        try:
            s = exp(x * lx) * (1.0 + lx)
        except OverflowError:
            s = math.inf * (1.0 + lx)
        for k in range(d):
            uk = ur[k]
            vk = vr[k]
            nu = uk + lr * s * vk
            nv = vk + lr * s * uk
            if not (isfinite(nu) and isfinite(nv)):
                failed = n
                break
            if nu < 0.0:
                nu = 0.0
            elif nu > cap:
                nu = cap
            if nv < 0.0:
                nv = 0.0
            elif nv > cap:
                nv = cap
            ur[k] = nu
            vr[k] = nv
        if failed >= 0:
            break
    _store(U, Ul)
    _store(V, Vl)
    return failed


def mf_steps(U, V, users, items, values, lr):
    Ul, Vl = _rows(U), _rows(V)
    d = U.shape[1]
    isfinite = math.isfinite
    failed = -1
    for n, (u, j, r) in enumerate(zip(users.tolist(), items.tolist(), values.tolist())):
        ur, vr = Ul[u], Vl[j]
        e = 0.0
        for k in range(d):
            e = e + ur[k] * vr[k]
        e = r - e
        for k in range(d):
            uk = ur[k]
            vk = vr[k]
            nu = uk + 2.0 * lr * e * vk
            nv = vk + 2.0 * lr * e * uk
            if not (isfinite(nu) and isfinite(nv)):
                failed = n
                break
            ur[k] = nu
            vr[k] = nv
        if failed >= 0:
            break
    _store(U, Ul)
    _store(V, Vl)
    return failed


def bpr_steps(U, V, I, J, K, T, lr):
    Ul, Vl = _rows(U), _rows(V)
    d = U.shape[1]
    exp, isfinite = math.exp, math.isfinite
    failed = -1
    for n, (i, j, kk, t) in enumerate(zip(I.tolist(), J.tolist(), K.tolist(), T.tolist())):
        ui, vj, uk, vt = Ul[i][:], Vl[j][:], Ul[kk][:], Vl[t][:]
        xij = 0.0
        xkt = 0.0
        for k in range(d):
            xij = xij + ui[k] * vj[k]
            xkt = xkt + uk[k] * vt[k]
        try:
            a = lr * (1.0 / (1.0 + exp(xij - xkt)))
        except OverflowError:
            # C's exp returns inf here, giving exactly zero
            a = lr * 0.0
        Ui, Vj, Uk, Vt = Ul[i], Vl[j], Ul[kk], Vl[t]
        for k in range(d):
            Ui[k] = Ui[k] + a * vj[k]
            Vj[k] = Vj[k] + a * ui[k]
            Uk[k] = Uk[k] - a * vt[k]
            Vt[k] = Vt[k] - a * uk[k]
        for k in range(d):
            if not (isfinite(Ui[k]) and isfinite(Vj[k]) and isfinite(Uk[k]) and isfinite(Vt[k])):
                failed = n
                break
        if failed >= 0:
            break
    _store(U, Ul)
    _store(V, Vl)
    return failed

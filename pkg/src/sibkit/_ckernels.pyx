# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels. Same contracts as ``sibkit._pykernels``."""
import numpy as np
cimport numpy as cnp
from libc.math cimport log, exp, fabs, INFINITY, isfinite

cnp.import_array()

BACKEND = "cython"
cdef double LN2 = 0.6931471805599453


cdef void _derived(const double[:, ::1] w, const double[:, ::1] pxy,
                   const double[:, :, ::1] pyp, const double[:, :, ::1] pys,
                   double[:, ::1] pvy, double[:, :, ::1] qp, double[:, :, ::1] qs) noexcept nogil:
    cdef Py_ssize_t nx = w.shape[0], nv = w.shape[1], ny = pxy.shape[1]
    cdef Py_ssize_t nyp = pyp.shape[2], nys = pys.shape[2]
    cdef Py_ssize_t x, y, v, k
    cdef double a, m
    for v in range(nv):
        for y in range(ny):
            pvy[v, y] = 0.0
            for k in range(nyp):
                qp[v, y, k] = 0.0
            for k in range(nys):
                qs[v, y, k] = 0.0
    for x in range(nx):
        for y in range(ny):
            if pxy[x, y] <= 0.0:
                continue
            for v in range(nv):
                a = pxy[x, y] * w[x, v]
                if a == 0.0:
                    continue
                pvy[v, y] += a
                for k in range(nyp):
                    qp[v, y, k] += a * pyp[x, y, k]
                for k in range(nys):
                    qs[v, y, k] += a * pys[x, y, k]
    for v in range(nv):
        for y in range(ny):
            m = pvy[v, y]
            if m > 0.0:
                for k in range(nyp):
                    qp[v, y, k] /= m
                for k in range(nys):
                    qs[v, y, k] /= m


cdef void _negent(const double[:, :, ::1] pc, double[:, ::1] out) noexcept nogil:
    # out[x, y] = sum_k p log p
    cdef Py_ssize_t x, y, k
    cdef double s, p
    for x in range(pc.shape[0]):
        for y in range(pc.shape[1]):
            s = 0.0
            for k in range(pc.shape[2]):
                p = pc[x, y, k]
                if p > 0.0:
                    s += p * log(p)
            out[x, y] = s


cdef void _kl(const double[:, :, ::1] pc, const double[:, ::1] negent, const double[:, :, ::1] q,
              double[:, :, ::1] logq, double[:, :, ::1] out) noexcept nogil:
    # out[x, y, v] = KL(pc[x, y] || q[v, y]) in nats, INFINITY off-support
    cdef Py_ssize_t nx = pc.shape[0], ny = pc.shape[1], nk = pc.shape[2], nv = q.shape[0]
    cdef Py_ssize_t x, y, v, k
    cdef double s, p
    cdef bint hole
    for v in range(nv):
        for y in range(ny):
            for k in range(nk):
                logq[v, y, k] = log(q[v, y, k]) if q[v, y, k] > 0.0 else -INFINITY
    for x in range(nx):
        for y in range(ny):
            for v in range(nv):
                s = 0.0
                hole = False
                for k in range(nk):
                    p = pc[x, y, k]
                    if p > 0.0:
                        if logq[v, y, k] == -INFINITY:
                            hole = True
                            break
                        s += p * logq[v, y, k]
                out[x, y, v] = INFINITY if hole else negent[x, y] - s


cdef int _step(double[:, ::1] w, double[:, ::1] out,
               const double[:, ::1] pxy, const double[:, :, ::1] pyp, const double[:, :, ::1] pys,
               double beta, double gamma, double prob_floor,
               double[:, ::1] pvy, double[:, :, ::1] qp, double[:, :, ::1] qs,
               double[:, :, ::1] klp, double[:, :, ::1] kls,
               const double[:, ::1] negp, const double[:, ::1] negs,
               double[:, :, ::1] lqp, double[:, :, ::1] lqs,
               double[::1] px, double[::1] py, double[::1] expo) noexcept nogil:
    cdef Py_ssize_t nx = w.shape[0], nv = w.shape[1], ny = pxy.shape[1]
    cdef Py_ssize_t x, y, v
    cdef double t, pyx, m, s, lp
    cdef bint dead
    cdef int resets = 0
    _derived(w, pxy, pyp, pys, pvy, qp, qs)
    if beta != 0.0:
        _kl(pyp, negp, qp, lqp, klp)
        if gamma != 0.0:
            _kl(pys, negs, qs, lqs, kls)
    for x in range(nx):
        if px[x] <= 0.0:
            for v in range(nv):
                out[x, v] = w[x, v]
            continue
        for v in range(nv):
            s = 0.0
            dead = False
            for y in range(ny):
                if pxy[x, y] <= 0.0:
                    continue
                pyx = pxy[x, y] / px[x]
                lp = pvy[v, y] / py[y]
                if lp <= 0.0:
                    dead = True
                    break
                t = log(lp)
                if beta != 0.0:
                    if not isfinite(klp[x, y, v]):
                        dead = True
                        break
                    t -= beta * klp[x, y, v]
                    if gamma != 0.0:
                        if not isfinite(kls[x, y, v]):
                            dead = True
                            break
                        t += beta * gamma * kls[x, y, v]
                s += pyx * t
            expo[v] = -INFINITY if dead else s
        m = -INFINITY
        for v in range(nv):
            if expo[v] > m:
                m = expo[v]
        if not isfinite(m):
            for v in range(nv):
                out[x, v] = 1.0 / nv
            resets += 1
            continue
        s = 0.0
        for v in range(nv):
            expo[v] = exp(expo[v] - m)
            s += expo[v]
        t = 0.0
        for v in range(nv):
            expo[v] /= s
            if expo[v] < prob_floor:
                expo[v] = 0.0
            t += expo[v]
        for v in range(nv):
            out[x, v] = expo[v] / t
    return resets


cdef class _Work:
    cdef public object pvy, qp, qs, klp, kls, px, py, expo, negp, negs, lqp, lqs

    def __init__(self, Py_ssize_t nx, Py_ssize_t ny, Py_ssize_t nv, Py_ssize_t nyp, Py_ssize_t nys,
                 pxy):
        self.pvy = np.zeros((nv, ny))
        self.qp = np.zeros((nv, ny, nyp))
        self.qs = np.zeros((nv, ny, nys))
        self.klp = np.zeros((nx, ny, nv))
        self.kls = np.zeros((nx, ny, nv))
        self.px = np.ascontiguousarray(pxy.sum(axis=1))
        self.py = np.ascontiguousarray(pxy.sum(axis=0))
        self.expo = np.zeros(nv)
        self.negp = np.zeros((nx, ny))
        self.negs = np.zeros((nx, ny))
        self.lqp = np.zeros((nv, ny, nyp))
        self.lqs = np.zeros((nv, ny, nys))

    def prepare(self, pyp, pys):
        _negent(pyp, self.negp)
        _negent(pys, self.negs)


def _prep(w, pxy, pyp, pys):
    return (np.array(w, dtype=np.float64, order="C", copy=True),
            np.ascontiguousarray(pxy, dtype=np.float64),
            np.ascontiguousarray(pyp, dtype=np.float64),
            np.ascontiguousarray(pys, dtype=np.float64))


def posteriors(w, pxy, pyp, pys):
    w, pxy, pyp, pys = _prep(w, pxy, pyp, pys)
    nx, nv = w.shape
    ny = pxy.shape[1]
    pvy = np.zeros((nv, ny))
    qp = np.zeros((nv, ny, pyp.shape[2]))
    qs = np.zeros((nv, ny, pys.shape[2]))
    _derived(w, pxy, pyp, pys, pvy, qp, qs)
    py = pxy.sum(axis=0)
    pv_y = np.where(py[None, :] > 0, pvy / np.where(py > 0, py, 1.0)[None, :], 0.0)
    return pv_y.T.copy(), qp, qs


def sib_step(w, pxy, pyp, pys, double beta, double gamma, double prob_floor):
    w, pxy, pyp, pys = _prep(w, pxy, pyp, pys)
    nx, nv = w.shape
    work = _Work(nx, pxy.shape[1], nv, pyp.shape[2], pys.shape[2], pxy)
    out = np.empty_like(w)
    cdef int resets
    cdef double[:, ::1] w_v = w, out_v = out
    cdef const double[:, ::1] pxy_v = pxy
    cdef const double[:, :, ::1] pyp_v = pyp, pys_v = pys
    cdef double[:, ::1] pvy_v = work.pvy
    cdef double[:, :, ::1] qp_v = work.qp, qs_v = work.qs, klp_v = work.klp, kls_v = work.kls
    cdef double[::1] px_v = work.px, py_v = work.py, ex_v = work.expo
    work.prepare(pyp, pys)
    cdef double[:, ::1] negp_v = work.negp, negs_v = work.negs
    cdef double[:, :, ::1] lqp_v = work.lqp, lqs_v = work.lqs
    with nogil:
        resets = _step(w_v, out_v, pxy_v, pyp_v, pys_v, beta, gamma, prob_floor,
                       pvy_v, qp_v, qs_v, klp_v, kls_v,
                       negp_v, negs_v, lqp_v, lqs_v, px_v, py_v, ex_v)
    return out, resets


def sib_iterate(w, pxy, pyp, pys, double beta, double gamma, double tol, long max_iters,
                double prob_floor, reseeded=None):
    w, pxy, pyp, pys = _prep(w, pxy, pyp, pys)
    nx, nv = w.shape
    work = _Work(nx, pxy.shape[1], nv, pyp.shape[2], pys.shape[2], pxy)
    if reseeded is None:
        reseeded = np.zeros(nv, dtype=bool)
    seed_flags = np.ascontiguousarray(reseeded, dtype=np.uint8)
    new = np.empty_like(w)
    cdef double[:, ::1] a = w, b = new, tmp
    cdef const double[:, ::1] pxy_v = pxy
    cdef const double[:, :, ::1] pyp_v = pyp, pys_v = pys
    cdef double[:, ::1] pvy_v = work.pvy
    cdef double[:, :, ::1] qp_v = work.qp, qs_v = work.qs, klp_v = work.klp, kls_v = work.kls
    cdef double[::1] px_v = work.px, py_v = work.py, ex_v = work.expo
    work.prepare(pyp, pys)
    cdef double[:, ::1] negp_v = work.negp, negs_v = work.negs
    cdef double[:, :, ::1] lqp_v = work.lqp, lqs_v = work.lqs
    cdef unsigned char[::1] sf = seed_flags
    cdef long it = 0
    cdef int resets = 0, reseeds = 0
    cdef bint converged = False, revived
    cdef double delta, d, mass, s
    cdef Py_ssize_t x, v, nxx = nx, nvv = nv
    with nogil:
        while it < max_iters:
            it += 1
            resets += _step(a, b, pxy_v, pyp_v, pys_v, beta, gamma, prob_floor,
                            pvy_v, qp_v, qs_v, klp_v, kls_v,
                       negp_v, negs_v, lqp_v, lqs_v, px_v, py_v, ex_v)
            delta = 0.0
            for x in range(nxx):
                for v in range(nvv):
                    d = fabs(b[x, v] - a[x, v])
                    if d > delta:
                        delta = d
            tmp = a
            a = b
            b = tmp
            revived = False
            for v in range(nvv):
                if sf[v]:
                    continue
                mass = 0.0
                for x in range(nxx):
                    mass += px_v[x] * a[x, v]
                if mass < prob_floor * nxx:
                    sf[v] = 1
                    reseeds += 1
                    revived = True
                    for x in range(nxx):
                        a[x, v] = 1.0 / nvv
            if revived:
                for x in range(nxx):
                    s = 0.0
                    for v in range(nvv):
                        s += a[x, v]
                    for v in range(nvv):
                        a[x, v] /= s
                continue
            if delta < tol:
                converged = True
                break
    result = np.asarray(a).copy()
    reseeded[...] = seed_flags.astype(bool)
    return result, int(it), bool(converged), int(resets), int(reseeds)


def triples(ws, pxy, pyp, pys):
    ws = np.ascontiguousarray(ws, dtype=np.float64)
    if ws.ndim == 2:
        ws = ws[None]
    pxy = np.ascontiguousarray(pxy, dtype=np.float64)
    pyp = np.ascontiguousarray(pyp, dtype=np.float64)
    pys = np.ascontiguousarray(pys, dtype=np.float64)
    cdef Py_ssize_t n = ws.shape[0], nx = ws.shape[1], nv = ws.shape[2]
    cdef Py_ssize_t ny = pxy.shape[1], nyp = pyp.shape[2], nys = pys.shape[2]
    out = np.empty((n, 3))
    pvy = np.zeros((nv, ny))
    qp = np.zeros((nv, ny, nyp))
    qs = np.zeros((nv, ny, nys))
    cdef const double[:, :, ::1] ws_v = ws
    cdef const double[:, ::1] pxy_v = pxy
    cdef const double[:, :, ::1] pyp_v = pyp, pys_v = pys
    cdef double[:, ::1] out_v = out, pvy_v = pvy
    cdef double[:, :, ::1] qp_v = qp, qs_v = qs
    cdef double[::1] py_v = np.ascontiguousarray(pxy.sum(axis=0))
    cdef double h_yp = _ent(np.einsum("xy,xyk->k", pxy, pyp))
    cdef double h_ys = _ent(np.einsum("xy,xyk->k", pxy, pys))
    cdef Py_ssize_t i, x, y, v, k
    cdef double rate, hp, hs, a, wv, q, m
    with nogil:
        for i in range(n):
            _derived(ws_v[i], pxy_v, pyp_v, pys_v, pvy_v, qp_v, qs_v)
            rate = 0.0
            for x in range(nx):
                for y in range(ny):
                    if pxy_v[x, y] <= 0.0:
                        continue
                    for v in range(nv):
                        wv = ws_v[i, x, v]
                        if wv > 0.0:
                            rate += pxy_v[x, y] * wv * (log(wv) - log(pvy_v[v, y] / py_v[y]))
            hp = 0.0
            hs = 0.0
            for v in range(nv):
                for y in range(ny):
                    m = pvy_v[v, y]
                    if m <= 0.0:
                        continue
                    for k in range(nyp):
                        q = qp_v[v, y, k]
                        if q > 0.0:
                            hp -= m * q * log(q)
                    for k in range(nys):
                        q = qs_v[v, y, k]
                        if q > 0.0:
                            hs -= m * q * log(q)
            out_v[i, 0] = rate / LN2
            out_v[i, 1] = (h_yp - hp) / LN2
            out_v[i, 2] = (h_ys - hs) / LN2
            for k in range(3):
                if out_v[i, k] < 0.0:
                    out_v[i, k] = 0.0
    return out


def _ent(p):
    p = p[p > 0]
    return float(-np.sum(p * np.log(p)))

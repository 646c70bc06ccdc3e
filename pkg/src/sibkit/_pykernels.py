"""Pure numpy kernels; the reference semantics for the compiled backend.

Problem arrays shared by every kernel:
    pxy  (nx, ny)        p(x, y)
    pyp  (nx, ny, nyp)   p(yp | x, y), zero rows where p(x, y) = 0
    pys  (nx, ny, nys)   p(ys | x, y), likewise
Channels ``w`` are (nx, nv) row-stochastic arrays p(v | x).
"""
from __future__ import annotations

import numpy as np

LN2 = np.log(2.0)
BACKEND = "python"


def _cond_given_vy(pxy, w, pcond):
    # p(v, y) and p(k | v, y) for k = yp or ys
    pvy = np.einsum("xy,xv->vy", pxy, w)
    joint = np.einsum("xy,xv,xyk->vyk", pxy, w, pcond)
    with np.errstate(invalid="ignore", divide="ignore"):
        post = np.where(pvy[..., None] > 0, joint / pvy[..., None], 0.0)
    return pvy, post


def posteriors(w, pxy, pyp, pys):
    """p(v|y) as (ny, nv), p(yp|v,y) as (nv, ny, nyp), p(ys|v,y) as (nv, ny, nys)."""
    w = np.asarray(w, dtype=float)
    py = pxy.sum(axis=0)
    pvy, post_p = _cond_given_vy(pxy, w, pyp)
    _, post_s = _cond_given_vy(pxy, w, pys)
    with np.errstate(invalid="ignore", divide="ignore"):
        pv_y = np.where(py[None, :] > 0, pvy / py[None, :], 0.0)
    return pv_y.T.copy(), post_p, post_s


def _kl_nats(pcond, post):
    """KL(p(.|x,y) || q(.|v,y)) in nats, shape (nx, ny, nv); inf off-support."""
    with np.errstate(divide="ignore"):
        logq = np.where(post > 0, np.log(np.where(post > 0, post, 1.0)), 0.0)
        logp = np.where(pcond > 0, np.log(np.where(pcond > 0, pcond, 1.0)), 0.0)
    negent = np.sum(pcond * logp, axis=-1)
    cross = np.einsum("xyk,vyk->xyv", pcond, logq)
    hole = np.einsum("xyk,vyk->xyv", (pcond > 0).astype(float), (post <= 0).astype(float)) > 0
    kl = negent[..., None] - cross
    kl[hole] = np.inf
    return kl


def sib_step(w, pxy, pyp, pys, beta, gamma, prob_floor):
    """One fixed-point update. Returns (new w, number of rows reset to uniform)."""
    w = np.asarray(w, dtype=float)
    nx, nv = w.shape
    px = pxy.sum(axis=1)
    py = pxy.sum(axis=0)
    pvy, post_p = _cond_given_vy(pxy, w, pyp)
    _, post_s = _cond_given_vy(pxy, w, pys)

    with np.errstate(invalid="ignore", divide="ignore"):
        pv_y = np.where(py[None, :] > 0, pvy / py[None, :], 0.0)  # (nv, ny)
        logpv = np.where(pv_y > 0, np.log(np.where(pv_y > 0, pv_y, 1.0)), -np.inf)
    term = np.broadcast_to(logpv.T[None, :, :], (nx,) + logpv.T.shape).copy()  # (nx, ny, nv)
    if beta != 0.0:
        klp = _kl_nats(pyp, post_p)
        dead = ~np.isfinite(klp)
        term -= beta * np.where(dead, 0.0, klp)
        term[dead] = -np.inf
        if gamma != 0.0:
            kls = _kl_nats(pys, post_s)
            dead = ~np.isfinite(kls)
            term += beta * gamma * np.where(dead, 0.0, kls)
            term[dead] = -np.inf

    with np.errstate(invalid="ignore", divide="ignore"):
        pyx = np.where(px[:, None] > 0, pxy / np.where(px[:, None] > 0, px[:, None], 1.0), 0.0)
    active = pyx > 0
    contrib = np.where(active[..., None], term, 0.0)
    contrib = np.where(active[..., None], pyx[..., None] * contrib, 0.0)
    expo = contrib.sum(axis=1)
    expo[np.any(active[..., None] & np.isneginf(term), axis=1)] = -np.inf

    out = np.array(w, copy=True)
    live = px > 0
    m = expo.max(axis=1)
    dead = live & ~np.isfinite(m)
    ok = live & np.isfinite(m)
    with np.errstate(invalid="ignore"):
        e = np.exp(expo[ok] - m[ok, None])
    e /= e.sum(axis=1, keepdims=True)
    e[e < prob_floor] = 0.0
    out[ok] = e / e.sum(axis=1, keepdims=True)
    out[dead] = 1.0 / nv
    return out, int(dead.sum())


def sib_iterate(w, pxy, pyp, pys, beta, gamma, tol, max_iters, prob_floor, reseeded=None):
    """Iterate ``sib_step`` to a fixed point.

    Returns (w, iterations, converged, rows reset, symbols reseeded). A symbol
    whose mass drops below ``prob_floor * nx`` is reseeded to a uniform column
    once; ``reseeded`` (bool array, updated in place) records which.
    """
    w = np.array(w, dtype=float, copy=True)
    nx, nv = w.shape
    px = pxy.sum(axis=1)
    if reseeded is None:
        reseeded = np.zeros(nv, dtype=bool)
    resets = reseeds = 0
    converged = False
    it = 0
    while it < max_iters:
        it += 1
        new, r = sib_step(w, pxy, pyp, pys, beta, gamma, prob_floor)
        resets += r
        delta = np.max(np.abs(new - w))
        w = new
        mass = px @ w
        revive = (mass < prob_floor * nx) & ~reseeded
        if np.any(revive):
            w[:, revive] = 1.0 / nv
            w /= w.sum(axis=1, keepdims=True)
            reseeded |= revive
            reseeds += int(revive.sum())
            continue
        if delta < tol:
            converged = True
            break
    return w, it, converged, resets, reseeds


def triples(ws, pxy, pyp, pys):
    """(I(X;V|Y), I(Yp;V,Y), I(Ys;V,Y)) in bits for a stack of channels (N, nx, nv)."""
    ws = np.asarray(ws, dtype=float)
    if ws.ndim == 2:
        ws = ws[None]
    py = pxy.sum(axis=0)
    out = np.empty((ws.shape[0], 3))
    h_yp = _entropy_nats(np.einsum("xy,xyk->k", pxy, pyp))
    h_ys = _entropy_nats(np.einsum("xy,xyk->k", pxy, pys))
    pvy = np.einsum("xy,nxv->nvy", pxy, ws)
    with np.errstate(invalid="ignore", divide="ignore"):
        pv_y = np.where(py > 0, pvy / np.where(py > 0, py, 1.0), 0.0)
        # I(X;V|Y) = sum p(x,y) w log(w / p(v|y))
        num = np.where(ws > 0, np.log(np.where(ws > 0, ws, 1.0)), 0.0)
        den = np.where(pv_y > 0, np.log(np.where(pv_y > 0, pv_y, 1.0)), 0.0)
    rate = (np.einsum("xy,nxv,nxv->n", pxy, ws, num)
            - np.einsum("xy,nxv,nvy->n", pxy, ws, den))
    out[:, 0] = rate
    out[:, 1] = h_yp - _cond_entropy_nats(pxy, ws, pyp, pvy)
    out[:, 2] = h_ys - _cond_entropy_nats(pxy, ws, pys, pvy)
    out /= LN2
    np.maximum(out, 0.0, out=out)
    return out


def _entropy_nats(p):
    p = p[p > 0]
    return float(-np.sum(p * np.log(p)))


def _cond_entropy_nats(pxy, ws, pcond, pvy):
    joint = np.einsum("xy,nxv,xyk->nvyk", pxy, ws, pcond)
    with np.errstate(invalid="ignore", divide="ignore"):
        ratio = np.where(joint > 0, joint / np.where(pvy[..., None] > 0, pvy[..., None], 1.0), 1.0)
        return -np.sum(np.where(joint > 0, joint * np.log(ratio), 0.0), axis=(1, 2, 3))

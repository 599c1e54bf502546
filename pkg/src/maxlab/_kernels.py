"""Compiled 1D kernels for exact maximal-function norms on the whole line.

``F`` denotes the cumulative mass at cell boundaries ``0, h, ..., N h``.
The right-sided maximal function at a point ``x`` is the largest slope from
``(x, F(x))`` to a boundary point to its right, i.e. the tangent from that
point to the upper hull of the boundary points.  Outside the grid the
maximal functions are upper envelopes of hyperbolas ``c / (y + a)``, whose
reciprocals are lines, so their ``L^p`` tails integrate in closed form.
Inside a cell ``[a, a + h]`` with value ``v`` the same holds piecewise:
``M_R f(x) = v + D / (b - x)`` between consecutive tangent changes, so the
norms used by the search are exact on the whole line.
"""
from __future__ import annotations

import math

import numpy as np
from numba import njit

KIND_UNCENTERED = 0
KIND_DYADIC = 1
KIND_ONE_SIDED = 2

_GL_X, _GL_W = np.polynomial.legendre.leggauss(16)


@njit(cache=True)
def _slope(x0, y0, x1, y1):
    return (y1 - y0) / (x1 - x0)


@njit(cache=True)
def right_maximal_centers(v, h):
    """``sup_{b > x} avg_[x, b] f`` at every cell center, in O(N log N)."""
    n = v.size
    F = np.empty(n + 1)
    F[0] = 0.0
    for i in range(n):
        F[i + 1] = F[i] + v[i] * h
    out = np.empty(n)
    hx = np.empty(n + 1)  # hull stack, top = leftmost point
    hy = np.empty(n + 1)
    top = -1
    for i in range(n - 1, -1, -1):
        # add boundary i + 1
        px = (i + 1) * h
        py = F[i + 1]
        while top >= 1 and _slope(px, py, hx[top], hy[top]) <= _slope(hx[top], hy[top], hx[top - 1], hy[top - 1]):
            top -= 1
        top += 1
        hx[top] = px
        hy[top] = py
        qx = (i + 0.5) * h
        qy = F[i] + 0.5 * h * v[i]
        # hull left to right is hx[top], hx[top-1], ..., hx[0]; find the tangent vertex
        lo = 0
        hi = top  # positions counted from the left: pos k -> stack index top - k
        while lo < hi:
            mid = (lo + hi) // 2
            a = top - mid
            b = a - 1
            if _slope(hx[a], hy[a], hx[b], hy[b]) > _slope(qx, qy, hx[a], hy[a]):
                lo = mid + 1
            else:
                hi = mid
        a = top - lo
        out[i] = _slope(qx, qy, hx[a], hy[a])
    return out


@njit(cache=True)
def right_maximal_left_tail(v, h, p):
    """``int_{-inf}^{0} (M_R f)^p`` for ``f`` supported on ``[0, N h]``.

    For ``y = -x > 0``, ``M_R f(x) = max_k F_k / (b_k + y)``; the reciprocal
    is the lower envelope of the lines ``(y + b_k) / F_k``.
    """
    n = v.size
    s = np.empty(n)
    c = np.empty(n)
    m = 0
    F = 0.0
    last_slope = np.inf
    for k in range(1, n + 1):
        F += v[k - 1] * h
        if F <= 0.0:
            continue
        sk = 1.0 / F
        ck = (k * h) / F
        if sk == last_slope:
            continue  # same slope, larger intercept
        s[m] = sk
        c[m] = ck
        last_slope = sk
        m += 1
    if m == 0:
        return 0.0
    # slopes are decreasing; build the lower envelope
    hs = np.empty(m)
    hc = np.empty(m)
    top = -1
    for j in range(m):
        while top >= 0:
            if hc[top] >= c[j]:
                top -= 1
                continue
            if top >= 1:
                x12 = (hc[top] - hc[top - 1]) / (hs[top - 1] - hs[top])
                x13 = (c[j] - hc[top - 1]) / (hs[top - 1] - s[j])
                if x13 <= x12:
                    top -= 1
                    continue
            break
        top += 1
        hs[top] = s[j]
        hc[top] = c[j]
    total = 0.0
    start = 0.0
    for j in range(top + 1):
        if j < top:
            end = (hc[j + 1] - hc[j]) / (hs[j] - hs[j + 1])
        else:
            end = np.inf
        if end > start:
            a = hs[j] * start + hc[j]
            if end == np.inf:
                total += a ** (1.0 - p) / (hs[j] * (p - 1.0))
            else:
                b = hs[j] * end + hc[j]
                total += (a ** (1.0 - p) - b ** (1.0 - p)) / (hs[j] * (p - 1.0))
            start = end
    return total


@njit(cache=True)
def uncentered_centers(v, h):
    r = right_maximal_centers(v, h)
    l = right_maximal_centers(v[::-1].copy(), h)[::-1]
    return np.maximum(r, l)


@njit(cache=True)
def _hyp_int(v, D, ua, ub, p):
    """``int_ua^ub (v + D / u)**p du`` for ``0 < ua``; Gauss-Legendre in ``log u`` unless ``p = 2``."""
    if ub <= ua:
        return 0.0
    if D <= 0.0:
        return v**p * (ub - ua)
    if p == 2.0:
        return v * v * (ub - ua) + 2.0 * v * D * math.log(ub / ua) + D * D * (1.0 / ua - 1.0 / ub)
    wa = math.log(ua)
    wb = math.log(ub)
    mid = 0.5 * (wa + wb)
    half = 0.5 * (wb - wa)
    total = 0.0
    for k in range(_GL_X.size):
        w = mid + half * _GL_X[k]
        u = math.exp(w)
        total += _GL_W[k] * (v + D / u) ** p * u
    return total * half


@njit(cache=True)
def right_pieces(v, h):
    """Pieces of ``M_R f`` inside each cell.

    Cell ``i`` owns rows ``start[i]:start[i + 1]``; row ``r`` covers offsets
    ``[t0[r], t1[r]]`` from the cell's left edge, where
    ``M_R f = v[i] + D[r] / (b[r] - t)`` (``b`` also an offset, ``D >= 0``).
    """
    n = v.size
    F = np.empty(n + 1)
    F[0] = 0.0
    for i in range(n):
        F[i + 1] = F[i] + v[i] * h
    cap = 4 * n + 16
    t0 = np.empty(cap)
    t1 = np.empty(cap)
    Ds = np.empty(cap)
    bs = np.empty(cap)
    cell = np.empty(cap, dtype=np.int64)
    m = 0
    hx = np.empty(n + 1)
    hy = np.empty(n + 1)
    top = -1
    for i in range(n - 1, -1, -1):
        px = (i + 1) * h
        py = F[i + 1]
        while top >= 1 and _slope(px, py, hx[top], hy[top]) <= _slope(hx[top], hy[top], hx[top - 1], hy[top - 1]):
            top -= 1
        top += 1
        hx[top] = px
        hy[top] = py
        a = i * h
        lo = 0
        hi = top
        while lo < hi:
            mid = (lo + hi) // 2
            ka = top - mid
            kb = ka - 1
            if _slope(hx[ka], hy[ka], hx[kb], hy[kb]) > _slope(a, F[i], hx[ka], hy[ka]):
                lo = mid + 1
            else:
                hi = mid
        pos = lo
        x = 0.0
        while True:
            if m + 1 >= cap:
                cap *= 2
                t0 = np.concatenate((t0, np.empty(cap - t0.size)))
                t1 = np.concatenate((t1, np.empty(cap - t1.size)))
                Ds = np.concatenate((Ds, np.empty(cap - Ds.size)))
                bs = np.concatenate((bs, np.empty(cap - bs.size)))
                cell = np.concatenate((cell, np.empty(cap - cell.size, dtype=np.int64)))
            if pos == 0:
                t0[m] = x
                t1[m] = h
                Ds[m] = 0.0
                bs[m] = h
                cell[m] = i
                m += 1
                break
            k = top - pos
            D = hy[k] - F[i] - v[i] * (hx[k] - a)
            k2 = k + 1
            s = _slope(hx[k2], hy[k2], hx[k], hy[k])
            if v[i] != s:
                xc = (hy[k2] - s * hx[k2] - F[i] + v[i] * a) / (v[i] - s) - a
            else:
                xc = np.inf
            end = h if xc >= h else xc
            if end > x:
                t0[m] = x
                t1[m] = end
                Ds[m] = D if D > 0.0 else 0.0
                bs[m] = hx[k] - a
                cell[m] = i
                m += 1
                x = end
            if xc >= h:
                break
            pos -= 1
    # rows were produced from the last cell backwards; regroup by cell
    start = np.zeros(n + 1, dtype=np.int64)
    for r in range(m):
        start[cell[r] + 1] += 1
    for i in range(n):
        start[i + 1] += start[i]
    fill = start[:n].copy()
    o0 = np.empty(m)
    o1 = np.empty(m)
    oD = np.empty(m)
    ob = np.empty(m)
    for r in range(m):
        j = fill[cell[r]]
        o0[j] = t0[r]
        o1[j] = t1[r]
        oD[j] = Ds[r]
        ob[j] = bs[r]
        fill[cell[r]] += 1
    return start, o0, o1, oD, ob


@njit(cache=True)
def one_sided_inner_p(v, h, p):
    """``int_0^{N h} (M_R f)**p``, exact."""
    start, t0, t1, D, b = right_pieces(v, h)
    total = 0.0
    for i in range(v.size):
        for r in range(start[i], start[i + 1]):
            total += _hyp_int(v[i], D[r], b[r] - t1[r], b[r] - t0[r], p)
    return total


@njit(cache=True)
def uncentered_inner_p(v, h, p):
    """``int_0^{N h} (M f)**p`` with ``M f = max(M_L f, M_R f)``, exact.

    ``M_R f - M_L f`` increases across a cell, so the two cross at most once.
    """
    n = v.size
    sR, r0, r1, rD, rb = right_pieces(v, h)
    sL, l0, l1, lD, lb = right_pieces(v[::-1].copy(), h)
    total = 0.0
    for i in range(n):
        j = n - 1 - i
        ir = sR[i]
        il = sL[j + 1] - 1  # mirrored rows run right to left
        x = 0.0
        while x < h:
            xr = r1[ir]
            xl = h - l0[il]
            end = xr if xr < xl else xl
            DR = rD[ir]
            bR = rb[ir]
            DL = lD[il]
            aL = h - lb[il]  # M_L f = v + DL / (t - aL)
            if DR <= 0.0 and DL <= 0.0:
                total += v[i] ** p * (end - x)
            elif DL <= 0.0:
                total += _hyp_int(v[i], DR, bR - end, bR - x, p)
            elif DR <= 0.0:
                total += _hyp_int(v[i], DL, x - aL, end - aL, p)
            else:
                xs = (DR * aL + DL * bR) / (DR + DL)
                xs = min(max(xs, x), end)
                total += _hyp_int(v[i], DL, x - aL, xs - aL, p)
                total += _hyp_int(v[i], DR, bR - end, bR - xs, p)
            x = end
            if xr <= end and ir < sR[i + 1] - 1:
                ir += 1
            if xl <= end and il > sL[j]:
                il -= 1
            if xr <= end and xl <= end and x >= h:
                break
    return total


@njit(cache=True)
def uncentered_norm_p(v, h, p):
    """``||M f||_p^p`` on the whole line, exact inside and outside the grid."""
    total = uncentered_inner_p(v, h, p)
    total += right_maximal_left_tail(v, h, p)
    total += right_maximal_left_tail(v[::-1].copy(), h, p)
    return total


@njit(cache=True)
def one_sided_norm_p(v, h, p):
    return one_sided_inner_p(v, h, p) + right_maximal_left_tail(v, h, p)


@njit(cache=True)
def dyadic_centers(v):
    """Dyadic maximal function of ``v`` on a root of ``N = 2**k`` cells."""
    n = v.size
    m = v.copy()
    b = 2
    while b <= n:
        for start in range(0, n, b):
            s = 0.0
            for i in range(start, start + b):
                s += v[i]
            s /= b
            for i in range(start, start + b):
                if s > m[i]:
                    m[i] = s
        b *= 2
    return m


@njit(cache=True)
def dyadic_tail(total_mass, side, p):
    """Contribution of the ancestors above the root: ``T^p S^(1-p) r / (2 (1 - r))``, ``r = 2^(1-p)``."""
    r = 2.0 ** (1.0 - p)
    return total_mass**p * side ** (1.0 - p) * 0.5 * r / (1.0 - r)


@njit(cache=True)
def dyadic_norm_p(v, h, p):
    m = dyadic_centers(v)
    total = 0.0
    mass = 0.0
    for i in range(v.size):
        total += m[i] ** p
        mass += v[i]
    return total * h + dyadic_tail(mass * h, v.size * h, p)


@njit(cache=True)
def objective(v, h, p, kind):
    if kind == KIND_UNCENTERED:
        return uncentered_norm_p(v, h, p)
    if kind == KIND_DYADIC:
        return dyadic_norm_p(v, h, p)
    return one_sided_norm_p(v, h, p)


@njit(cache=True)
def anneal(v0, h, p, kind, steps, seed, t0, t1, sigma, p_zero, p_grow):
    """Simulated annealing on ``||M f||_p^p / ||f||_p^p``; returns best state and improvement trace."""
    np.random.seed(seed)
    n = v0.size
    v = v0.copy()
    norm = 0.0
    for i in range(n):
        norm += v[i] ** p
    norm = (norm * h) ** (1.0 / p)
    for i in range(n):
        v[i] /= norm
    fp = 1.0
    cur = objective(v, h, p, kind)
    best = cur
    best_v = v.copy()
    tr_step = np.empty(steps + 1, dtype=np.int64)
    tr_val = np.empty(steps + 1)
    tr_step[0] = 0
    tr_val[0] = best
    n_tr = 1
    for k in range(steps):
        temp = t0 * (t1 / t0) ** (k / max(steps - 1, 1))
        i = np.random.randint(n)
        old = v[i]
        u = np.random.random()
        if u < p_zero:
            new = 0.0
        elif u < p_zero + p_grow:
            j = i + 1 if np.random.random() < 0.5 else i - 1
            if j < 0 or j >= n:
                j = i
            new = v[j] * (0.5 + np.random.random())
        else:
            if old > 0.0:
                new = old * math.exp(sigma * np.random.standard_normal())
            else:
                new = np.random.random() * (fp / (n * h)) ** (1.0 / p)
        fp_new = fp + h * (new**p - old**p)
        if fp_new <= 1e-300:
            continue
        v[i] = new
        cand = objective(v, h, p, kind) / fp_new
        accept = cand <= cur
        if not accept:
            accept = np.random.random() < math.exp(-(cand - cur) / temp)
        if accept:
            cur = cand
            scale = fp_new ** (-1.0 / p)
            for q in range(n):
                v[q] *= scale
            fp = 1.0
            if cur < best:
                best = cur
                best_v[:] = v
                tr_step[n_tr] = k + 1
                tr_val[n_tr] = best
                n_tr += 1
        else:
            v[i] = old
    return best_v, best, tr_step[:n_tr].copy(), tr_val[:n_tr].copy()

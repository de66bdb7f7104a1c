"""Compiled inner loops for the simulation harness.

Every kernel draws from a ``numpy.random.Generator`` passed in by the caller
(numba's legacy ``np.random`` functions are several times slower), so a call
is a pure function of its arguments and of the generator state.
"""

import numpy as np
from numba import njit

EMPTY = np.int64(-(2**63))
# single steps taken between checks of the block rule
BURST = 8


@njit(cache=True)
def _sample_step(rng, cum):
    r = rng.random()
    lo, hi = 0, cum.shape[0] - 1
    while lo < hi:
        mid = (lo + hi) // 2
        if r < cum[mid]:
            hi = mid
        else:
            lo = mid + 1
    return lo


@njit(cache=True)
def binomial(rng, n, p):
    """Binomial variate from the generator; guards the degenerate cases."""
    if n <= 0 or p <= 0.0:
        return 0
    if p >= 1.0:
        return n
    return rng.binomial(n, p)


@njit(cache=True)
def binomial_many(rng, n, p, size):
    out = np.empty(size, dtype=np.int64)
    for i in range(size):
        out[i] = binomial(rng, n, p)
    return out


@njit(cache=True)
def _in_set(pos, pts):
    for i in range(pts.shape[0]):
        hit = True
        for j in range(pts.shape[1]):
            if pts[i, j] != pos[j]:
                hit = False
                break
        if hit:
            return True
    return False


@njit(cache=True, nogil=True)
def occupation_counts(rng, offsets, probs, pts, set_radius, n_walks, radius, step_cap,
                      jump_level, min_jump, var_max):
    """Visits to ``pts`` of walks from the origin, each stopped once ``|X| > radius``.

    Far from the set, a block of ``k`` steps is taken at once by drawing the
    multinomial step counts. To enter the ball holding the set, the walk must
    advance ``D = |X| - set_radius - b`` along the direction of the origin; the
    projection is a martingale with increments at most ``b`` and per-step
    variance at most ``var_max``, so by Freedman's inequality a block of
    ``k <= (D^2 / (2 L) - b D / 3) / var_max`` steps does so with probability at
    most ``exp(-L)``, ``L = jump_level``. Close to the set the isotropic bound
    ``P(max |S_j| >= D) <= 2 exp(-D^2 / (2 k b^2))`` can allow more, and the
    larger of the two block sizes is used.

    Returns visit counts, steps used, blocks taken and a flag per walk that is
    1 when the walk hit ``step_cap`` instead of exiting.
    """
    d = offsets.shape[1]
    m = offsets.shape[0]
    cum = np.cumsum(probs)
    cum[-1] = 1.0
    b = 0.0
    for i in range(m):
        n2 = 0.0
        for j in range(d):
            n2 += offsets[i, j] * offsets[i, j]
        if n2 > b * b:
            b = np.sqrt(n2)
    counts = np.zeros(n_walks, dtype=np.int64)
    steps = np.zeros(n_walks, dtype=np.int64)
    capped = np.zeros(n_walks, dtype=np.int8)
    blocks = np.zeros(n_walks, dtype=np.int64)
    pos = np.zeros(d, dtype=np.int64)
    iso_level = 2.0 * b * b * (jump_level + np.log(2.0))
    r2max = radius * radius
    uniform = True
    for i in range(m):
        if probs[i] != probs[0]:
            uniform = False
    for w in range(n_walks):
        for j in range(d):
            pos[j] = 0
        c = 1 if _in_set(pos, pts) else 0
        t = 0
        while True:
            r2 = 0.0
            for j in range(d):
                r2 += pos[j] * pos[j]
            if r2 > r2max:
                break
            if t >= step_cap:
                capped[w] = 1
                break
            dist = np.sqrt(r2) - set_radius - b
            k = 0
            if dist > 0.0:
                kf = (dist * dist / (2.0 * jump_level) - b * dist / 3.0) / var_max
                kf = max(kf, dist * dist / iso_level)
                if kf > 0.0:
                    k = int(min(kf, 1e15))
                if k > step_cap - t:
                    k = step_cap - t
            if k >= min_jump:
                remaining = k
                mass = 1.0
                for i in range(m):
                    if remaining == 0:
                        break
                    if i == m - 1:
                        ci = remaining
                    else:
                        q = probs[i] / mass
                        if q >= 1.0:
                            ci = remaining
                        else:
                            ci = binomial(rng, remaining, q)
                        mass -= probs[i]
                    if ci:
                        for j in range(d):
                            pos[j] += ci * offsets[i, j]
                    remaining -= ci
                t += k
                blocks[w] += 1
            else:
                # a burst of single steps before the block rule is consulted again
                near = dist < (2 + BURST) * b
                for _ in range(BURST):
                    if uniform:
                        s = int(rng.random() * m)
                    else:
                        s = _sample_step(rng, cum)
                    r2i = 0
                    for j in range(d):
                        pos[j] += offsets[s, j]
                        r2i += pos[j] * pos[j]
                    t += 1
                    if near and _in_set(pos, pts):
                        c += 1
                    if r2i > r2max or t >= step_cap:
                        break
        counts[w] = c
        steps[w] = t
    return counts, steps, blocks, capped


# ---------------------------------------------------------------- visit map

@njit(cache=True)
def _pack(pos, shift, bits):
    key = np.int64(0)
    for j in range(pos.shape[0]):
        key = (key << bits) | np.int64(pos[j] + shift)
    return key


@njit(cache=True)
def _slot(key, mask):
    h = np.uint64(key) * np.uint64(0x9E3779B97F4A7C15)
    h ^= h >> np.uint64(29)
    return np.int64(h & np.uint64(mask))


@njit(cache=True)
def _get(keys, vals, key):
    mask = keys.shape[0] - 1
    i = _slot(key, mask)
    while True:
        k = keys[i]
        if k == key:
            return vals[i]
        if k == EMPTY:
            return 0
        i = (i + 1) & mask


@njit(cache=True)
def _insert_add(keys, vals, key, inc):
    """Add ``inc`` at ``key``; returns 1 if a new slot was used."""
    mask = keys.shape[0] - 1
    i = _slot(key, mask)
    while True:
        k = keys[i]
        if k == key:
            vals[i] += inc
            return 0
        if k == EMPTY:
            keys[i] = key
            vals[i] = inc
            return 1
        i = (i + 1) & mask


@njit(cache=True)
def _grow(keys, vals):
    nk = np.full(keys.shape[0] * 2, EMPTY, dtype=np.int64)
    nv = np.zeros(keys.shape[0] * 2, dtype=np.int64)
    for i in range(keys.shape[0]):
        if keys[i] != EMPTY:
            _insert_add(nk, nv, keys[i], vals[i])
    return nk, nv


@njit(cache=True)
def _unpack(key, shift, bits, d, out):
    m = (np.int64(1) << bits) - 1
    for j in range(d - 1, -1, -1):
        out[j] = (key & m) - shift
        key >>= bits


@njit(cache=True)
def _sup_scan(keys, vals, set_pts, shift, bits):
    """Max of ``mu(x + A)`` over candidates ``x = y - a`` and over path sites ``y``."""
    d = set_pts.shape[1]
    na = set_pts.shape[0]
    y = np.zeros(d, dtype=np.int64)
    z = np.zeros(d, dtype=np.int64)
    best_x = 0
    best_path = 0
    for i in range(keys.shape[0]):
        if keys[i] == EMPTY:
            continue
        _unpack(keys[i], shift, bits, d, y)
        # centre X_m = y
        tot = 0
        for b in range(na):
            for j in range(d):
                z[j] = y[j] + set_pts[b, j]
            tot += _get(keys, vals, _pack(z, shift, bits))
        if tot > best_path:
            best_path = tot
        # candidate x = y - a
        for a in range(na):
            tot = 0
            for b in range(na):
                for j in range(d):
                    z[j] = y[j] - set_pts[a, j] + set_pts[b, j]
                tot += _get(keys, vals, _pack(z, shift, bits))
            if tot > best_x:
                best_x = tot
    return best_x, best_path


@njit(cache=True, nogil=True)
def sup_path(rng, offsets, probs, set_pts, checkpoints, max_sites, bits):
    """Run one path to ``checkpoints[-1]`` steps, scanning the visit map at each checkpoint.

    Returns ``(sup_x, sup_path, distinct_sites, status)`` arrays per checkpoint;
    ``status`` is 0 on success, 1 when ``max_sites`` was exceeded and 2 when a
    coordinate left the packable range.
    """
    d = offsets.shape[1]
    cum = np.cumsum(probs)
    cum[-1] = 1.0
    shift = np.int64(1) << (bits - 1)
    limit = shift // 2
    nck = checkpoints.shape[0]
    out_x = np.zeros(nck, dtype=np.int64)
    out_p = np.zeros(nck, dtype=np.int64)
    out_n = np.zeros(nck, dtype=np.int64)
    size = 1 << 16
    keys = np.full(size, EMPTY, dtype=np.int64)
    vals = np.zeros(size, dtype=np.int64)
    pos = np.zeros(d, dtype=np.int64)
    used = _insert_add(keys, vals, _pack(pos, shift, bits), 1)
    t = 0
    for c in range(nck):
        while t < checkpoints[c]:
            s = _sample_step(rng, cum)
            for j in range(d):
                pos[j] += offsets[s, j]
                if abs(pos[j]) > limit:
                    return out_x, out_p, out_n, 2
            used += _insert_add(keys, vals, _pack(pos, shift, bits), 1)
            t += 1
            if 2 * used > keys.shape[0]:
                if used > max_sites:
                    return out_x, out_p, out_n, 1
                keys, vals = _grow(keys, vals)
        bx, bp = _sup_scan(keys, vals, set_pts, shift, bits)
        out_x[c] = bx
        out_p[c] = bp
        out_n[c] = used
    return out_x, out_p, out_n, 0


@njit(cache=True)
def path_positions(rng, offsets, probs, n):
    """Positions ``X_0..X_n`` of one path; used by brute-force oracles in tests."""
    d = offsets.shape[1]
    cum = np.cumsum(probs)
    cum[-1] = 1.0
    out = np.zeros((n + 1, d), dtype=np.int64)
    for t in range(1, n + 1):
        s = _sample_step(rng, cum)
        for j in range(d):
            out[t, j] = out[t - 1, j] + offsets[s, j]
    return out

"""Compiled inner loops for the cataloged models.

The draws here must match :func:`softcap.process.simulate` bit for bit:
same Philox blocks, same 53-bit doubles, same inverse-CDF rule and the same
convention that single-atom laws consume no randomness.
"""
import numpy as np
from numba import njit, types
from numba.typed import Dict

_U32 = np.uint64(0xFFFFFFFF)
_S32 = np.uint64(32)
_M0 = np.uint64(0xD2511F53)
_M1 = np.uint64(0xCD9E8D57)
_W0 = np.uint64(0x9E3779B9)
_W1 = np.uint64(0xBB67AE85)
_ONE = np.uint64(1)
_S5 = np.uint64(5)
_S6 = np.uint64(6)

KIND_TABLE = 0
KIND_RATIO = 1
KIND_COUNTEREXAMPLE = 2

# rng state slots: key, stream, counter, lane, then the cached block words
_KEY, _STREAM, _CTR, _LANE = 0, 1, 2, 3


@njit(inline="always")
def philox_block(c0, c1, c2, c3, k0, k1):
    for _ in range(10):
        p0 = _M0 * c0
        p1 = _M1 * c2
        n0 = (p1 >> _S32) ^ c1 ^ k0
        n1 = p1 & _U32
        n2 = (p0 >> _S32) ^ c3 ^ k1
        n3 = p0 & _U32
        c0, c1, c2, c3 = n0, n1, n2, n3
        k0 = (k0 + _W0) & _U32
        k1 = (k1 + _W1) & _U32
    return c0, c1, c2, c3


@njit(inline="always")
def _to_double(hi, lo):
    return float((hi >> _S5) * np.uint64(67108864) + (lo >> _S6)) * (1.0 / 9007199254740992.0)


@njit(inline="always")
def next_uniform(st):
    if st[_LANE] == 0:
        key = st[_KEY]
        ctr = st[_CTR]
        stream = st[_STREAM]
        w0, w1, w2, w3 = philox_block(ctr & _U32, ctr >> _S32, stream & _U32, stream >> _S32,
                                      key & _U32, key >> _S32)
        st[4] = w0
        st[5] = w1
        st[6] = w2
        st[7] = w3
        st[_LANE] = _ONE
        return _to_double(w0, w1)
    st[_LANE] = np.uint64(0)
    st[_CTR] = st[_CTR] + _ONE
    return _to_double(st[6], st[7])


@njit(inline="always")
def new_state(seed, stream):
    st = np.zeros(8, dtype=np.uint64)
    st[_KEY] = seed
    st[_STREAM] = stream
    return st


@njit(inline="always")
def _bump(d, key, by):
    if key in d:
        d[key] += by
    else:
        d[key] = by


@njit(nogil=True, cache=True)
def run_block(kind, K, changes, cdf, single, lastpos, decay_base, seed, rep_start, rep_stop,
              z0, budget, level, steps, final, n_below, n_above, record):
    """Simulate replicates ``rep_start..rep_stop`` tracking excursions online.

    Per-replicate results go to the output arrays (indexed from 0); excursion
    records are folded into integer histograms, returned as typed dicts:
    above-K maxima, starts and durations of completed above-K excursions,
    and starts / extinct counts of completed below-K excursions. With
    ``record`` set the size path of the last replicate is returned as well.

    The change draw is written out inline: routing it through a helper costs
    several times the Philox block itself.
    """
    above_max = Dict.empty(key_type=types.int64, value_type=types.int64)
    above_start = Dict.empty(key_type=types.int64, value_type=types.int64)
    above_dur = Dict.empty(key_type=types.int64, value_type=types.int64)
    below_start = Dict.empty(key_type=types.int64, value_type=types.int64)
    below_dead = Dict.empty(key_type=types.int64, value_type=types.int64)
    zt = cdf.shape[0] - 1
    m = changes.shape[0]
    path = np.empty(1, dtype=np.int64)
    for r in range(rep_start, rep_stop):
        st = new_state(seed, np.uint64(r))
        z = z0
        if record:
            path = np.empty(min(budget + 1, 1024), dtype=np.int64)
            path[0] = z0
        below = z < level
        initial = not below
        nb = 1 if below else 0
        na = 0
        cur_start = z
        cur_max = z
        cur_begin = 0
        ones = 1 if z0 == 1 else 0
        n = 0
        while z > 0 and n < budget:
            if kind == KIND_TABLE:
                zz = z if z < zt else zt
                c = single[zz]
                if c == 0:
                    u = next_uniform(st)
                    c = changes[lastpos[zz]]
                    for j in range(m):
                        if u < cdf[zz, j]:
                            c = changes[j]
                            break
            elif kind == KIND_RATIO:
                u = next_uniform(st)
                c = -1 if u < float(z) / float(z + K) else 1
            else:
                c = -1
                if z == 1:
                    q = decay_base ** float((ones if ones > 0 else 1) + 2)
                    c = 1
                    if q != 0.0:
                        u = next_uniform(st)
                        if u < q:
                            c = -1
                    elif level == 2 and not record:
                        # death risk has underflowed: the rest is a deterministic
                        # 1, 2, 1, 2, ... alternation, counted in bulk
                        left = budget - n
                        ups = (left + 1) // 2
                        downs = left // 2
                        _bump(below_start, cur_start, 1)
                        if ups > 1:
                            _bump(below_start, 1, ups - 1)
                        if downs > 0:
                            _bump(above_max, 2, downs)
                            _bump(above_start, 2, downs)
                            _bump(above_dur, 1, downs)
                        na += ups
                        nb += downs
                        z = 2 if left % 2 == 1 else 1
                        n = budget
                        break
            z += c
            n += 1
            if z == 1:
                ones += 1
            if record:
                if n >= path.shape[0]:
                    grown = np.empty(min(2 * path.shape[0], budget + 1), dtype=np.int64)
                    grown[: path.shape[0]] = path
                    path = grown
                path[n] = z
            now_below = z < level
            if now_below:
                if not below:
                    if not initial:
                        _bump(above_max, cur_max, 1)
                        _bump(above_start, cur_start, 1)
                        _bump(above_dur, n - cur_begin, 1)
                    initial = False
                    nb += 1
                    cur_start = z
                    cur_begin = n
            else:
                if below:
                    _bump(below_start, cur_start, 1)
                    na += 1
                    cur_start = z
                    cur_max = z
                    cur_begin = n
                elif z > cur_max:
                    cur_max = z
            below = now_below
        if z == 0:
            _bump(below_start, cur_start, 1)
            _bump(below_dead, cur_start, 1)
        i = r - rep_start
        steps[i] = n
        final[i] = z
        n_below[i] = nb
        n_above[i] = na
        if record:
            path = path[: n + 1]
    return above_max, above_start, above_dur, below_start, below_dead, path


def trace_one(params, seed, stream, z0, budget, level=1):
    """Size path of replicate ``stream``."""
    one = np.empty(1, dtype=np.int64)
    out = run_block(params.kind, params.K, params.changes, params.cdf, params.single,
                    params.lastpos, float(params.decay_base), np.uint64(seed), int(stream),
                    int(stream) + 1, z0, budget, level, one, one.copy(), one.copy(),
                    one.copy(), True)
    return out[-1]

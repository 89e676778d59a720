# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled merge kernels for the clustering hot loops.

Mirrors _kernels_py.py operation for operation: pair sums run over members
in ascending index order, so both backends produce bit-identical merge
sequences.  Keep the loop order in sync with the Python fallback.
"""

import numpy as np


def average_linkage_merges(dist):
    """Full average-linkage merge sequence; see _kernels_py for semantics."""
    d_arr = np.ascontiguousarray(dist, dtype=np.float64)
    cdef double[:, ::1] d = d_arr
    cdef Py_ssize_t n = d.shape[0]

    merges_arr = np.empty((max(n - 1, 0), 2), dtype=np.intp)
    cdef Py_ssize_t[:, ::1] merges = merges_arr
    cdef Py_ssize_t[::1] lab = np.arange(n, dtype=np.intp)
    cdef Py_ssize_t[::1] reprs = np.arange(n, dtype=np.intp)
    cdef Py_ssize_t[::1] pos = np.zeros(n, dtype=np.intp)
    cdef Py_ssize_t[::1] cnt = np.zeros(n, dtype=np.intp)
    cdef Py_ssize_t[::1] off = np.zeros(n + 1, dtype=np.intp)
    cdef Py_ssize_t[::1] fill = np.zeros(n, dtype=np.intp)
    cdef Py_ssize_t[::1] order = np.zeros(n, dtype=np.intp)

    cdef Py_ssize_t m = n
    cdef Py_ssize_t step, s, i, x, y, a, b, ca, cb, ba, bb, ra, rb
    cdef double best, total, avg

    for step in range(n - 1):
        # bucket members by cluster, ascending within each bucket
        for s in range(m):
            pos[reprs[s]] = s
            cnt[s] = 0
        for i in range(n):
            cnt[pos[lab[i]]] += 1
        off[0] = 0
        for s in range(m):
            off[s + 1] = off[s] + cnt[s]
            fill[s] = off[s]
        for i in range(n):
            s = pos[lab[i]]
            order[fill[s]] = i
            fill[s] += 1

        best = np.inf
        ba = bb = -1
        for a in range(m):
            ca = cnt[a]
            for b in range(a + 1, m):
                cb = cnt[b]
                total = 0.0
                for x in range(off[a], off[a] + ca):
                    i = order[x]
                    for y in range(off[b], off[b] + cb):
                        total += d[i, order[y]]
                avg = total / (<double> (ca * cb))
                if avg < best:
                    best = avg
                    ba = a
                    bb = b
        ra = reprs[ba]
        rb = reprs[bb]
        merges[step, 0] = ra
        merges[step, 1] = rb
        for i in range(n):
            if lab[i] == rb:
                lab[i] = ra
        for s in range(bb, m - 1):
            reprs[s] = reprs[s + 1]
        m -= 1
    return merges_arr


def constrained_single_linkage_merges(dist, init_labels, new_only, Py_ssize_t n_merges):
    """Constrained single-linkage merges; see _kernels_py for semantics."""
    d_arr = np.ascontiguousarray(dist, dtype=np.float64)
    cdef double[:, ::1] d = d_arr
    cdef Py_ssize_t n = d.shape[0]
    cdef Py_ssize_t[::1] slots = np.ascontiguousarray(init_labels, dtype=np.intp)
    cdef unsigned char[::1] slot_new = np.ascontiguousarray(new_only, dtype=np.uint8)

    merges_arr = np.empty((n_merges, 2), dtype=np.intp)
    cdef Py_ssize_t[:, ::1] merges = merges_arr
    cdef Py_ssize_t[::1] lab = np.zeros(n, dtype=np.intp)
    cdef Py_ssize_t[::1] slot_repr = np.full(slot_new.shape[0], -1, dtype=np.intp)
    cdef unsigned char[::1] newonly = np.zeros(n, dtype=np.uint8)
    cdef Py_ssize_t[::1] reprs_buf = np.zeros(n, dtype=np.intp)
    cdef Py_ssize_t[::1] pos = np.zeros(n, dtype=np.intp)
    cdef Py_ssize_t[::1] cnt = np.zeros(n, dtype=np.intp)
    cdef Py_ssize_t[::1] off = np.zeros(n + 1, dtype=np.intp)
    cdef Py_ssize_t[::1] fill = np.zeros(n, dtype=np.intp)
    cdef Py_ssize_t[::1] order = np.zeros(n, dtype=np.intp)

    cdef Py_ssize_t m = 0
    cdef Py_ssize_t step, s, i, j, x, y, a, b, ba, bb, ra, rb
    cdef double best, dmin, v

    # first point of each slot (ascending scan) is its representative
    for i in range(n):
        s = slots[i]
        if slot_repr[s] < 0:
            slot_repr[s] = i
            m += 1
        lab[i] = slot_repr[s]
        newonly[slot_repr[s]] = slot_new[s]
    x = 0
    for i in range(n):
        if lab[i] == i:
            reprs_buf[x] = i
            x += 1

    for step in range(n_merges):
        for s in range(m):
            pos[reprs_buf[s]] = s
            cnt[s] = 0
        for i in range(n):
            cnt[pos[lab[i]]] += 1
        off[0] = 0
        for s in range(m):
            off[s + 1] = off[s] + cnt[s]
            fill[s] = off[s]
        for i in range(n):
            s = pos[lab[i]]
            order[fill[s]] = i
            fill[s] += 1

        best = np.inf
        ba = bb = -1
        for a in range(m):
            for b in range(a + 1, m):
                if not (newonly[reprs_buf[a]] or newonly[reprs_buf[b]]):
                    continue
                dmin = np.inf
                for x in range(off[a], off[a] + cnt[a]):
                    i = order[x]
                    for y in range(off[b], off[b] + cnt[b]):
                        v = d[i, order[y]]
                        if v < dmin:
                            dmin = v
                if dmin < best:
                    best = dmin
                    ba = a
                    bb = b
        if ba < 0:
            raise RuntimeError("no candidate merge with a new-usages-only side")
        ra = reprs_buf[ba]
        rb = reprs_buf[bb]
        merges[step, 0] = ra
        merges[step, 1] = rb
        for i in range(n):
            if lab[i] == rb:
                lab[i] = ra
        newonly[ra] = newonly[ra] and newonly[rb]
        for s in range(bb, m - 1):
            reprs_buf[s] = reprs_buf[s + 1]
        m -= 1
    return merges_arr

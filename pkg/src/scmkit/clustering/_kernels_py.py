"""Pure-Python merge kernels, the fallback for the compiled extension.

Both backends must produce identical merge sequences, so the arithmetic
here is deliberately scalar: pair sums are accumulated over members in
ascending index order, exactly the order the compiled kernel uses.  Do not
replace the inner loops with vectorized sums; numpy's pairwise summation
would change the float results and can flip near-tie merge decisions.
"""

from __future__ import annotations

import numpy as np

_INF = float("inf")


def average_linkage_merges(dist: np.ndarray) -> np.ndarray:
    """Full average-linkage merge sequence over an n x n distance matrix.

    Starts from singletons and merges until one cluster remains.  Returns an
    (n-1, 2) array; row t holds the representatives (min member index) of
    the two clusters merged at step t, smaller first.  Ties on the average
    distance go to the lexicographically smallest representative pair.
    """
    n = dist.shape[0]
    rows = [[float(x) for x in dist[i]] for i in range(n)]
    reprs = list(range(n))
    members: dict[int, list[int]] = {i: [i] for i in range(n)}
    merges = np.empty((max(n - 1, 0), 2), dtype=np.intp)

    for step in range(n - 1):
        best = _INF
        best_a = best_b = -1
        m = len(reprs)
        for ai in range(m):
            ra = reprs[ai]
            ma = members[ra]
            ca = len(ma)
            for bi in range(ai + 1, m):
                rb = reprs[bi]
                mb = members[rb]
                total = 0.0
                for i in ma:
                    row = rows[i]
                    for j in mb:
                        total += row[j]
                avg = total / (ca * len(mb))
                if avg < best:
                    best = avg
                    best_a, best_b = ra, rb
        merges[step, 0] = best_a
        merges[step, 1] = best_b
        members[best_a] = sorted(members[best_a] + members[best_b])
        del members[best_b]
        reprs.remove(best_b)
    return merges


def constrained_single_linkage_merges(
    dist: np.ndarray,
    init_labels: np.ndarray,
    new_only: np.ndarray,
    n_merges: int,
) -> np.ndarray:
    """Single-linkage merges where every merge involves a new-usages-only side.

    init_labels assigns each point to an initial cluster slot; new_only
    flags the slots whose members are all new usages.  Runs exactly
    n_merges merges and returns them as representative pairs like
    average_linkage_merges.  A merged cluster is new-only iff both parts
    were.
    """
    n = dist.shape[0]
    rows = [[float(x) for x in dist[i]] for i in range(n)]
    members: dict[int, list[int]] = {}
    slot_repr: dict[int, int] = {}
    for i in range(n):
        slot = int(init_labels[i])
        if slot not in slot_repr:
            slot_repr[slot] = i  # first point in index order = min member
            members[i] = []
        members[slot_repr[slot]].append(i)
    is_new_only = {slot_repr[s]: bool(new_only[s]) for s in slot_repr}
    reprs = sorted(members)
    merges = np.empty((n_merges, 2), dtype=np.intp)

    for step in range(n_merges):
        best = _INF
        best_a = best_b = -1
        m = len(reprs)
        for ai in range(m):
            ra = reprs[ai]
            ma = members[ra]
            for bi in range(ai + 1, m):
                rb = reprs[bi]
                if not (is_new_only[ra] or is_new_only[rb]):
                    continue
                mb = members[rb]
                dmin = _INF
                for i in ma:
                    row = rows[i]
                    for j in mb:
                        v = row[j]
                        if v < dmin:
                            dmin = v
                if dmin < best:
                    best = dmin
                    best_a, best_b = ra, rb
        if best_a < 0:
            raise RuntimeError("no candidate merge with a new-usages-only side")
        merges[step, 0] = best_a
        merges[step, 1] = best_b
        members[best_a] = sorted(members[best_a] + members[best_b])
        is_new_only[best_a] = is_new_only[best_a] and is_new_only[best_b]
        del members[best_b]
        del is_new_only[best_b]
        reprs.remove(best_b)
    return merges

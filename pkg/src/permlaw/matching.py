"""Bipartite matchings on the positivity pattern of a square matrix."""

from collections import deque

import numpy as np

__all__ = ["perfect_matching", "has_perfect_matching", "rematch_without"]


def perfect_matching(positive):
    """Row-to-column perfect matching of a boolean pattern, or ``None``.

    Kuhn's augmenting-path algorithm, iterative so deep paths are safe.
    """
    positive = np.asarray(positive, dtype=bool)
    n = positive.shape[0]
    adj = [np.flatnonzero(positive[i]).tolist() for i in range(n)]
    row_of = [-1] * n
    col_of = [-1] * n
    for root in range(n):
        # BFS over alternating paths from the free row `root`
        parent_col = {}
        seen_rows = {root}
        queue = deque([root])
        end = -1
        while queue and end < 0:
            i = queue.popleft()
            for j in adj[i]:
                if j in parent_col:
                    continue
                parent_col[j] = i
                if row_of[j] < 0:
                    end = j
                    break
                k = row_of[j]
                if k not in seen_rows:
                    seen_rows.add(k)
                    queue.append(k)
        if end < 0:
            return None
        j = end
        while j >= 0:
            i = parent_col[j]
            nxt = col_of[i]
            row_of[j] = i
            col_of[i] = j
            j = nxt
    return np.array(col_of, dtype=np.intp)


def has_perfect_matching(positive) -> bool:
    return perfect_matching(positive) is not None


def rematch_without(positive, match, i, j) -> bool:
    """True iff the pattern minus row ``i`` and column ``j`` has a perfect matching.

    ``match`` is a perfect matching of the full pattern.  Removing the edges at
    row ``i`` and column ``j`` frees row ``match^-1(j)`` and column ``match(i)``;
    a single augmenting search between them decides the question.
    """
    positive = np.asarray(positive, dtype=bool)
    if match[i] == j:
        return True
    row_of = np.empty_like(match)
    row_of[match] = np.arange(len(match))
    start, target = row_of[j], match[i]
    seen = np.zeros(len(match), dtype=bool)
    seen[j] = True
    queue = deque([start])
    while queue:
        r = queue.popleft()
        for k in np.flatnonzero(positive[r] & ~seen):
            if k == target:
                return True
            seen[k] = True
            queue.append(row_of[k])
    return False

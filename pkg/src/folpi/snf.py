"""Smith normal form over the integers (exact, Python ints)."""

from __future__ import annotations

from typing import List, Sequence, Tuple


def smith_diagonal(matrix: Sequence[Sequence[int]]) -> List[int]:
    """Nonzero diagonal entries d_1 | d_2 | ... of the Smith normal form."""
    a = [list(map(int, row)) for row in matrix]
    if not a or not a[0]:
        return []
    rows, cols = len(a), len(a[0])
    diag = []
    t = 0
    while t < min(rows, cols):
        pivot = _smallest_nonzero(a, t)
        if pivot is None:
            break
        r, c = pivot
        a[t], a[r] = a[r], a[t]
        for row in a:
            row[t], row[c] = row[c], row[t]
        while True:
            done = True
            for i in range(t + 1, rows):
                if a[i][t]:
                    q = a[i][t] // a[t][t]
                    a[i] = [x - q * y for x, y in zip(a[i], a[t])]
                    if a[i][t]:
                        done = False
            for j in range(t + 1, cols):
                if a[t][j]:
                    q = a[t][j] // a[t][t]
                    for row in a:
                        row[j] -= q * row[t]
                    if a[t][j]:
                        done = False
            if done:
                bad = next(((i, j) for i in range(t + 1, rows) for j in range(t + 1, cols)
                            if a[i][j] % a[t][t]), None)
                if bad is None:
                    break
                a[t] = [x + y for x, y in zip(a[t], a[bad[0]])]
                continue
            r, c = _smallest_nonzero(a, t)
            a[t], a[r] = a[r], a[t]
            for row in a:
                row[t], row[c] = row[c], row[t]
        diag.append(abs(a[t][t]))
        t += 1
    return diag


def _smallest_nonzero(a, t) -> Tuple[int, int] | None:
    best = None
    for i in range(t, len(a)):
        for j in range(t, len(a[0])):
            v = a[i][j]
            if v and (best is None or abs(v) < abs(a[best[0]][best[1]])):
                best = (i, j)
    return best


def abelian_invariants(matrix: Sequence[Sequence[int]], n_generators: int) -> Tuple[int, List[int]]:
    """(rank, torsion) of Z^n modulo the row span of ``matrix``."""
    diag = smith_diagonal(matrix) if matrix else []
    rank = n_generators - len(diag)
    torsion = [d for d in diag if d > 1]
    return rank, torsion

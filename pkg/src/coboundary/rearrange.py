"""Bounded-prefix rearrangements of zero-sum vectors and matrices.

Permutations are tuples of 0-based indices: ``perm[k]`` is the index placed
at position ``k``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .errors import PreconditionError, SearchExhaustedError
from .rational import rat

Permutation = tuple


def is_permutation(perm: Sequence[int], m: int) -> bool:
    return len(perm) == m and sorted(perm) == list(range(m))


def prefix_sums(values: Sequence[Fraction], perm: Sequence[int]) -> list[Fraction]:
    out, s = [], Fraction(0)
    for i in perm:
        s += values[i]
        out.append(s)
    return out


def rearrange_zero_sum(a: Sequence) -> Permutation:
    """Order a zero-sum vector so every prefix sum is at most ``max |a_k|`` in size.

    Greedy: start with index 0, then always take the lowest unused index whose
    entry does not share the sign of the running sum.
    """
    a = [rat(x) for x in a]
    total = sum(a, Fraction(0))
    if total != 0:
        raise PreconditionError(f"entries must sum to 0, got {total}")
    n = len(a)
    if n == 0:
        return ()
    used = [False] * n
    used[0] = True
    # index queues in increasing order; zeros sit in both
    nonpos = [j for j in range(n) if a[j] <= 0]
    nonneg = [j for j in range(n) if a[j] >= 0]
    heads = {"nonpos": 0, "nonneg": 0}
    queues = {"nonpos": nonpos, "nonneg": nonneg}

    def head(name):
        q, i = queues[name], heads[name]
        while i < len(q) and used[q[i]]:
            i += 1
        heads[name] = i
        return q[i] if i < len(q) else None

    perm = [0]
    s = a[0]
    for _ in range(n - 1):
        if s > 0:
            pick = head("nonpos")
        elif s < 0:
            pick = head("nonneg")
        else:
            pick = min(j for j in (head("nonpos"), head("nonneg")) if j is not None)
        # unreachable for zero-sum input: the remaining entries sum to -s
        assert pick is not None
        used[pick] = True
        perm.append(pick)
        s += a[pick]
    return tuple(perm)


@dataclass
class MatrixRearrangement:
    """Row permutations plus a record of which strategy tier placed each row."""

    perms: list[Permutation]
    bound: Fraction
    tiers: list[str] = field(default_factory=list)

    def column_partials(self, A) -> list[list[Fraction]]:
        m = len(self.perms[0]) if self.perms else 0
        S = [Fraction(0)] * m
        rows = []
        for row, perm in zip(A, self.perms):
            S = [S[j] + rat(row[perm[j]]) for j in range(m)]
            rows.append(S)
        return rows


def _greedy_row(S: list[Fraction], row: list[Fraction]) -> list[int]:
    cols = sorted(range(len(S)), key=lambda j: (S[j], j))
    entries = sorted(range(len(row)), key=lambda e: (-row[e], e))
    perm = [0] * len(S)
    for j, e in zip(cols, entries):
        perm[j] = e
    return perm


def _matching_row(S: list[Fraction], row: list[Fraction], limit: Fraction) -> list[int] | None:
    """Assign entries to columns with ``|S_j + entry| <= limit`` via augmenting paths."""
    m = len(S)
    allowed = [[e for e in range(m) if abs(S[j] + row[e]) <= limit] for j in range(m)]
    owner = [-1] * m  # entry -> column

    def augment(j: int, seen: list[bool]) -> bool:
        for e in allowed[j]:
            if seen[e]:
                continue
            seen[e] = True
            if owner[e] == -1 or augment(owner[e], seen):
                owner[e] = j
                return True
        return False

    for j in sorted(range(m), key=lambda j: len(allowed[j])):
        if not augment(j, [False] * m):
            return None
    perm = [0] * m
    for e, j in enumerate(owner):
        perm[j] = e
    return perm


def rearrange_matrix(A: Sequence[Sequence]) -> MatrixRearrangement:
    """Row permutations keeping every column partial sum within ``2·max|a_ij|``.

    Rows are placed one at a time.  Each row first tries the sorted greedy
    pairing against the target ``C``; failing that, a bipartite feasibility
    search at ``C``; failing that, the target is relaxed in quarter steps of
    ``C`` up to ``2C``.
    """
    rows = [[rat(x) for x in r] for r in A]
    if not rows:
        return MatrixRearrangement([], Fraction(0))
    m = len(rows[0])
    for i, r in enumerate(rows):
        if len(r) != m:
            raise PreconditionError(f"row {i} has length {len(r)}, expected {m}")
        s = sum(r, Fraction(0))
        if s != 0:
            raise PreconditionError(f"row {i} sums to {s}, not 0")
    C = max((abs(x) for r in rows for x in r), default=Fraction(0))
    bound = 2 * C
    S = [Fraction(0)] * m
    result = MatrixRearrangement([], C)
    for i, row in enumerate(rows):
        perm = _greedy_row(S, row)
        tier = "greedy"
        if any(abs(S[j] + row[perm[j]]) > C for j in range(m)):
            perm, tier = None, None
            for step in range(5):
                limit = C + C * step / 4
                perm = _matching_row(S, row, limit)
                if perm is not None:
                    tier = "matching" if step == 0 else f"relaxed:{limit}"
                    break
            if perm is None:
                raise SearchExhaustedError(f"no assignment for row {i} within 2C = {bound}")
        S = [S[j] + row[perm[j]] for j in range(m)]
        if any(abs(s) > bound for s in S):
            raise SearchExhaustedError(f"row {i} breaks the 2C bound")
        result.perms.append(tuple(perm))
        result.tiers.append(tier)
    return result

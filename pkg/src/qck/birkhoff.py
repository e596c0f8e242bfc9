"""Birkhoff-von Neumann decomposition of doubly stochastic matrices.

Greedy scheme: find a perfect matching on the positive support, peel off the
permutation with weight equal to its smallest matched entry, repeat. Each step
zeroes at least one entry and drops the remainder into a strictly smaller face
of the Birkhoff polytope, which caps the term count at ``(n - 1)**2 + 1``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from qck.quantum import TAU_DS, is_doubly_stochastic


class BirkhoffError(ValueError):
    pass


class NotDoublyStochastic(BirkhoffError):
    pass


class NoPerfectMatching(BirkhoffError):
    """The support has no perfect matching: input lies farther than tolerance from the polytope."""


@dataclass(frozen=True)
class BirkhoffDecomposition:
    n: int
    terms: tuple[tuple[float, tuple[int, ...]], ...]  # (weight, pi) with pi[i] = column of row i

    @property
    def k(self) -> int:
        return len(self.terms)

    @property
    def bound(self) -> int:
        return term_bound(self.n)

    def weights(self) -> np.ndarray:
        return np.array([w for w, _ in self.terms])


def term_bound(n: int) -> int:
    return (n - 1) ** 2 + 1


def permutation_matrix(pi: tuple[int, ...]) -> np.ndarray:
    """Sum over j of ``|e_j><e_pi(j)|``: row j has its single 1 in column pi(j)."""
    n = len(pi)
    m = np.zeros((n, n))
    m[np.arange(n), list(pi)] = 1.0
    return m


def _perfect_matching(support: np.ndarray) -> list[int] | None:
    """Row-to-column perfect matching by augmenting paths; lowest indices are tried first."""
    n = support.shape[0]
    match_col = [-1] * n  # column -> row

    def augment(row: int, seen: list[bool]) -> bool:
        for col in range(n):
            if support[row, col] and not seen[col]:
                seen[col] = True
                if match_col[col] < 0 or augment(match_col[col], seen):
                    match_col[col] = row
                    return True
        return False

    for row in range(n):
        if not augment(row, [False] * n):
            return None
    pi = [0] * n
    for col, row in enumerate(match_col):
        pi[row] = col
    return pi


def birkhoff_decompose(m: np.ndarray, tol: float = TAU_DS) -> BirkhoffDecomposition:
    m = np.array(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise NotDoublyStochastic(f"matrix must be square, got shape {m.shape}")
    n = m.shape[0]
    if not is_doubly_stochastic(m, tol):
        raise NotDoublyStochastic("row or column sums differ from 1, or an entry is negative")
    work = np.where(m > tol, m, 0.0)
    slack = n * tol
    terms: list[tuple[float, tuple[int, ...]]] = []
    while work.max() > slack:
        pi = _perfect_matching(work > tol)
        if pi is None:
            raise NoPerfectMatching(
                f"support has no perfect matching with {work.sum() / n:.3g} weight left"
            )
        rows = np.arange(n)
        entries = work[rows, pi]
        weight = float(entries.min())
        work[rows, pi] -= weight
        work[rows[int(entries.argmin())], pi[int(entries.argmin())]] = 0.0
        work[work <= tol] = 0.0
        terms.append((weight, tuple(pi)))
    if not terms:
        raise NoPerfectMatching("matrix has no entry above tolerance")
    total = sum(w for w, _ in terms)
    return BirkhoffDecomposition(n, tuple((w / total, pi) for w, pi in terms))


def reconstruct(dec: BirkhoffDecomposition) -> np.ndarray:
    out = np.zeros((dec.n, dec.n))
    for w, pi in dec.terms:
        out += w * permutation_matrix(pi)
    return out


def one_line(pi: tuple[int, ...]) -> str:
    """One-line notation, 1-based: ``[2 1 3]``."""
    return "[" + " ".join(str(p + 1) for p in pi) + "]"

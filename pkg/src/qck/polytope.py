"""Correlation polytopes and their facets, in exact rational arithmetic.

Vertices come from two-valued states (joint probabilities or expectations
evaluated as products) or from deterministic local assignments of a Bell
scenario. Facets are found with an incremental double-description run over
integers, so tight inequalities are never misclassified by rounding.

Canonical forms:

* an inequality ``a.x <= b`` is scaled to coprime integers;
* non-full-dimensional hulls report their affine hull as equalities solved
  for the rightmost coordinates, and facets are written without those
  coordinates;
* facet lists are sorted lexicographically on ``(coefficients, bound)``.
"""

from __future__ import annotations

import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field, replace
from fractions import Fraction
from itertools import combinations, product

from qck.cloud import QuantumCloud
from qck.states import StateList

PROBABILITY = "probability"
EXPECTATION = "expectation"

Rational = Fraction
Vector = tuple[Fraction, ...]


@dataclass(frozen=True)
class ObservableTerm:
    factors: tuple[str, ...]
    representation: str = PROBABILITY

    def __post_init__(self) -> None:
        if not self.factors:
            raise ValueError("a term needs at least one factor")
        if len(set(self.factors)) != len(self.factors):
            raise ValueError(f"product factors must be distinct: {self.factors}")
        if self.representation not in (PROBABILITY, EXPECTATION):
            raise ValueError(f"unknown representation {self.representation!r}")

    @property
    def kind(self) -> str:
        return "single" if len(self.factors) == 1 else "product"

    @property
    def label(self) -> str:
        prefix = "p" if self.representation == PROBABILITY else "E"
        return f"{prefix}({','.join(self.factors)})"

    def evaluate(self, values: dict[str, int]) -> int:
        out = 1
        for f in self.factors:
            v = values[f]
            out *= v if self.representation == PROBABILITY else 2 * v - 1
        return out


def P(*atoms: str) -> ObservableTerm:
    return ObservableTerm(tuple(atoms), PROBABILITY)


def E(*atoms: str) -> ObservableTerm:
    return ObservableTerm(tuple(atoms), EXPECTATION)


@dataclass(frozen=True)
class LinearInequality:
    """``coefficients . x <= bound`` with coprime integer data."""

    coefficients: tuple[int, ...]
    bound: int

    def value(self, point: Sequence[Fraction]) -> Fraction:
        return sum((c * x for c, x in zip(self.coefficients, point)), Fraction(0))

    def slack(self, point: Sequence[Fraction]) -> Fraction:
        return self.bound - self.value(point)

    def format(self, labels: Sequence[str]) -> str:
        return f"{_format_lhs(self.coefficients, labels)} <= {self.bound}"


@dataclass(frozen=True)
class LinearEquality:
    coefficients: tuple[int, ...]
    rhs: int

    def value(self, point: Sequence[Fraction]) -> Fraction:
        return sum((c * x for c, x in zip(self.coefficients, point)), Fraction(0))

    def format(self, labels: Sequence[str]) -> str:
        return f"{_format_lhs(self.coefficients, labels)} = {self.rhs}"


def _format_lhs(coeffs: Sequence[int], labels: Sequence[str]) -> str:
    parts = []
    for c, lab in zip(coeffs, labels):
        if c == 0:
            continue
        sign = "-" if c < 0 else "+"
        mag = "" if abs(c) == 1 else f"{abs(c)} "
        parts.append(f"{sign} {mag}{lab}")
    if not parts:
        return "0"
    text = " ".join(parts)
    return text[2:] if text.startswith("+ ") else "-" + text[2:]


@dataclass(frozen=True)
class Polytope:
    labels: tuple[str, ...]
    vertices: tuple[Vector, ...]
    terms: tuple[ObservableTerm, ...] | None = None
    facets: tuple[LinearInequality, ...] | None = None
    equalities: tuple[LinearEquality, ...] | None = None
    duplicates_removed: int = 0
    warnings: tuple[str, ...] = field(default=())

    @property
    def dimension(self) -> int:
        """Affine dimension of the hull (-1 for no vertices)."""
        if not self.vertices:
            return -1
        v0 = self.vertices[0]
        return _rank([tuple(a - b for a, b in zip(v, v0)) for v in self.vertices[1:]])


# --- exact linear algebra -----------------------------------------------------


def _rref(rows: Sequence[Sequence[Fraction]], ncols: int) -> tuple[list[list[Fraction]], list[int]]:
    m = [list(map(Fraction, r)) for r in rows]
    pivots: list[int] = []
    r = 0
    for c in range(ncols):
        p = next((i for i in range(r, len(m)) if m[i][c] != 0), None)
        if p is None:
            continue
        m[r], m[p] = m[p], m[r]
        inv = 1 / m[r][c]
        m[r] = [x * inv for x in m[r]]
        for i in range(len(m)):
            if i != r and m[i][c] != 0:
                f = m[i][c]
                m[i] = [x - f * y for x, y in zip(m[i], m[r])]
        pivots.append(c)
        r += 1
        if r == len(m):
            break
    return m[:r], pivots


def _rank(rows: Sequence[Sequence[Fraction]]) -> int:
    if not rows:
        return 0
    return len(_rref(rows, len(rows[0]))[1])


def _nullspace(rows: Sequence[Sequence[Fraction]], ncols: int) -> list[list[Fraction]]:
    red, pivots = _rref(rows, ncols) if rows else ([], [])
    free = [c for c in range(ncols) if c not in pivots]
    basis = []
    for f in free:
        v = [Fraction(0)] * ncols
        v[f] = Fraction(1)
        for row, p in zip(red, pivots):
            v[p] = -row[f]
        basis.append(v)
    return basis


def _primitive(values: Sequence[Fraction | int]) -> tuple[int, ...]:
    """Scale a rational vector to coprime integers, keeping its direction."""
    fr = [Fraction(v) for v in values]
    den = math.lcm(*(f.denominator for f in fr)) if fr else 1
    ints = [int(f * den) for f in fr]
    g = math.gcd(*ints)
    return tuple(i // g for i in ints) if g else tuple(ints)


def _as_fraction(x: object) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, float, str)):
        return Fraction(x)
    raise TypeError(f"cannot use {x!r} as an exact rational")


# --- vertices -------------------------------------------------------------------


def _dedupe(points: Iterable[Vector]) -> tuple[tuple[Vector, ...], int]:
    seen: dict[Vector, None] = {}
    total = 0
    for p in points:
        total += 1
        seen.setdefault(p, None)
    return tuple(seen), total - len(seen)


def vertices_from_states(states: StateList, terms: Sequence[ObservableTerm]) -> Polytope:
    """One vertex per state: every term evaluated on the state as a product of atom values.

    Product terms over atoms that share a context are conjunctions; in
    exclusive mode they vanish on every state. Such terms are kept but flagged
    in ``warnings``.
    """
    cloud: QuantumCloud = states.cloud
    if not len(states):
        raise ValueError("no states to build vertices from")
    known = set(cloud.atom_ids)
    warnings = []
    for t in terms:
        for f in t.factors:
            if f not in known:
                raise KeyError(f"unknown atom {f!r}")
        if t.kind == "product":
            same = [(u, v) for u, v in combinations(t.factors, 2) if cloud.adjacent(u, v)]
            if same:
                pairs = ", ".join(f"{u}~{v}" for u, v in same)
                warnings.append(f"{t.label}: factors share a context ({pairs}); joint value is a conjunction")
    points = []
    for s in states:
        vals = s.as_dict(cloud)
        points.append(tuple(Fraction(t.evaluate(vals)) for t in terms))
    verts, dup = _dedupe(points)
    return Polytope(
        labels=tuple(t.label for t in terms),
        vertices=verts,
        terms=tuple(terms),
        duplicates_removed=dup,
        warnings=tuple(warnings),
    )


def _party_name(p: int) -> str:
    return chr(ord("A") + p) if p < 26 else f"P{p + 1}_"


def bell_vertices(
    parties: int,
    settings: int | Sequence[int],
    representation: str = EXPECTATION,
    include_singles: bool = True,
) -> Polytope:
    """Deterministic local strategies of a Bell scenario with two outcomes per setting.

    Coordinates are the single-setting values (when ``include_singles``)
    followed by every cross-party product, picking one setting per party for
    each subset of at least two parties. Subsets are taken by size, then
    lexicographically. Labels read ``A1``, ``B2``, ``A1B2``.

    In expectation representation outcomes are +1/-1. In probability
    representation an outcome is 1 when the observable gives +1, so products
    are joint probabilities.
    """
    if isinstance(settings, int):
        settings = [settings] * parties
    settings = list(settings)
    if parties < 1 or len(settings) != parties or any(s < 1 for s in settings):
        raise ValueError("need at least one party and at least one setting per party")
    if representation not in (PROBABILITY, EXPECTATION):
        raise ValueError(f"unknown representation {representation!r}")

    singles = [(p, s) for p in range(parties) for s in range(settings[p])]
    coords: list[tuple[tuple[int, int], ...]] = []
    if include_singles:
        coords.extend((ps,) for ps in singles)
    for size in range(2, parties + 1):
        for group in combinations(range(parties), size):
            for choice in product(*(range(settings[p]) for p in group)):
                coords.append(tuple(zip(group, choice)))
    if not coords:
        raise ValueError("no coordinates: a single party has no cross-party products")
    labels = tuple("".join(f"{_party_name(p)}{s + 1}" for p, s in c) for c in coords)

    outcomes = (1, -1) if representation == EXPECTATION else (1, 0)
    points = []
    for assignment in product(outcomes, repeat=len(singles)):
        value = dict(zip(singles, assignment))
        points.append(tuple(Fraction(math.prod(value[ps] for ps in c)) for c in coords))
    verts, dup = _dedupe(points)
    return Polytope(labels=labels, vertices=verts, duplicates_removed=dup)


# --- double description -----------------------------------------------------------


def _cone_generators(rows: Sequence[Sequence[int]]) -> list[tuple[int, ...]]:
    """Extreme rays of the pointed cone ``{h : row . h >= 0 for all rows}``.

    ``rows`` must have full column rank. Incremental double description with
    the combinatorial adjacency test; everything stays in Python integers.
    """
    d = len(rows[0])
    basis_idx: list[int] = []
    basis_rows: list[list[Fraction]] = []
    for i, r in enumerate(rows):
        trial = basis_rows + [list(map(Fraction, r))]
        if _rank(trial) == len(trial):
            basis_idx.append(i)
            basis_rows = trial
            if len(basis_idx) == d:
                break
    if len(basis_idx) != d:
        raise ValueError("constraint rows do not have full column rank")

    # columns of the inverse of the initial square system
    rays: list[tuple[int, ...]] = []
    zeros: list[frozenset[int]] = []
    for j in range(d):
        rhs = [Fraction(int(k == j)) for k in range(d)]
        aug = [row + [b] for row, b in zip(basis_rows, rhs)]
        red, _ = _rref(aug, d)
        ray = _primitive([red[k][d] for k in range(d)])
        rays.append(ray)
        zeros.append(frozenset(basis_idx[k] for k in range(d) if k != j))

    for i, row in enumerate(rows):
        if i in basis_idx:
            continue
        s = [sum(a * b for a, b in zip(row, r)) for r in rays]
        pos = [k for k, v in enumerate(s) if v > 0]
        neg = [k for k, v in enumerate(s) if v < 0]
        zer = [k for k, v in enumerate(s) if v == 0]
        new_rays = [rays[k] for k in pos] + [rays[k] for k in zer]
        new_zeros = [zeros[k] for k in pos] + [zeros[k] | {i} for k in zer]
        for p in pos:
            for n in neg:
                common = zeros[p] & zeros[n]
                if len(common) < d - 2:
                    continue
                if any(
                    k != p and k != n and common <= zeros[k] for k in range(len(rays))
                ):
                    continue
                combo = [s[p] * b - s[n] * a for a, b in zip(rays[p], rays[n])]
                new_rays.append(_primitive(combo))
                new_zeros.append(common | {i})
        rays, zeros = new_rays, new_zeros
    return rays


def _affine_frame(
    vertices: Sequence[Vector], n: int
) -> tuple[list[LinearEquality], list[int], list[list[Fraction]]]:
    """Affine hull of ``vertices`` as equalities solved for the rightmost coordinates.

    Returns the canonical equalities, the free (kept) coordinates and the
    reduced equality rows ``[coefficients..., rhs]`` used to lift points back.
    """
    v0 = vertices[0]
    diffs = [[a - b for a, b in zip(v, v0)] for v in vertices[1:]]
    normals = _nullspace(diffs, n) if diffs else [
        [Fraction(int(i == j)) for j in range(n)] for i in range(n)
    ]
    if not normals:
        return [], list(range(n)), []
    # RREF over reversed columns puts pivots on the rightmost coordinates
    rows = [list(reversed(a)) + [sum(x * y for x, y in zip(a, v0))] for a in normals]
    red, piv = _rref(rows, n)
    red = [list(reversed(r[:n])) + [r[n]] for r in red]
    pivots = sorted(n - 1 - p for p in piv)
    free = [c for c in range(n) if c not in pivots]
    eqs = []
    for r in red:
        ints = _primitive(r)
        lead = next(c for c in reversed(ints[:n]) if c != 0)
        if lead < 0:
            ints = tuple(-c for c in ints)
        eqs.append(LinearEquality(ints[:n], ints[n]))
    eqs.sort(key=lambda e: (e.coefficients, e.rhs))
    return eqs, free, red


def _canonical_inequality(coeffs: Sequence[Fraction | int], bound: Fraction | int) -> LinearInequality:
    ints = _primitive(list(coeffs) + [bound])
    return LinearInequality(ints[:-1], ints[-1])


def facet_enumeration(polytope: Polytope) -> Polytope:
    """Fill in the irredundant facets and the affine-hull equalities of ``conv(vertices)``."""
    verts = polytope.vertices
    if not verts:
        raise ValueError("facet enumeration needs at least one vertex")
    n = len(verts[0])
    eqs, free, _ = _affine_frame(verts, n)
    k = len(free)
    facets: list[LinearInequality] = []
    if k > 0:
        rows = []
        for v in verts:
            hom = [Fraction(1)] + [v[c] for c in free]
            rows.append(_primitive(hom) if any(hom) else hom)
        for h in _cone_generators(rows):
            # h0 + h.y >= 0  <=>  -h.y <= h0
            coeffs = [Fraction(0)] * n
            for c, hc in zip(free, h[1:]):
                coeffs[c] = Fraction(-hc)
            facets.append(_canonical_inequality(coeffs, h[0]))
    facets = sorted(set(facets), key=lambda f: (f.coefficients, f.bound))
    return replace(polytope, facets=tuple(facets), equalities=tuple(eqs))


def vertices_of(polytope: Polytope) -> tuple[Vector, ...]:
    """Vertices of the region cut out by ``facets`` and ``equalities`` (the reverse conversion).

    The region must be a bounded polytope. Vertices come back sorted.
    """
    if polytope.facets is None or polytope.equalities is None:
        raise ValueError("polytope has no facet description")
    n = len(polytope.labels)
    eq_rows = [list(map(Fraction, e.coefficients)) + [Fraction(e.rhs)] for e in polytope.equalities]
    if eq_rows:
        red_rev, piv = _rref([list(reversed(r[:n])) + [r[n]] for r in eq_rows], n)
        red = [list(reversed(r[:n])) + [r[n]] for r in red_rev]
        pivots = [n - 1 - p for p in piv]
    else:
        red, pivots = [], []
    free = [c for c in range(n) if c not in pivots]

    def lift(y: Sequence[Fraction]) -> Vector:
        x = [Fraction(0)] * n
        for c, val in zip(free, y):
            x[c] = val
        for r, p in zip(red, pivots):
            x[p] = r[n] - sum(r[c] * x[c] for c in free)
        return tuple(x)

    if not free:
        return (lift([]),)

    def reduce(coeffs: Sequence[int], bound: int) -> tuple[list[Fraction], Fraction]:
        # substitute pivot coordinates through the equalities
        a = [Fraction(c) for c in coeffs]
        b = Fraction(bound)
        for r, p in zip(red, pivots):
            if a[p]:
                f = a[p]
                b -= f * r[n]
                a = [x - f * y for x, y in zip(a, r[:n])]
        return [a[c] for c in free], b

    rows = []
    for f in polytope.facets:
        a, b = reduce(f.coefficients, f.bound)
        rows.append(_primitive([b] + [-x for x in a]))
    rows.append(tuple([1] + [0] * len(free)))
    out = []
    for ray in _cone_generators(rows):
        if ray[0] == 0:
            raise ValueError("facet description is unbounded")
        out.append(lift([Fraction(c, ray[0]) for c in ray[1:]]))
    return tuple(sorted(set(out)))


def equivalent_on_hull(
    first: LinearInequality, second: LinearInequality, equalities: Sequence[LinearEquality]
) -> bool:
    """True when two inequalities cut the same half-space of the affine hull.

    That is, ``first - t * second`` lies in the span of the equalities for
    some ``t > 0``.
    """
    n = len(first.coefficients)
    a = list(first.coefficients) + [first.bound]
    b = list(second.coefficients) + [second.bound]
    eq = [list(e.coefficients) + [e.rhs] for e in equalities]
    if _rank(eq + [b]) == _rank(eq):
        return False
    # solve a = t * b + sum(mu_i eq_i): a must lie in span(eq + [b]) with t > 0
    if _rank(eq + [b, a]) != _rank(eq + [b]):
        return False
    cols = [[Fraction(row[j]) for row in [b] + eq] for j in range(n + 1)]
    aug = [col + [Fraction(a[j])] for j, col in enumerate(cols)]
    red, piv = _rref(aug, len(eq) + 1)
    t = next((r[-1] for r, p in zip(red, piv) if p == 0), None)
    return t is not None and t > 0


@dataclass(frozen=True)
class MembershipReport:
    inside: bool
    violated: tuple[tuple[LinearInequality, Fraction], ...]
    equality_residuals: tuple[tuple[LinearEquality, Fraction], ...]


def check_point(polytope: Polytope, point: Sequence[object]) -> MembershipReport:
    """Locate ``point`` relative to the facet description; violations are ``a.x - b > 0``."""
    if polytope.facets is None:
        raise ValueError("facets have not been computed")
    if len(point) != len(polytope.labels):
        raise ValueError(f"point has dimension {len(point)}, polytope has {len(polytope.labels)}")
    x = [_as_fraction(p) for p in point]
    violated = []
    for f in polytope.facets:
        excess = f.value(x) - f.bound
        if excess > 0:
            violated.append((f, excess))
    residuals = []
    for e in polytope.equalities or ():
        r = e.value(x) - e.rhs
        if r != 0:
            residuals.append((e, r))
    return MembershipReport(not violated and not residuals, tuple(violated), tuple(residuals))

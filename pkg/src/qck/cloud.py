"""Quantum clouds: finite hypergraphs of atoms intertwined through shared contexts.

A cloud is purely combinatorial. Each context is a set of mutually exclusive
atoms (an orthonormal basis once realized by vectors); two contexts intertwine
when they share an atom.

The on-disk format is line oriented::

    # Specker bug
    C1: 1 2 3
    C2: 3 4 5
    : 5 6 7        # unnamed contexts are auto-named C<k>
"""

from __future__ import annotations

import re
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from pathlib import Path

ATOM_TOKEN = re.compile(r"[A-Za-z0-9_{},']+")
_NAME_TOKEN = re.compile(r"[A-Za-z0-9_{},'.\-]*")


class CloudError(ValueError):
    """Malformed cloud input or an inconsistent cloud operation."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


@dataclass(frozen=True)
class Atom:
    id: str
    display_label: str | None = None


@dataclass(frozen=True)
class Context:
    atoms: tuple[str, ...]
    name: str | None = None

    def __post_init__(self) -> None:
        if len(self.atoms) < 2:
            raise CloudError(f"context {self.name or self.atoms!r} has fewer than 2 atoms")
        if len(set(self.atoms)) != len(self.atoms):
            raise CloudError(f"context {self.name or self.atoms!r} repeats an atom")

    @property
    def key(self) -> frozenset[str]:
        return frozenset(self.atoms)

    def __contains__(self, atom: object) -> bool:
        return atom in self.atoms

    def __len__(self) -> int:
        return len(self.atoms)


@dataclass(frozen=True)
class QuantumCloud:
    """Atoms plus the contexts that organize them.

    ``atoms`` keeps first-appearance order, which every downstream module uses
    as the canonical atom order.
    """

    atoms: tuple[Atom, ...]
    contexts: tuple[Context, ...]
    intertwines: Mapping[str, tuple[int, ...]] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        ids = [a.id for a in self.atoms]
        if len(set(ids)) != len(ids):
            raise CloudError("atom ids are not unique")
        seen: dict[frozenset[str], str] = {}
        for ctx in self.contexts:
            if ctx.key in seen:
                raise CloudError(f"duplicate context {ctx.name!r} (same atoms as {seen[ctx.key]!r})")
            seen[ctx.key] = ctx.name or "?"
        known = set(ids)
        where: dict[str, list[int]] = {i: [] for i in ids}
        for k, ctx in enumerate(self.contexts):
            for a in ctx.atoms:
                if a not in known:
                    raise CloudError(f"context {ctx.name!r} references unknown atom {a!r}")
                where[a].append(k)
        lonely = [i for i in ids if not where[i]]
        if lonely:
            raise CloudError(f"atoms in no context: {', '.join(lonely)}")
        object.__setattr__(self, "intertwines", {a: tuple(ks) for a, ks in where.items()})

    @classmethod
    def from_contexts(
        cls, contexts: Iterable[Sequence[str]], names: Sequence[str | None] | None = None
    ) -> QuantumCloud:
        """Build a cloud from atom lists; atoms are taken in first-appearance order."""
        contexts = [tuple(c) for c in contexts]
        if names is None:
            names = [f"C{k + 1}" for k in range(len(contexts))]
        order: dict[str, None] = {}
        for c in contexts:
            for a in c:
                order.setdefault(a, None)
        return cls(
            atoms=tuple(Atom(a) for a in order),
            contexts=tuple(Context(c, n) for c, n in zip(contexts, names)),
        )

    @property
    def atom_ids(self) -> tuple[str, ...]:
        return tuple(a.id for a in self.atoms)

    def index(self, atom_id: str) -> int:
        try:
            return self.atom_ids.index(atom_id)
        except ValueError:
            raise KeyError(f"unknown atom {atom_id!r}") from None

    def contexts_of(self, atom_id: str) -> tuple[Context, ...]:
        if atom_id not in self.intertwines:
            raise KeyError(f"unknown atom {atom_id!r}")
        return tuple(self.contexts[k] for k in self.intertwines[atom_id])

    def adjacent(self, u: str, v: str) -> bool:
        """True when ``u`` and ``v`` are distinct and share a context."""
        return u != v and bool(set(self.intertwines[u]) & set(self.intertwines[v]))

    def context_indices(self) -> list[list[int]]:
        """Contexts as lists of atom positions (cloud order)."""
        pos = {a: i for i, a in enumerate(self.atom_ids)}
        return [[pos[a] for a in ctx.atoms] for ctx in self.contexts]

    def same_structure(self, other: QuantumCloud) -> bool:
        """Equal atom sets and equal context sets, ignoring order and names."""
        return set(self.atom_ids) == set(other.atom_ids) and {c.key for c in self.contexts} == {
            c.key for c in other.contexts
        }


def parse_cloud(text: str) -> QuantumCloud:
    names: list[str] = []
    contexts: list[tuple[str, ...]] = []
    first_line: dict[frozenset[str], int] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if ":" not in line:
            raise CloudError("expected 'NAME: atom atom ...'", lineno)
        name, rest = line.split(":", 1)
        name = name.strip()
        if name and not _NAME_TOKEN.fullmatch(name):
            raise CloudError(f"bad context name {name!r}", lineno)
        atoms = tuple(rest.split())
        for tok in atoms:
            if not ATOM_TOKEN.fullmatch(tok):
                raise CloudError(f"bad atom token {tok!r}", lineno)
        if len(atoms) < 2:
            raise CloudError("a context needs at least 2 atoms", lineno)
        if len(set(atoms)) != len(atoms):
            dup = next(a for a in atoms if atoms.count(a) > 1)
            raise CloudError(f"atom {dup!r} repeated within a context", lineno)
        key = frozenset(atoms)
        if key in first_line:
            raise CloudError(f"duplicate context (same atoms as line {first_line[key]})", lineno)
        first_line[key] = lineno
        names.append(name or f"C{len(contexts) + 1}")
        contexts.append(atoms)
    if len(set(names)) != len(names):
        raise CloudError("context names are not unique")
    return QuantumCloud.from_contexts(contexts, names)


def load_cloud(path: str | Path) -> QuantumCloud:
    return parse_cloud(Path(path).read_text(encoding="utf-8"))


def serialize_cloud(cloud: QuantumCloud) -> str:
    lines = []
    for k, ctx in enumerate(cloud.contexts):
        lines.append(f"{ctx.name or f'C{k + 1}'}: {' '.join(ctx.atoms)}")
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class ValidationReport:
    isolated_atoms: tuple[str, ...]
    shared_pairs: tuple[tuple[str, str, tuple[str, ...]], ...]
    components: tuple[tuple[str, ...], ...]

    @property
    def warnings(self) -> list[str]:
        out = [f"isolated atom {a}" for a in self.isolated_atoms]
        for c1, c2, common in self.shared_pairs:
            out.append(f"contexts {c1} and {c2} share {len(common)} atoms ({' '.join(common)})")
        return out

    @property
    def ok(self) -> bool:
        return not self.warnings


def validate_cloud(cloud: QuantumCloud) -> ValidationReport:
    """Structural diagnostics; never raises.

    Two distinct contexts sharing two or more atoms cannot both be orthonormal
    bases of a common space without coinciding, so such pairs are flagged.
    """
    isolated = tuple(a for a, ks in cloud.intertwines.items() if not ks)
    shared = []
    ctxs = cloud.contexts
    for i in range(len(ctxs)):
        for j in range(i + 1, len(ctxs)):
            common = tuple(a for a in ctxs[i].atoms if a in ctxs[j].key)
            if len(common) >= 2:
                shared.append((ctxs[i].name or f"C{i + 1}", ctxs[j].name or f"C{j + 1}", common))

    # union-find over atoms
    parent = {a: a for a in cloud.atom_ids}

    def find(x: str) -> str:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for ctx in ctxs:
        root = find(ctx.atoms[0])
        for a in ctx.atoms[1:]:
            r = find(a)
            if r != root:
                parent[r] = root
    groups: dict[str, list[str]] = {}
    for a in cloud.atom_ids:
        groups.setdefault(find(a), []).append(a)
    return ValidationReport(isolated, tuple(shared), tuple(tuple(g) for g in groups.values()))


@dataclass(frozen=True)
class MergeResult:
    cloud: QuantumCloud
    deduplicated: int
    renamed: Mapping[str, str]


def merge_clouds(a: QuantumCloud, b: QuantumCloud, identify: Mapping[str, str]) -> MergeResult:
    """Glue ``b`` onto ``a``, fusing each ``b`` atom in ``identify`` with its image in ``a``.

    Atoms of ``b`` that are not identified keep their id unless it collides with
    an ``a`` atom, in which case primes are appended until it is fresh; the
    renaming is reported. Contexts that become identical after fusion are kept
    once and counted in ``deduplicated``.
    """
    a_ids, b_ids = set(a.atom_ids), set(b.atom_ids)
    for src, dst in identify.items():
        if src not in b_ids:
            raise CloudError(f"identify: {src!r} is not an atom of the second cloud")
        if dst not in a_ids:
            raise CloudError(f"identify: {dst!r} is not an atom of the first cloud")
    images = list(identify.values())
    if len(set(images)) != len(images):
        dup = next(x for x in images if images.count(x) > 1)
        srcs = sorted(k for k, v in identify.items() if v == dup)
        raise CloudError(f"identify maps {', '.join(srcs)} onto the same atom {dup!r}")

    mapping: dict[str, str] = dict(identify)
    renamed: dict[str, str] = {}
    taken = set(a_ids)
    for x in b.atom_ids:
        if x in mapping:
            continue
        new = x
        while new in taken:
            new += "'"
        if new != x:
            renamed[x] = new
        mapping[x] = new
        taken.add(new)

    contexts = [ctx.atoms for ctx in a.contexts]
    names = [ctx.name for ctx in a.contexts]
    seen = {frozenset(c) for c in contexts}
    used_names = set(names)
    dedup = 0
    for ctx in b.contexts:
        atoms = tuple(mapping[x] for x in ctx.atoms)
        if len(set(atoms)) != len(atoms):
            raise CloudError(f"identify collapses two atoms of context {ctx.name!r}")
        if frozenset(atoms) in seen:
            dedup += 1
            continue
        seen.add(frozenset(atoms))
        name = ctx.name or "C"
        while name in used_names:
            name += "'"
        used_names.add(name)
        contexts.append(atoms)
        names.append(name)
    return MergeResult(QuantumCloud.from_contexts(contexts, names), dedup, renamed)

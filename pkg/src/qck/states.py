"""Classical two-valued states on a cloud and what can be read off them.

In exclusive mode a state puts exactly one 1 in every context. States are
listed in a fixed canonical order: lexicographic over the atoms in cloud
order, with 1 sorting before 0. That makes "state #7" meaningful across runs.
"""

from __future__ import annotations

import enum
from collections.abc import Mapping, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from itertools import product

from qck.cloud import QuantumCloud

EXCLUSIVE = "exclusive"
NONEXCLUSIVE = "nonexclusive"
NONEXCLUSIVE_MAX_ATOMS = 24


class Contradiction(Exception):
    """A partial assignment cannot be extended: some context got two 1s or only 0s."""

    def __init__(self, context: str, reason: str):
        self.context = context
        self.reason = reason
        super().__init__(f"context {context}: {reason}")


@dataclass(frozen=True)
class TwoValuedState:
    values: tuple[int, ...]  # aligned with cloud.atom_ids

    def __getitem__(self, i: int) -> int:
        return self.values[i]

    def as_dict(self, cloud: QuantumCloud) -> dict[str, int]:
        return dict(zip(cloud.atom_ids, self.values))


@dataclass(frozen=True)
class StateList:
    cloud: QuantumCloud
    mode: str
    states: tuple[TwoValuedState, ...]

    def __len__(self) -> int:
        return len(self.states)

    def __iter__(self):
        return iter(self.states)

    def column(self, atom_id: str) -> tuple[int, ...]:
        i = self.cloud.index(atom_id)
        return tuple(s.values[i] for s in self.states)


def is_admissible(cloud: QuantumCloud, values: Sequence[int], mode: str = EXCLUSIVE) -> bool:
    if len(values) != len(cloud.atoms) or any(v not in (0, 1) for v in values):
        return False
    if mode == NONEXCLUSIVE:
        return True
    return all(sum(values[i] for i in ctx) == 1 for ctx in cloud.context_indices())


class _Propagator:
    """Unit propagation on the exclusivity/completeness rules, over atom positions."""

    def __init__(self, cloud: QuantumCloud):
        self.names = [c.name or f"C{k + 1}" for k, c in enumerate(cloud.contexts)]
        self.contexts = cloud.context_indices()
        self.of_atom: list[list[int]] = [[] for _ in cloud.atoms]
        for k, ctx in enumerate(self.contexts):
            for i in ctx:
                self.of_atom[i].append(k)

    def close(self, values: list[int | None], queue: list[int]) -> None:
        """Propagate in place from the contexts touching ``queue`` atoms; raises Contradiction."""
        pending = []
        for i in queue:
            pending.extend(self.of_atom[i])
        while pending:
            k = pending.pop()
            ctx = self.contexts[k]
            ones = [i for i in ctx if values[i] == 1]
            if len(ones) > 1:
                raise Contradiction(self.names[k], "two atoms are true")
            free = [i for i in ctx if values[i] is None]
            if ones:
                for i in free:
                    values[i] = 0
                    pending.extend(self.of_atom[i])
            elif not free:
                raise Contradiction(self.names[k], "all atoms are false")
            elif len(free) == 1:
                i = free[0]
                values[i] = 1
                pending.extend(self.of_atom[i])


def propagate_partial(cloud: QuantumCloud, assignment: Mapping[str, int]) -> dict[str, int]:
    """Close a partial truth assignment under the two local admissibility rules.

    A true atom makes its context-mates false; a context whose atoms are all
    false but one makes that one true. Returns the closed assignment (atom id
    to value, only for the atoms it determines) or raises Contradiction.
    """
    values: list[int | None] = [None] * len(cloud.atoms)
    for atom, v in assignment.items():
        if v not in (0, 1):
            raise ValueError(f"value for {atom!r} must be 0 or 1, got {v!r}")
        values[cloud.index(atom)] = v
    prop = _Propagator(cloud)
    prop.close(values, [i for i, v in enumerate(values) if v is not None])
    return {a: v for a, v in zip(cloud.atom_ids, values) if v is not None}


def _search(prop: _Propagator, values: list[int | None], out: list[tuple[int, ...]]) -> None:
    try:
        i = values.index(None)
    except ValueError:
        out.append(tuple(values))  # type: ignore[arg-type]
        return
    for bit in (1, 0):
        trial = list(values)
        trial[i] = bit
        try:
            prop.close(trial, [i])
        except Contradiction:
            continue
        _search(prop, trial, out)


def _frontier(prop: _Propagator, n: int, width: int) -> list[list[int | None]]:
    """Split the search tree breadth-first into at least ``width`` ordered subtrees."""
    nodes: list[list[int | None]] = [[None] * n]
    while len(nodes) < width:
        nxt = []
        grew = False
        for values in nodes:
            if None not in values:
                nxt.append(values)
                continue
            i = values.index(None)
            grew = True
            for bit in (1, 0):
                trial = list(values)
                trial[i] = bit
                try:
                    prop.close(trial, [i])
                except Contradiction:
                    continue
                nxt.append(trial)
        nodes = nxt
        if not grew:
            break
    return nodes


def enumerate_states(cloud: QuantumCloud, mode: str = EXCLUSIVE, threads: int = 1) -> StateList:
    """All two-valued states of ``cloud`` in canonical order.

    Exclusive mode runs a depth-first search that always branches on the
    first unassigned atom (1 first) and propagates after every decision, so
    results come out already sorted. ``threads`` > 1 splits the tree into
    ordered subtrees; the output is identical for any thread count.
    """
    n = len(cloud.atoms)
    if mode == NONEXCLUSIVE:
        if n > NONEXCLUSIVE_MAX_ATOMS:
            raise ValueError(
                f"nonexclusive enumeration of {n} atoms exceeds the {NONEXCLUSIVE_MAX_ATOMS}-atom limit"
            )
        states = tuple(TwoValuedState(v) for v in product((1, 0), repeat=n))
        return StateList(cloud, mode, states)
    if mode != EXCLUSIVE:
        raise ValueError(f"unknown mode {mode!r}")

    prop = _Propagator(cloud)
    if threads <= 1:
        out: list[tuple[int, ...]] = []
        _search(prop, [None] * n, out)
    else:
        roots = _frontier(prop, n, 4 * threads)

        def run(root: list[int | None]) -> list[tuple[int, ...]]:
            part: list[tuple[int, ...]] = []
            _search(prop, root, part)
            return part

        with ThreadPoolExecutor(max_workers=threads) as pool:
            out = [s for part in pool.map(run, roots) for s in part]
    return StateList(cloud, mode, tuple(TwoValuedState(v) for v in out))


@dataclass(frozen=True)
class SeparabilityReport:
    separating: bool
    classes: tuple[tuple[str, ...], ...]  # only classes with >= 2 atoms


def is_separating(states: StateList) -> SeparabilityReport:
    """Check whether every pair of distinct atoms is told apart by some state."""
    cloud = states.cloud
    groups: dict[tuple[int, ...], list[str]] = {}
    for i, a in enumerate(cloud.atom_ids):
        col = tuple(s.values[i] for s in states.states)
        groups.setdefault(col, []).append(a)
    classes = tuple(tuple(g) for g in groups.values() if len(g) > 1)
    return SeparabilityReport(not classes, classes)


@dataclass(frozen=True)
class PartitionLogic:
    labels: Mapping[str, frozenset[int]]
    size: int

    def label(self, atom_id: str) -> frozenset[int]:
        return self.labels[atom_id]

    def format_label(self, atom_id: str) -> str:
        return "{" + ",".join(str(i) for i in sorted(self.labels[atom_id])) + "}"

    def partitions_contexts(self, cloud: QuantumCloud) -> bool:
        """True when, in every context, the labels are disjoint and cover {1..size}."""
        full = set(range(1, self.size + 1))
        for ctx in cloud.contexts:
            union: set[int] = set()
            for a in ctx.atoms:
                lab = self.labels[a]
                if union & lab:
                    return False
                union |= lab
            if union != full:
                return False
        return True


def partition_logic(states: StateList) -> PartitionLogic:
    if states.mode != EXCLUSIVE:
        raise ValueError("partition logic needs exclusive-mode states")
    labels = {
        a: frozenset(k for k, s in enumerate(states.states, start=1) if s.values[i] == 1)
        for i, a in enumerate(states.cloud.atom_ids)
    }
    return PartitionLogic(labels, len(states))


class Verdict(str, enum.Enum):
    TIFS = "TIFS"
    TITS = "TITS"
    BOTH_VALUES_OCCUR = "BOTH_VALUES_OCCUR"
    NO_STATE_ON_SOURCE = "NO_STATE_ON_SOURCE"


@dataclass(frozen=True)
class TerminalClassification:
    source: str
    target: str
    verdict: Verdict
    target_true: int  # states with source=1 and target=1
    target_false: int  # states with source=1 and target=0

    def __str__(self) -> str:
        return f"{self.verdict.value} ({self.target_true}/{self.target_false})"


def classify_terminals(states: StateList, source: str, target: str) -> TerminalClassification:
    """Decide whether a true ``source`` forces ``target`` false (TIFS) or true (TITS)."""
    if source == target:
        raise ValueError("source and target must differ")
    cloud = states.cloud
    si, ti = cloud.index(source), cloud.index(target)
    on = [s for s in states.states if s.values[si] == 1]
    t1 = sum(s.values[ti] for s in on)
    t0 = len(on) - t1
    if not on:
        verdict = Verdict.NO_STATE_ON_SOURCE
    elif t1 == 0:
        verdict = Verdict.TIFS
    elif t0 == 0:
        verdict = Verdict.TITS
    else:
        verdict = Verdict.BOTH_VALUES_OCCUR
    return TerminalClassification(source, target, verdict, t1, t0)

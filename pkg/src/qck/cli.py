"""``qck`` command line: one subcommand per analysis, deterministic output.

Exit codes: 0 success, 1 an ``--expect`` assertion failed, 2 bad input.
Every subcommand accepts ``--format json``; JSON output carries a
``schema_version`` and a run manifest (subcommand, input digests, flags,
tool version, output format). Bundled instances (``specker-bug.cloud``,
``combined.cloud``, ...) may be named without a path.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import os
import sys
from collections.abc import Sequence
from fractions import Fraction
from importlib import resources
from pathlib import Path

import numpy as np

from qck import __version__
from qck.birkhoff import BirkhoffError, birkhoff_decompose, one_line, reconstruct
from qck.cloud import CloudError, QuantumCloud, load_cloud, merge_clouds, serialize_cloud
from qck.polytope import (
    EXPECTATION,
    PROBABILITY,
    ObservableTerm,
    Polytope,
    bell_vertices,
    facet_enumeration,
    vertices_from_states,
)
from qck.quantum import (
    QuantumError,
    load_matrix,
    load_vectors,
    quantum_bound,
    assemble_operator,
    verify_for,
)
from qck.states import (
    EXCLUSIVE,
    NONEXCLUSIVE,
    Verdict,
    classify_terminals,
    enumerate_states,
    is_separating,
    partition_logic,
)

SCHEMA_VERSION = 1


class InputError(Exception):
    pass


class _Run:
    """Collects inputs for the manifest and renders output."""

    def __init__(self, args: argparse.Namespace, out):
        self.args = args
        self.out = out
        self.inputs: list[dict[str, str]] = []

    def resolve(self, name: str) -> Path:
        path = Path(name)
        if not path.exists():
            bundled = resources.files("qck") / "data" / name
            if bundled.is_file():
                path = Path(str(bundled))
            else:
                raise InputError(f"file not found: {name}")
        digest = hashlib.sha256(path.read_bytes()).hexdigest()
        self.inputs.append({"path": name, "sha256": digest})
        return path

    def manifest(self) -> dict:
        flags = {
            k: v
            for k, v in sorted(vars(self.args).items())
            if k not in ("command", "func") and not isinstance(v, Path)
        }
        return {
            "subcommand": self.args.command,
            "inputs": self.inputs,
            "flags": flags,
            "tool_version": __version__,
            "output_format": self.args.format,
        }

    def emit_json(self, result: dict) -> None:
        doc = {"schema_version": SCHEMA_VERSION, "manifest": self.manifest(), "result": result}
        self.out.write(json.dumps(doc, indent=2, sort_keys=True) + "\n")

    def write(self, text: str = "") -> None:
        self.out.write(text + "\n")


def _color(text: str, code: str) -> str:
    if os.environ.get("QCK_COLOR", "0") == "1":
        return f"\x1b[{code}m{text}\x1b[0m"
    return text


def _frac(x: Fraction) -> str:
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def _load_cloud(run: _Run, name: str) -> QuantumCloud:
    return load_cloud(run.resolve(name))


def _expect(run: _Run, actual: str) -> int:
    want = run.args.expect
    if want is None:
        return 0
    if str(want).strip().upper() != str(actual).strip().upper():
        sys.stderr.write(f"expectation failed: expected {want}, got {actual}\n")
        return 1
    return 0


# --- subcommands --------------------------------------------------------------------


def cmd_states(run: _Run) -> int:
    cloud = _load_cloud(run, run.args.cloud)
    states = enumerate_states(cloud, run.args.mode, threads=run.args.threads)
    ids = cloud.atom_ids
    fmt = run.args.format
    if fmt == "json":
        run.emit_json(
            {
                "mode": states.mode,
                "atoms": list(ids),
                "count": len(states),
                "states": [list(s.values) for s in states],
            }
        )
    elif fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["state", *ids])
        for k, s in enumerate(states, start=1):
            w.writerow([k, *s.values])
        run.out.write(buf.getvalue())
    else:
        width = max([len(a) for a in ids] + [1])
        run.write(f"# {len(states)} {states.mode} two-valued states on {len(ids)} atoms")
        run.write("#".rjust(4) + " " + " ".join(a.rjust(width) for a in ids))
        for k, s in enumerate(states, start=1):
            run.write(str(k).rjust(4) + " " + " ".join(str(v).rjust(width) for v in s.values))
    return _expect(run, str(len(states)))


def cmd_classify(run: _Run) -> int:
    cloud = _load_cloud(run, run.args.cloud)
    states = enumerate_states(cloud, EXCLUSIVE, threads=run.args.threads)
    try:
        res = classify_terminals(states, run.args.source, run.args.target)
    except (KeyError, ValueError) as exc:
        raise InputError(str(exc).strip("'\"")) from None
    if run.args.format == "json":
        run.emit_json(
            {
                "source": res.source,
                "target": res.target,
                "verdict": res.verdict.value,
                "target_true": res.target_true,
                "target_false": res.target_false,
                "states": len(states),
            }
        )
    else:
        codes = {Verdict.TIFS: "31", Verdict.TITS: "32"}
        text = str(res)
        run.write(_color(text, codes.get(res.verdict, "33")))
    return _expect(run, res.verdict.value)


def cmd_partition(run: _Run) -> int:
    cloud = _load_cloud(run, run.args.cloud)
    states = enumerate_states(cloud, EXCLUSIVE, threads=run.args.threads)
    logic = partition_logic(states)
    sep = is_separating(states)
    verdict = "separating" if sep.separating else "nonseparating"
    if run.args.format == "json":
        run.emit_json(
            {
                "states": len(states),
                "labels": {a: sorted(logic.labels[a]) for a in cloud.atom_ids},
                "separating": sep.separating,
                "inseparable_classes": [list(c) for c in sep.classes],
                "contexts_partitioned": logic.partitions_contexts(cloud),
            }
        )
    else:
        width = max(len(a) for a in cloud.atom_ids)
        run.write(f"# partition logic over {len(states)} two-valued states")
        for a in cloud.atom_ids:
            run.write(f"{a.rjust(width)}  {logic.format_label(a)}")
        run.write(f"# {verdict}")
        for c in sep.classes:
            run.write(f"# inseparable: {' '.join(c)}")
    return _expect(run, verdict)


def parse_terms(text: str) -> list[ObservableTerm]:
    """Terms file: ``P atom`` | ``E atom`` | ``PROD atom atom ...`` | ``EPROD atom atom ...``."""
    terms = []
    kinds = {"P": PROBABILITY, "E": EXPECTATION, "PROD": PROBABILITY, "EPROD": EXPECTATION}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].split()
        if not line:
            continue
        head, atoms = line[0].upper(), line[1:]
        if head not in kinds:
            raise InputError(f"terms line {lineno}: unknown term kind {line[0]!r}")
        single = head in ("P", "E")
        if (single and len(atoms) != 1) or (not single and len(atoms) < 2):
            raise InputError(f"terms line {lineno}: wrong number of atoms for {head}")
        try:
            terms.append(ObservableTerm(tuple(atoms), kinds[head]))
        except ValueError as exc:
            raise InputError(f"terms line {lineno}: {exc}") from None
    if not terms:
        raise InputError("terms file lists no terms")
    return terms


def _hull_json(poly: Polytope) -> dict:
    return {
        "labels": list(poly.labels),
        "vertices": [[_frac(x) for x in v] for v in poly.vertices],
        "duplicates_removed": poly.duplicates_removed,
        "dimension": poly.dimension,
        "equalities": [
            {"coefficients": list(e.coefficients), "rhs": e.rhs} for e in poly.equalities or ()
        ],
        "facets": [
            {"coefficients": list(f.coefficients), "bound": f.bound} for f in poly.facets or ()
        ],
        "warnings": list(poly.warnings),
    }


def cmd_hull(run: _Run) -> int:
    args = run.args
    if (args.cloud is None) == (args.bell is None):
        raise InputError("give either a cloud file or --bell P,S")
    if args.bell is not None:
        try:
            parties, settings = (int(x) for x in args.bell.split(","))
        except ValueError:
            raise InputError(f"--bell expects P,S, got {args.bell!r}") from None
        terms = args.terms or "all"
        if terms not in ("all", "products"):
            raise InputError("with --bell, --terms is 'all' or 'products'")
        try:
            poly = bell_vertices(parties, settings, args.representation, include_singles=terms == "all")
        except ValueError as exc:
            raise InputError(str(exc)) from None
    else:
        if not args.terms:
            raise InputError("a cloud needs --terms FILE")
        cloud = _load_cloud(run, args.cloud)
        terms = parse_terms(run.resolve(args.terms).read_text(encoding="utf-8"))
        states = enumerate_states(cloud, args.mode, threads=args.threads)
        if not len(states):
            raise InputError("the cloud has no two-valued states; the polytope is empty")
        try:
            poly = vertices_from_states(states, terms)
        except KeyError as exc:
            raise InputError(str(exc).strip("'\"")) from None
    poly = facet_enumeration(poly)
    if args.format == "json":
        run.emit_json(_hull_json(poly))
    else:
        run.write(f"# coordinates: {' '.join(poly.labels)}")
        run.write(
            f"# vertices: {len(poly.vertices)} (duplicates removed: {poly.duplicates_removed}); "
            f"dimension {poly.dimension}"
        )
        for w in poly.warnings:
            run.write(f"# warning: {w}")
        if poly.equalities:
            run.write("equalities:")
            for e in poly.equalities:
                run.write(f"  {e.format(poly.labels)}")
        run.write(f"facets: {len(poly.facets)}")
        for f in poly.facets:
            run.write(f"  {f.format(poly.labels)}")
    return _expect(run, str(len(poly.facets)))


def cmd_verify_for(run: _Run) -> int:
    cloud = _load_cloud(run, run.args.cloud)
    vectors = load_vectors(run.resolve(run.args.vectors))
    rep = verify_for(cloud, vectors, run.args.tol, strict=run.args.strict)
    verdict = "PASS" if rep.passed else "FAIL"
    if run.args.format == "json":
        run.emit_json(
            {
                "verdict": verdict,
                "orthogonality_failures": [[u, v, o] for u, v, o in rep.orthogonality_failures],
                "faithfulness_failures": [[u, v, o] for u, v, o in rep.faithfulness_failures],
                "accidental_orthogonalities": [list(p) for p in rep.accidental_orthogonalities],
            }
        )
    else:
        run.write(_color(verdict, "32" if rep.passed else "31"))
        for u, v, o in rep.orthogonality_failures:
            run.write(f"  not orthogonal: {u} {v} |<u|v>| = {o:.3e}")
        for u, v, o in rep.faithfulness_failures:
            run.write(f"  collinear: {u} {v} |<u|v>| = {o:.12f}")
        for u, v in rep.accidental_orthogonalities:
            run.write(f"  accidental orthogonality: {u} {v}")
    return _expect(run, verdict)


def cmd_qbound(run: _Run) -> int:
    path = run.resolve(run.args.terms)
    terms = []
    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        parts = raw.split("#", 1)[0].split()
        if not parts:
            continue
        if len(parts) < 2:
            raise InputError(f"{path.name} line {lineno}: expected 'COEF matrix_file ...'")
        try:
            coef = float(Fraction(parts[0]))
        except ValueError:
            raise InputError(f"{path.name} line {lineno}: bad coefficient {parts[0]!r}") from None
        mats = [load_matrix(run.resolve(str(path.parent / f))) for f in parts[1:]]
        terms.append((coef, mats))
    if not terms:
        raise InputError("operator-terms file lists no terms")
    op = assemble_operator(terms)
    b = quantum_bound(op)
    if run.args.format == "json":
        run.emit_json({"dimension": op.shape[0], "lambda_min": b.lower, "lambda_max": b.upper})
    else:
        run.write(f"lambda_min = {b.lower:.12f}")
        run.write(f"lambda_max = {b.upper:.12f}")
    return 0


def cmd_birkhoff(run: _Run) -> int:
    m = load_matrix(run.resolve(run.args.matrix))
    if np.iscomplexobj(m):
        raise InputError("doubly stochastic matrix must be real")
    dec = birkhoff_decompose(m, run.args.tol)
    err = float(np.max(np.abs(reconstruct(dec) - m)))
    within = dec.k <= dec.bound
    if run.args.format == "json":
        run.emit_json(
            {
                "n": dec.n,
                "terms": [{"weight": w, "permutation": [p + 1 for p in pi]} for w, pi in dec.terms],
                "k": dec.k,
                "bound": dec.bound,
                "reconstruction_error": err,
            }
        )
    else:
        for w, pi in dec.terms:
            run.write(f"{w:.12f}: {one_line(pi)}")
        if run.args.check_bound:
            run.write(f"# k = {dec.k}, (n-1)^2+1 = {dec.bound}")
    if run.args.check_bound and not within:
        return 1
    return 0


def _parse_identify(spec: str) -> dict[str, str]:
    out = {}
    for item in spec.split(","):
        item = item.strip()
        if not item:
            continue
        if "=" not in item:
            raise InputError(f"--identify items look like b_atom=a_atom, got {item!r}")
        src, dst = (s.strip() for s in item.split("=", 1))
        out[src] = dst
    return out


def cmd_merge(run: _Run) -> int:
    a = _load_cloud(run, run.args.first)
    b = _load_cloud(run, run.args.second)
    identify: dict[str, str] = {}
    if run.args.identify_shared:
        identify.update({x: x for x in b.atom_ids if x in set(a.atom_ids)})
    if run.args.identify:
        identify.update(_parse_identify(run.args.identify))
    res = merge_clouds(a, b, identify)
    c = res.cloud
    if run.args.format == "json":
        run.emit_json(
            {
                "atoms": list(c.atom_ids),
                "contexts": [{"name": x.name, "atoms": list(x.atoms)} for x in c.contexts],
                "deduplicated_contexts": res.deduplicated,
                "renamed": dict(sorted(res.renamed.items())),
            }
        )
    else:
        run.write(f"# {len(c.atoms)} atoms, {len(c.contexts)} contexts; {res.deduplicated} duplicate contexts dropped")
        run.out.write(serialize_cloud(c))
    return _expect(run, f"{len(c.atoms)},{len(c.contexts)}")


# --- parser -------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qck", description="Analyze quantum clouds (context hypergraphs).")
    parser.add_argument("--version", action="version", version=f"qck {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    threads = argparse.ArgumentParser(add_help=False)
    threads.add_argument("--threads", type=int, default=1, help="worker threads for state enumeration")
    expect = argparse.ArgumentParser(add_help=False)
    expect.add_argument("--expect", help="exit 1 unless the primary result equals this value")

    p = sub.add_parser("states", parents=[threads, expect], help="enumerate two-valued states")
    p.add_argument("cloud")
    p.add_argument("--mode", choices=[EXCLUSIVE, NONEXCLUSIVE], default=EXCLUSIVE)
    p.add_argument("--format", choices=["table", "csv", "json"], default="table")
    p.set_defaults(func=cmd_states)

    p = sub.add_parser("classify", parents=[threads, expect], help="TIFS/TITS verdict for two terminals")
    p.add_argument("cloud")
    p.add_argument("--source", required=True)
    p.add_argument("--target", required=True)
    p.add_argument("--format", choices=["text", "json"], default="text")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("partition", parents=[threads, expect], help="partition logic and separability")
    p.add_argument("cloud")
    p.add_argument("--format", choices=["table", "json"], default="table")
    p.set_defaults(func=cmd_partition)

    p = sub.add_parser("hull", parents=[threads, expect], help="facets of a correlation polytope")
    p.add_argument("cloud", nargs="?")
    p.add_argument("--terms", help="terms file (with a cloud) or 'all'/'products' (with --bell)")
    p.add_argument("--bell", metavar="P,S", help="Bell scenario with P parties and S settings each")
    p.add_argument("--representation", choices=[EXPECTATION, PROBABILITY], default=EXPECTATION)
    p.add_argument("--mode", choices=[EXCLUSIVE, NONEXCLUSIVE], default=EXCLUSIVE)
    p.add_argument("--format", choices=["inequalities", "json"], default="inequalities")
    p.set_defaults(func=cmd_hull)

    p = sub.add_parser("verify-for", parents=[expect], help="check a faithful orthogonal representation")
    p.add_argument("cloud")
    p.add_argument("vectors")
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--strict", action="store_true", help="also list accidental orthogonalities")
    p.add_argument("--format", choices=["text", "json"], default="text")
    p.set_defaults(func=cmd_verify_for)

    p = sub.add_parser("qbound", help="extreme eigenvalues of an assembled operator")
    p.add_argument("terms", help="lines 'COEF matrix_file matrix_file ...'")
    p.add_argument("--format", choices=["text", "json"], default="text")
    p.set_defaults(func=cmd_qbound, expect=None)

    p = sub.add_parser("birkhoff", help="Birkhoff-von Neumann decomposition")
    p.add_argument("matrix")
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--check-bound", action="store_true", help="report k against (n-1)^2+1")
    p.add_argument("--format", choices=["text", "json"], default="text")
    p.set_defaults(func=cmd_birkhoff, expect=None)

    p = sub.add_parser("merge", parents=[expect], help="glue two clouds at identified atoms")
    p.add_argument("first")
    p.add_argument("second")
    p.add_argument("--identify", help="comma-separated b_atom=a_atom pairs")
    p.add_argument("--identify-shared", action="store_true", help="identify atoms with equal ids")
    p.add_argument("--format", choices=["cloud", "json"], default="cloud")
    p.set_defaults(func=cmd_merge)
    return parser


def run(argv: Sequence[str] | None = None, out=None) -> int:
    out = out if out is not None else sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    job = _Run(args, out)
    try:
        return args.func(job)
    except (InputError, CloudError, QuantumError, BirkhoffError, OSError, KeyError, ValueError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        sys.stderr.write(f"qck {args.command}: error: {msg}\n")
        return 2


def main() -> None:
    sys.exit(run())

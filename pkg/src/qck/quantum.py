"""Vector-side computations: orthogonal representations, Born and trace-form
probabilities, context transition matrices, and spectral quantum bounds."""

from __future__ import annotations

import re
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from fractions import Fraction
from functools import reduce
from pathlib import Path

import numpy as np

from qck.cloud import QuantumCloud
from qck.linalg import hermitian_eigh

TAU_NORM = 1e-12
TAU_DS = 1e-9
TAU_ORTHONORMAL = 1e-10
TAU_HERMITIAN = 1e-12
TAU_TRACE = 1e-9
TAU_FOR = 1e-9


class QuantumError(ValueError):
    pass


class DimensionMismatch(QuantumError):
    pass


class NotOrthonormal(QuantumError):
    pass


class NotHermitian(QuantumError):
    pass


class NotNormalized(QuantumError):
    pass


class PreconditionError(QuantumError):
    """A named precondition of the trace-form probability failed."""

    def __init__(self, condition: str, detail: str):
        self.condition = condition
        super().__init__(f"{condition}: {detail}")


# --- file formats ---------------------------------------------------------------

def parse_scalar(token: str) -> complex:
    """Parse ``3``, ``-0.25``, ``1/3``, ``1/2+3/4i``, ``-i`` or ``2.5e-1-1e-3i``."""
    tok = token.strip().replace("j", "i")
    if not tok:
        raise ValueError("empty component")

    def real(s: str) -> float:
        return float(Fraction(s)) if "/" in s else float(s)

    if not tok.endswith("i"):
        return complex(real(tok), 0.0)
    body = tok[:-1]
    # find the sign that separates real and imaginary parts (skip exponent signs)
    split = None
    for k in range(len(body) - 1, 0, -1):
        if body[k] in "+-" and body[k - 1] not in "eE":
            split = k
            break
    re_part, im_part = (body[:split], body[split:]) if split is not None else ("", body)
    if im_part in ("", "+"):
        im = 1.0
    elif im_part == "-":
        im = -1.0
    else:
        im = real(im_part)
    return complex(real(re_part) if re_part else 0.0, im)


def parse_vectors(text: str) -> dict[str, np.ndarray]:
    """Read ``atom: c1 c2 ... cd`` lines; ``#`` comments and blank lines are skipped."""
    out: dict[str, np.ndarray] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if ":" not in line:
            raise ValueError(f"line {lineno}: expected 'atom: c1 c2 ...'")
        atom, rest = (s.strip() for s in line.split(":", 1))
        if atom in out:
            raise ValueError(f"line {lineno}: atom {atom!r} given twice")
        try:
            comps = [parse_scalar(t) for t in rest.split()]
        except ValueError as exc:
            raise ValueError(f"line {lineno}: {exc}") from None
        if not comps:
            raise ValueError(f"line {lineno}: no components")
        out[atom] = np.array(comps, dtype=complex)
    return out


def load_vectors(path: str | Path) -> dict[str, np.ndarray]:
    return parse_vectors(Path(path).read_text(encoding="utf-8"))


def parse_matrix(text: str) -> np.ndarray:
    rows = []
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if line:
            rows.append([parse_scalar(t) for t in line.split()])
    if not rows or any(len(r) != len(rows[0]) for r in rows):
        raise ValueError("matrix rows are missing or ragged")
    m = np.array(rows, dtype=complex)
    return m.real.copy() if not np.any(m.imag) else m


def load_matrix(path: str | Path) -> np.ndarray:
    return parse_matrix(Path(path).read_text(encoding="utf-8"))


# --- faithful orthogonal representations -------------------------------------------


@dataclass(frozen=True)
class VectorRepresentation:
    cloud: QuantumCloud
    vectors: Mapping[str, np.ndarray]

    def __post_init__(self) -> None:
        missing = [a for a in self.cloud.atom_ids if a not in self.vectors]
        if missing:
            raise QuantumError(f"no vector for atoms: {', '.join(missing)}")
        dims = {len(np.asarray(self.vectors[a])) for a in self.cloud.atom_ids}
        if len(dims) != 1:
            raise DimensionMismatch(f"vectors have differing dimensions {sorted(dims)}")
        for a in self.cloud.atom_ids:
            if np.linalg.norm(self.vectors[a]) == 0:
                raise QuantumError(f"vector for {a!r} is zero")

    @property
    def dimension(self) -> int:
        return len(self.vectors[self.cloud.atom_ids[0]])

    def unit(self, atom: str) -> np.ndarray:
        v = np.asarray(self.vectors[atom], dtype=complex)
        return v / np.linalg.norm(v)


@dataclass(frozen=True)
class FORReport:
    orthogonality_failures: tuple[tuple[str, str, float], ...]
    faithfulness_failures: tuple[tuple[str, str, float], ...]
    accidental_orthogonalities: tuple[tuple[str, str], ...] = field(default=())

    @property
    def passed(self) -> bool:
        return not self.orthogonality_failures and not self.faithfulness_failures


def verify_for(
    cloud: QuantumCloud,
    vectors: Mapping[str, np.ndarray] | VectorRepresentation,
    tol: float = TAU_FOR,
    strict: bool = False,
) -> FORReport:
    """Check a claimed faithful orthogonal representation.

    Inner products are taken between normalized vectors. Same-context pairs
    must have overlap at most ``tol``; every pair of distinct atoms must have
    overlap below ``1 - tol``. With ``strict``, orthogonal pairs that share no
    context are also listed (they do not make the check fail).
    """
    rep = vectors if isinstance(vectors, VectorRepresentation) else VectorRepresentation(cloud, vectors)
    ids = cloud.atom_ids
    units = {a: rep.unit(a) for a in ids}
    ortho, faithful, accidental = [], [], []
    for i, u in enumerate(ids):
        for v in ids[i + 1 :]:
            overlap = float(abs(np.vdot(units[u], units[v])))
            if cloud.adjacent(u, v):
                if overlap > tol:
                    ortho.append((u, v, overlap))
            elif strict and overlap <= tol:
                accidental.append((u, v))
            if overlap > 1 - tol:
                faithful.append((u, v, overlap))
    return FORReport(tuple(ortho), tuple(faithful), tuple(accidental))


# --- probabilities ------------------------------------------------------------------


def _as_basis(basis: Sequence[np.ndarray] | np.ndarray) -> np.ndarray:
    """Stack basis vectors as columns."""
    if isinstance(basis, np.ndarray) and basis.ndim == 2:
        return basis.T.astype(complex)
    return np.column_stack([np.asarray(b, dtype=complex) for b in basis])


def check_orthonormal(basis: np.ndarray, tol: float = TAU_ORTHONORMAL) -> None:
    gram = basis.conj().T @ basis
    err = float(np.max(np.abs(gram - np.eye(gram.shape[0])))) if gram.size else 0.0
    if err > tol:
        raise NotOrthonormal(f"basis is not orthonormal (max Gram deviation {err:.3g} > {tol:g})")


def born_probabilities(
    psi: np.ndarray, basis: Sequence[np.ndarray] | np.ndarray, tol: float = TAU_ORTHONORMAL
) -> np.ndarray:
    """``p_i = |<psi|e_i>|^2`` for a unit ``psi`` and a complete orthonormal basis."""
    psi = np.asarray(psi, dtype=complex)
    b = _as_basis(basis)
    if b.shape != (len(psi), len(psi)):
        raise DimensionMismatch(f"state has dimension {len(psi)}, basis is {b.shape[0]}x{b.shape[1]}")
    check_orthonormal(b, tol)
    norm = float(np.linalg.norm(psi))
    if abs(norm - 1) > tol:
        raise NotNormalized(f"state norm {norm!r} is not 1")
    return np.abs(b.conj().T @ psi) ** 2


def transition_matrix(
    basis_a: Sequence[np.ndarray] | np.ndarray,
    basis_b: Sequence[np.ndarray] | np.ndarray,
    tol: float = TAU_ORTHONORMAL,
) -> np.ndarray:
    """``P[i, j] = |<e_i|f_j>|^2``; doubly stochastic for two complete orthonormal bases."""
    a, b = _as_basis(basis_a), _as_basis(basis_b)
    if a.shape != b.shape or a.shape[0] != a.shape[1]:
        raise DimensionMismatch(f"bases have shapes {a.shape} and {b.shape}")
    check_orthonormal(a, tol)
    check_orthonormal(b, tol)
    # separate real products summed over k in a fixed order: swapping the bases
    # then gives the exact transpose, not just a rounding-level neighbour
    re = np.zeros((a.shape[1], b.shape[1]))
    im = np.zeros_like(re)
    for k in range(a.shape[0]):
        ar, ai, br, bi = a[k].real[:, None], a[k].imag[:, None], b[k].real[None, :], b[k].imag[None, :]
        re += ar * br + ai * bi
        im += ar * bi - ai * br
    return re * re + im * im


def is_doubly_stochastic(m: np.ndarray, tol: float = TAU_DS) -> bool:
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        return False
    return bool(
        np.all(m >= -tol)
        and np.all(np.abs(m.sum(axis=0) - 1) <= tol)
        and np.all(np.abs(m.sum(axis=1) - 1) <= tol)
    )


def projector(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=complex)
    v = v / np.linalg.norm(v)
    return np.outer(v, v.conj())


def trace_form_probability(e: np.ndarray, f: np.ndarray, r: np.ndarray, tol: float = TAU_TRACE) -> float:
    """Generalized joint probability ``Tr(E R F R)`` for rank-one projectors E, F.

    ``R`` must be a real positive diagonal matrix with ``Tr(R^2) = n`` and
    ``Tr(E R^2) = 1``. With ``R = I`` this is the Born value ``Tr(E F)``.
    """
    e, f, r = (np.asarray(x, dtype=complex) for x in (e, f, r))
    n = e.shape[0]
    if e.shape != (n, n) or f.shape != (n, n) or r.shape != (n, n):
        raise DimensionMismatch(f"shapes {e.shape}, {f.shape}, {r.shape} do not agree")
    for name, p in (("E", e), ("F", f)):
        if np.max(np.abs(p - p.conj().T)) > tol:
            raise PreconditionError(f"{name} hermitian", "operator is not self-adjoint")
        if np.max(np.abs(p @ p - p)) > tol:
            raise PreconditionError(f"{name} projector", "operator is not idempotent")
        if abs(np.trace(p).real - 1) > tol:
            raise PreconditionError(f"{name} rank one", f"trace is {np.trace(p).real:.6g}")
    off = r - np.diag(np.diag(r))
    if np.any(np.abs(off) > tol) or np.any(np.abs(np.diag(r).imag) > tol):
        raise PreconditionError("R real diagonal", "R has off-diagonal or imaginary entries")
    if np.any(np.diag(r).real <= 0):
        raise PreconditionError("R positive", "R has a non-positive diagonal entry")
    r2 = r @ r
    if abs(np.trace(r2).real - n) > tol:
        raise PreconditionError("Tr(R^2) = n", f"Tr(R^2) = {np.trace(r2).real:.12g}, n = {n}")
    if abs(np.trace(e @ r2).real - 1) > tol:
        raise PreconditionError("Tr(E R^2) = 1", f"Tr(E R^2) = {np.trace(e @ r2).real:.12g}")
    return float(np.trace(e @ r @ f @ r).real)


# --- operators and bounds -----------------------------------------------------------


def hermiticity_residual(m: np.ndarray) -> float:
    m = np.asarray(m)
    return float(np.max(np.abs(m - m.conj().T))) if m.size else 0.0


def assemble_operator(terms: Sequence[tuple[float, Sequence[np.ndarray]]]) -> np.ndarray:
    """``sum_k c_k (O_k1 (x) O_k2 (x) ...)``: one factor per party, combined by Kronecker product."""
    if not terms:
        raise ValueError("no terms")
    dims = [np.asarray(o).shape[0] for o in terms[0][1]]
    total = None
    for k, (coef, factors) in enumerate(terms):
        shapes = [np.asarray(o).shape for o in factors]
        if [s[0] for s in shapes] != dims or any(s[0] != s[1] or len(s) != 2 for s in shapes):
            raise DimensionMismatch(f"term {k + 1} has factor shapes {shapes}, expected {dims}")
        op = coef * reduce(np.kron, (np.asarray(o, dtype=complex) for o in factors))
        total = op if total is None else total + op
    res = hermiticity_residual(total)
    if res > TAU_HERMITIAN * max(1.0, float(np.max(np.abs(total)))):
        raise NotHermitian(f"assembled operator is not Hermitian (residual {res:.3g})")
    return total


@dataclass(frozen=True)
class SpectralBounds:
    lower: float
    upper: float
    lower_vector: np.ndarray
    upper_vector: np.ndarray

    def __iter__(self):
        return iter((self.lower, self.upper))


def quantum_bound(b: np.ndarray, tol: float = TAU_HERMITIAN) -> SpectralBounds:
    """Smallest and largest eigenvalue of a Hermitian operator, with eigenvectors."""
    b = np.asarray(b, dtype=complex)
    if b.ndim != 2 or b.shape[0] != b.shape[1]:
        raise DimensionMismatch(f"operator must be square, got {b.shape}")
    res = hermiticity_residual(b)
    if res > tol * max(1.0, float(np.max(np.abs(b)))):
        raise NotHermitian(f"operator is not Hermitian (residual {res:.3g})")
    w, v = hermitian_eigh((b + b.conj().T) / 2)
    return SpectralBounds(float(w[0]), float(w[-1]), v[:, 0], v[:, -1])


# --- common observables -----------------------------------------------------------

PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)


def spin_observable(theta: float) -> np.ndarray:
    """Dichotomic spin observable ``cos(theta) Z + sin(theta) X`` in the x-z plane."""
    return np.cos(theta) * PAULI_Z + np.sin(theta) * PAULI_X


def chsh_operator(a1: float, a2: float, b1: float, b2: float) -> np.ndarray:
    """``A1 B1 + A1 B2 + A2 B1 - A2 B2`` with spin observables at the given angles."""
    A1, A2, B1, B2 = (spin_observable(t) for t in (a1, a2, b1, b2))
    return assemble_operator([(1.0, [A1, B1]), (1.0, [A1, B2]), (1.0, [A2, B1]), (-1.0, [A2, B2])])


def operator_for_inequality(
    coefficients: Sequence[float], labels: Sequence[str], observables: Mapping[str, np.ndarray]
) -> np.ndarray:
    """Quantum operator for a Bell-type inequality over labels like ``A1``, ``B2``, ``A1B2``.

    ``observables`` maps single labels (``A1``) to that party's operator;
    parties missing from a term get the identity.
    """
    parties = sorted({lab[0] for lab in observables})
    dims = {p: next(np.asarray(o).shape[0] for k, o in observables.items() if k[0] == p) for p in parties}
    terms = []
    for c, lab in zip(coefficients, labels):
        if c == 0:
            continue
        parts = dict(re.findall(r"([A-Z])(\d+)", lab))
        factors = [
            observables[f"{p}{parts[p]}"] if p in parts else np.eye(dims[p]) for p in parties
        ]
        terms.append((float(c), factors))
    return assemble_operator(terms)

"""Dense pure-state vectors and the small fixed gate set.

Bit convention: qubit 0 is the leftmost ket symbol and the most significant
bit of the amplitude index, so ``|q0 q1 ... q(n-1)>`` lives at index
``q0 * 2**(n-1) + ... + q(n-1)``.

States and operators are immutable; every function returns a new object.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

MAX_QUBITS = 12
ATOL = 1e-12


class ImpossibleBranchError(ValueError):
    """Raised when a zero-norm vector would have to be normalized."""


class InvariantError(AssertionError):
    """An internal consistency check failed (a bug, not bad input)."""


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class StateVector:
    """A ket over ``n_qubits`` qubits (not necessarily normalized)."""

    amplitudes: np.ndarray

    def __post_init__(self):
        amps = _readonly(np.ravel(self.amplitudes))
        n = amps.size.bit_length() - 1
        if amps.size < 2 or 2**n != amps.size:
            raise ValueError(f"state length {amps.size} is not a power of two >= 2")
        if n > MAX_QUBITS:
            raise ValueError(f"{n} qubits exceeds the cap of {MAX_QUBITS}")
        if not np.all(np.isfinite(amps)):
            raise ValueError("state has non-finite amplitudes")
        object.__setattr__(self, "amplitudes", amps)

    @property
    def n_qubits(self) -> int:
        return self.amplitudes.size.bit_length() - 1

    def __len__(self):
        return self.amplitudes.size

    def __repr__(self):
        return f"StateVector(n_qubits={self.n_qubits}, amplitudes={self.amplitudes!r})"

    def allclose(self, other: "StateVector", atol: float = ATOL) -> bool:
        return self.n_qubits == other.n_qubits and np.allclose(
            self.amplitudes, other.amplitudes, rtol=0.0, atol=atol
        )

    def tolist(self) -> list[list[float]]:
        """Amplitudes as ``[[re, im], ...]`` for serialization."""
        return [[float(a.real), float(a.imag)] for a in self.amplitudes]


@dataclass(frozen=True, eq=False)
class Operator:
    """A ``dim x dim`` matrix acting on ``log2(dim)`` qubits.

    When ``unitary`` is set the matrix is checked for ``U^dagger U = I``.
    """

    matrix: np.ndarray
    unitary: bool = False
    name: str = ""

    def __post_init__(self):
        m = _readonly(self.matrix)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"operator must be square, got shape {m.shape}")
        dim = m.shape[0]
        if dim < 2 or dim & (dim - 1):
            raise ValueError(f"operator dimension {dim} is not a power of two")
        if self.unitary and not np.allclose(m.conj().T @ m, np.eye(dim), atol=ATOL):
            raise ValueError(f"operator {self.name or ''} flagged unitary but U^dagger U != I")
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def n_qubits(self) -> int:
        return self.dim.bit_length() - 1

    @property
    def dagger(self) -> "Operator":
        return Operator(self.matrix.conj().T, self.unitary, f"{self.name}^dagger" if self.name else "")

    def is_hermitian(self, atol: float = ATOL) -> bool:
        return bool(np.allclose(self.matrix, self.matrix.conj().T, atol=atol))

    def __matmul__(self, other: "Operator") -> "Operator":
        return Operator(self.matrix @ other.matrix, self.unitary and other.unitary)

    def allclose(self, other: "Operator", atol: float = ATOL) -> bool:
        return self.dim == other.dim and np.allclose(self.matrix, other.matrix, rtol=0.0, atol=atol)


# -- fixed gates and observables ------------------------------------------------

_S2 = 1 / np.sqrt(2)

I2 = Operator(np.eye(2), unitary=True, name="I")
X = Operator([[0, 1], [1, 0]], unitary=True, name="X")
Y = Operator([[0, -1j], [1j, 0]], unitary=True, name="Y")
Z = Operator([[1, 0], [0, -1]], unitary=True, name="Z")
H = Operator(np.array([[1, 1], [1, -1]]) * _S2, unitary=True, name="H")
S = Operator([[1, 0], [0, 1j]], unitary=True, name="S")
S_DAG = S.dagger
CNOT = Operator(
    [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], unitary=True, name="CNOT"
)

SIGMA_X, SIGMA_Y, SIGMA_Z = X, Y, Z
# observables, deliberately not flagged unitary
SIGMA_PLUS = Operator((X.matrix + Y.matrix) * _S2, name="sigma+")
SIGMA_MINUS = Operator((X.matrix - Y.matrix) * _S2, name="sigma-")

P0 = Operator([[1, 0], [0, 0]], name="|0><0|")
P1 = Operator([[0, 0], [0, 1]], name="|1><1|")


def kron(*ops: Operator) -> Operator:
    """Tensor product of operators, leftmost factor on the lowest qubit index."""
    m = np.eye(1)
    for op in ops:
        m = np.kron(m, op.matrix)
    return Operator(m, all(op.unitary for op in ops))


def projector(s: StateVector) -> Operator:
    """``|s><s|`` for a normalized ``s``."""
    a = s.amplitudes
    return Operator(np.outer(a, a.conj()), name="projector")


# -- constructors ---------------------------------------------------------------

def basis_state(bits: str | Sequence[int]) -> StateVector:
    """Computational basis ket, e.g. ``basis_state("01")``."""
    bits = [int(b) for b in bits]
    n = len(bits)
    idx = 0
    for b in bits:
        if b not in (0, 1):
            raise ValueError(f"bit values must be 0 or 1, got {b}")
        idx = 2 * idx + b
    a = np.zeros(2**n, dtype=complex)
    a[idx] = 1.0
    return StateVector(a)


def qubit(alpha: complex, beta: complex) -> StateVector:
    return StateVector([alpha, beta])


def bloch_state(theta: float, phi: float) -> StateVector:
    """``cos(theta/2)|0> + sin(theta/2) exp(i phi)|1>``."""
    return StateVector([np.cos(theta / 2), np.sin(theta / 2) * np.exp(1j * phi)])


PLUS = StateVector(np.array([1, 1]) * _S2)
MINUS = StateVector(np.array([1, -1]) * _S2)
ZERO = basis_state("0")
ONE = basis_state("1")


def random_state(rng: np.random.Generator, n_qubits: int = 1) -> StateVector:
    """Haar-random pure state (normalized complex Gaussian vector)."""
    v = rng.normal(size=2**n_qubits) + 1j * rng.normal(size=2**n_qubits)
    return StateVector(v / np.linalg.norm(v))


def random_unitary(rng: np.random.Generator, dim: int = 2) -> Operator:
    """Haar-random unitary via QR with phase fix."""
    z = (rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    q = q * (d / np.abs(d))
    return Operator(q, unitary=True)


# -- algebra --------------------------------------------------------------------

def tensor(a: StateVector, b: StateVector) -> StateVector:
    """``|a>|b>``; qubit 0 of ``a`` becomes qubit 0 of the result."""
    return StateVector(np.kron(a.amplitudes, b.amplitudes))


def _check_targets(n: int, targets: Sequence[int]) -> list[int]:
    targets = [int(t) for t in targets]
    for t in targets:
        if not 0 <= t < n:
            raise IndexError(f"qubit index {t} out of range for {n} qubits")
    if len(set(targets)) != len(targets):
        raise ValueError(f"duplicate target in {targets}")
    return targets


def apply_op(s: StateVector, op: Operator, targets: Sequence[int] | int) -> StateVector:
    """Act with ``op`` on ``targets`` (in order) and identity elsewhere.

    The result is not renormalized, so Kraus operators can be applied with
    the same call as gates.
    """
    if isinstance(targets, (int, np.integer)):
        targets = [targets]
    n = s.n_qubits
    targets = _check_targets(n, targets)
    k = len(targets)
    if op.dim != 2**k:
        raise ValueError(f"operator on {op.n_qubits} qubits applied to {k} targets")
    psi = s.amplitudes.reshape((2,) * n)
    gate = op.matrix.reshape((2,) * (2 * k))
    # contract the gate's input legs with the target axes
    out = np.tensordot(gate, psi, axes=(list(range(k, 2 * k)), targets))
    out = np.moveaxis(out, list(range(k)), targets)
    return StateVector(out.reshape(-1))


def permute_qubits(s: StateVector, order: Sequence[int]) -> StateVector:
    """Reorder qubits: new qubit ``i`` is old qubit ``order[i]``."""
    order = _check_targets(s.n_qubits, order)
    if len(order) != s.n_qubits:
        raise ValueError("permutation must mention every qubit")
    psi = s.amplitudes.reshape((2,) * s.n_qubits)
    return StateVector(np.transpose(psi, order).reshape(-1))


def inner(a: StateVector, b: StateVector) -> complex:
    """``<a|b>``."""
    if a.n_qubits != b.n_qubits:
        raise ValueError(f"qubit count mismatch: {a.n_qubits} vs {b.n_qubits}")
    return complex(np.vdot(a.amplitudes, b.amplitudes))


def norm(s: StateVector) -> float:
    return float(np.linalg.norm(s.amplitudes))


def normalize(s: StateVector) -> StateVector:
    nrm = norm(s)
    if nrm < ATOL:
        raise ImpossibleBranchError("impossible branch: cannot normalize a zero vector")
    return StateVector(s.amplitudes / nrm)


def conjugate(s: StateVector) -> StateVector:
    return StateVector(s.amplitudes.conj())


def fidelity(a: StateVector, b: StateVector) -> float:
    """``|<a|b>|^2`` for pure states."""
    return abs(inner(a, b)) ** 2


def is_normalized(s: StateVector, atol: float = 1e-10) -> bool:
    return abs(norm(s) - 1.0) <= atol


def expectation(s: StateVector, op: Operator, targets: Sequence[int] | int) -> float:
    """Real expectation value ``<s|op|s>`` of a Hermitian ``op`` on ``targets``."""
    if not op.is_hermitian():
        raise ValueError(f"operator {op.name!r} is not Hermitian")
    if not is_normalized(s):
        raise ValueError(f"state is not normalized (norm={norm(s)!r})")
    val = inner(s, apply_op(s, op, targets))
    if abs(val.imag) > ATOL:
        raise InvariantError(f"Hermitian expectation has imaginary part {val.imag!r}")
    return val.real


def equal_up_to_phase(a: StateVector, b: StateVector, atol: float = ATOL) -> bool:
    """True when ``a = e^{i chi} b`` for some global phase."""
    ov = inner(b, a)
    if abs(ov) < ATOL:
        return norm(a) < atol and norm(b) < atol
    phase = ov / abs(ov)
    return np.allclose(a.amplitudes, phase * b.amplitudes, rtol=0.0, atol=atol)

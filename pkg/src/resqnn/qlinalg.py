"""Dense linear algebra for small multi-qubit systems.

Everything in this package runs at desk scale (a handful of qubits), so all
operators are dense complex128 matrices indexed big-endian: qubit 0 is the
leftmost tensor factor and the most significant bit of a basis index.

Two light wrapper types carry state semantics:

* :class:`OperatorState` — a Hermitian operator on ``num_qubits`` qubits.
  Residual shortcuts add density matrices, so the trace may exceed 1 (it is
  ``2**t`` after ``t`` shortcut additions); positivity is preserved up to
  roundoff and is checked explicitly by :func:`assert_valid_state` rather
  than on every construction.
* :class:`PureState` — a normalized amplitude vector.

Plain ``numpy.ndarray`` is used for everything without state semantics
(unitaries, update generators, basis elements).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache, reduce
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "HERMITIAN_TOL",
    "PSD_TOL",
    "NORM_TOL",
    "DimensionError",
    "NonHermitianError",
    "OperatorState",
    "PureState",
    "assert_valid_state",
    "dagger",
    "embed_operator",
    "exp_i_hermitian",
    "fidelity_pure",
    "ground_state_projector",
    "haar_random_unitary",
    "hs_distance",
    "partial_trace",
    "partial_trace_keep",
    "pauli_basis",
    "pauli_coefficients",
    "ptrace_qubits",
    "random_pure_state",
    "tensor_product",
]

#: Absolute tolerance for Hermiticity checks.
HERMITIAN_TOL = 1e-10
#: Eigenvalues above this (slightly negative) floor count as positive.
PSD_TOL = -1e-9
#: Absolute tolerance for pure-state normalization.
NORM_TOL = 1e-12

PAULI_I = np.eye(2, dtype=np.complex128)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=np.complex128)

_SINGLE_QUBIT_PAULIS = (PAULI_I, PAULI_X, PAULI_Y, PAULI_Z)


class DimensionError(ValueError):
    """Operands do not have compatible qubit counts or shapes."""


class NonHermitianError(ValueError):
    """A matrix required to be Hermitian is not (beyond tolerance)."""


def _as_square_complex(matrix: np.ndarray, name: str = "matrix") -> np.ndarray:
    arr = np.asarray(matrix, dtype=np.complex128)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {arr.shape}")
    if not np.isfinite(arr).all():
        raise ValueError(f"{name} contains non-finite entries")
    return arr


def _qubit_count(dim: int, name: str = "matrix") -> int:
    n = int(dim).bit_length() - 1
    if dim <= 0 or 2**n != dim:
        raise DimensionError(f"{name} dimension {dim} is not a power of two")
    return n


@dataclass(frozen=True)
class OperatorState:
    """Hermitian operator on ``num_qubits`` qubits (trace may exceed 1)."""

    matrix: np.ndarray
    num_qubits: int

    def __post_init__(self) -> None:
        arr = _as_square_complex(self.matrix, "state matrix")
        if arr.shape[0] != 2**self.num_qubits:
            raise DimensionError(
                f"state matrix has dimension {arr.shape[0]}, expected "
                f"{2 ** self.num_qubits} for {self.num_qubits} qubits"
            )
        herm_defect = np.abs(arr - arr.conj().T).max()
        if herm_defect > HERMITIAN_TOL:
            raise NonHermitianError(
                f"state matrix deviates from Hermiticity by {herm_defect:.3e}"
            )
        arr = np.array(arr)
        arr.setflags(write=False)
        object.__setattr__(self, "matrix", arr)

    @classmethod
    def from_matrix(cls, matrix: np.ndarray) -> "OperatorState":
        arr = _as_square_complex(matrix, "state matrix")
        return cls(arr, _qubit_count(arr.shape[0], "state matrix"))

    @property
    def dim(self) -> int:
        return 2**self.num_qubits

    def trace(self) -> float:
        return float(np.trace(self.matrix).real)


@dataclass(frozen=True)
class PureState:
    """Normalized state vector on ``num_qubits`` qubits."""

    amplitudes: np.ndarray
    num_qubits: int

    def __post_init__(self) -> None:
        amp = np.asarray(self.amplitudes, dtype=np.complex128).reshape(-1)
        if amp.shape[0] != 2**self.num_qubits:
            raise DimensionError(
                f"amplitude vector has length {amp.shape[0]}, expected "
                f"{2 ** self.num_qubits} for {self.num_qubits} qubits"
            )
        if not np.isfinite(amp).all():
            raise ValueError("amplitudes contain non-finite entries")
        norm_defect = abs(np.linalg.norm(amp) - 1.0)
        if norm_defect > NORM_TOL:
            raise ValueError(f"state vector norm deviates from 1 by {norm_defect:.3e}")
        amp = np.array(amp)
        amp.setflags(write=False)
        object.__setattr__(self, "amplitudes", amp)

    @classmethod
    def from_amplitudes(cls, amplitudes: np.ndarray) -> "PureState":
        amp = np.asarray(amplitudes, dtype=np.complex128).reshape(-1)
        return cls(amp, _qubit_count(amp.shape[0], "amplitude vector"))

    def density(self) -> OperatorState:
        """Rank-one projector |psi><psi| as an :class:`OperatorState`."""
        return OperatorState(np.outer(self.amplitudes, self.amplitudes.conj()), self.num_qubits)


def assert_valid_state(state: OperatorState, psd_tol: float = PSD_TOL) -> None:
    """Raise if ``state`` is not positive semidefinite up to ``psd_tol``.

    Hermiticity is already enforced at construction; this adds the (more
    expensive) eigenvalue floor check used by tests and debugging paths.
    """
    eigs = np.linalg.eigvalsh(state.matrix)
    if eigs.min() < psd_tol:
        raise ValueError(f"state has eigenvalue {eigs.min():.3e} below {psd_tol:.0e}")


def dagger(matrix: np.ndarray) -> np.ndarray:
    """Conjugate transpose."""
    return matrix.conj().T


def tensor_product(first: np.ndarray, *rest: np.ndarray) -> np.ndarray:
    """Kronecker product of two or more operators, left factor most significant."""
    return reduce(np.kron, rest, np.asarray(first, dtype=np.complex128))


def ground_state_projector(num_qubits: int) -> np.ndarray:
    """Projector |0...0><0...0| on ``num_qubits`` qubits (1x1 one for zero)."""
    dim = 2**num_qubits
    proj = np.zeros((dim, dim), dtype=np.complex128)
    proj[0, 0] = 1.0
    return proj


def ptrace_qubits(matrix: np.ndarray, num_qubits: int, keep: Iterable[int]) -> np.ndarray:
    """Partial trace keeping the listed qubits, in their original order.

    Works on any square matrix (no Hermiticity assumed), which is what the
    update-generator construction needs: commutators are anti-Hermitian.

    Parameters
    ----------
    matrix:
        ``(2**num_qubits, 2**num_qubits)`` array.
    num_qubits:
        Total qubit count of ``matrix``.
    keep:
        Qubit indices (big-endian, 0-based) to keep; all others are traced out.
    """
    arr = _as_square_complex(matrix)
    if arr.shape[0] != 2**num_qubits:
        raise DimensionError(
            f"matrix dimension {arr.shape[0]} does not match {num_qubits} qubits"
        )
    keep_list = sorted(set(int(q) for q in keep))
    if keep_list and (keep_list[0] < 0 or keep_list[-1] >= num_qubits):
        raise DimensionError(f"keep qubits {keep_list} out of range for {num_qubits} qubits")
    drop = [q for q in range(num_qubits) if q not in keep_list]
    if not drop:
        return arr.copy()
    tensor = arr.reshape([2] * (2 * num_qubits))
    remaining = num_qubits
    # Trace the highest dropped axis first so lower axis indices stay valid.
    for q in reversed(drop):
        tensor = np.trace(tensor, axis1=q, axis2=q + remaining)
        remaining -= 1
    dim_keep = 2 ** len(keep_list)
    return tensor.reshape(dim_keep, dim_keep)


def _subsystem_qubit_ranges(counts: Sequence[int]) -> list[range]:
    if not counts or any(int(c) < 0 for c in counts):
        raise DimensionError(f"invalid subsystem qubit counts {list(counts)}")
    ranges = []
    start = 0
    for c in counts:
        ranges.append(range(start, start + int(c)))
        start += int(c)
    return ranges


def partial_trace_keep(
    state: OperatorState, subsystem_qubit_counts: Sequence[int], keep_indices: Iterable[int]
) -> OperatorState:
    """Trace out all subsystems except the listed ones.

    The state's qubits are partitioned into consecutive subsystems of the
    given sizes; subsystems in ``keep_indices`` survive, in their original
    order.
    """
    ranges = _subsystem_qubit_ranges(subsystem_qubit_counts)
    if sum(len(r) for r in ranges) != state.num_qubits:
        raise DimensionError(
            f"subsystem qubit counts {list(subsystem_qubit_counts)} do not sum to "
            f"{state.num_qubits} qubits"
        )
    keep_set = set(int(i) for i in keep_indices)
    if not keep_set or any(i < 0 or i >= len(ranges) for i in keep_set):
        raise DimensionError(
            f"keep indices {sorted(keep_set)} invalid for {len(ranges)} subsystems"
        )
    keep_qubits = [q for i in sorted(keep_set) for q in ranges[i]]
    reduced = ptrace_qubits(state.matrix, state.num_qubits, keep_qubits)
    return OperatorState(reduced, len(keep_qubits))


def partial_trace(
    state: OperatorState, subsystem_qubit_counts: Sequence[int], keep_index: int
) -> OperatorState:
    """Trace out everything except one subsystem (see :func:`partial_trace_keep`)."""
    return partial_trace_keep(state, subsystem_qubit_counts, [keep_index])


def embed_operator(op: np.ndarray, targets: Sequence[int], num_qubits: int) -> np.ndarray:
    """Extend an operator to ``num_qubits`` qubits, identity on the rest.

    ``targets`` lists, in order, which global qubit each tensor factor of
    ``op`` acts on; the result applies ``op`` there and the identity on all
    other qubits.
    """
    arr = _as_square_complex(op, "operator")
    targets = [int(t) for t in targets]
    if len(set(targets)) != len(targets):
        raise DimensionError(f"target qubits {targets} contain duplicates")
    if targets and (min(targets) < 0 or max(targets) >= num_qubits):
        raise DimensionError(f"target qubits {targets} out of range for {num_qubits} qubits")
    k = len(targets)
    if arr.shape[0] != 2**k:
        raise DimensionError(
            f"operator dimension {arr.shape[0]} does not match {k} target qubits"
        )
    if k == num_qubits and targets == list(range(num_qubits)):
        return arr.copy()
    rest = [q for q in range(num_qubits) if q not in targets]
    order = targets + rest
    full = np.kron(arr, np.eye(2 ** (num_qubits - k), dtype=np.complex128))
    tensor = full.reshape([2] * (2 * num_qubits))
    perm = [order.index(q) for q in range(num_qubits)]
    tensor = tensor.transpose(perm + [num_qubits + p for p in perm])
    dim = 2**num_qubits
    return np.ascontiguousarray(tensor.reshape(dim, dim))


def haar_random_unitary(num_qubits: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed random unitary on ``num_qubits`` qubits.

    Complex Gaussian matrix, QR factorization, then each column is rephased
    by the corresponding diagonal entry of R so the distribution is the
    unbiased (Haar) one rather than the raw QR measure.
    """
    dim = 2**num_qubits
    z = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    q, r = np.linalg.qr(z / np.sqrt(2.0))
    diag = np.diagonal(r).copy()
    diag[diag == 0] = 1.0
    return q * (diag / np.abs(diag))


def random_pure_state(num_qubits: int, rng: np.random.Generator) -> PureState:
    """Uniformly random pure state (normalized complex Gaussian vector)."""
    dim = 2**num_qubits
    z = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return PureState(z / np.linalg.norm(z), num_qubits)


def exp_i_hermitian(k: np.ndarray, scale: float = 1.0) -> np.ndarray:
    """Unitary ``exp(i * scale * k)`` for Hermitian ``k``, via eigendecomposition.

    Raises :class:`NonHermitianError` if ``k`` is not Hermitian within
    ``HERMITIAN_TOL`` — callers are expected to feed genuine generators.
    """
    arr = _as_square_complex(k, "generator")
    defect = np.abs(arr - arr.conj().T).max()
    if defect > HERMITIAN_TOL:
        raise NonHermitianError(f"generator deviates from Hermiticity by {defect:.3e}")
    eigvals, eigvecs = np.linalg.eigh(arr)
    phases = np.exp(1j * scale * eigvals)
    return (eigvecs * phases) @ eigvecs.conj().T


def fidelity_pure(target: PureState, state: OperatorState) -> float:
    """Overlap <target| state |target>; real, in [0, trace(state)]."""
    if target.num_qubits != state.num_qubits:
        raise DimensionError(
            f"target has {target.num_qubits} qubits, state has {state.num_qubits}"
        )
    value = np.vdot(target.amplitudes, state.matrix @ target.amplitudes)
    return float(value.real)


def hs_distance(a: OperatorState, b: OperatorState) -> float:
    """Hilbert-Schmidt distance trace((a - b)^2); the difference is Hermitian."""
    if a.num_qubits != b.num_qubits:
        raise DimensionError(f"operands have {a.num_qubits} and {b.num_qubits} qubits")
    diff = a.matrix - b.matrix
    return float(np.trace(diff @ diff).real)


@lru_cache(maxsize=8)
def _pauli_stack(num_qubits: int) -> np.ndarray:
    """All 4**n Pauli products as one (4**n, 2**n, 2**n) read-only array."""
    mats = []
    for combo in itertools.product(_SINGLE_QUBIT_PAULIS, repeat=num_qubits):
        mats.append(reduce(np.kron, combo) if num_qubits > 1 else combo[0])
    stack = np.stack(mats)
    stack.setflags(write=False)
    return stack


def pauli_basis(num_qubits: int) -> list[np.ndarray]:
    """Tensor-product Pauli basis in lexicographic (I, X, Y, Z) order.

    The first qubit's factor varies slowest: for two qubits the list runs
    II, IX, IY, IZ, XI, ... , ZZ. Elements are read-only views.
    """
    if num_qubits < 1:
        raise DimensionError(f"need at least one qubit, got {num_qubits}")
    return list(_pauli_stack(num_qubits))


def pauli_coefficients(matrix: np.ndarray) -> np.ndarray:
    """Expansion coefficients c_a = trace(P_a @ matrix) / 2**n over the Pauli basis.

    For any matrix M on n qubits, ``M = sum_a c_a P_a`` exactly; M is
    Hermitian iff all coefficients are real (they are returned complex).
    """
    arr = _as_square_complex(matrix)
    n = _qubit_count(arr.shape[0])
    stack = _pauli_stack(n)
    return np.einsum("aij,ji->a", stack, arr) / arr.shape[0]

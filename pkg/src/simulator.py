"""Exact statevector simulation and seeded sampling of output measurements.

Qubit k is bit k of the basis-state index. The statevector is viewed as an
n-dimensional tensor of shape (2,)*n, in which qubit k lives on axis n-1-k;
gate kernels update slices of that view in place.
"""

import logging
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from src.circuit import (
    DEFAULT_MAX_QUBITS,
    ROTATION_KINDS,
    Circuit,
    GateApplication,
    GateKind,
    index_to_bitstring,
)
from src.errors import SimulationError

logger = logging.getLogger(__name__)


NORM_TOLERANCE = 1e-9
# Probabilities below this are floating-point dust, not outcomes
PRUNE_THRESHOLD = 1e-12

_SQRT2_INV = 1 / math.sqrt(2)
_T_PHASE = complex(math.cos(math.pi / 4), math.sin(math.pi / 4))

_FIXED_MATRICES = {
    GateKind.X: np.array([[0, 1], [1, 0]], dtype=complex),
    GateKind.Y: np.array([[0, -1j], [1j, 0]], dtype=complex),
    GateKind.Z: np.array([[1, 0], [0, -1]], dtype=complex),
    GateKind.H: np.array([[1, 1], [1, -1]], dtype=complex) * _SQRT2_INV,
    GateKind.S: np.array([[1, 0], [0, 1j]], dtype=complex),
    GateKind.SDG: np.array([[1, 0], [0, -1j]], dtype=complex),
    GateKind.T: np.array([[1, 0], [0, _T_PHASE]], dtype=complex),
    GateKind.TDG: np.array([[1, 0], [0, _T_PHASE.conjugate()]], dtype=complex),
}


def gate_matrix(kind: GateKind, angle: float | None = None) -> np.ndarray:
    """2x2 matrix of a single-qubit gate kind (X for CX/CCX, Z for CZ)."""
    if kind in (GateKind.CX, GateKind.CCX):
        return _FIXED_MATRICES[GateKind.X]
    if kind == GateKind.CZ:
        return _FIXED_MATRICES[GateKind.Z]
    if kind in _FIXED_MATRICES:
        return _FIXED_MATRICES[kind]
    if kind not in ROTATION_KINDS or angle is None:
        raise ValueError(f"no 2x2 matrix for gate {kind.value}")

    half = angle / 2
    c, s = math.cos(half), math.sin(half)
    if kind == GateKind.RX:
        return np.array([[c, -1j * s], [-1j * s, c]], dtype=complex)
    if kind == GateKind.RY:
        return np.array([[c, -s], [s, c]], dtype=complex)
    return np.array([[complex(c, -s), 0], [0, complex(c, s)]], dtype=complex)


@dataclass(frozen=True, eq=False)
class StateVector:
    """2^n complex amplitudes of an n-qubit pure state."""

    amplitudes: np.ndarray
    num_qubits: int

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2


@dataclass(frozen=True)
class OutputDistribution:
    """Probabilities of output bitstrings; zero-probability outcomes omitted."""

    probs: dict[str, float]
    width: int

    def __post_init__(self) -> None:
        for bits, p in self.probs.items():
            if len(bits) != self.width:
                raise ValueError(f"outcome {bits!r} does not have width {self.width}")
            if not 0.0 <= p <= 1.0 + NORM_TOLERANCE:
                raise ValueError(f"probability {p} of {bits!r} outside [0, 1]")
        total = sum(self.probs.values())
        if abs(total - 1.0) > NORM_TOLERANCE:
            raise ValueError(f"probabilities sum to {total}, not 1")

    def __getitem__(self, bits: str) -> float:
        return self.probs.get(bits, 0.0)

    def outcomes(self) -> list[str]:
        return sorted(self.probs)


def _index(num_qubits: int, fixed: dict[int, int]) -> tuple:
    """Slicing tuple that fixes some qubits to 0/1.

    Length-1 slices rather than integers, so the result is always a writable view.
    """
    idx: list = [slice(None)] * num_qubits
    for qubit, value in fixed.items():
        idx[num_qubits - 1 - qubit] = slice(value, value + 1)
    return tuple(idx)


def _apply_single(
    psi: np.ndarray, n: int, target: int, matrix: np.ndarray, controls: Sequence[int] = ()
) -> None:
    """Apply a 2x2 matrix to target, conditioned on all controls being 1."""
    fixed = {c: 1 for c in controls}
    s0 = psi[_index(n, {**fixed, target: 0})]
    s1 = psi[_index(n, {**fixed, target: 1})]
    (m00, m01), (m10, m11) = matrix
    new0 = m00 * s0 + m01 * s1
    new1 = m10 * s0 + m11 * s1
    s0[...] = new0
    s1[...] = new1


def _apply_swap(psi: np.ndarray, n: int, a: int, b: int, controls: Sequence[int] = ()) -> None:
    """Exchange qubits a and b, conditioned on all controls being 1."""
    fixed = {c: 1 for c in controls}
    s01 = psi[_index(n, {**fixed, a: 0, b: 1})]
    s10 = psi[_index(n, {**fixed, a: 1, b: 0})]
    tmp = s01.copy()
    s01[...] = s10
    s10[...] = tmp


def apply_gate(psi: np.ndarray, n: int, gate: GateApplication) -> None:
    """Apply one gate in place to the tensor view psi of shape (2,)*n."""
    kind, ops = gate.kind, gate.operands
    if kind == GateKind.SWAP:
        _apply_swap(psi, n, ops[0], ops[1])
    elif kind == GateKind.CSWAP:
        _apply_swap(psi, n, ops[1], ops[2], controls=ops[:1])
    elif kind in (GateKind.CX, GateKind.CZ, GateKind.CCX):
        _apply_single(psi, n, ops[-1], gate_matrix(kind), controls=ops[:-1])
    else:
        _apply_single(psi, n, ops[0], gate_matrix(kind, gate.angle))


def run_statevector(
    c: Circuit,
    input_bits: str,
    max_qubits: int = DEFAULT_MAX_QUBITS,
    check_norm: bool = True,
) -> StateVector:
    """Simulate the circuit from |0...0> with the input bits loaded by X gates."""
    if len(input_bits) != c.input_width:
        raise ValueError(
            f"input {input_bits!r} has width {len(input_bits)}, circuit expects {c.input_width}"
        )
    if c.num_qubits > max_qubits:
        raise SimulationError(f"circuit has {c.num_qubits} qubits, cap is {max_qubits}")

    n = c.num_qubits
    amplitudes = np.zeros(1 << n, dtype=np.complex128)
    # State preparation: input_qubits[j] is bit j, i.e. character -1-j
    basis = 0
    for j, qubit in enumerate(c.input_qubits):
        if input_bits[-1 - j] == "1":
            basis |= 1 << qubit
    amplitudes[basis] = 1.0

    psi = amplitudes.reshape((2,) * n)
    for position, gate in enumerate(c.gates):
        apply_gate(psi, n, gate)
        if check_norm:
            norm = np.linalg.norm(amplitudes)
            if not math.isfinite(norm):
                raise SimulationError(
                    f"non-finite amplitude after gate {position} ({gate}) of {c.name}",
                    hint="This is an internal numeric fault; please report it",
                )
            if abs(norm - 1.0) > NORM_TOLERANCE:
                raise SimulationError(
                    f"statevector norm drifted to {norm!r} after gate {position} ({gate})",
                    hint="This is an internal numeric fault; please report it",
                )

    if not check_norm and not np.all(np.isfinite(amplitudes)):
        raise SimulationError(f"non-finite amplitude in final state of {c.name}")
    return StateVector(amplitudes, n)


def _output_index_map(num_qubits: int, output_qubits: Sequence[int]) -> np.ndarray:
    """Output index of every basis state (output_qubits[j] is bit j)."""
    basis = np.arange(1 << num_qubits, dtype=np.int64)
    out = np.zeros_like(basis)
    for j, qubit in enumerate(output_qubits):
        out |= ((basis >> qubit) & 1) << j
    return out


def output_distribution(sv: StateVector, c: Circuit) -> OutputDistribution:
    """Marginal distribution of the output qubits, dust below 1e-12 pruned."""
    if sv.num_qubits != c.num_qubits:
        raise ValueError("statevector does not belong to this circuit")
    width = c.output_width
    marginal = np.bincount(
        _output_index_map(c.num_qubits, c.output_qubits),
        weights=sv.probabilities(),
        minlength=1 << width,
    )
    probs = {
        index_to_bitstring(index, width): float(p)
        for index, p in enumerate(marginal)
        if p >= PRUNE_THRESHOLD
    }
    return OutputDistribution(probs, width)


def simulate_distribution(
    c: Circuit, input_bits: str, max_qubits: int = DEFAULT_MAX_QUBITS
) -> OutputDistribution:
    """Exact output distribution of the circuit for one input."""
    return output_distribution(run_statevector(c, input_bits, max_qubits), c)


def derive_seed(master_seed: int, generation: int, individual: int, test: int) -> int:
    """Mix run coordinates into a 64-bit per-test seed.

    Independent of evaluation order, so parallel fan-out cannot change results.
    """
    words = np.random.SeedSequence([master_seed, generation, individual, test]).generate_state(
        2, dtype=np.uint32
    )
    return (int(words[0]) << 32) | int(words[1])


def make_rng(seed: int | Sequence[int]) -> np.random.Generator:
    """Counter-based (Philox) generator keyed by a seed or seed words."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))


def sample_outputs(dist: OutputDistribution, n: int, seed: int) -> dict[str, int]:
    """Draw n measurement outcomes; identical (dist, n, seed) give identical counts."""
    if n < 1:
        raise ValueError(f"number of samples must be >= 1, got {n}")
    outcomes = dist.outcomes()
    probs = np.array([dist.probs[o] for o in outcomes], dtype=np.float64)
    probs /= probs.sum()
    counts = make_rng(seed).multinomial(n, probs)
    return {o: int(k) for o, k in zip(outcomes, counts) if k > 0}

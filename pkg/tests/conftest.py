"""Shared test fixtures for the quantum test-suite generator."""

from pathlib import Path

import pytest

from src.bench import BENCHMARK_DIR
from src.circuit import Circuit, QubitRoles, parse_circuit
from src.program_spec import ProgramSpec, load_spec

SWAP_TEST_QASM = """OPENQASM 2.0;
include "qelib1.inc";
qreg i1[1];
qreg i2[1];
qreg oq[1];
creg c[1];
h oq[0];
cswap oq[0],i1[0],i2[0];
h oq[0];
x oq[0];
measure oq[0] -> c[0];
"""

SWAP_TEST_ROLES = QubitRoles.of(["i1[0]", "i2[0]"], ["oq[0]"])

SWAP_TEST_SPEC = """{
  "00": {"1": 1.0},
  "01": {"0": 0.5, "1": 0.5},
  "10": {"0": 0.5, "1": 0.5},
  "11": {"1": 1.0}
}
"""

# Conditional execution: q2 is 1 with probability 3/4
CONDITIONAL_QASM = """OPENQASM 2.0;
qreg q[4];
creg c[2];
ry(2*pi/3) q[2];
ccx q[0],q[2],q[3];
cx q[1],q[3];
measure q[2] -> c[0];
measure q[3] -> c[1];
"""

CONDITIONAL_SPEC = {
    "00": {"00": 0.25, "01": 0.75},
    "01": {"00": 0.25, "11": 0.75},
    "10": {"10": 0.25, "11": 0.75},
    "11": {"01": 0.75, "10": 0.25},
}


@pytest.fixture
def swap_circuit() -> Circuit:
    """Correct 3-qubit Swap Test."""
    return parse_circuit(SWAP_TEST_QASM, SWAP_TEST_ROLES, name="swap_test")


@pytest.fixture
def swap_spec(swap_circuit) -> ProgramSpec:
    return load_spec(SWAP_TEST_SPEC, swap_circuit)


@pytest.fixture
def swap_uof_circuit() -> Circuit:
    """Swap Test without the final X: equal inputs output 0."""
    source = SWAP_TEST_QASM.replace("x oq[0];\n", "")
    return parse_circuit(source, SWAP_TEST_ROLES, name="swap_test_uof")


@pytest.fixture
def conditional_circuit() -> Circuit:
    return parse_circuit(CONDITIONAL_QASM, QubitRoles.of([0, 1], [2, 3]), name="conditional")


@pytest.fixture
def conditional_spec(conditional_circuit) -> ProgramSpec:
    return ProgramSpec(CONDITIONAL_SPEC, input_width=2, output_width=2)


@pytest.fixture
def program_files(tmp_path: Path) -> dict[str, Path]:
    """Swap Test circuit, a faulty variant and the spec written to disk."""
    circuit = tmp_path / "swap_test.qasm"
    circuit.write_text(SWAP_TEST_QASM)
    faulty = tmp_path / "swap_test_uof.qasm"
    faulty.write_text(SWAP_TEST_QASM.replace("x oq[0];\n", ""))
    spec = tmp_path / "swap_test.spec.json"
    spec.write_text(SWAP_TEST_SPEC)
    return {"circuit": circuit, "faulty": faulty, "spec": spec, "dir": tmp_path}


@pytest.fixture
def benchmark_dir() -> Path:
    return BENCHMARK_DIR

"""Tests for statevector simulation and seeded sampling."""

import math
from unittest.mock import patch

import numpy as np
import pytest

from src.circuit import Circuit, GateApplication, GateKind
from src.errors import SimulationError
from src.simulator import (
    OutputDistribution,
    apply_gate,
    derive_seed,
    gate_matrix,
    output_distribution,
    run_statevector,
    sample_outputs,
    simulate_distribution,
)

from tests.conftest import CONDITIONAL_SPEC
from tests.oracles import dense_statevector, random_circuit, rotation


def circuit(n: int, gates, inputs=(0,), outputs=(0,)) -> Circuit:
    return Circuit(n, tuple(gates), tuple(inputs), tuple(outputs))


class TestGateMatrix:
    """Test the 2x2 gate matrices."""

    @pytest.mark.parametrize("kind", [k for k in GateKind if k.arity == 1 and not k.is_rotation])
    def test_fixed_gates_unitary(self, kind):
        """Should be unitary."""
        m = gate_matrix(kind)
        assert np.allclose(m @ m.conj().T, np.eye(2))

    @pytest.mark.parametrize("kind", [GateKind.RX, GateKind.RY, GateKind.RZ])
    def test_rotations_match_exponential(self, kind):
        """Should equal exp(-i theta P / 2)."""
        for theta in (0.0, 0.3, math.pi, -2.1):
            assert np.allclose(gate_matrix(kind, theta), rotation(kind, theta), atol=1e-15)

    def test_controlled_kinds_use_target_matrix(self):
        """Should return X for CX/CCX and Z for CZ."""
        assert np.array_equal(gate_matrix(GateKind.CCX), gate_matrix(GateKind.X))
        assert np.array_equal(gate_matrix(GateKind.CZ), gate_matrix(GateKind.Z))

    def test_swap_has_no_matrix(self):
        """Should refuse to build a 2x2 matrix for SWAP."""
        with pytest.raises(ValueError):
            gate_matrix(GateKind.SWAP)

    @pytest.mark.parametrize("kind", [GateKind.SWAP, GateKind.CSWAP])
    def test_swap_kinds_raise_value_error(self, kind):
        """Should name the gate that has no 2x2 matrix."""
        with pytest.raises(ValueError, match=f"no 2x2 matrix for gate {kind.value}"):
            gate_matrix(kind)

    @pytest.mark.parametrize("kind", [GateKind.RX, GateKind.RY, GateKind.RZ])
    def test_rotation_without_angle(self, kind):
        """Should reject a rotation with no angle."""
        with pytest.raises(ValueError, match="no 2x2 matrix"):
            gate_matrix(kind)


class TestGateAlgebra:
    """Test self-inverse gates on random states."""

    @staticmethod
    def random_state(rng: np.random.Generator, n: int) -> np.ndarray:
        psi = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
        return psi / np.linalg.norm(psi)

    @pytest.mark.parametrize(
        "gate",
        [
            GateApplication(GateKind.H, (1,)),
            GateApplication(GateKind.X, (2,)),
            GateApplication(GateKind.SWAP, (0, 2)),
            GateApplication(GateKind.CX, (2, 0)),
            GateApplication(GateKind.CSWAP, (1, 0, 2)),
        ],
    )
    def test_applied_twice_is_identity(self, gate):
        """Should restore any state after two applications."""
        rng = np.random.default_rng(13)
        for _ in range(20):
            original = self.random_state(rng, 3)
            amplitudes = original.copy()
            psi = amplitudes.reshape((2,) * 3)
            apply_gate(psi, 3, gate)
            apply_gate(psi, 3, gate)
            assert np.max(np.abs(amplitudes - original)) < 1e-12


class TestRunStatevector:
    """Test statevector evolution."""

    def test_input_loading_order(self):
        """Should load input bit j (character -1-j) onto input_qubits[j]."""
        sv = run_statevector(circuit(2, [], inputs=(0, 1), outputs=(0,)), "01")
        assert sv.amplitudes[1] == 1.0

        sv = run_statevector(circuit(2, [], inputs=(1, 0), outputs=(0,)), "01")
        assert sv.amplitudes[2] == 1.0

    def test_bell_state(self):
        """Should produce (|00> + |11>)/sqrt(2)."""
        c = circuit(2, [GateApplication(GateKind.H, (0,)), GateApplication(GateKind.CX, (0, 1))])
        amplitudes = run_statevector(c, "0").amplitudes
        assert np.allclose(amplitudes, [1 / math.sqrt(2), 0, 0, 1 / math.sqrt(2)])

    def test_controlled_swap(self):
        """Should swap the targets only when the control is set."""
        c = circuit(3, [GateApplication(GateKind.CSWAP, (0, 1, 2))], inputs=(0, 1, 2))
        assert run_statevector(c, "011").amplitudes[0b101] == 1.0
        assert run_statevector(c, "010").amplitudes[0b010] == 1.0

    def test_norm_preserved(self):
        """Should keep unit norm on circuits of up to 6 qubits and 50 gates."""
        rng = np.random.default_rng(1)
        for _ in range(100):
            c = random_circuit(rng, max_qubits=6, max_gates=50)
            bits = "".join(rng.choice(["0", "1"], size=c.input_width))
            sv = run_statevector(c, bits)
            assert sv.norm() == pytest.approx(1.0, abs=1e-12)
            assert sv.probabilities().sum() == pytest.approx(1.0, abs=1e-12)

    def test_matches_dense_oracle(self):
        """Should match the Kronecker-product unitary on 200 random circuits."""
        rng = np.random.default_rng(20240601)
        for _ in range(200):
            c = random_circuit(rng, max_qubits=4, max_gates=25)
            bits = "".join(rng.choice(["0", "1"], size=c.input_width))
            actual = run_statevector(c, bits).amplitudes
            expected = dense_statevector(c, bits)
            assert np.max(np.abs(actual - expected)) < 1e-9, c

    def test_input_width_mismatch(self):
        """Should reject an input of the wrong width."""
        with pytest.raises(ValueError, match="width"):
            run_statevector(circuit(2, [], inputs=(0, 1)), "1")

    def test_qubit_cap(self):
        """Should refuse circuits beyond the cap."""
        with pytest.raises(SimulationError, match="cap is 2"):
            run_statevector(circuit(3, []), "0", max_qubits=2)

    def test_norm_drift_detected(self):
        """Should fail loudly when a gate breaks normalization."""

        def scaling_gate(psi, n, gate):
            psi *= 1.5

        c = circuit(1, [GateApplication(GateKind.H, (0,))])
        with patch("src.simulator.apply_gate", scaling_gate):
            with pytest.raises(SimulationError, match="norm drifted"):
                run_statevector(c, "0")

    def test_non_finite_detected(self):
        """Should fail loudly on NaN amplitudes."""

        def nan_gate(psi, n, gate):
            psi[...] = np.nan

        c = circuit(1, [GateApplication(GateKind.X, (0,))])
        with patch("src.simulator.apply_gate", nan_gate):
            with pytest.raises(SimulationError, match="non-finite"):
                run_statevector(c, "0")


class TestOutputDistribution:
    """Test marginal output distributions."""

    def test_swap_test_equal_inputs(self, swap_circuit):
        """Should output 1 with certainty for equal inputs."""
        for bits in ("00", "11"):
            dist = simulate_distribution(swap_circuit, bits)
            assert dist.outcomes() == ["1"]
            assert dist["1"] == pytest.approx(1.0, abs=1e-12)

    def test_swap_test_different_inputs(self, swap_circuit):
        """Should output 0 and 1 with probability 1/2 for different inputs."""
        for bits in ("01", "10"):
            dist = simulate_distribution(swap_circuit, bits)
            assert dist["0"] == pytest.approx(0.5, abs=1e-12)
            assert dist["1"] == pytest.approx(0.5, abs=1e-12)

    def test_output_bit_order(self, conditional_circuit):
        """Should put output_qubits[0] last in the outcome string."""
        for bits, row in CONDITIONAL_SPEC.items():
            dist = simulate_distribution(conditional_circuit, bits)
            assert dist.outcomes() == sorted(row)
            for out, p in row.items():
                assert dist[out] == pytest.approx(p, abs=1e-12)

    def test_marginalizes_non_output_qubits(self):
        """Should sum probabilities over qubits that are not outputs."""
        c = circuit(2, [GateApplication(GateKind.H, (0,)), GateApplication(GateKind.H, (1,))], outputs=(1,))
        dist = output_distribution(run_statevector(c, "0"), c)
        assert dist.probs == pytest.approx({"0": 0.5, "1": 0.5})

    def test_invariant_under_relabelling_non_outputs(self):
        """Should not depend on the labels of qubits that are not outputs."""
        rng = np.random.default_rng(31)
        for _ in range(50):
            c = random_circuit(rng, max_qubits=5, max_gates=30)
            others = [q for q in range(c.num_qubits) if q not in c.output_qubits]
            label = list(range(c.num_qubits))
            for q, new in zip(others, rng.permutation(others)):
                label[q] = int(new)
            relabelled = Circuit(
                c.num_qubits,
                tuple(
                    GateApplication(g.kind, tuple(label[q] for q in g.operands), g.angle)
                    for g in c.gates
                ),
                tuple(label[q] for q in c.input_qubits),
                c.output_qubits,
            )
            bits = "".join(rng.choice(["0", "1"], size=c.input_width))
            before = simulate_distribution(c, bits)
            after = simulate_distribution(relabelled, bits)
            for out in set(before.probs) | set(after.probs):
                assert after[out] == pytest.approx(before[out], abs=1e-10)

    def test_prunes_dust(self):
        """Should drop outcomes below 1e-12."""
        c = circuit(1, [GateApplication(GateKind.RX, (0,), 1e-8)])
        assert simulate_distribution(c, "0").outcomes() == ["0"]

    def test_validation(self):
        """Should reject distributions that do not sum to one."""
        with pytest.raises(ValueError, match="sum"):
            OutputDistribution({"0": 0.5}, 1)
        with pytest.raises(ValueError, match="width"):
            OutputDistribution({"00": 1.0}, 1)


class TestSeeding:
    """Test per-test seed derivation and sampling."""

    def test_derive_seed_deterministic(self):
        """Should give the same seed for the same coordinates."""
        assert derive_seed(7, 1, 2, 3) == derive_seed(7, 1, 2, 3)

    def test_derive_seed_distinguishes_coordinates(self):
        """Should give distinct seeds for distinct coordinates."""
        seeds = {derive_seed(7, g, i, t) for g in range(3) for i in range(3) for t in range(3)}
        assert len(seeds) == 27
        assert derive_seed(7, 0, 0, 0) != derive_seed(8, 0, 0, 0)

    def test_derive_seed_is_64_bit(self):
        """Should fit in an unsigned 64-bit integer."""
        for t in range(50):
            assert 0 <= derive_seed(2**64 - 1, 49, 9, t) < 2**64

    def test_sampling_reproducible(self):
        """Should give identical counts for identical seeds."""
        dist = OutputDistribution({"00": 0.25, "01": 0.75}, 2)
        assert sample_outputs(dist, 200, 42) == sample_outputs(dist, 200, 42)

    def test_sampling_counts(self):
        """Should draw exactly n outcomes from the support."""
        dist = OutputDistribution({"00": 0.25, "01": 0.75}, 2)
        counts = sample_outputs(dist, 200, 3)
        assert sum(counts.values()) == 200
        assert set(counts) <= {"00", "01"}

    def test_sampling_frequencies(self):
        """Should approach the distribution for many samples."""
        dist = OutputDistribution({"0": 0.25, "1": 0.75}, 1)
        counts = sample_outputs(dist, 100_000, 11)
        # 5 sigma of a binomial(1e5, 0.25) is about 685
        assert abs(counts["0"] - 25_000) < 700

    @pytest.mark.parametrize("size", [3, 5, 8])
    def test_sampling_frequencies_many_outcomes(self, size):
        """Should keep every frequency within 0.01 of its probability."""
        rng = np.random.default_rng(size)
        probs = rng.dirichlet(np.ones(size))
        dist = OutputDistribution(
            {format(k, "03b"): float(p) for k, p in enumerate(probs)}, 3
        )
        counts = sample_outputs(dist, 100_000, derive_seed(5, 0, 0, size))
        for out, p in dist.probs.items():
            assert abs(counts.get(out, 0) / 100_000 - p) < 0.01

    def test_sampling_rejects_empty(self):
        """Should require at least one sample."""
        with pytest.raises(ValueError):
            sample_outputs(OutputDistribution({"0": 1.0}, 1), 0, 1)

"""Tests for the bundled benchmark corpus."""

import pytest

from src.bench import (
    BENCHMARKS,
    VARIANTS,
    BenchRow,
    format_bench_table,
    get_benchmark,
    run_benchmark,
)
from src.program_spec import spec_from_circuit

FAULTY = [(name, variant) for name in BENCHMARKS for variant in ("uof", "wodf")]


class TestRegistry:
    """Test the benchmark registry."""

    def test_files_exist(self):
        """Should ship every variant and one spec per program."""
        for bench in BENCHMARKS.values():
            assert bench.spec_path.is_file()
            for variant in VARIANTS:
                assert bench.circuit_path(variant).is_file()

    @pytest.mark.parametrize("name", sorted(BENCHMARKS))
    @pytest.mark.parametrize("variant", VARIANTS)
    def test_variants_load(self, name, variant):
        """Should parse every variant against its program's spec."""
        circuit, spec = get_benchmark(name).load(variant)
        assert circuit.name.startswith(name)
        assert spec.input_width == circuit.input_width

    @pytest.mark.parametrize("name", sorted(BENCHMARKS))
    def test_correct_circuit_matches_spec(self, name):
        """Should have a spec equal to the correct circuit's exact distribution."""
        circuit, spec = get_benchmark(name).load("correct")
        derived = spec_from_circuit(circuit, spec.inputs())
        for inp in spec.inputs():
            assert derived.row(inp) == pytest.approx(spec.row(inp), abs=1e-9), inp

    @pytest.mark.parametrize("name, variant", FAULTY)
    def test_faulty_circuit_differs(self, name, variant):
        """Should give at least one input a distribution the spec rejects."""
        circuit, spec = get_benchmark(name).load(variant)
        derived = spec_from_circuit(circuit, spec.inputs())
        assert any(
            set(derived.row(inp)) != set(spec.row(inp))
            or derived.row(inp) != pytest.approx(spec.row(inp), abs=1e-3)
            for inp in spec.inputs()
        )

    def test_unknown_benchmark(self):
        """Should list the known programs."""
        with pytest.raises(ValueError, match="swap_test"):
            get_benchmark("grover")

    def test_unknown_variant(self):
        """Should reject variants outside the corpus."""
        with pytest.raises(ValueError, match="unknown variant"):
            get_benchmark("swap_test").circuit_path("broken")

    def test_default_suite_has_four_tests(self):
        """Should size every default suite at four tests."""
        for bench in BENCHMARKS.values():
            circuit, _ = bench.load("correct")
            assert bench.suite_fraction * 2**circuit.input_width == 4


class TestRunBenchmark:
    """Test seed sweeps."""

    def test_aggregates_over_seeds(self):
        """Should keep one failing fraction per seed."""
        row = run_benchmark(get_benchmark("swap_test"), "uof", seeds=[0, 1], generations=3)

        assert row.program == "swap_test"
        assert row.variant == "uof"
        assert row.suite_size == 4
        assert len(row.failing_fractions) == 2
        assert row.min_failing <= row.mean_failing <= row.max_failing

    def test_suite_size_override(self):
        """Should use an absolute suite size when given."""
        row = run_benchmark(
            get_benchmark("bernstein_vazirani"), "correct", seeds=[0], generations=2, suite_size=8
        )
        assert row.suite_size == 8
        assert row.failing_fractions == (0.0,)

    def test_correct_variant_default_suite_size(self):
        """Should run correct variants at the larger default suite size."""
        bench = get_benchmark("swap_test")
        row = run_benchmark(bench, "correct", seeds=[0], generations=2)
        assert row.suite_size == bench.correct_suite_size == 64

    def test_needs_seeds(self):
        """Should reject an empty seed list."""
        with pytest.raises(ValueError):
            run_benchmark(get_benchmark("swap_test"), "uof", seeds=[])

    @pytest.mark.slow
    @pytest.mark.parametrize("name, variant", FAULTY)
    def test_faulty_variants_detected(self, name, variant):
        """Should reach half the suite failing on nearly every seed."""
        row = run_benchmark(get_benchmark(name), variant, seeds=list(range(30)))
        assert sum(f >= 0.5 for f in row.failing_fractions) >= 28

    @pytest.mark.slow
    @pytest.mark.parametrize("name", sorted(BENCHMARKS))
    def test_correct_variants_stay_quiet(self, name):
        """Should keep false positives low on correct programs."""
        row = run_benchmark(get_benchmark(name), "correct", seeds=list(range(30)))
        assert row.suite_size == 64
        assert row.max_failing <= 0.10


class TestFormatBenchTable:
    """Test the summary table."""

    def test_rows(self):
        """Should print one aligned row per variant."""
        rows = [
            BenchRow("swap_test", "uof", 4, (1.0, 0.5), 0.25, 1.5),
            BenchRow("swap_test", "correct", 4, (0.0, 0.0), 0.125, 1.0),
        ]
        lines = format_bench_table(rows).splitlines()

        assert lines[0].split()[:3] == ["Program", "Variant", "M"]
        assert len(lines) == 4
        assert lines[2].split()[:5] == ["swap_test", "uof", "4", "75.0%", "50.0%"]
        assert "0.0%" in lines[3]

    def test_to_dict(self):
        """Should report mean, min and max fractions."""
        data = BenchRow("p", "wodf", 4, (0.25, 0.75), 0.0, 0.0).to_dict()
        assert data["mean_failing_fraction"] == 0.5
        assert data["min_failing_fraction"] == 0.25
        assert data["max_failing_fraction"] == 0.75

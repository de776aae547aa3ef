"""Bundled benchmark corpus and a seed-sweep runner over it.

Each program ships a correct circuit, one fault that produces impossible
outputs (uof) and one that skews the output distribution (wodf), all
checked against the same spec file.
"""

import logging
from dataclasses import dataclass, replace
from pathlib import Path

from src.circuit import Circuit, QubitRoles, parse_circuit_file
from src.program_spec import ProgramSpec, load_spec_file, search_domain
from src.search import SearchConfig, SearchContext, SearchReport, run_search, with_suite_size

logger = logging.getLogger(__name__)


BENCHMARK_DIR = Path(__file__).parent / "benchmarks"
VARIANTS = ("correct", "uof", "wodf")


@dataclass(frozen=True)
class Benchmark:
    """One program of the corpus."""

    name: str
    description: str
    input_qubits: tuple[int | str, ...]
    output_qubits: tuple[int | str, ...]
    # Fraction of the input domain giving M = 4 tests
    suite_fraction: float
    # M for the correct variant when no suite size is given
    correct_suite_size: int = 64

    @property
    def roles(self) -> QubitRoles:
        return QubitRoles.of(self.input_qubits, self.output_qubits)

    def circuit_path(self, variant: str) -> Path:
        if variant not in VARIANTS:
            raise ValueError(f"unknown variant {variant!r}, expected one of {VARIANTS}")
        suffix = "" if variant == "correct" else f"_{variant}"
        return BENCHMARK_DIR / f"{self.name}{suffix}.qasm"

    @property
    def spec_path(self) -> Path:
        return BENCHMARK_DIR / f"{self.name}.spec.json"

    def load(self, variant: str) -> tuple[Circuit, ProgramSpec]:
        circuit = parse_circuit_file(self.circuit_path(variant), self.roles)
        return circuit, load_spec_file(self.spec_path, circuit)


BENCHMARKS: dict[str, Benchmark] = {
    bench.name: bench
    for bench in (
        Benchmark(
            name="swap_test",
            description="Swap Test over two 1-qubit inputs (3 qubits)",
            input_qubits=("i1[0]", "i2[0]"),
            output_qubits=("oq[0]",),
            suite_fraction=1.0,
        ),
        Benchmark(
            name="bernstein_vazirani",
            description="Bernstein-Vazirani, 4-bit secret (5 qubits)",
            input_qubits=(0, 1, 2, 3),
            output_qubits=(0, 1, 2, 3),
            suite_fraction=0.25,
        ),
        Benchmark(
            name="conditional_execution",
            description="Controlled copy of a biased qubit (4 qubits)",
            input_qubits=(0, 1),
            output_qubits=(2, 3),
            suite_fraction=1.0,
        ),
    )
}


def get_benchmark(name: str) -> Benchmark:
    try:
        return BENCHMARKS[name]
    except KeyError:
        raise ValueError(
            f"unknown benchmark {name!r}, expected one of {', '.join(BENCHMARKS)}"
        ) from None


@dataclass(frozen=True)
class BenchRow:
    """Aggregate over seeds for one benchmark variant."""

    program: str
    variant: str
    suite_size: int
    failing_fractions: tuple[float, ...]
    simulation_seconds: float
    search_seconds: float

    @property
    def mean_failing(self) -> float:
        return sum(self.failing_fractions) / len(self.failing_fractions)

    @property
    def min_failing(self) -> float:
        return min(self.failing_fractions)

    @property
    def max_failing(self) -> float:
        return max(self.failing_fractions)

    def to_dict(self) -> dict:
        return {
            "program": self.program,
            "variant": self.variant,
            "suite_size": self.suite_size,
            "mean_failing_fraction": self.mean_failing,
            "min_failing_fraction": self.min_failing,
            "max_failing_fraction": self.max_failing,
            "simulation_seconds": self.simulation_seconds,
            "search_seconds": self.search_seconds,
        }


def search_benchmark(
    bench: Benchmark, variant: str, config: SearchConfig
) -> SearchReport:
    """One seeded search on a benchmark variant."""
    circuit, spec = bench.load(variant)
    ctx = SearchContext(circuit, spec, config, search_domain(spec, circuit))
    return run_search(ctx)


def run_benchmark(
    bench: Benchmark,
    variant: str,
    seeds: list[int],
    generations: int = 50,
    suite_size: int | None = None,
) -> BenchRow:
    """Run the default GA once per seed and aggregate %ft and timings.

    Correct variants use bench.correct_suite_size unless suite_size is given.
    """
    if not seeds:
        raise ValueError("need at least one seed")
    base = SearchConfig(suite_fraction=bench.suite_fraction, max_generations=generations)
    if suite_size is None and variant == "correct":
        suite_size = bench.correct_suite_size
    if suite_size is not None:
        base = with_suite_size(base, suite_size)

    fractions: list[float] = []
    simulation = search = 0.0
    m = 0
    for seed in seeds:
        report = search_benchmark(bench, variant, replace(base, seed=seed))
        m = report.suite_size
        fractions.append(report.failing_fraction)
        simulation += report.simulation_seconds
        search += report.search_seconds
        logger.info(
            "%s/%s seed %d: %d/%d failing", bench.name, variant, seed, report.failing, m
        )
    return BenchRow(bench.name, variant, m, tuple(fractions), simulation, search)


def format_bench_table(rows: list[BenchRow]) -> str:
    """Summary table: program, variant, M, mean/min %ft, st, et."""
    lines = [
        f"{'Program':<24} {'Variant':<8} {'M':>4} {'mean %ft':>9} {'min %ft':>8} "
        f"{'st (s)':>9} {'et (s)':>9}",
        "-" * 77,
    ]
    for row in rows:
        lines.append(
            f"{row.program:<24} {row.variant:<8} {row.suite_size:>4} "
            f"{100 * row.mean_failing:>8.1f}% {100 * row.min_failing:>7.1f}% "
            f"{row.simulation_seconds:>9.3f} {row.search_seconds:>9.3f}"
        )
    return "\n".join(lines)

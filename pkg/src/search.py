"""Genetic algorithm that evolves a test suite towards many failing tests.

An individual is a vector of M integers, each indexing an input of the
search domain. Its fitness is the number of failing tests when every gene
is executed and assessed. Operators follow the usual integer-coded setup:
binary tournament selection, SBX crossover and polynomial mutation on the
real relaxation, rounded half away from zero and clamped to the domain.
"""

import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from src.assess import DEFAULT_ALPHA, TestExecution, assess, repetitions
from src.circuit import Circuit, DEFAULT_MAX_QUBITS, input_domain_size
from src.errors import ConfigError
from src.program_spec import ProgramSpec
from src.simulator import (
    OutputDistribution,
    derive_seed,
    make_rng,
    sample_outputs,
    simulate_distribution,
)

logger = logging.getLogger(__name__)


DEFAULT_SUITE_FRACTION = 0.05
# Seed word that separates the GA's own random stream from per-test streams
_GA_STREAM = 0xFFFFFFFF
_GENE_EPS = 1e-14


@dataclass(frozen=True)
class SearchConfig:
    """GA hyperparameters. Exactly one of suite_size / suite_fraction drives M."""

    suite_size: int | None = None
    suite_fraction: float | None = None
    population_size: int = 10
    max_generations: int = 50
    crossover_rate: float = 0.9
    crossover_distribution_index: float = 20.0
    mutation_rate: float | None = None
    mutation_distribution_index: float = 20.0
    alpha: float = DEFAULT_ALPHA
    seed: int = 0
    elitism: int = 1
    workers: int = 1

    def __post_init__(self) -> None:
        if self.suite_size is not None and self.suite_fraction is not None:
            raise ConfigError(
                "suite_size and suite_fraction are mutually exclusive", key="suite_size"
            )
        if self.suite_size is not None and self.suite_size < 1:
            raise ConfigError(f"suite_size must be >= 1, got {self.suite_size}", key="suite_size")
        if self.suite_fraction is not None and not 0.0 < self.suite_fraction <= 1.0:
            raise ConfigError(
                f"suite_fraction must be in (0, 1], got {self.suite_fraction}", key="suite_fraction"
            )
        if self.population_size < 2:
            raise ConfigError(
                f"population_size must be >= 2, got {self.population_size}", key="population_size"
            )
        if self.max_generations < 1:
            raise ConfigError(
                f"max_generations must be >= 1, got {self.max_generations}", key="max_generations"
            )
        for key in ("crossover_rate", "mutation_rate"):
            value = getattr(self, key)
            if value is not None and not 0.0 <= value <= 1.0:
                raise ConfigError(f"{key} must be in [0, 1], got {value}", key=key)
        for key in ("crossover_distribution_index", "mutation_distribution_index"):
            value = getattr(self, key)
            if not math.isfinite(value) or value < 0:
                raise ConfigError(f"{key} must be a non-negative number, got {value}", key=key)
        if not 0.0 < self.alpha < 1.0:
            raise ConfigError(f"alpha must be in (0, 1), got {self.alpha}", key="alpha")
        if self.seed < 0 or self.seed >= 1 << 64:
            raise ConfigError(f"seed must be an unsigned 64-bit value, got {self.seed}", key="seed")
        if not 0 <= self.elitism < self.population_size:
            raise ConfigError(
                f"elitism must be in [0, population_size), got {self.elitism}", key="elitism"
            )
        if self.workers < 1:
            raise ConfigError(f"workers must be >= 1, got {self.workers}", key="workers")

    def effective_mutation_rate(self, m: int) -> float:
        """Configured mutation rate, or 1/M by default."""
        return self.mutation_rate if self.mutation_rate is not None else 1.0 / m

    def to_dict(self) -> dict:
        return {
            "suite_size": self.suite_size,
            "suite_fraction": self.suite_fraction,
            "population_size": self.population_size,
            "max_generations": self.max_generations,
            "crossover_rate": self.crossover_rate,
            "crossover_distribution_index": self.crossover_distribution_index,
            "mutation_rate": self.mutation_rate,
            "mutation_distribution_index": self.mutation_distribution_index,
            "alpha": self.alpha,
            "seed": self.seed,
            "elitism": self.elitism,
            "workers": self.workers,
        }


@dataclass
class Individual:
    """A candidate test suite: M genes, each an index into the search domain."""

    genes: list[int]
    fitness: int | None = None
    executions: list[TestExecution] = field(default_factory=list)

    def copy(self) -> "Individual":
        """Unevaluated copy with the same genes."""
        return Individual(list(self.genes))


@dataclass(frozen=True)
class GenerationStats:
    """Fitness summary of one generation."""

    generation: int
    best_fitness: int
    population_best: int
    mean_fitness: float

    def to_dict(self) -> dict:
        return {
            "generation": self.generation,
            "best_fitness": self.best_fitness,
            "population_best": self.population_best,
            "mean_fitness": self.mean_fitness,
        }


@dataclass
class SearchReport:
    """Best-ever individual, per-generation history and timings."""

    best: Individual
    history: list[GenerationStats]
    suite_size: int
    domain: list[str]
    evaluations: int
    simulation_seconds: float
    search_seconds: float

    @property
    def failing(self) -> int:
        return self.best.fitness or 0

    @property
    def failing_fraction(self) -> float:
        return self.failing / self.suite_size


def suite_size(cfg: SearchConfig, domain_size: int) -> int:
    """Number of tests M: absolute, or ceil(beta * domain_size), at least 1."""
    if domain_size < 1:
        raise ValueError(f"domain size must be >= 1, got {domain_size}")
    if cfg.suite_size is not None:
        m = cfg.suite_size
    else:
        fraction = cfg.suite_fraction if cfg.suite_fraction is not None else DEFAULT_SUITE_FRACTION
        # Round away float noise before the ceiling (0.05 * 1024 must give 52, not 53)
        m = math.ceil(round(fraction * domain_size, 9))
    return max(m, 1)


@dataclass
class SearchContext:
    """Everything evaluation needs: program, spec, domain and settings."""

    circuit: Circuit
    spec: ProgramSpec
    config: SearchConfig
    domain: list[str]
    max_qubits: int = DEFAULT_MAX_QUBITS


class Evaluator:
    """Executes and assesses test suites, timing simulation separately.

    Exact output distributions are memoized per input: they depend only on
    the circuit and the input. Sampling is redone for every test.
    """

    def __init__(self, ctx: SearchContext):
        self.ctx = ctx
        self.simulation_seconds = 0.0
        self.evaluations = 0
        self._distributions: dict[str, OutputDistribution] = {}
        self._pool: ThreadPoolExecutor | None = None
        if ctx.config.workers > 1:
            self._pool = ThreadPoolExecutor(max_workers=ctx.config.workers)

    def close(self) -> None:
        if self._pool is not None:
            self._pool.shutdown()
            self._pool = None

    def __enter__(self) -> "Evaluator":
        return self

    def __exit__(self, exc_type, exc_val, exc_tb) -> None:
        self.close()

    def distribution(self, inp: str) -> OutputDistribution:
        dist = self._distributions.get(inp)
        if dist is None:
            dist = simulate_distribution(self.ctx.circuit, inp, max_qubits=self.ctx.max_qubits)
            self._distributions[inp] = dist
        return dist

    def execute(self, inp: str, seed: int) -> tuple[TestExecution, float]:
        """Run and assess one test; returns the verdict and simulation seconds."""
        n = repetitions(self.ctx.spec, inp)
        start = time.perf_counter()
        counts = sample_outputs(self.distribution(inp), n, seed)
        elapsed = time.perf_counter() - start
        return assess(self.ctx.spec, inp, counts, self.ctx.config.alpha, seed=seed), elapsed

    def evaluate(self, ind: Individual, generation: int, individual_index: int) -> Individual:
        """Execute every gene and set fitness to the number of failing tests."""
        domain = self.ctx.domain
        for gene in ind.genes:
            if not 0 <= gene < len(domain):
                raise ValueError(f"gene {gene} outside the search domain [0, {len(domain)})")

        jobs = [
            (domain[gene], derive_seed(self.ctx.config.seed, generation, individual_index, j))
            for j, gene in enumerate(ind.genes)
        ]
        if self._pool is not None:
            # map() yields in submission order: results stay in test-index order
            start = time.perf_counter()
            results = list(self._pool.map(lambda job: self.execute(*job), jobs))
            # Wall time of the batch; per-thread times overlap
            self.simulation_seconds += time.perf_counter() - start
        else:
            results = [self.execute(inp, seed) for inp, seed in jobs]
            self.simulation_seconds += sum(elapsed for _, elapsed in results)

        ind.executions = [execution for execution, _ in results]
        ind.fitness = sum(1 for execution in ind.executions if execution.failed)
        self.evaluations += 1
        return ind


def evaluate(
    ind: Individual, ctx: SearchContext, generation: int = 0, individual_index: int = 0
) -> Individual:
    """Evaluate one individual in its own evaluator."""
    with Evaluator(ctx) as evaluator:
        return evaluator.evaluate(ind, generation, individual_index)


def binary_tournament(pop: list[Individual], rng: np.random.Generator) -> Individual:
    """Fitter of two distinct random individuals; ties broken uniformly."""
    if len(pop) < 2:
        raise ValueError("binary tournament needs at least two individuals")
    a, b = rng.choice(len(pop), size=2, replace=False)
    first, second = pop[int(a)], pop[int(b)]
    if first.fitness is None or second.fitness is None:
        raise ValueError("binary tournament needs an evaluated population")
    if first.fitness > second.fitness:
        return first
    if second.fitness > first.fitness:
        return second
    return first if rng.random() < 0.5 else second


def _round_gene(value: float, upper: int) -> int:
    """Round half away from zero, then clamp to [0, upper]."""
    rounded = math.copysign(math.floor(abs(value) + 0.5), value)
    return int(min(max(rounded, 0), upper))


def _sbx_betaq(rand: float, beta: float, eta: float) -> float:
    alpha = 2.0 - beta ** -(eta + 1.0)
    if rand <= 1.0 / alpha:
        return (rand * alpha) ** (1.0 / (eta + 1.0))
    return (1.0 / (2.0 - rand * alpha)) ** (1.0 / (eta + 1.0))


def sbx_crossover(
    p1: Individual,
    p2: Individual,
    cfg: SearchConfig,
    rng: np.random.Generator,
    domain_size: int,
) -> tuple[Individual, Individual]:
    """Bounded simulated binary crossover on the real relaxation of the genes."""
    if len(p1.genes) != len(p2.genes):
        raise ValueError("parents must have the same number of genes")

    c1, c2 = p1.copy(), p2.copy()
    if rng.random() >= cfg.crossover_rate:
        return c1, c2

    eta = cfg.crossover_distribution_index
    lower, upper = 0.0, float(domain_size - 1)
    for i, (x1, x2) in enumerate(zip(p1.genes, p2.genes)):
        if rng.random() > 0.5 or abs(x1 - x2) <= _GENE_EPS:
            continue
        y1, y2 = float(min(x1, x2)), float(max(x1, x2))
        rand = rng.random()
        span = y2 - y1

        betaq = _sbx_betaq(rand, 1.0 + 2.0 * (y1 - lower) / span, eta)
        low_child = 0.5 * ((y1 + y2) - betaq * span)
        betaq = _sbx_betaq(rand, 1.0 + 2.0 * (upper - y2) / span, eta)
        high_child = 0.5 * ((y1 + y2) + betaq * span)

        low_gene = _round_gene(low_child, domain_size - 1)
        high_gene = _round_gene(high_child, domain_size - 1)
        if rng.random() <= 0.5:
            c1.genes[i], c2.genes[i] = high_gene, low_gene
        else:
            c1.genes[i], c2.genes[i] = low_gene, high_gene
    return c1, c2


def polynomial_mutation(
    ind: Individual,
    cfg: SearchConfig,
    rng: np.random.Generator,
    domain_size: int,
) -> Individual:
    """Bounded polynomial mutation of each gene with probability mutation_rate."""
    rate = cfg.effective_mutation_rate(len(ind.genes))
    eta = cfg.mutation_distribution_index
    upper = domain_size - 1
    mutant = ind.copy()
    if upper == 0:
        # Single-value domain: clamping forces the only gene value
        mutant.genes = [0] * len(ind.genes)
        return mutant

    mut_pow = 1.0 / (eta + 1.0)
    for i, y in enumerate(ind.genes):
        if rng.random() >= rate:
            continue
        delta1 = y / upper
        delta2 = (upper - y) / upper
        rnd = rng.random()
        if rnd <= 0.5:
            xy = 1.0 - delta1
            val = 2.0 * rnd + (1.0 - 2.0 * rnd) * xy ** (eta + 1.0)
            deltaq = val ** mut_pow - 1.0
        else:
            xy = 1.0 - delta2
            val = 2.0 * (1.0 - rnd) + 2.0 * (rnd - 0.5) * xy ** (eta + 1.0)
            deltaq = 1.0 - val ** mut_pow
        mutant.genes[i] = _round_gene(y + deltaq * upper, upper)
    return mutant


def _population_stats(generation: int, pop: list[Individual], best: Individual) -> GenerationStats:
    fitnesses = [ind.fitness or 0 for ind in pop]
    return GenerationStats(
        generation=generation,
        best_fitness=best.fitness or 0,
        population_best=max(fitnesses),
        mean_fitness=sum(fitnesses) / len(fitnesses),
    )


def run_search(
    ctx: SearchContext,
    progress_callback: Callable[[GenerationStats], None] | None = None,
) -> SearchReport:
    """Generational GA with elitism; returns the best individual ever evaluated.

    Generation 0 is the random initial population; max_generations counts it.
    Elites are carried over without re-evaluation, so their verdicts stand.
    """
    cfg = ctx.config
    domain_size = len(ctx.domain)
    if domain_size < 1:
        raise ConfigError("search domain is empty")

    m = suite_size(cfg, input_domain_size(ctx.circuit))
    if m > domain_size:
        logger.warning(
            "Suite size M=%d exceeds the %d inputs in the search domain; genes will repeat",
            m, domain_size,
        )

    rng = make_rng([cfg.seed, _GA_STREAM])
    start = time.perf_counter()
    logger.info(
        "Searching %s: M=%d, domain=%d, population=%d, generations=%d, seed=%d",
        ctx.circuit.name, m, domain_size, cfg.population_size, cfg.max_generations, cfg.seed,
    )

    with Evaluator(ctx) as evaluator:
        population = [
            evaluator.evaluate(
                Individual([int(g) for g in rng.integers(0, domain_size, size=m)]), 0, k
            )
            for k in range(cfg.population_size)
        ]
        best = max(population, key=lambda ind: ind.fitness)
        history = [_population_stats(0, population, best)]
        _log_generation(history[-1], progress_callback)

        for generation in range(1, cfg.max_generations):
            ranked = sorted(range(len(population)), key=lambda k: (-population[k].fitness, k))
            next_population = [population[k] for k in ranked[: cfg.elitism]]

            while len(next_population) < cfg.population_size:
                parent1 = binary_tournament(population, rng)
                parent2 = binary_tournament(population, rng)
                children = sbx_crossover(parent1, parent2, cfg, rng, domain_size)
                for child in children:
                    if len(next_population) == cfg.population_size:
                        break
                    child = polynomial_mutation(child, cfg, rng, domain_size)
                    next_population.append(
                        evaluator.evaluate(child, generation, len(next_population))
                    )

            population = next_population
            for ind in population:
                if ind.fitness > best.fitness:
                    best = ind
            history.append(_population_stats(generation, population, best))
            _log_generation(history[-1], progress_callback)

        evaluations = evaluator.evaluations
        simulation_seconds = evaluator.simulation_seconds

    total = time.perf_counter() - start
    logger.info(
        "Search finished: best fitness %d/%d after %d evaluations", best.fitness, m, evaluations
    )
    return SearchReport(
        best=best,
        history=history,
        suite_size=m,
        domain=list(ctx.domain),
        evaluations=evaluations,
        simulation_seconds=simulation_seconds,
        search_seconds=max(total - simulation_seconds, 0.0),
    )


def _log_generation(
    stats: GenerationStats, progress_callback: Callable[[GenerationStats], None] | None
) -> None:
    logger.info(
        "Generation %d: best-ever %d, population best %d, mean %.2f",
        stats.generation, stats.best_fitness, stats.population_best, stats.mean_fitness,
    )
    if progress_callback:
        progress_callback(stats)


def with_suite_size(cfg: SearchConfig, m: int) -> SearchConfig:
    """Copy of cfg with an absolute suite size."""
    return replace(cfg, suite_size=m, suite_fraction=None)

"""CLI for generating, replaying and benchmarking quantum program test suites."""

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from src import __version__
from src.bench import BENCHMARKS, VARIANTS, format_bench_table, get_benchmark, run_benchmark
from src.circuit import DEFAULT_MAX_QUBITS, QubitRoles, bitstring_to_index, parse_circuit_file
from src.config import CONFIG_SCHEMA, RunConfig, build_run_config, default_template, load_config_file
from src.errors import ConfigError, ManifestError, SimulationError, ToolError
from src.manifest import (
    MANIFEST_NAME,
    REPORT_NAME,
    build_manifest,
    file_sha256,
    load_manifest,
    verify_files,
    write_manifest,
    write_report,
)
from src.program_spec import iter_all_inputs, load_spec_file, print_spec, search_domain, spec_from_circuit
from src.search import Evaluator, SearchConfig, SearchContext, run_search
from src.simulator import derive_seed

logger = logging.getLogger(__name__)


EXIT_OK = 0
EXIT_FAILING_TESTS = 1
EXIT_USER_ERROR = 2
EXIT_INTERNAL_ERROR = 3

# genspec refuses to enumerate more inputs than this without --allow-large
GENSPEC_MAX_INPUT_QUBITS = 16
DEFAULT_CONFIG_NAME = "quantum-sbt.toml"


def parse_qubit_list(text: str) -> list[int | str]:
    """Comma list of qubit indices or register references: "0,1" or "a[0],b[0]"."""
    items: list[int | str] = []
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        items.append(int(item) if item.isdigit() else item)
    if not items:
        raise argparse.ArgumentTypeError("expected a comma-separated list of qubits")
    return items


def format_percent(fraction: float) -> str:
    return f"{100 * fraction:.1f}%"


def generate_suite(cfg: RunConfig) -> int:
    """Run the search and write suite.json and suite.report.txt."""
    circuit = parse_circuit_file(cfg.circuit_path, cfg.roles, cfg.max_qubits)
    if cfg.num_qubits is not None and cfg.num_qubits != circuit.num_qubits:
        raise ConfigError(
            f"num_qubits is {cfg.num_qubits} but {cfg.circuit_path} declares {circuit.num_qubits} qubits",
            key="num_qubits",
        )
    spec = load_spec_file(cfg.spec_path, circuit)
    domain = search_domain(spec, circuit, cfg.strict_domain)

    report = run_search(SearchContext(circuit, spec, cfg.search, domain, cfg.max_qubits))
    manifest = build_manifest(
        cfg.to_dict(),
        report,
        circuit.name,
        file_sha256(cfg.circuit_path),
        file_sha256(cfg.spec_path),
    )
    manifest_path = cfg.output_dir / MANIFEST_NAME
    report_path = cfg.output_dir / REPORT_NAME
    write_manifest(manifest_path, manifest)
    write_report(report_path, manifest)

    tests = manifest.tests
    print(f"Program: {circuit.name}")
    print(f"  Suite size M:  {report.suite_size} (search domain {len(domain)} inputs)")
    print(
        f"  Failing tests: {manifest.failing} ({format_percent(report.failing_fraction)}), "
        f"uof {sum(t.uof for t in tests)}, wodf {sum(t.wodf for t in tests)}"
    )
    print(f"  Simulation:    {report.simulation_seconds:.3f} s")
    print(f"  Search:        {report.search_seconds:.3f} s")
    duplicates = manifest.duplicates()
    if duplicates:
        print(f"  Duplicates:    {len(duplicates)} input(s) tested more than once")
    print()
    print(f"Wrote: {manifest_path}")
    print(f"Wrote: {report_path}")
    return EXIT_OK


def _overrides(args: argparse.Namespace) -> dict:
    return {key: getattr(args, key, None) for key in CONFIG_SCHEMA}


def cmd_generate(args: argparse.Namespace) -> int:
    file_values = load_config_file(args.config) if args.config else {}
    return generate_suite(build_run_config(file_values, _overrides(args)))


def cmd_replay(args: argparse.Namespace) -> int:
    """Re-execute a saved suite; recorded mode reuses the stored seeds."""
    manifest = load_manifest(args.manifest)
    config = manifest.config
    circuit_path = args.circuit or Path(config["circuit"])
    spec_path = args.spec or Path(config["spec"])
    verify_files(manifest, circuit_path, spec_path)

    roles = QubitRoles.of(config["input_qubits"], config["output_qubits"])
    max_qubits = config.get("max_qubits", DEFAULT_MAX_QUBITS)
    circuit = parse_circuit_file(circuit_path, roles, max_qubits)
    spec = load_spec_file(spec_path, circuit)
    search = SearchConfig(alpha=config.get("alpha", 0.01), suite_size=len(manifest.tests))
    ctx = SearchContext(circuit, spec, search, spec.inputs(), max_qubits)

    if args.fresh:
        master = args.seed
        if master is None:
            master = int(np.random.SeedSequence().entropy) % (1 << 64)
        print(f"Replaying {len(manifest.tests)} tests with fresh seeds (master seed {master})")
    else:
        print(f"Replaying {len(manifest.tests)} tests with recorded seeds")
    print()

    header = f"{'#':>3}  {'input':<10} {'n':>5}  {'recorded':<8}  {'replayed':<8}  {'p-value':>10}"
    print(header)
    print("-" * len(header))
    failing = flips = 0
    with Evaluator(ctx) as evaluator:
        for index, test in enumerate(manifest.tests):
            if args.fresh:
                seed = derive_seed(master, 0, 0, index)
            elif test.seed is None:
                raise ManifestError(
                    f"{args.manifest}: test {index} has no recorded seed",
                    hint="Use --fresh to replay with new seeds",
                )
            else:
                seed = test.seed
            result, _ = evaluator.execute(test.input, seed)
            failing += result.failed
            flipped = result.failed != test.failed
            flips += flipped
            p_value = "-" if result.p_value is None else f"{result.p_value:.4g}"
            print(
                f"{index:>3}  {test.input:<10} {result.repetitions:>5}  "
                f"{_verdict(test):<8}  {_verdict(result):<8}  {p_value:>10}"
                + ("  flipped" if flipped else "")
            )

    print()
    print(f"Failing: {failing} of {len(manifest.tests)}; verdict flips vs manifest: {flips}")
    if flips and not args.fresh:
        logger.error("Recorded-seed replay changed %d verdicts", flips)
    return EXIT_FAILING_TESTS if failing else EXIT_OK


def _verdict(test) -> str:
    if test.uof:
        return "uof"
    if test.wodf:
        return "wodf"
    return "pass"


def cmd_genspec(args: argparse.Namespace) -> int:
    """Write the exact spec of a golden circuit."""
    roles = QubitRoles.of(args.input_qubits, args.output_qubits)
    circuit = parse_circuit_file(args.circuit, roles, args.max_qubits)

    if args.inputs == "all":
        if circuit.input_width > GENSPEC_MAX_INPUT_QUBITS and not args.allow_large:
            raise ConfigError(
                f"refusing to enumerate 2^{circuit.input_width} inputs "
                f"(more than {GENSPEC_MAX_INPUT_QUBITS} input qubits)",
                key="inputs",
                hint="List the inputs explicitly or pass --allow-large",
            )
        inputs = list(iter_all_inputs(circuit))
    else:
        inputs = [bits.strip() for bits in args.inputs.split(",") if bits.strip()]
        for bits in inputs:
            if len(bits) != circuit.input_width or set(bits) - {"0", "1"}:
                raise ConfigError(
                    f"input {bits!r} is not a bitstring of width {circuit.input_width}",
                    key="inputs",
                )
        inputs = sorted(set(inputs), key=bitstring_to_index)

    spec = spec_from_circuit(circuit, inputs, args.max_qubits)
    output = args.output or args.circuit.with_name(f"{args.circuit.stem}.spec.json")
    output.write_text(print_spec(spec), encoding="utf-8")
    print(f"Wrote spec for {len(inputs)} input(s) to: {output}")
    return EXIT_OK


def cmd_bench(args: argparse.Namespace) -> int:
    """Run the bundled corpus over a range of seeds and print the summary."""
    benches = [get_benchmark(args.program)] if args.program else list(BENCHMARKS.values())
    variants = [args.variant] if args.variant else list(VARIANTS)
    seeds = list(range(args.seeds))

    rows = []
    for bench in benches:
        for variant in variants:
            print(f"Running {bench.name}/{variant} over {len(seeds)} seed(s)...", file=sys.stderr)
            rows.append(
                run_benchmark(bench, variant, seeds, args.generations, suite_size=args.suite_size)
            )
    print(format_bench_table(rows))
    return EXIT_OK


def cmd_init(args: argparse.Namespace) -> int:
    path: Path = args.path
    if path.exists() and not args.force:
        raise ConfigError(f"{path} already exists", hint="Pass --force to overwrite it")
    path.write_text(default_template(), encoding="utf-8")
    print(f"Wrote configuration template to: {path}")
    return EXIT_OK


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    """One flag per configuration key; unset flags are None and do not override."""
    for key, (types, description) in CONFIG_SCHEMA.items():
        flag = "--" + key.replace("_", "-")
        if types[0] is bool:
            parser.add_argument(flag, action="store_true", default=None, help=description)
        elif types[0] is list:
            parser.add_argument(flag, type=parse_qubit_list, help=description)
        else:
            parser.add_argument(flag, type=types[0], help=description)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="python -m src.cli",
        description="Search-based test generation for quantum programs",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument(
        "--log-level",
        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
        default=None,
        help="Logging level (default: WARNING)",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="Shorthand for --log-level INFO")

    subparsers = parser.add_subparsers(dest="command", help="Commands")

    # Generate command
    generate_parser = subparsers.add_parser("generate", help="Evolve a test suite for a program")
    generate_parser.add_argument("--config", type=Path, help="TOML run configuration")
    _add_config_flags(generate_parser)

    # Replay command
    replay_parser = subparsers.add_parser("replay", help="Re-execute a saved suite")
    replay_parser.add_argument("manifest", type=Path, help="suite.json of a generate run")
    replay_parser.add_argument("--circuit", type=Path, help="Circuit file (default: from the manifest)")
    replay_parser.add_argument("--spec", type=Path, help="Spec file (default: from the manifest)")
    mode = replay_parser.add_mutually_exclusive_group()
    mode.add_argument(
        "--recorded", dest="fresh", action="store_false", help="Reuse recorded seeds (default)"
    )
    mode.add_argument("--fresh", dest="fresh", action="store_true", help="Draw new seeds")
    replay_parser.add_argument("--seed", type=int, help="Master seed for --fresh (default: random)")
    replay_parser.set_defaults(fresh=False)

    # Genspec command
    genspec_parser = subparsers.add_parser("genspec", help="Write the exact spec of a golden circuit")
    genspec_parser.add_argument("circuit", type=Path, help="OpenQASM 2.0 file")
    genspec_parser.add_argument("--input-qubits", type=parse_qubit_list, required=True)
    genspec_parser.add_argument("--output-qubits", type=parse_qubit_list, required=True)
    genspec_parser.add_argument(
        "--inputs", default="all", help="'all' or a comma list of input bitstrings (default: all)"
    )
    genspec_parser.add_argument("--output", type=Path, help="Spec path (default: next to the circuit)")
    genspec_parser.add_argument(
        "--allow-large", action="store_true",
        help=f"Allow 'all' with more than {GENSPEC_MAX_INPUT_QUBITS} input qubits",
    )
    genspec_parser.add_argument(
        "--max-qubits", type=int, default=DEFAULT_MAX_QUBITS,
        help=f"Simulation cap (default: {DEFAULT_MAX_QUBITS})",
    )

    # Bench command
    bench_parser = subparsers.add_parser("bench", help="Run the bundled benchmark corpus")
    bench_parser.add_argument("--seeds", type=int, default=30, help="Seeds per variant (default: 30)")
    bench_parser.add_argument("--generations", type=int, default=50, help="Generations (default: 50)")
    bench_parser.add_argument("--program", choices=sorted(BENCHMARKS), help="Only this program")
    bench_parser.add_argument("--variant", choices=VARIANTS, help="Only this variant")
    bench_parser.add_argument("--suite-size", type=int, help="Absolute M instead of the corpus default (4 faulty, 64 correct)")

    # Init command
    init_parser = subparsers.add_parser("init", help="Write a configuration template")
    init_parser.add_argument(
        "path", type=Path, nargs="?", default=Path(DEFAULT_CONFIG_NAME),
        help=f"Output path (default: {DEFAULT_CONFIG_NAME})",
    )
    init_parser.add_argument("--force", action="store_true", help="Overwrite an existing file")

    return parser


COMMANDS = {
    "generate": cmd_generate,
    "replay": cmd_replay,
    "genspec": cmd_genspec,
    "bench": cmd_bench,
    "init": cmd_init,
}


def main(argv: list[str] | None = None) -> int:
    """Main CLI entry point; returns the process exit code."""
    parser = build_parser()
    args = parser.parse_args(argv)

    level = args.log_level or ("INFO" if args.verbose else "WARNING")
    logging.basicConfig(
        level=getattr(logging, level),
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )

    handler = COMMANDS.get(args.command)
    if handler is None:
        parser.print_help()
        return EXIT_USER_ERROR

    try:
        return handler(args)
    except SimulationError as e:
        logger.debug("Simulation failed", exc_info=True)
        print(f"Internal error: {e.message}", file=sys.stderr)
        print(f"Hint: {e.hint}", file=sys.stderr)
        return EXIT_INTERNAL_ERROR
    except ToolError as e:
        logger.debug("User error", exc_info=True)
        print(f"Error: {e.message}", file=sys.stderr)
        print(f"Hint: {e.hint}", file=sys.stderr)
        return EXIT_USER_ERROR
    except Exception as e:
        logger.debug("Unexpected error", exc_info=True)
        print(f"Internal error: {e.__class__.__name__}: {e}", file=sys.stderr)
        return EXIT_INTERNAL_ERROR


if __name__ == "__main__":
    sys.exit(main())

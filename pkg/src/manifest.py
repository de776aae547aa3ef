"""Suite manifest: the self-contained record of one generated test suite.

`suite.json` holds the config echo, SHA-256 hashes of the circuit and spec
files, every test of the best suite with its sampling seed and verdict, and
a summary. `replay` needs only the manifest plus the two hashed files.
"""

import hashlib
import json
import logging
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from src import __version__
from src.assess import TestExecution
from src.errors import ManifestError
from src.search import SearchReport

logger = logging.getLogger(__name__)


MANIFEST_VERSION = "1.0"
MANIFEST_NAME = "suite.json"
REPORT_NAME = "suite.report.txt"

# Fields that differ between otherwise identical runs
TIMING_FIELDS = ("simulation_seconds", "search_seconds")


@dataclass
class SuiteManifest:
    """Best suite of a run, with everything needed to replay it."""

    program: str
    config: dict[str, Any]
    hashes: dict[str, str]
    genes: list[int]
    tests: list[TestExecution]
    summary: dict[str, Any]
    history: list[dict[str, Any]] = field(default_factory=list)
    tool_version: str = __version__
    manifest_version: str = MANIFEST_VERSION

    @property
    def failing(self) -> int:
        return sum(1 for test in self.tests if test.failed)

    def duplicates(self) -> dict[str, int]:
        """Inputs tested more than once, with their multiplicity."""
        counts: dict[str, int] = {}
        for test in self.tests:
            counts[test.input] = counts.get(test.input, 0) + 1
        return {inp: k for inp, k in sorted(counts.items()) if k > 1}

    def to_dict(self) -> dict[str, Any]:
        """Convert to dictionary for JSON serialization."""
        return {
            "manifest_version": self.manifest_version,
            "tool_version": self.tool_version,
            "program": self.program,
            "config": self.config,
            "hashes": self.hashes,
            "summary": self.summary,
            "genes": self.genes,
            "duplicates": self.duplicates(),
            "tests": [test.to_dict() for test in self.tests],
            "history": self.history,
        }


def file_sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


def build_manifest(
    config: dict[str, Any],
    report: SearchReport,
    program: str,
    circuit_hash: str,
    spec_hash: str,
) -> SuiteManifest:
    """Assemble the manifest of a finished search.

    Args:
        config: Flat config echo (RunConfig.to_dict())
        report: SearchReport of the run
        program: Circuit name
        circuit_hash: SHA-256 of the circuit file
        spec_hash: SHA-256 of the spec file
    """
    best = report.best
    m = report.suite_size
    failing = sum(1 for test in best.executions if test.failed)
    summary = {
        "suite_size": m,
        "failing": failing,
        "failing_fraction": failing / m,
        "domain_size": len(report.domain),
        "generations": len(report.history),
        "evaluations": report.evaluations,
        "simulation_seconds": report.simulation_seconds,
        "search_seconds": report.search_seconds,
    }
    manifest = SuiteManifest(
        program=program,
        config=dict(config),
        hashes={"circuit": circuit_hash, "spec": spec_hash},
        genes=list(best.genes),
        tests=list(best.executions),
        summary=summary,
        history=[stats.to_dict() for stats in report.history],
    )
    duplicates = manifest.duplicates()
    if duplicates:
        logger.warning(
            "Best suite tests %d input(s) more than once: %s",
            len(duplicates), ", ".join(f"{inp} x{k}" for inp, k in duplicates.items()),
        )
    return manifest


def write_manifest(path: Path, manifest: SuiteManifest) -> None:
    """Write the manifest atomically using write-to-temp-then-rename."""
    path.parent.mkdir(parents=True, exist_ok=True)
    # Temp file in the same directory keeps the rename on one filesystem
    temp_fd, temp_path = tempfile.mkstemp(dir=path.parent, prefix=".suite_", suffix=".tmp")
    try:
        with open(temp_fd, "w", encoding="utf-8") as f:
            json.dump(manifest.to_dict(), f, indent=2)
            f.write("\n")
        Path(temp_path).replace(path)
    except Exception:
        try:
            Path(temp_path).unlink()
        except OSError:
            pass
        raise
    logger.info("Wrote manifest %s", path)


def _major(version: str, path: Path) -> int:
    try:
        return int(str(version).split(".")[0])
    except ValueError:
        raise ManifestError(f"{path}: malformed manifest_version {version!r}") from None


def load_manifest(path: Path) -> SuiteManifest:
    """Read a manifest, rejecting schemas newer than this tool understands."""
    try:
        with open(path, encoding="utf-8") as f:
            data = json.load(f)
    except FileNotFoundError:
        raise ManifestError(f"manifest not found: {path}", hint="Pass the suite.json of a generate run") from None
    except json.JSONDecodeError as e:
        raise ManifestError(f"{path}: not valid JSON: {e}") from e
    except OSError as e:
        raise ManifestError(f"cannot read manifest {path}: {e}") from e

    if not isinstance(data, dict) or "manifest_version" not in data:
        raise ManifestError(f"{path}: missing manifest_version")
    version = data["manifest_version"]
    if _major(version, path) > _major(MANIFEST_VERSION, path):
        raise ManifestError(
            f"{path}: manifest version {version} is newer than supported {MANIFEST_VERSION}",
            hint="Upgrade the tool to replay this suite",
        )

    try:
        return SuiteManifest(
            program=data["program"],
            config=data["config"],
            hashes=data["hashes"],
            genes=list(data["genes"]),
            tests=[TestExecution.from_dict(test) for test in data["tests"]],
            summary=data["summary"],
            history=data.get("history", []),
            tool_version=data.get("tool_version", "unknown"),
            manifest_version=version,
        )
    except (KeyError, TypeError, ValueError) as e:
        raise ManifestError(f"{path}: malformed manifest ({e.__class__.__name__}: {e})") from e


def verify_files(manifest: SuiteManifest, circuit_path: Path, spec_path: Path) -> None:
    """Refuse replay when the circuit or spec differ from the recorded ones."""
    for role, path in (("circuit", circuit_path), ("spec", spec_path)):
        try:
            actual = file_sha256(path)
        except OSError as e:
            raise ManifestError(f"cannot read {role} file {path}: {e}") from e
        recorded = manifest.hashes.get(role)
        if actual != recorded:
            raise ManifestError(
                f"{role} file {path} does not match the manifest "
                f"(sha256 {actual[:12]}..., recorded {str(recorded)[:12]}...)",
                hint=f"Replay with the exact {role} file the suite was generated from",
            )


def _format_counts(counts: dict[str, float], decimals: int = 0) -> str:
    return " ".join(f"{out}:{value:.{decimals}f}" for out, value in sorted(counts.items()))


def render_report(manifest: SuiteManifest) -> str:
    """Human-readable summary and per-test table for suite.report.txt."""
    summary = manifest.summary
    lines = [
        f"Program: {manifest.program}",
        f"Circuit sha256: {manifest.hashes.get('circuit', '')}",
        f"Spec sha256:    {manifest.hashes.get('spec', '')}",
        "",
        f"{'Program':<24} {'M':>5} {'%ft':>7} {'st (s)':>10} {'et (s)':>10}",
        f"{manifest.program:<24} {summary['suite_size']:>5} "
        f"{100 * summary['failing_fraction']:>6.1f}% "
        f"{summary['simulation_seconds']:>10.3f} {summary['search_seconds']:>10.3f}",
        "",
        f"Failing tests: {summary['failing']} of {summary['suite_size']} "
        f"(uof {sum(t.uof for t in manifest.tests)}, wodf {sum(t.wodf for t in manifest.tests)})",
        f"Generations: {summary.get('generations', '?')}, evaluations: {summary.get('evaluations', '?')}",
        "",
        f"{'#':>3}  {'input':<10} {'n':>5}  {'uof':<5} {'wodf':<5} {'p-value':>10}  {'verdict':<7}  "
        "observed | expected",
    ]
    for index, test in enumerate(manifest.tests):
        p_value = "-" if test.p_value is None else f"{test.p_value:.4g}"
        lines.append(
            f"{index:>3}  {test.input:<10} {test.repetitions:>5}  {str(test.uof):<5} "
            f"{str(test.wodf):<5} {p_value:>10}  {'FAIL' if test.failed else 'pass':<7}  "
            f"{_format_counts(test.observed)} | {_format_counts(test.expected_counts, 1)}"
        )

    duplicates = manifest.duplicates()
    if duplicates:
        lines.append("")
        lines.append(
            "Duplicate inputs: " + ", ".join(f"{inp} x{k}" for inp, k in duplicates.items())
        )
    return "\n".join(lines) + "\n"


def write_report(path: Path, manifest: SuiteManifest) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(render_report(manifest), encoding="utf-8")
    logger.info("Wrote report %s", path)

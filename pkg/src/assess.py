"""Test assessment: repetition counts and the two failure oracles.

A test first checks for an unexpected output (uof): any observed output the
spec gives probability zero. Only when none occurred is the output
distribution compared with the spec (wodf) by a Pearson chi-square goodness
of fit test at significance level alpha.
"""

import logging
import math
import sys
from dataclasses import dataclass, field
from typing import Mapping

from src.program_spec import ProgramSpec, expected_outputs

logger = logging.getLogger(__name__)


REPETITIONS_PER_OUTPUT = 100
DEFAULT_ALPHA = 0.01

_GAMMA_EPS = 1e-15
_GAMMA_MAX_ITER = 10_000
_TINY = sys.float_info.min / sys.float_info.epsilon


@dataclass(frozen=True)
class TestExecution:
    """One executed test: input, shot count, observed counts and verdict."""

    __test__ = False  # not a pytest test class

    input: str
    repetitions: int
    observed: dict[str, int]
    uof: bool
    wodf: bool
    p_value: float | None
    expected_counts: dict[str, float] = field(default_factory=dict)
    statistic: float | None = None
    df: int | None = None
    seed: int | None = None

    def __post_init__(self) -> None:
        if sum(self.observed.values()) != self.repetitions:
            raise ValueError(
                f"observed counts sum to {sum(self.observed.values())}, "
                f"expected {self.repetitions} repetitions"
            )
        if self.uof and (self.wodf or self.p_value is not None):
            raise ValueError("a uof verdict excludes the wodf assessment")

    @property
    def failed(self) -> bool:
        return self.uof or self.wodf

    def to_dict(self) -> dict:
        """Convert to dictionary for JSON serialization."""
        return {
            "input": self.input,
            "repetitions": self.repetitions,
            "seed": self.seed,
            "observed": dict(sorted(self.observed.items())),
            "expected_counts": dict(sorted(self.expected_counts.items())),
            "uof": self.uof,
            "wodf": self.wodf,
            "statistic": self.statistic,
            "df": self.df,
            "p_value": self.p_value,
            "failed": self.failed,
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "TestExecution":
        return cls(
            input=data["input"],
            repetitions=int(data["repetitions"]),
            observed={k: int(v) for k, v in data["observed"].items()},
            uof=bool(data["uof"]),
            wodf=bool(data["wodf"]),
            p_value=data.get("p_value"),
            expected_counts=dict(data.get("expected_counts", {})),
            statistic=data.get("statistic"),
            df=data.get("df"),
            seed=data.get("seed"),
        )


def repetitions(ps: ProgramSpec, inp: str) -> int:
    """Shots for a test: 100 per expected output."""
    return REPETITIONS_PER_OUTPUT * len(expected_outputs(ps, inp))


def check_uof(ps: ProgramSpec, inp: str, observed: Mapping[str, int]) -> bool:
    """True iff some output with a positive count is not expected."""
    expected = expected_outputs(ps, inp)
    return any(count > 0 and out not in expected for out, count in observed.items())


def _gamma_series(a: float, x: float) -> float:
    """Regularized lower incomplete gamma P(a, x) by its series (x < a + 1)."""
    term = total = 1.0 / a
    ap = a
    for _ in range(_GAMMA_MAX_ITER):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * _GAMMA_EPS:
            break
    else:
        raise ArithmeticError(f"incomplete gamma series did not converge for a={a}, x={x}")
    return total * math.exp(-x + a * math.log(x) - math.lgamma(a))


def _gamma_continued_fraction(a: float, x: float) -> float:
    """Regularized upper incomplete gamma Q(a, x) by Lentz's continued fraction (x >= a + 1)."""
    b = x + 1.0 - a
    c = 1.0 / _TINY
    d = 1.0 / b
    h = d
    for i in range(1, _GAMMA_MAX_ITER + 1):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < _TINY:
            d = _TINY
        c = b + an / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _GAMMA_EPS:
            break
    else:
        raise ArithmeticError(f"incomplete gamma fraction did not converge for a={a}, x={x}")
    return math.exp(-x + a * math.log(x) - math.lgamma(a)) * h


def chi_square_pvalue(statistic: float, df: int) -> float:
    """P(X >= statistic) for X ~ chi-square(df), i.e. Q(df/2, statistic/2)."""
    if not math.isfinite(statistic):
        raise ValueError(f"chi-square statistic must be finite, got {statistic}")
    if statistic < 0:
        raise ValueError(f"chi-square statistic must be non-negative, got {statistic}")
    if df < 1:
        raise ValueError(f"degrees of freedom must be >= 1, got {df}")
    if statistic == 0.0:
        return 1.0

    a, x = df / 2.0, statistic / 2.0
    if x < a + 1.0:
        p = 1.0 - _gamma_series(a, x)
    else:
        p = _gamma_continued_fraction(a, x)
    return min(max(p, 0.0), 1.0)


@dataclass(frozen=True)
class GoodnessOfFit:
    """Outcome of the wodf check."""

    wodf: bool
    p_value: float | None
    statistic: float | None
    df: int
    expected_counts: dict[str, float]


def goodness_of_fit(
    ps: ProgramSpec, inp: str, observed: Mapping[str, int], alpha: float = DEFAULT_ALPHA
) -> GoodnessOfFit:
    """Pearson test of observed counts against the spec row (full detail)."""
    if check_uof(ps, inp, observed):
        raise ValueError(
            f"input {inp!r}: wodf check requires that uof was ruled out first"
        )
    row = ps.row(inp)
    n = sum(observed.values())
    expected_counts = {out: p * n for out, p in sorted(row.items())}
    df = len(row) - 1
    if df == 0:
        logger.debug("input %r: single expected output, chi-square test skipped", inp)
        return GoodnessOfFit(False, None, None, 0, expected_counts)

    statistic = sum(
        (observed.get(out, 0) - exp) ** 2 / exp for out, exp in expected_counts.items()
    )
    p_value = chi_square_pvalue(statistic, df)
    return GoodnessOfFit(p_value < alpha, p_value, statistic, df, expected_counts)


def check_wodf(
    ps: ProgramSpec, inp: str, observed: Mapping[str, int], alpha: float = DEFAULT_ALPHA
) -> tuple[bool, float | None]:
    """(wodf flag, p-value); p-value is None when the row has one expected output."""
    fit = goodness_of_fit(ps, inp, observed, alpha)
    return fit.wodf, fit.p_value


def assess(
    ps: ProgramSpec,
    inp: str,
    observed: Mapping[str, int],
    alpha: float = DEFAULT_ALPHA,
    seed: int | None = None,
) -> TestExecution:
    """Verdict for one test: uof first, wodf only if no uof."""
    n = repetitions(ps, inp)
    total = sum(observed.values())
    if total != n:
        raise ValueError(f"input {inp!r}: observed {total} shots, expected {n}")

    observed = {out: int(k) for out, k in observed.items() if k > 0}
    if check_uof(ps, inp, observed):
        row = ps.row(inp)
        result = TestExecution(
            input=inp,
            repetitions=n,
            observed=observed,
            uof=True,
            wodf=False,
            p_value=None,
            expected_counts={out: p * n for out, p in sorted(row.items())},
            seed=seed,
        )
    else:
        fit = goodness_of_fit(ps, inp, observed, alpha)
        result = TestExecution(
            input=inp,
            repetitions=n,
            observed=observed,
            uof=False,
            wodf=fit.wodf,
            p_value=fit.p_value,
            expected_counts=fit.expected_counts,
            statistic=fit.statistic,
            df=fit.df,
            seed=seed,
        )

    logger.debug(
        "input %s: n=%d observed=%s uof=%s wodf=%s p=%s",
        inp, n, result.observed, result.uof, result.wodf, result.p_value,
    )
    return result

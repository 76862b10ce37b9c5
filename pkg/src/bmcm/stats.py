"""Test statistics for operator tallies and 2x2 tables.

Everything here is one-degree-of-freedom: the binomial goodness-of-fit
chi-square against p = 1/2, the 2x2 chi-square (optionally Yates-corrected),
and the two-sided Fisher exact test.  p-values are also carried as base-10
logarithms so that extreme tails survive underflow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DegenerateTableError, UndefinedTestError

__all__ = [
    "TestResult",
    "Table2x2",
    "chi2_sf",
    "chi2_logsf",
    "binomial_chisq",
    "contingency_chisq",
    "fisher_exact",
]

_LN10 = math.log(10.0)
# erfc(z) for z above this is handled by the asymptotic series
_ERFC_SWITCH = 26.0


@dataclass(frozen=True)
class TestResult:
    statistic: float
    p_value: float
    dof: int
    log10_p: float

    __test__ = False  # keep pytest from collecting this class

    def to_dict(self) -> dict:
        return {
            "statistic": self.statistic,
            "p_value": self.p_value,
            "log10_p": self.log10_p,
            "dof": self.dof,
        }


@dataclass(frozen=True)
class Table2x2:
    """Counts laid out as::

                     outcome=1  outcome=0
        predictor+       a          b
        predictor-       c          d
    """

    a: int
    b: int
    c: int
    d: int

    def __post_init__(self) -> None:
        for name in "abcd":
            v = getattr(self, name)
            if int(v) != v or v < 0:
                raise ValueError(f"cell {name} must be a non-negative integer, got {v!r}")
            object.__setattr__(self, name, int(v))

    @property
    def n(self) -> int:
        return self.a + self.b + self.c + self.d

    @property
    def row_margins(self) -> tuple[int, int]:
        return self.a + self.b, self.c + self.d

    @property
    def col_margins(self) -> tuple[int, int]:
        return self.a + self.c, self.b + self.d

    def transpose(self) -> "Table2x2":
        return Table2x2(self.a, self.c, self.b, self.d)

    def swap_rows(self) -> "Table2x2":
        return Table2x2(self.c, self.d, self.a, self.b)

    def swap_cols(self) -> "Table2x2":
        return Table2x2(self.b, self.a, self.d, self.c)

    def as_tuple(self) -> tuple[int, int, int, int]:
        return self.a, self.b, self.c, self.d


def _log_erfc(z: float) -> float:
    if z < _ERFC_SWITCH:
        return math.log(math.erfc(z))
    # erfc(z) ~ exp(-z^2) / (z sqrt(pi)) * sum_m (-1)^m (2m-1)!! / (2 z^2)^m
    t = 1.0 / (2.0 * z * z)
    term = 1.0
    series = 1.0
    for m in range(1, 30):
        term *= -(2 * m - 1) * t
        if abs(term) < 1e-17 * abs(series):
            break
        series += term
    return -z * z - math.log(z) - 0.5 * math.log(math.pi) + math.log(series)


def _check_chi2_args(x: float, dof: int) -> None:
    if dof != 1:
        raise NotImplementedError("only the 1-dof chi-square distribution is supported")
    if x < 0 or math.isnan(x):
        raise ValueError(f"chi-square value must be non-negative, got {x}")


def chi2_logsf(x: float, dof: int = 1) -> float:
    """Natural log of the chi-square(1) survival function."""
    _check_chi2_args(x, dof)
    if x == 0:
        return 0.0
    return _log_erfc(math.sqrt(x / 2.0))


def chi2_sf(x: float, dof: int = 1) -> float:
    """P(X > x) for X ~ chi-square(1), i.e. erfc(sqrt(x / 2))."""
    _check_chi2_args(x, dof)
    z = math.sqrt(x / 2.0)
    if z < _ERFC_SWITCH:
        return math.erfc(z)
    return math.exp(_log_erfc(z))


def _chi2_result(statistic: float) -> TestResult:
    return TestResult(
        statistic=statistic,
        p_value=chi2_sf(statistic),
        dof=1,
        log10_p=chi2_logsf(statistic) / _LN10,
    )


def binomial_chisq(count_and: int, count_or: int) -> TestResult:
    """Goodness-of-fit chi-square of two operator counts against equal probability."""
    n = count_and + count_or
    if count_and < 0 or count_or < 0:
        raise ValueError("counts must be non-negative")
    if n == 0:
        raise UndefinedTestError("binomial test needs at least one observation")
    half = n / 2.0
    statistic = (count_and - half) ** 2 / half + (count_or - half) ** 2 / half
    return _chi2_result(statistic)


def contingency_chisq(t: Table2x2, corrected: bool = True, clamp: bool = False) -> TestResult:
    """Pearson chi-square for a 2x2 table.

    With ``corrected`` the statistic is ``N (|ad - bc| - N/2)^2 / (r1 r2 c1 c2)``.
    By default the shifted difference is squared as is, which is the form that
    reproduces the published worked values (e.g. 0.0036 for (58, 59, 65, 65)).
    ``clamp=True`` floors ``|ad - bc| - N/2`` at zero (textbook Yates), which
    guarantees the corrected statistic never exceeds the uncorrected one.
    """
    r1, r2 = t.row_margins
    c1, c2 = t.col_margins
    if t.n == 0 or 0 in (r1, r2, c1, c2):
        raise DegenerateTableError(f"table {t.as_tuple()} has a zero margin")
    n = t.n
    denom = r1 * r2 * c1 * c2
    diff = abs(t.a * t.d - t.b * t.c)
    if corrected:
        # doubled to stay in integers: (2 diff - n)^2 / 4
        shifted = 2 * diff - n
        if clamp:
            shifted = max(shifted, 0)
        statistic = n * shifted * shifted / (4 * denom)
    else:
        statistic = n * diff * diff / denom
    return _chi2_result(float(statistic))


def _log_hypergeom(a: int, r1: int, r2: int, c1: int, n: int) -> float:
    b = r1 - a
    c = c1 - a
    d = r2 - c
    lf = math.lgamma
    return (
        lf(r1 + 1) + lf(r2 + 1) + lf(c1 + 1) + lf(n - c1 + 1)
        - lf(n + 1) - lf(a + 1) - lf(b + 1) - lf(c + 1) - lf(d + 1)
    )


def _logsumexp(values: list[float]) -> float:
    top = max(values)
    return top + math.log(sum(math.exp(v - top) for v in values))


def fisher_exact(t: Table2x2, rel_tol: float = 1e-7) -> TestResult:
    """Two-sided Fisher exact test.

    The p-value sums the hypergeometric probabilities of every table with the
    observed margins that is no more likely than the observed one (within
    ``rel_tol``).  ``statistic`` holds the observed table's probability.
    """
    n = t.n
    if n == 0:
        raise UndefinedTestError("empty table")
    r1, r2 = t.row_margins
    c1, _ = t.col_margins
    lo = max(0, c1 - r2)
    hi = min(r1, c1)
    logs = [_log_hypergeom(k, r1, r2, c1, n) for k in range(lo, hi + 1)]
    observed = logs[t.a - lo]
    cutoff = observed + math.log1p(rel_tol)
    tail = [v for v in logs if v <= cutoff]
    log_p = min(_logsumexp(tail), 0.0)
    return TestResult(
        statistic=math.exp(observed),
        p_value=math.exp(log_p),
        dof=0,
        log10_p=log_p / _LN10,
    )

"""The three-step analysis: null-data gate, operator tendencies, final table."""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field, asdict
from typing import Sequence

import numpy as np

from . import __version__
from .data import Dataset, NullClass, null_classes
from .engine import Choice, SlotDecision, SlotTally, decide_operators, run_exhaustive, run_sampled
from .errors import BMCMError, GateInapplicableError, GateNotPassedError
from .expr import ModelTemplate, OperatorAssignment, evaluate_batch, render_template
from .stats import Table2x2, TestResult, contingency_chisq, fisher_exact

__all__ = [
    "RunConfig",
    "NullReport",
    "ModelReport",
    "FinalReport",
    "AnalysisReport",
    "step1_null",
    "step2_model",
    "step3_contingency",
    "run_full",
    "REPORT_SCHEMA",
]

REPORT_SCHEMA = "bmcm-report/1"

GATE_WARNING = (
    "null data show no significant outcome trend; "
    "change the variables or hypothesis before interpreting operator tendencies"
)


@dataclass(frozen=True)
class RunConfig:
    mode: str = "exhaustive"
    trials_per_row: int = 1024
    seed: int = 0
    alpha: float = 0.05
    include_null_in_step2: bool = False
    ignore_gate: bool = False
    workers: int = 1

    def __post_init__(self) -> None:
        if self.mode not in ("exhaustive", "sampled"):
            raise ValueError(f"mode must be 'exhaustive' or 'sampled', got {self.mode!r}")
        if not 0 < self.alpha < 1:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.mode == "sampled" and self.trials_per_row < 1:
            raise ValueError("trials_per_row must be at least 1 in sampled mode")

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("workers")  # scheduling detail, never changes results
        return d


@dataclass(frozen=True)
class NullReport:
    counts: dict[NullClass, int]
    table: Table2x2
    chisq: TestResult
    fisher: TestResult
    gate_passed: bool
    warning: str | None = None

    def to_dict(self) -> dict:
        return {
            "counts": {k.value: v for k, v in self.counts.items()},
            "table": _table_dict(self.table),
            "chisq": self.chisq.to_dict(),
            "fisher": self.fisher.to_dict(),
            "gate_passed": self.gate_passed,
            "warning": self.warning,
        }


@dataclass(frozen=True)
class FinalReport:
    template: str
    assignment: OperatorAssignment
    table: Table2x2
    chisq: TestResult
    fisher: TestResult

    @property
    def sensitivity(self) -> float | None:
        pos = self.table.a + self.table.c
        return self.table.a / pos if pos else None

    @property
    def specificity(self) -> float | None:
        neg = self.table.b + self.table.d
        return self.table.d / neg if neg else None

    def to_dict(self) -> dict:
        return {
            "template": self.template,
            "assignment": [str(o) for o in self.assignment.ops],
            "table": _table_dict(self.table),
            "chisq": self.chisq.to_dict(),
            "fisher": self.fisher.to_dict(),
            "sensitivity": self.sensitivity,
            "specificity": self.specificity,
        }


@dataclass(frozen=True)
class ModelReport:
    template: str
    tally: SlotTally | None
    decisions: tuple[SlotDecision, ...] = ()
    resolved: OperatorAssignment | None = None
    final: FinalReport | None = None
    error: str | None = None

    def to_dict(self) -> dict:
        return {
            "template": self.template,
            "tally": None if self.tally is None else self.tally.to_dict(),
            "decisions": [d.to_dict() for d in self.decisions],
            "resolved": None if self.resolved is None else [str(o) for o in self.resolved.ops],
            "final": None if self.final is None else self.final.to_dict(),
            "error": self.error,
        }


@dataclass(frozen=True)
class AnalysisReport:
    config: RunConfig
    dataset: dict
    null: NullReport
    models: tuple[ModelReport, ...] = field(default_factory=tuple)

    @property
    def gate_passed(self) -> bool:
        return self.null.gate_passed

    @property
    def resolved_models(self) -> list[ModelReport]:
        return [m for m in self.models if m.resolved is not None]

    @property
    def tests_performed(self) -> int:
        return sum(len(m.decisions) for m in self.models)

    def to_dict(self) -> dict:
        return {
            "schema": REPORT_SCHEMA,
            "version": __version__,
            "config": self.config.to_dict(),
            "dataset": self.dataset,
            "null": self.null.to_dict(),
            "models": [m.to_dict() for m in self.models],
            "slot_tests_performed": self.tests_performed,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    def to_text(self) -> str:
        return render_text(self)


def _table_dict(t: Table2x2) -> dict:
    return {"a": t.a, "b": t.b, "c": t.c, "d": t.d}


def step1_null(dataset: Dataset, alpha: float = 0.05) -> NullReport:
    """Outcome trend among rows whose explanatory bits are all 1 or all 0."""
    classes = null_classes(dataset)
    counts = {c: 0 for c in NullClass}
    for c in classes:
        counts[c] += 1
    table = Table2x2(
        counts[NullClass.ALL_ONE_POS],
        counts[NullClass.ALL_ONE_NEG],
        counts[NullClass.ALL_ZERO_POS],
        counts[NullClass.ALL_ZERO_NEG],
    )
    r1, r2 = table.row_margins
    if r1 == 0 or r2 == 0:
        raise GateInapplicableError(
            f"null-data gate needs rows in both the all-1 and all-0 groups, got {r1} and {r2}"
        )
    chisq = contingency_chisq(table)
    fisher = fisher_exact(table)
    passed = chisq.p_value < alpha
    return NullReport(counts, table, chisq, fisher, passed, None if passed else GATE_WARNING)


def _resolve(decisions: Sequence[SlotDecision]) -> OperatorAssignment | None:
    if any(d.choice is Choice.INCONCLUSIVE for d in decisions):
        return None
    return OperatorAssignment(tuple(d.choice.op for d in decisions))


def step2_model(
    dataset: Dataset,
    template: ModelTemplate,
    config: RunConfig = RunConfig(),
    null: NullReport | None = None,
) -> ModelReport:
    """Tally and decide operator tendencies for one template."""
    if null is not None and not null.gate_passed and not config.ignore_gate:
        raise GateNotPassedError(GATE_WARNING)
    exclude = not config.include_null_in_step2
    if config.mode == "exhaustive":
        tally = run_exhaustive(dataset, template, exclude_null=exclude)
    else:
        tally = run_sampled(
            dataset,
            template,
            config.trials_per_row,
            config.seed,
            exclude_null=exclude,
            workers=config.workers,
        )
    decisions = tuple(decide_operators(tally, config.alpha))
    return ModelReport(render_template(template), tally, decisions, _resolve(decisions))


def step3_contingency(
    dataset: Dataset, template: ModelTemplate, assignment: OperatorAssignment
) -> FinalReport:
    """Apply the chosen operators to every row, null rows included, and test f against the outcome."""
    bits = [np.array(op == 1) for op in assignment.ops]
    columns = {v: dataset.column(v).astype(bool) for v in template.variables}
    f = np.broadcast_to(evaluate_batch(template, columns, bits), (dataset.n,))
    y = dataset.column(template.target).astype(bool)
    table = Table2x2(
        int(np.sum(f & y)), int(np.sum(f & ~y)), int(np.sum(~f & y)), int(np.sum(~f & ~y))
    )
    return FinalReport(
        render_template(template),
        assignment,
        table,
        contingency_chisq(table),
        fisher_exact(table),
    )


def run_full(
    dataset: Dataset, templates: Sequence[ModelTemplate], config: RunConfig = RunConfig()
) -> AnalysisReport:
    """Run all three steps. A failing model records its error and the rest continue."""
    if not templates:
        raise ValueError("at least one model template is required")
    null = step1_null(dataset, config.alpha)
    summary = {"n": dataset.n, "columns": list(dataset.columns), "outcome": dataset.outcome}
    if not null.gate_passed and not config.ignore_gate:
        return AnalysisReport(config, summary, null, ())

    models = []
    for template in templates:
        text = render_template(template)
        try:
            report = step2_model(dataset, template, config, null)
        except BMCMError as exc:
            models.append(ModelReport(text, None, error=str(exc)))
            continue
        if report.resolved is not None:
            try:
                final = step3_contingency(dataset, template, report.resolved)
            except BMCMError as exc:
                report = ModelReport(
                    report.template, report.tally, report.decisions, report.resolved, error=str(exc)
                )
            else:
                report = ModelReport(
                    report.template, report.tally, report.decisions, report.resolved, final
                )
        models.append(report)
    return AnalysisReport(config, summary, null, tuple(models))


# --- plain-text rendering ----------------------------------------------------


def sci(x: float, log10: float | None = None) -> str:
    """Two significant digits in scientific notation, falling back to the log for underflow."""
    if x == 0 and log10 is not None and math.isfinite(log10):
        exp = math.floor(log10)
        mant = 10 ** (log10 - exp)
        if round(mant, 1) >= 10:
            mant, exp = mant / 10, exp + 1
        return f"{mant:.1f}e{exp:+03d}"
    return f"{x:.1e}"


def _test_text(label: str, t: TestResult) -> str:
    if t.dof == 0:
        return f"{label} p={sci(t.p_value, t.log10_p)}"
    return f"{label} chi2={sci(t.statistic)}, p={sci(t.p_value, t.log10_p)}"


def _table_text(t: Table2x2, row1: str, row2: str) -> list[str]:
    width = max(len(row1), len(row2))
    return [
        f"    {'':<{width}}  {'xO=1':>6} {'xO=0':>6}",
        f"    {row1:<{width}}  {t.a:>6} {t.b:>6}",
        f"    {row2:<{width}}  {t.c:>6} {t.d:>6}",
    ]


def render_text(report: AnalysisReport) -> str:
    cfg = report.config
    lines = [
        f"BMCM analysis  n={report.dataset['n']}  outcome={report.dataset['outcome']}",
        f"mode={cfg.mode}"
        + (f" trials/row={cfg.trials_per_row} seed={cfg.seed}" if cfg.mode == "sampled" else "")
        + f" alpha={cfg.alpha}",
        "",
        "Step 1: null data",
    ]
    null = report.null
    lines += _table_text(null.table, "all 1", "all 0")
    lines.append("  " + _test_text("corrected", null.chisq) + "; " + _test_text("Fisher", null.fisher))
    lines.append("  gate: " + ("passed" if null.gate_passed else "FAILED"))
    if null.warning:
        lines.append(f"  warning: {null.warning}")

    if report.models:
        lines += ["", "Step 2: operator tendencies"]
    for m in report.models:
        lines.append(f"  Model: {m.template}")
        if m.tally is None:
            lines.append(f"    error: {m.error}")
            continue
        for d, c in zip(m.decisions, m.tally.slots):
            lines.append(
                f"    slot {d.slot}: faithful and={c.faithful_and} or={c.faithful_or}"
                f" ({_test_text('', d.faithful_test).strip()})"
                f"; unfaithful and={c.unfaithful_and} or={c.unfaithful_or}"
                + (f" ({_test_text('', d.unfaithful_test).strip()})" if d.unfaithful_test else "")
                + f" -> {d.choice.value}"
                + (" [corroborated]" if d.corroborated else "")
            )
        if m.resolved is None:
            lines.append("    unresolved")
        else:
            tmpl = m.template.split(" = ")[0]
            lines.append(f"    resolved: {_fill(tmpl, m.resolved)}")
        if m.error and m.tally is not None:
            lines.append(f"    error: {m.error}")

    finals = [m.final for m in report.models if m.final is not None]
    if finals:
        lines += ["", "Step 3: contingency tables"]
    for fr in finals:
        lines.append(f"  f = {_fill(fr.template.split(' = ')[0], fr.assignment)}")
        lines += _table_text(fr.table, "f=1", "f=0")
        lines.append("  " + _test_text("corrected", fr.chisq) + "; " + _test_text("Fisher", fr.fisher))
        if fr.sensitivity is not None and fr.specificity is not None:
            lines.append(f"  sensitivity={fr.sensitivity:.3f} specificity={fr.specificity:.3f}")
    if report.models:
        lines += ["", f"slot tests performed: {report.tests_performed} (no multiplicity correction)"]
    return "\n".join(lines) + "\n"


def _fill(body: str, assignment: OperatorAssignment) -> str:
    return re.sub(r"\?(\d+)", lambda m: str(assignment.ops[int(m.group(1)) - 1]), body)

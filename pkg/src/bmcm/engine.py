"""Operator-tendency trials: evaluate, classify, tally, decide.

A *trial* instantiates every slot of a template with an operator, evaluates the
resulting Boolean function on one observation and classifies the trial as
faithful (function value equals the outcome) or unfaithful.  Each trial adds
one count per slot to the (class, operator) cell of that slot.

Two trial schemes are offered.  ``run_exhaustive`` visits every one of the
``2**k`` assignments once per row, which makes the tally deterministic.
``run_sampled`` draws a fixed number of random assignments per row from
counter-based streams keyed by (seed, row index, trial index), so results do
not depend on how the rows are split across worker threads.
"""

from __future__ import annotations

import enum
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import rng
from .data import Dataset, null_mask
from .errors import UndecidableSlotError, UnknownColumnError
from .expr import ModelTemplate, Op, assignment_bits, evaluate_batch
from .stats import TestResult, binomial_chisq

__all__ = [
    "TrialClass",
    "SlotCounts",
    "SlotTally",
    "SlotDecision",
    "Choice",
    "classify_trial",
    "run_exhaustive",
    "run_sampled",
    "decide_operators",
]

_SAMPLE_TAG = 0x53414D50
# upper bound on rows x trials evaluated in one vectorized block
_BLOCK_CELLS = 1 << 20


class TrialClass(enum.Enum):
    FAITHFUL = "faithful"
    UNFAITHFUL = "unfaithful"


def classify_trial(f_value: int, outcome: int) -> TrialClass:
    if f_value not in (0, 1) or outcome not in (0, 1):
        raise ValueError("f_value and outcome must be bits")
    return TrialClass.FAITHFUL if f_value == outcome else TrialClass.UNFAITHFUL


@dataclass(frozen=True)
class SlotCounts:
    faithful_and: int = 0
    faithful_or: int = 0
    unfaithful_and: int = 0
    unfaithful_or: int = 0

    @property
    def total(self) -> int:
        return self.faithful_and + self.faithful_or + self.unfaithful_and + self.unfaithful_or

    @property
    def faithful(self) -> int:
        return self.faithful_and + self.faithful_or

    @property
    def unfaithful(self) -> int:
        return self.unfaithful_and + self.unfaithful_or

    def __add__(self, other: "SlotCounts") -> "SlotCounts":
        return SlotCounts(
            self.faithful_and + other.faithful_and,
            self.faithful_or + other.faithful_or,
            self.unfaithful_and + other.unfaithful_and,
            self.unfaithful_or + other.unfaithful_or,
        )

    def to_dict(self) -> dict:
        return {
            "faithful_and": self.faithful_and,
            "faithful_or": self.faithful_or,
            "unfaithful_and": self.unfaithful_and,
            "unfaithful_or": self.unfaithful_or,
        }


@dataclass(frozen=True)
class SlotTally:
    """Per-slot counts; ``slots[i]`` belongs to slot id ``i + 1``.

    Tallies over disjoint row sets merge with ``+``, which is associative and
    commutative.
    """

    slots: tuple[SlotCounts, ...]
    total_trials: int

    @classmethod
    def empty(cls, slot_count: int) -> "SlotTally":
        return cls(tuple(SlotCounts() for _ in range(slot_count)), 0)

    @property
    def slot_count(self) -> int:
        return len(self.slots)

    def __getitem__(self, slot_id: int) -> SlotCounts:
        return self.slots[slot_id - 1]

    def __add__(self, other: "SlotTally") -> "SlotTally":
        if len(self.slots) != len(other.slots):
            raise ValueError("cannot merge tallies with different slot counts")
        return SlotTally(
            tuple(a + b for a, b in zip(self.slots, other.slots)),
            self.total_trials + other.total_trials,
        )

    def to_dict(self) -> dict:
        return {
            "total_trials": self.total_trials,
            "slots": [{"slot": i + 1, **c.to_dict()} for i, c in enumerate(self.slots)],
        }


def _tally_block(f: np.ndarray, outcome: np.ndarray, op_bits: Sequence[np.ndarray]) -> SlotTally:
    """Tally an evaluated block. ``f`` has shape (rows, trials)."""
    faithful = f == outcome[:, None].astype(bool)
    n_faithful = int(faithful.sum())
    total = f.size
    slots = []
    for bits in op_bits:
        is_or = np.broadcast_to(bits, f.shape)
        f_or = int(np.count_nonzero(faithful & is_or))
        all_or = int(np.count_nonzero(is_or))
        slots.append(
            SlotCounts(
                faithful_and=n_faithful - f_or,
                faithful_or=f_or,
                unfaithful_and=(total - all_or) - (n_faithful - f_or),
                unfaithful_or=all_or - f_or,
            )
        )
    return SlotTally(tuple(slots), total)


def _prepare(dataset: Dataset, template: ModelTemplate, exclude_null: bool):
    for name in (*template.variables, template.target):
        if name not in dataset.columns:
            raise UnknownColumnError(f"template column {name!r} not in dataset {list(dataset.columns)}")
    rows = np.arange(dataset.n)
    if exclude_null:
        rows = rows[~null_mask(dataset, template.variables)]
    columns = {v: dataset.column(v)[rows].astype(bool) for v in template.variables}
    outcome = dataset.column(template.target)[rows].astype(bool)
    return rows, columns, outcome


def run_exhaustive(dataset: Dataset, template: ModelTemplate, exclude_null: bool = True) -> SlotTally:
    """Tally every operator assignment against every retained row."""
    k = template.slot_count
    bits = assignment_bits(k)
    _, columns, outcome = _prepare(dataset, template, exclude_null)
    n_rows = len(outcome)
    if n_rows == 0:
        return SlotTally.empty(k)
    op_bits = [bits[s][None, :] for s in range(k)]
    step = max(1, _BLOCK_CELLS // bits.shape[1])
    tally = SlotTally.empty(k)
    for start in range(0, n_rows, step):
        sl = slice(start, start + step)
        cols = {v: c[sl, None] for v, c in columns.items()}
        f = evaluate_batch(template, cols, op_bits)
        f = np.broadcast_to(f, (len(outcome[sl]), bits.shape[1]))
        tally = tally + _tally_block(f, outcome[sl], op_bits)
    return tally


def sampled_op_bits(seed: int, row_ids: np.ndarray, trials: np.ndarray, slot_count: int) -> list[np.ndarray]:
    """Random operator bits of shape (rows, trials), one array per slot (True = OR).

    Slot ``s`` (0-based) of trial ``t`` for row ``r`` is bit ``63 - s % 64`` of
    word ``t * W + s // 64`` in the stream ``derive_key(seed, SAMPLE_TAG, r)``,
    where ``W = ceil(slot_count / 64)``.
    """
    if slot_count == 0:
        return []
    n_words = -(-slot_count // 64)
    keys = rng.derive_keys(seed, (_SAMPLE_TAG,), row_ids.astype(np.uint64))[:, None]
    out = []
    for w in range(n_words):
        counters = trials.astype(np.uint64)[None, :] * np.uint64(n_words) + np.uint64(w)
        words = rng.words(keys, counters)
        for b in range(min(64, slot_count - 64 * w)):
            out.append(((words >> np.uint64(63 - b)) & np.uint64(1)).astype(bool))
    return out


def run_sampled(
    dataset: Dataset,
    template: ModelTemplate,
    trials_per_row: int,
    seed: int,
    exclude_null: bool = True,
    workers: int = 1,
) -> SlotTally:
    """Tally ``trials_per_row`` random assignments per retained row.

    Rows keep their original dataset index as stream id, so excluding null rows
    never shifts the randomness of the remaining ones.
    """
    if trials_per_row < 1:
        raise ValueError("trials_per_row must be at least 1")
    k = template.slot_count
    row_ids, columns, outcome = _prepare(dataset, template, exclude_null)
    if len(row_ids) == 0:
        return SlotTally.empty(k)

    trial_step = min(trials_per_row, _BLOCK_CELLS)
    row_step = max(1, _BLOCK_CELLS // trial_step)
    blocks = [
        (r0, t0)
        for r0 in range(0, len(row_ids), row_step)
        for t0 in range(0, trials_per_row, trial_step)
    ]

    def work(block: tuple[int, int]) -> SlotTally:
        r0, t0 = block
        sl = slice(r0, r0 + row_step)
        trials = np.arange(t0, min(t0 + trial_step, trials_per_row))
        op_bits = sampled_op_bits(seed, row_ids[sl], trials, k)
        cols = {v: c[sl, None] for v, c in columns.items()}
        f = evaluate_batch(template, cols, op_bits)
        f = np.broadcast_to(f, (len(outcome[sl]), len(trials)))
        return _tally_block(f, outcome[sl], op_bits)

    tally = SlotTally.empty(k)
    if workers <= 1:
        for b in blocks:
            tally = tally + work(b)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            for part in pool.map(work, blocks):
                tally = tally + part
    return tally


class Choice(enum.Enum):
    AND = "and"
    OR = "or"
    INCONCLUSIVE = "inconclusive"

    @property
    def op(self) -> Op | None:
        return {Choice.AND: Op.AND, Choice.OR: Op.OR}.get(self)


@dataclass(frozen=True)
class SlotDecision:
    slot: int
    choice: Choice
    faithful_test: TestResult
    unfaithful_test: TestResult | None
    corroborated: bool

    def to_dict(self) -> dict:
        return {
            "slot": self.slot,
            "choice": self.choice.value,
            "faithful_test": self.faithful_test.to_dict(),
            "unfaithful_test": None if self.unfaithful_test is None else self.unfaithful_test.to_dict(),
            "corroborated": self.corroborated,
        }


def _majority(n_and: int, n_or: int) -> Choice:
    if n_and > n_or:
        return Choice.AND
    if n_or > n_and:
        return Choice.OR
    return Choice.INCONCLUSIVE


def decide_operators(tally: SlotTally, alpha: float = 0.05) -> list[SlotDecision]:
    """Pick the majority faithful operator of each slot when its binomial test is significant.

    The unfaithful counts only feed ``corroborated``: True when the unfaithful
    test is also significant and favours the opposite operator.
    """
    if not 0 < alpha < 1:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    decisions = []
    for slot_id, c in enumerate(tally.slots, start=1):
        if c.faithful == 0:
            raise UndecidableSlotError(f"slot {slot_id} has no faithful trials")
        ftest = binomial_chisq(c.faithful_and, c.faithful_or)
        choice = _majority(c.faithful_and, c.faithful_or)
        if ftest.p_value >= alpha:
            choice = Choice.INCONCLUSIVE
        utest = binomial_chisq(c.unfaithful_and, c.unfaithful_or) if c.unfaithful else None
        corroborated = False
        if choice is not Choice.INCONCLUSIVE and utest is not None and utest.p_value < alpha:
            opposite = Choice.OR if choice is Choice.AND else Choice.AND
            corroborated = _majority(c.unfaithful_and, c.unfaithful_or) is opposite
        decisions.append(SlotDecision(slot_id, choice, ftest, utest, corroborated))
    return decisions

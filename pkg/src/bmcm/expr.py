"""Model templates: operator-slot formulas over binary variables.

A template such as ``x1 ? x2 ? x3 = xO`` names explanatory variables joined by
operator slots and equates them to a target column.  Each slot is later filled
with ``and`` or ``or``.  In a flat run of operands ``and`` binds tighter than
``or`` (both left-associative); parentheses group sub-expressions explicitly.

Slot syntax is ``?`` (numbered left to right) or ``?N`` (explicit id).
"""

from __future__ import annotations

import enum
import itertools
import re
from dataclasses import dataclass
from typing import Iterator, Mapping, Sequence, Union

import numpy as np

from .errors import (
    CapacityError,
    EvaluationError,
    TemplateSyntaxError,
    UnsupportedArityError,
)

__all__ = [
    "Op",
    "Var",
    "Slot",
    "Group",
    "ModelTemplate",
    "OperatorAssignment",
    "parse_template",
    "render_template",
    "evaluate",
    "evaluate_batch",
    "enumerate_assignments",
    "assignment_bits",
    "enumerate_models",
    "MAX_ENUMERABLE_SLOTS",
]

MAX_ENUMERABLE_SLOTS = 20


class Op(enum.IntEnum):
    AND = 0
    OR = 1

    def __str__(self) -> str:
        return self.name.lower()


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Slot:
    id: int


@dataclass(frozen=True)
class Group:
    items: tuple["Item", ...]


Item = Union[Var, Slot, Group]


def _walk_vars(items: Sequence[Item]) -> Iterator[str]:
    for it in items:
        if isinstance(it, Var):
            yield it.name
        elif isinstance(it, Group):
            yield from _walk_vars(it.items)


def _walk_slots(items: Sequence[Item]) -> Iterator[int]:
    for it in items:
        if isinstance(it, Slot):
            yield it.id
        elif isinstance(it, Group):
            yield from _walk_slots(it.items)


def _check_sequence(items: Sequence[Item], top: bool) -> None:
    if not items:
        raise ValueError("empty operand sequence")
    if not top and len(items) < 3:
        raise ValueError("a group needs at least two operands")
    for i, it in enumerate(items):
        want_slot = i % 2 == 1
        if isinstance(it, Slot) != want_slot:
            raise ValueError("operands and slots must alternate")
        if isinstance(it, Group):
            _check_sequence(it.items, top=False)
    if isinstance(items[-1], Slot):
        raise ValueError("a sequence cannot end with a slot")


@dataclass(frozen=True)
class ModelTemplate:
    """Parsed template: alternating operands and slots, plus the target column."""

    items: tuple[Item, ...]
    target: str

    def __post_init__(self) -> None:
        try:
            _check_sequence(self.items, top=True)
        except ValueError as exc:
            raise ValueError(f"invalid template structure: {exc}") from None
        ids = sorted(_walk_slots(self.items))
        if ids != list(range(1, len(ids) + 1)):
            raise ValueError(f"slot ids must be exactly 1..{len(ids)}, got {ids}")
        for name in _walk_vars(self.items):
            if not name:
                raise ValueError("empty variable name")
            if name == self.target:
                raise ValueError(f"variable {name!r} is also the target")

    @property
    def slot_count(self) -> int:
        return sum(1 for _ in _walk_slots(self.items))

    @property
    def variables(self) -> tuple[str, ...]:
        """Distinct variable names in order of first appearance."""
        return tuple(dict.fromkeys(_walk_vars(self.items)))

    @property
    def slot_order(self) -> tuple[int, ...]:
        """Slot ids in textual (left-to-right) order."""
        return tuple(_walk_slots(self.items))

    def text(self) -> str:
        return render_template(self)

    def __str__(self) -> str:
        return render_template(self)


@dataclass(frozen=True)
class OperatorAssignment:
    """One operator per slot; ``ops[i]`` fills slot ``i + 1``."""

    ops: tuple[Op, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "ops", tuple(Op(o) for o in self.ops))

    @classmethod
    def of(cls, *ops: Op | int | str) -> "OperatorAssignment":
        out = []
        for o in ops:
            if isinstance(o, str):
                o = Op[o.upper()]
            out.append(Op(o))
        return cls(tuple(out))

    def __len__(self) -> int:
        return len(self.ops)

    def __str__(self) -> str:
        return "(" + ", ".join(str(o) for o in self.ops) + ")"


# --- parsing -----------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<ident>[A-Za-z_][A-Za-z0-9_]*)|(?P<slot>\?(?P<num>\d+)?)|(?P<punct>[()=]))"
)


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            bad = pos + len(text[pos:]) - len(text[pos:].lstrip())
            raise TemplateSyntaxError(f"unexpected character {text[bad]!r}", bad, text)
        start = m.end() - len(m.group(0).lstrip())
        if m.group("ident"):
            tokens.append(("ident", m.group("ident"), start))
        elif m.group("slot"):
            tokens.append(("slot", m.group("num") or "", start))
        else:
            tokens.append((m.group("punct"), m.group("punct"), start))
        pos = m.end()
    tokens.append(("eof", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0
        self.slot_seen = 0
        self.explicit: dict[int, int] = {}

    def peek(self) -> tuple[str, str, int]:
        return self.tokens[self.i]

    def take(self, kind: str) -> tuple[str, str, int]:
        tok = self.peek()
        if tok[0] != kind:
            raise self.error(f"expected {kind!r}, found {self.describe(tok)}", tok[2])
        self.i += 1
        return tok

    def error(self, msg: str, pos: int) -> TemplateSyntaxError:
        return TemplateSyntaxError(msg, pos, self.text)

    @staticmethod
    def describe(tok: tuple[str, str, int]) -> str:
        if tok[0] == "eof":
            return "end of input"
        if tok[0] == "slot":
            return "slot '?" + tok[1] + "'"
        return repr(tok[1])

    def operand(self) -> Item:
        kind, value, pos = self.peek()
        if kind == "ident":
            self.i += 1
            return Var(value)
        if kind == "(":
            self.i += 1
            if self.peek()[0] == ")":
                raise self.error("empty group", pos)
            items = self.sequence()
            self.take(")")
            # single-operand parentheses are redundant
            if len(items) == 1:
                return items[0]
            return Group(tuple(items))
        if kind == "slot":
            raise self.error("slot must follow an operand", pos)
        raise self.error(f"expected variable or '(', found {self.describe(self.peek())}", pos)

    def slot(self) -> Slot:
        _, num, pos = self.take("slot")
        self.slot_seen += 1
        sid = int(num) if num else self.slot_seen
        if sid < 1:
            raise self.error("slot ids start at 1", pos)
        if sid in self.explicit:
            raise self.error(f"duplicate slot id {sid}", pos)
        self.explicit[sid] = pos
        return Slot(sid)

    def sequence(self) -> list[Item]:
        items = [self.operand()]
        while self.peek()[0] == "slot":
            items.append(self.slot())
            if self.peek()[0] == "slot":
                raise self.error("adjacent slots", self.peek()[2])
            items.append(self.operand())
        return items

    def parse(self) -> ModelTemplate:
        items = self.sequence()
        self.take("=")
        _, target, tpos = self.take("ident")
        self.take("eof")
        ids = sorted(self.explicit)
        if ids != list(range(1, len(ids) + 1)):
            missing = sorted(set(range(1, len(ids) + 1)) - set(ids))
            raise self.error(f"slot ids must be 1..{len(ids)}; missing {missing}", len(self.text))
        if len(items) == 1 and isinstance(items[0], Group):
            items = list(items[0].items)
        names = list(_walk_vars(items))
        if target in names:
            raise self.error(f"target {target!r} also used as a variable", tpos)
        return ModelTemplate(tuple(items), target)


def parse_template(text: str) -> ModelTemplate:
    """Parse ``operand (slot operand)* = target`` into a :class:`ModelTemplate`.

    >>> parse_template("(x1 ? x2) ? x3 = xO").slot_count
    2
    """
    return _Parser(text).parse()


def _render_items(items: Sequence[Item]) -> str:
    parts = []
    for it in items:
        if isinstance(it, Var):
            parts.append(it.name)
        elif isinstance(it, Slot):
            parts.append(f"?{it.id}")
        else:
            parts.append("(" + _render_items(it.items) + ")")
    return " ".join(parts)


def render_template(template: ModelTemplate, assignment: OperatorAssignment | None = None) -> str:
    """Canonical text. With an assignment, slots are replaced by their operators."""
    body = _render_items(template.items)
    if assignment is not None:
        _check_assignment(template, assignment)
        body = re.sub(r"\?(\d+)", lambda m: str(assignment.ops[int(m.group(1)) - 1]), body)
    return f"{body} = {template.target}"


# --- evaluation --------------------------------------------------------------


def _check_assignment(template: ModelTemplate, assignment: OperatorAssignment) -> None:
    if len(assignment.ops) != template.slot_count:
        raise EvaluationError(
            f"assignment has {len(assignment.ops)} operators, template has {template.slot_count} slots"
        )


def _eval_items(items: Sequence[Item], ops: Sequence[Op], row: Mapping[str, int]) -> int:
    acc = 0
    term = None
    pending = None
    for it in items:
        if isinstance(it, Slot):
            pending = ops[it.id - 1]
            continue
        if isinstance(it, Var):
            try:
                v = row[it.name]
            except KeyError:
                raise EvaluationError(f"row has no value for {it.name!r}") from None
            v = 1 if v else 0
        else:
            v = _eval_items(it.items, ops, row)
        if term is None:
            term = v
        elif pending is Op.AND:
            term &= v
        else:
            acc |= term
            term = v
    return acc | term


def evaluate(template: ModelTemplate, assignment: OperatorAssignment, row: Mapping[str, int]) -> int:
    """Value of the instantiated Boolean function on one row (0 or 1)."""
    _check_assignment(template, assignment)
    return _eval_items(template.items, assignment.ops, row)


def _eval_batch(items, op_bits, columns):
    acc = None
    term = None
    pending = None
    for it in items:
        if isinstance(it, Slot):
            pending = op_bits[it.id - 1]
            continue
        if isinstance(it, Var):
            v = columns[it.name]
        else:
            v = _eval_batch(it.items, op_bits, columns)
        if term is None:
            term = v
            continue
        # pending is True where the operator is OR
        flushed = term & pending
        acc = flushed if acc is None else acc | flushed
        term = np.where(pending, v, term & v)
    return term if acc is None else acc | term


def evaluate_batch(
    template: ModelTemplate,
    columns: Mapping[str, np.ndarray],
    op_bits: Sequence[np.ndarray],
) -> np.ndarray:
    """Vectorized :func:`evaluate`.

    ``columns`` maps variable names to boolean arrays and ``op_bits[i]`` is a
    boolean array (True = OR) for slot ``i + 1``.  All arrays broadcast
    together; the result has the broadcast shape.
    """
    if len(op_bits) != template.slot_count:
        raise EvaluationError(
            f"got {len(op_bits)} operator arrays, template has {template.slot_count} slots"
        )
    missing = [v for v in template.variables if v not in columns]
    if missing:
        raise EvaluationError(f"missing columns {missing}")
    cols = {k: np.asarray(v, dtype=bool) for k, v in columns.items()}
    bits = [np.asarray(b, dtype=bool) for b in op_bits]
    return np.asarray(_eval_batch(template.items, bits, cols), dtype=bool)


# --- enumeration -------------------------------------------------------------


def enumerate_assignments(
    slot_count: int, limit: int = MAX_ENUMERABLE_SLOTS
) -> list[OperatorAssignment]:
    """All ``2**slot_count`` assignments in binary counting order (slot 1 most significant)."""
    if slot_count < 0:
        raise ValueError("slot_count must be non-negative")
    if slot_count > limit:
        raise CapacityError(f"{slot_count} slots exceeds the enumeration limit of {limit}")
    return [OperatorAssignment(ops) for ops in itertools.product((Op.AND, Op.OR), repeat=slot_count)]


def assignment_bits(slot_count: int, limit: int = MAX_ENUMERABLE_SLOTS) -> np.ndarray:
    """Boolean matrix of shape (slot_count, 2**slot_count) matching :func:`enumerate_assignments`."""
    if slot_count > limit:
        raise CapacityError(f"{slot_count} slots exceeds the enumeration limit of {limit}")
    codes = np.arange(2**slot_count, dtype=np.int64)
    shifts = np.arange(slot_count - 1, -1, -1, dtype=np.int64)
    return ((codes[None, :] >> shifts[:, None]) & 1).astype(bool)


_SHAPES = (
    "{0} ?1 {1} ?2 {2}",
    "{0} ?1 {2} ?2 {1}",
    "{1} ?1 {0} ?2 {2}",
    "({0} ?1 {1}) ?2 {2}",
    "({2} ?1 {0}) ?2 {1}",
    "({1} ?1 {2}) ?2 {0}",
)


def enumerate_models(variables: Sequence[str], target: str) -> list[ModelTemplate]:
    """The six three-variable shapes: three flat orderings, then three grouped ones."""
    if len(variables) != 3:
        raise UnsupportedArityError(
            f"model enumeration supports exactly 3 variables, got {len(variables)}"
        )
    return [parse_template(shape.format(*variables) + f" = {target}") for shape in _SHAPES]

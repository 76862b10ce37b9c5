"""Binary datasets: CSV ingestion, null-data classification, synthetic cohorts."""

from __future__ import annotations

import csv
import enum
import io
from dataclasses import dataclass
from pathlib import Path
from typing import BinaryIO, Iterable, Mapping, Sequence

import numpy as np

from . import rng
from .errors import DataFormatError, InvalidSizeError, UnknownColumnError

__all__ = [
    "Dataset",
    "NullClass",
    "load_csv",
    "read_csv",
    "write_csv",
    "classify_null",
    "null_classes",
    "generate_random",
    "generate_dependent",
]

# stream tags for the synthetic generators
_RANDOM_TAG = 0x52414E44
_DEPENDENT_TAG = 0x44455045


@dataclass(frozen=True, eq=False)
class Dataset:
    """Immutable rows x columns bit matrix with a designated outcome column."""

    columns: tuple[str, ...]
    outcome: str
    matrix: np.ndarray

    def __post_init__(self) -> None:
        cols = tuple(self.columns)
        object.__setattr__(self, "columns", cols)
        if len(set(cols)) != len(cols):
            raise DataFormatError("duplicate column names")
        if self.outcome not in cols:
            raise UnknownColumnError(f"outcome {self.outcome!r} is not a column; have {list(cols)}")
        m = np.array(self.matrix, dtype=np.uint8)
        if m.ndim != 2 or m.shape[1] != len(cols):
            raise DataFormatError(f"matrix shape {m.shape} does not match {len(cols)} columns")
        if m.shape[0] < 1:
            raise DataFormatError("dataset has no rows")
        if m.size and m.max() > 1:
            raise DataFormatError("matrix values must be 0 or 1")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    def __len__(self) -> int:
        return self.n

    @property
    def explanatory(self) -> tuple[str, ...]:
        return tuple(c for c in self.columns if c != self.outcome)

    def index(self, name: str) -> int:
        try:
            return self.columns.index(name)
        except ValueError:
            raise UnknownColumnError(f"unknown column {name!r}; have {list(self.columns)}") from None

    def column(self, name: str) -> np.ndarray:
        return self.matrix[:, self.index(name)]

    def row(self, i: int) -> dict[str, int]:
        return {c: int(v) for c, v in zip(self.columns, self.matrix[i])}

    @property
    def rows(self) -> list[dict[str, int]]:
        return [self.row(i) for i in range(self.n)]

    def with_outcome_flipped(self) -> "Dataset":
        m = self.matrix.copy()
        j = self.index(self.outcome)
        m[:, j] = 1 - m[:, j]
        return Dataset(self.columns, self.outcome, m)

    def subset(self, mask: np.ndarray) -> "Dataset":
        return Dataset(self.columns, self.outcome, self.matrix[np.asarray(mask, dtype=bool)])

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Dataset):
            return NotImplemented
        return (
            self.columns == other.columns
            and self.outcome == other.outcome
            and np.array_equal(self.matrix, other.matrix)
        )

    def __hash__(self) -> int:
        return hash((self.columns, self.outcome, self.matrix.tobytes()))


def load_csv(source: BinaryIO | bytes, outcome: str) -> Dataset:
    """Read a 0/1 CSV with a header row. Row numbers in errors are 1-based file lines."""
    raw = source if isinstance(source, bytes) else source.read()
    try:
        text = raw.decode("utf-8-sig")
    except UnicodeDecodeError as exc:
        raise DataFormatError(f"input is not UTF-8: {exc}") from None
    reader = csv.reader(io.StringIO(text, newline=""))
    header = None
    for header in reader:
        break
    if not header or all(not h.strip() for h in header):
        raise DataFormatError("missing header row")
    header = [h.strip() for h in header]
    if any(not h for h in header):
        raise DataFormatError("empty column name in header", row=1)
    dupes = sorted({h for h in header if header.count(h) > 1})
    if dupes:
        raise DataFormatError(f"duplicate column names {dupes}", row=1)
    if outcome not in header:
        raise UnknownColumnError(f"outcome {outcome!r} is not in header {header}")

    rows = []
    for lineno, record in enumerate(reader, start=2):
        if not record or (len(record) == 1 and not record[0].strip()):
            continue
        if len(record) != len(header):
            raise DataFormatError(
                f"expected {len(header)} fields, found {len(record)}", row=lineno
            )
        bits = []
        for name, cell in zip(header, record):
            cell = cell.strip()
            if cell not in ("0", "1"):
                raise DataFormatError(f"non-binary value {cell!r}", row=lineno, column=name)
            bits.append(cell == "1")
        rows.append(bits)
    if not rows:
        raise DataFormatError("no data rows")
    return Dataset(tuple(header), outcome, np.array(rows, dtype=np.uint8))


def read_csv(path: str | Path, outcome: str) -> Dataset:
    with open(path, "rb") as fh:
        return load_csv(fh, outcome)


def write_csv(dataset: Dataset, fh) -> None:
    """Write ``dataset`` as LF-terminated CSV to a text stream."""
    fh.write(",".join(dataset.columns) + "\n")
    for r in dataset.matrix:
        fh.write(",".join("1" if v else "0" for v in r) + "\n")


class NullClass(enum.Enum):
    ALL_ONE_POS = "all_one_pos"
    ALL_ZERO_NEG = "all_zero_neg"
    ALL_ONE_NEG = "all_one_neg"
    ALL_ZERO_POS = "all_zero_pos"
    NON_NULL = "non_null"

    @property
    def is_null(self) -> bool:
        return self is not NullClass.NON_NULL


def classify_null(row: Mapping[str, int], explanatory: Sequence[str], outcome: str) -> NullClass:
    try:
        bits = [1 if row[c] else 0 for c in explanatory]
        y = 1 if row[outcome] else 0
    except KeyError as exc:
        raise UnknownColumnError(f"row has no column {exc.args[0]!r}") from None
    if all(bits):
        return NullClass.ALL_ONE_POS if y else NullClass.ALL_ONE_NEG
    if not any(bits):
        return NullClass.ALL_ZERO_POS if y else NullClass.ALL_ZERO_NEG
    return NullClass.NON_NULL


def null_classes(dataset: Dataset, explanatory: Iterable[str] | None = None) -> list[NullClass]:
    """:func:`classify_null` for every row; explanatory defaults to all non-outcome columns."""
    names = list(dataset.explanatory if explanatory is None else explanatory)
    x = dataset.matrix[:, [dataset.index(c) for c in names]].astype(bool)
    y = dataset.column(dataset.outcome).astype(bool)
    ones = x.all(axis=1)
    zeros = ~x.any(axis=1)
    out = []
    for o, z, v in zip(ones, zeros, y):
        if o:
            out.append(NullClass.ALL_ONE_POS if v else NullClass.ALL_ONE_NEG)
        elif z:
            out.append(NullClass.ALL_ZERO_POS if v else NullClass.ALL_ZERO_NEG)
        else:
            out.append(NullClass.NON_NULL)
    return out


def null_mask(dataset: Dataset, explanatory: Iterable[str]) -> np.ndarray:
    """True for rows whose named explanatory bits are all equal."""
    x = dataset.matrix[:, [dataset.index(c) for c in explanatory]].astype(bool)
    return x.all(axis=1) | ~x.any(axis=1)


_COLUMNS = ("x1", "x2", "x3", "xO")


def generate_random(n: int, seed: int) -> Dataset:
    """Cohort where x1, x2, x3 and xO are all independent fair coins."""
    if n < 1:
        raise InvalidSizeError("n must be at least 1")
    key = rng.derive_key(seed, _RANDOM_TAG)
    bits = rng.coin_bits(key, n * len(_COLUMNS)).reshape(n, len(_COLUMNS))
    return Dataset(_COLUMNS, "xO", bits)


def generate_dependent(n: int, seed: int) -> Dataset:
    """Cohort where exactly half the rows have x1 = 1, xO copies x1, x2 and x3 are coins."""
    if n < 2 or n % 2:
        raise InvalidSizeError(f"n must be even and at least 2, got {n}")
    perm = rng.permutation(rng.derive_key(seed, _DEPENDENT_TAG, 0), n)
    x1 = np.zeros(n, dtype=np.uint8)
    x1[perm[: n // 2]] = 1
    noise = rng.coin_bits(rng.derive_key(seed, _DEPENDENT_TAG, 1), 2 * n).reshape(n, 2)
    m = np.column_stack([x1, noise[:, 0], noise[:, 1], x1])
    return Dataset(_COLUMNS, "xO", m)

import io
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bmcm import rng
from bmcm.data import (
    Dataset,
    NullClass,
    classify_null,
    generate_dependent,
    generate_random,
    load_csv,
    null_classes,
    write_csv,
)
from bmcm.errors import DataFormatError, InvalidSizeError, UnknownColumnError

EXPL = ["x1", "x2", "x3"]


class TestSplitMix:
    @staticmethod
    def reference(seed, count):
        # stateful form of the published algorithm
        state = seed
        out = []
        for _ in range(count):
            state = (state + 0x9E3779B97F4A7C15) % 2**64
            z = state
            z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) % 2**64
            z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) % 2**64
            out.append(z ^ (z >> 31))
        return out

    @pytest.mark.parametrize("seed", [0, 1234567, 2**64 - 1])
    def test_reference_sequence(self, seed):
        assert [rng.word(seed, i) for i in range(20)] == self.reference(seed, 20)

    def test_known_first_output(self):
        # widely published first output for seed 0
        assert rng.word(0, 0) == 0xE220A8397B1DCDAF

    def test_vectorized_matches_scalar(self):
        key = rng.derive_key(42, 7)
        vec = rng.words(key, np.arange(100, dtype=np.uint64))
        assert [int(v) for v in vec] == [rng.word(key, i) for i in range(100)]

    def test_derive_keys_matches_scalar(self):
        keys = rng.derive_keys(9, (3,), np.arange(5))
        assert [int(k) for k in keys] == [rng.derive_key(9, 3, j) for j in range(5)]

    def test_permutation_is_permutation(self):
        p = rng.permutation(rng.derive_key(1), 50)
        assert sorted(p) == list(range(50))
        assert p != list(range(50))


class TestLoadCsv:
    def test_minimal(self):
        ds = load_csv(io.BytesIO(b"x1,x2,x3,xO\n1,0,1,1\n"), "xO")
        assert ds.n == 1
        assert ds.row(0) == {"x1": 1, "x2": 0, "x3": 1, "xO": 1}
        assert ds.explanatory == ("x1", "x2", "x3")

    def test_crlf_and_bom(self):
        ds = load_csv(b"\xef\xbb\xbfa,y\r\n1,0\r\n0,1\r\n", "y")
        assert ds.columns == ("a", "y")
        assert ds.n == 2

    def test_non_binary_cell_located(self):
        with pytest.raises(DataFormatError) as err:
            load_csv(b"x1,x2,xO\n1,0,1\n0,2,1\n", "xO")
        assert err.value.row == 3 and err.value.column == "x2"

    def test_unknown_outcome(self):
        with pytest.raises(UnknownColumnError):
            load_csv(b"x1,x2,xO\n1,0,1\n", "y")

    def test_missing_header(self):
        with pytest.raises(DataFormatError):
            load_csv(b"", "xO")

    def test_ragged(self):
        with pytest.raises(DataFormatError) as err:
            load_csv(b"a,b,y\n1,0,1\n1,0\n", "y")
        assert err.value.row == 3

    def test_duplicate_header(self):
        with pytest.raises(DataFormatError):
            load_csv(b"a,a,y\n1,0,1\n", "y")

    def test_no_rows(self):
        with pytest.raises(DataFormatError):
            load_csv(b"a,y\n", "y")

    def test_round_trip(self):
        ds = generate_random(30, 4)
        buf = io.StringIO()
        write_csv(ds, buf)
        assert load_csv(buf.getvalue().encode(), "xO") == ds


class TestClassifyNull:
    @pytest.mark.parametrize(
        "bits, y, expected",
        [
            ((1, 1, 1), 1, NullClass.ALL_ONE_POS),
            ((0, 0, 0), 0, NullClass.ALL_ZERO_NEG),
            ((1, 1, 1), 0, NullClass.ALL_ONE_NEG),
            ((0, 0, 0), 1, NullClass.ALL_ZERO_POS),
            ((1, 0, 1), 0, NullClass.NON_NULL),
            ((1, 0, 1), 1, NullClass.NON_NULL),
        ],
    )
    def test_cases(self, bits, y, expected):
        row = dict(zip(EXPL, bits), xO=y)
        assert classify_null(row, EXPL, "xO") is expected

    def test_missing_column(self):
        with pytest.raises(UnknownColumnError):
            classify_null({"x1": 1}, EXPL, "xO")

    @settings(max_examples=200)
    @given(st.integers(1, 200), st.integers(0, 2**32))
    def test_partition(self, n, seed):
        ds = generate_random(n, seed)
        classes = null_classes(ds)
        assert len(classes) == n
        assert classes == [classify_null(ds.row(i), EXPL, "xO") for i in range(n)]


class TestGenerateRandom:
    def test_deterministic(self):
        assert generate_random(1000, 5) == generate_random(1000, 5)
        assert generate_random(1000, 5) != generate_random(1000, 6)

    @pytest.mark.parametrize("seed", range(10))
    def test_column_balance(self, seed):
        # 100 / sqrt(250) = 6.3 binomial standard deviations
        ds = generate_random(1000, seed)
        ones = ds.matrix.sum(axis=0)
        assert all(400 <= int(v) <= 600 for v in ones)

    def test_all_one_rows_near_expectation(self):
        # all-1 pattern has probability 1/8: 125 expected, sd sqrt(1000 * 1/8 * 7/8) = 10.5
        counts = []
        for seed in range(20):
            cls = null_classes(generate_random(1000, seed))
            counts.append(cls.count(NullClass.ALL_ONE_POS) + cls.count(NullClass.ALL_ONE_NEG))
        assert all(abs(c - 125) <= 4 * 10.5 for c in counts)
        assert abs(np.mean(counts) - 125) <= 4 * 10.5 / math.sqrt(20)

    def test_invalid(self):
        with pytest.raises(InvalidSizeError):
            generate_random(0, 1)


class TestGenerateDependent:
    @pytest.mark.parametrize("seed", range(5))
    def test_exact_half_and_copy(self, seed):
        ds = generate_dependent(1000, seed)
        assert int(ds.column("x1").sum()) == 500
        assert np.array_equal(ds.column("x1"), ds.column("xO"))

    def test_null_counts(self):
        # 500 rows with x1 = 1, of which 1/4 have x2 = x3 = 1: 125 expected, sd 9.7
        for seed in range(10):
            cls = null_classes(generate_dependent(1000, seed))
            assert abs(cls.count(NullClass.ALL_ONE_POS) - 125) <= 40
            assert abs(cls.count(NullClass.ALL_ZERO_NEG) - 125) <= 40
            assert cls.count(NullClass.ALL_ONE_NEG) == 0
            assert cls.count(NullClass.ALL_ZERO_POS) == 0

    def test_two_rows(self):
        ds = generate_dependent(2, 11)
        assert sorted(ds.column("x1").tolist()) == [0, 1]
        assert np.array_equal(ds.column("x1"), ds.column("xO"))

    def test_deterministic(self):
        assert generate_dependent(100, 3) == generate_dependent(100, 3)

    @pytest.mark.parametrize("n", [999, 1, 0])
    def test_invalid(self, n):
        with pytest.raises(InvalidSizeError):
            generate_dependent(n, 1)

    def test_flip(self):
        ds = generate_dependent(10, 0)
        flipped = ds.with_outcome_flipped()
        assert np.array_equal(flipped.column("xO"), 1 - ds.column("xO"))


def test_dataset_is_read_only():
    ds = generate_random(5, 0)
    with pytest.raises(ValueError):
        ds.matrix[0, 0] = 1

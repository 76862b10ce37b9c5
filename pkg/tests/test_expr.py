import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bmcm.errors import CapacityError, EvaluationError, TemplateSyntaxError, UnsupportedArityError
from bmcm.expr import (
    Group,
    Op,
    OperatorAssignment,
    Slot,
    Var,
    assignment_bits,
    enumerate_assignments,
    enumerate_models,
    evaluate,
    evaluate_batch,
    parse_template,
    render_template,
)

from oracles import naive_evaluate
from strategies import templates

A, O = Op.AND, Op.OR


def rows_for(template):
    names = template.variables
    for bits in itertools.product((0, 1), repeat=len(names)):
        yield dict(zip(names, bits))


class TestParse:
    def test_flat_three_variables(self):
        t = parse_template("x1 ? x2 ? x3 = xO")
        assert t.items == (Var("x1"), Slot(1), Var("x2"), Slot(2), Var("x3"))
        assert t.target == "xO"
        assert t.slot_count == 2

    def test_grouped(self):
        t = parse_template("(x1 ? x2) ? x3 = xO")
        assert t.items == (Group((Var("x1"), Slot(1), Var("x2"))), Slot(2), Var("x3"))

    def test_single_variable(self):
        t = parse_template("x1 = xO")
        assert t.items == (Var("x1"),)
        assert t.slot_count == 0

    def test_explicit_ids(self):
        t = parse_template("a ?2 b ?1 c = y")
        assert t.slot_order == (2, 1)

    def test_whitespace_insignificant(self):
        assert parse_template("(x1?x2)?x3=xO") == parse_template("  ( x1 ?  x2 ) ? x3 =  xO ")

    def test_redundant_parentheses_collapse(self):
        assert parse_template("((x1)) ? (x2 ? x3) = y") == parse_template("x1 ? (x2 ? x3) = y")
        assert parse_template("(x1 ? x2 ? x3) = y") == parse_template("x1 ? x2 ? x3 = y")

    @pytest.mark.parametrize(
        "text, pos",
        [
            ("x1 ? ? x2 = xO", 5),
            ("? x1 = y", 0),
            ("x1 ? = y", 5),
            ("x1 ? x2", 7),
            ("() ? x = y", 0),
            ("x1 ?1 x2 ?1 x3 = y", 9),
            ("x1 & x2 = y", 3),
            ("(x1 ? x2 = y", 9),
            ("x1 ? x2 = y extra", 12),
        ],
    )
    def test_syntax_errors_report_position(self, text, pos):
        with pytest.raises(TemplateSyntaxError) as err:
            parse_template(text)
        assert err.value.position == pos

    def test_missing_slot_id(self):
        with pytest.raises(TemplateSyntaxError, match="missing"):
            parse_template("a ?1 b ?3 c = y")

    def test_target_used_as_variable(self):
        with pytest.raises(TemplateSyntaxError):
            parse_template("y ? x = y")

    def test_render(self):
        assert render_template(parse_template("(x1 ? x2) ? x3 = xO")) == "(x1 ?1 x2) ?2 x3 = xO"
        t = parse_template("x1 ? x2 ? x3 = xO")
        assert render_template(t, OperatorAssignment.of("or", "and")) == "x1 or x2 and x3 = xO"


class TestEvaluate:
    def test_and_binds_tighter(self):
        t = parse_template("x1 ? x2 ? x3 = xO")
        assert evaluate(t, OperatorAssignment((O, A)), {"x1": 0, "x2": 1, "x3": 1}) == 1
        # left-to-right would give (0 or 1) and 0 = 0
        assert evaluate(t, OperatorAssignment((O, A)), {"x1": 1, "x2": 1, "x3": 0}) == 1

    def test_group_overrides_precedence(self):
        t = parse_template("(x1 ? x2) ? x3 = xO")
        assert evaluate(t, OperatorAssignment((O, A)), {"x1": 1, "x2": 0, "x3": 0}) == 0

    def test_explicit_slot_ids_route_operators(self):
        t = parse_template("a ?2 b ?1 c = y")
        row = {"a": 1, "b": 0, "c": 0}
        # slot 2 (between a and b) = or, slot 1 = and  ->  a or (b and c)
        assert evaluate(t, OperatorAssignment((A, O)), row) == 1
        assert evaluate(t, OperatorAssignment((O, A)), row) == 0

    def test_missing_variable(self):
        t = parse_template("x1 ? x2 = y")
        with pytest.raises(EvaluationError):
            evaluate(t, OperatorAssignment((A,)), {"x1": 1})

    def test_length_mismatch(self):
        t = parse_template("x1 ? x2 = y")
        with pytest.raises(EvaluationError):
            evaluate(t, OperatorAssignment((A, O)), {"x1": 1, "x2": 1})

    @pytest.mark.parametrize("model", enumerate_models(["x1", "x2", "x3"], "xO"), ids=str)
    def test_null_rows_are_trivial(self, model):
        zeros = {"x1": 0, "x2": 0, "x3": 0}
        ones = {"x1": 1, "x2": 1, "x3": 1}
        for a in enumerate_assignments(model.slot_count):
            assert evaluate(model, a, zeros) == 0
            assert evaluate(model, a, ones) == 1

    @settings(max_examples=300, deadline=None)
    @given(templates())
    def test_matches_naive_oracle_exhaustively(self, template):
        for a in enumerate_assignments(template.slot_count):
            for row in rows_for(template):
                assert evaluate(template, a, row) == naive_evaluate(template, a, row)

    @settings(max_examples=200, deadline=None)
    @given(templates())
    def test_batch_matches_scalar(self, template):
        rows = list(rows_for(template))
        cols = {v: np.array([r[v] for r in rows], dtype=bool)[:, None] for v in template.variables}
        bits = assignment_bits(template.slot_count)
        f = evaluate_batch(template, cols, [b[None, :] for b in bits])
        f = np.broadcast_to(f, (len(rows), bits.shape[1]))
        for j, a in enumerate(enumerate_assignments(template.slot_count)):
            for i, row in enumerate(rows):
                assert f[i, j] == evaluate(template, a, row)

    @settings(max_examples=300, deadline=None)
    @given(templates())
    def test_round_trip(self, template):
        assert parse_template(render_template(template)) == template

    @settings(max_examples=200, deadline=None)
    @given(templates(), st.data())
    def test_monotone_in_each_input(self, template, data):
        a = OperatorAssignment(
            tuple(data.draw(st.lists(st.sampled_from([A, O]), min_size=template.slot_count, max_size=template.slot_count)))
        )
        for row in rows_for(template):
            base = evaluate(template, a, row)
            for name in template.variables:
                if row[name] == 0:
                    assert evaluate(template, a, {**row, name: 1}) >= base


class TestEnumerate:
    def test_two_slots(self):
        assert [a.ops for a in enumerate_assignments(2)] == [(A, A), (A, O), (O, A), (O, O)]

    def test_zero_slots(self):
        assert [a.ops for a in enumerate_assignments(0)] == [()]

    def test_three_slots_distinct(self):
        out = enumerate_assignments(3)
        assert len(out) == 8 and len(set(out)) == 8

    def test_capacity(self):
        with pytest.raises(CapacityError):
            enumerate_assignments(21)
        assert len(enumerate_assignments(3, limit=3)) == 8
        with pytest.raises(CapacityError):
            enumerate_assignments(4, limit=3)

    def test_bits_match_assignments(self):
        bits = assignment_bits(3)
        for j, a in enumerate(enumerate_assignments(3)):
            assert tuple(int(b) for b in bits[:, j]) == tuple(int(o) for o in a.ops)

    def test_models(self):
        models = enumerate_models(["x1", "x2", "x3"], "xO")
        assert [str(m) for m in models] == [
            "x1 ?1 x2 ?2 x3 = xO",
            "x1 ?1 x3 ?2 x2 = xO",
            "x2 ?1 x1 ?2 x3 = xO",
            "(x1 ?1 x2) ?2 x3 = xO",
            "(x3 ?1 x1) ?2 x2 = xO",
            "(x2 ?1 x3) ?2 x1 = xO",
        ]

    def test_models_renamed(self):
        models = enumerate_models(["a", "b", "c"], "y")
        assert len(models) == 6
        assert all(set(m.variables) == {"a", "b", "c"} and m.target == "y" for m in models)

    def test_models_arity(self):
        with pytest.raises(UnsupportedArityError):
            enumerate_models(["x1", "x2"], "xO")

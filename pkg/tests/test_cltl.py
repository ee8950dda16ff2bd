import itertools

import pytest
from hypothesis import given, settings, strategies as st

from cltl_synth.cltl import (
    And, Atom, CltlSyntaxError, CountingProp, NegAtom, Next, Or, TRUE, Until,
    atoms_of, eval_counting_prop, eval_trace, parse,
)

AP = {"p1", "p2"}


def cp(p, m):
    return CountingProp(p, m)


class TestParse:
    def test_atom(self):
        assert parse("[p1, 2]", AP) == Atom(cp("p1", 2))

    def test_symbolic_thresholds_floor(self):
        f = parse("(! [p1, N/2]) U [p2, N/3]", AP, n_agents=4)
        assert f == Until(NegAtom(cp("p1", 2)), Atom(cp("p2", 1)))
        assert parse("[p1, N]", AP, 7) == Atom(cp("p1", 7))
        assert parse("[p1, N/3]", AP, 7) == Atom(cp("p1", 2))

    def test_eventually_is_true_until(self):
        assert parse("F [p1,1]", AP) == Until(TRUE, Atom(cp("p1", 1)))

    def test_precedence(self):
        f = parse("[p1,1] | [p2,1] & X [p1,2]", AP)
        assert isinstance(f, Or)
        assert f.children[1] == And((Atom(cp("p2", 1)), Next(Atom(cp("p1", 2)))))

    def test_until_right_associative(self):
        a, b, c = (Atom(cp("p1", k)) for k in (1, 2, 3))
        assert parse("[p1,1] U [p1,2] U [p1,3]", AP) == Until(a, Until(b, c))

    def test_negation_of_compound_rejected(self):
        with pytest.raises(CltlSyntaxError, match="negation"):
            parse("!([p1,1] & [p2,1])", AP)

    @pytest.mark.parametrize(
        "text",
        ["[p1 2]", "[p1, 2", "[p3, 1]", "[p1, N]", "[p1, 1] &", "", "[p1, N/0]", "X"],
    )
    def test_malformed(self, text):
        with pytest.raises(CltlSyntaxError):
            parse(text, AP)

    def test_error_position(self):
        with pytest.raises(CltlSyntaxError) as info:
            parse("[p1, 1] & [p9, 1]", AP)
        assert info.value.pos == 11

    def test_atoms_sorted_distinct(self):
        f = parse("[p2,1] U ([p1,2] & [p2,1])", AP)
        assert atoms_of(f) == (cp("p1", 2), cp("p2", 1))


class TestSemantics:
    def test_counting_prop_example(self):
        letter = [frozenset({"p1"}), frozenset({"p1", "p2"}), frozenset(), frozenset({"p1"})]
        assert eval_counting_prop(letter, cp("p1", 3))
        assert not eval_counting_prop(letter, cp("p1", 4))
        assert eval_counting_prop(letter, cp("p2", 0))

    def test_until_witness_index(self):
        f = parse("[p1,1] U [p2,1]", AP)
        a, b, none = [frozenset({"p1"})], [frozenset({"p2"})], [frozenset()]
        assert eval_trace([a, a, b], f) == 2
        assert eval_trace([a, none, b], f) is None
        assert eval_trace([a, a], f) is None  # unresolved at trace end

    def test_next_needs_successor(self):
        f = parse("X [p1,1]", AP)
        assert eval_trace([[frozenset({"p1"})]], f) is None
        assert eval_trace([[frozenset()], [frozenset({"p1"})]], f) == 1

    def test_threshold_zero_always_true(self):
        assert eval_trace([[frozenset()]], parse("[p1, 0]", AP)) == 0


letters = st.lists(st.frozensets(st.sampled_from(sorted(AP))), min_size=2, max_size=2)


@settings(max_examples=200, deadline=None)
@given(st.lists(letters, min_size=1, max_size=5), st.lists(letters, min_size=0, max_size=3))
def test_witness_is_prefix_determined(trace, suffix):
    f = parse("([p1,1] U [p2,2]) | X X [p1,2]", AP)
    t = eval_trace(trace, f)
    if t is not None:
        assert eval_trace(trace + suffix, f) == t
        assert eval_trace(trace[: t + 1], f) == t


def test_counting_monotone_in_threshold():
    for letter in itertools.product([frozenset(), frozenset({"p1"})], repeat=3):
        truths = [eval_counting_prop(letter, cp("p1", m)) for m in range(5)]
        assert truths == sorted(truths, reverse=True)

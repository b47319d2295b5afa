import math

import pytest

from ordguess import vocab
from ordguess.errors import ConfigError, EmptyFrontierError
from ordguess.search import (
    ROOT,
    Frontier,
    PackingLadder,
    SearchState,
    compare_states,
    expand,
    expand_packed,
)
from conftest import TableModel

A = vocab.VOCAB.encode_char("a")
B = vocab.VOCAB.encode_char("b")


def state(text="", log_prob=0.0, band=0, terminal=False):
    ids = tuple([vocab.START] + vocab.encode_chars(text))
    if terminal:
        ids += (vocab.END,)
    return SearchState(input=ids, deep=len(ids) - 1, log_prob=log_prob,
                       band=band, text=text)


class TestCompare:
    def test_prob_dominates(self):
        assert compare_states(state("a", -1.0), state("b", -2.0)) > 0

    def test_ordinary_outranks_packed(self):
        assert compare_states(state("a", -1.0, band=0), state("a", -1.0, band=1)) > 0

    def test_lower_band_first(self):
        assert compare_states(state("a", -1.0, band=1), state("a", -1.0, band=2)) > 0

    def test_final_tie_on_text(self):
        assert compare_states(state("aa", -1.0), state("ab", -1.0)) > 0
        assert compare_states(state("a", -1.0), state("a", -1.0)) == 0

    def test_terminal_before_internal_at_tie(self):
        assert compare_states(state("a", -1.0, terminal=True), state("a", -1.0)) > 0


class TestLadder:
    def test_geometric_default(self):
        lad = PackingLadder.geometric()
        assert lad.thresholds == pytest.approx((0.05, 0.005, 5e-4, 5e-5, 5e-6))
        assert lad.max_band == 5

    def test_validation(self):
        with pytest.raises(ConfigError):
            PackingLadder([])
        with pytest.raises(ConfigError):
            PackingLadder([0.5, 0.5])
        with pytest.raises(ConfigError):
            PackingLadder([0.1, 0.2])
        with pytest.raises(ConfigError):
            PackingLadder([1.0, 0.5])
        with pytest.raises(ConfigError):
            PackingLadder([0.5, 0.0])

    def test_band_bounds_partition(self):
        lad = PackingLadder([0.25, 0.05])
        assert lad.band_bounds(0) == (math.log(0.25), math.inf)
        assert lad.band_bounds(1) == (math.log(0.05), math.log(0.25))
        assert lad.band_bounds(2) == (float("-inf"), math.log(0.05))
        with pytest.raises(ConfigError):
            lad.band_bounds(3)


class TestFrontier:
    def test_push_pop_single(self):
        f = Frontier(10, max_depth=4)
        s = state("a", -1.0)
        f.push(s)
        assert len(f) == 1
        assert f.pop() is s
        assert len(f) == 0

    def test_same_depth_ordering(self):
        f = Frontier(10, max_depth=4)
        lo, hi = state("a", -2.0), state("b", -1.0)
        f.push(lo)
        f.push(hi)
        assert f.pop() is hi

    def test_multiple_depths(self):
        f = Frontier(10, max_depth=4)
        f.push(state("ab", -1.0))
        f.push(state("abc", -4.0))
        assert len(f) == 2

    def test_best_first_below_capacity(self):
        f = Frontier(10, max_depth=4)
        f.push(state("a", -1.0))
        f.push(state("abc", -4.0))
        assert f.pop().text == "a"

    def test_deepest_first_at_capacity(self):
        f = Frontier(2, max_depth=4)
        f.push(state("a", -1.0))
        f.push(state("abc", -4.0))  # size now == capacity
        assert f.pop().text == "abc"

    def test_pop_empty_raises(self):
        f = Frontier(2, max_depth=4)
        with pytest.raises(EmptyFrontierError):
            f.pop()

    def test_peak_tracking(self):
        f = Frontier(100, max_depth=4)
        for i, lp in enumerate([-1.0, -2.0, -3.0]):
            f.push(state("abc"[: i + 1], lp))
        f.pop()
        assert f.peak == 3

    def test_unbounded_capacity_stays_best_first(self):
        f = Frontier(None, max_depth=4)
        f.push(state("a", -1.0))
        f.push(state("abc", -0.5))
        f.push(state("ab", -2.0))
        assert [f.pop().text for _ in range(3)] == ["abc", "a", "ab"]

    def test_pop_many(self):
        f = Frontier(None, max_depth=4)
        for lp, text in [(-3.0, "abc"), (-1.0, "a"), (-2.0, "ab")]:
            f.push(state(text, lp))
        assert [s.text for s in f.pop_many(2)] == ["a", "ab"]
        assert [s.text for s in f.pop_many(5)] == ["abc"]


ROOT_DIST = {"": {"a": 0.5, "b": 0.3, "END": 0.2}}


class TestExpand:
    def test_packs_below_top_threshold(self):
        model = TableModel(ROOT_DIST)
        lad = PackingLadder([0.25, 0.05])
        children = expand(ROOT, model, lad, math.log(0.01), min_len=0, max_len=4)
        by_text = {(c.text, c.band, c.terminal): c for c in children}
        assert ("a", 0, False) in by_text
        assert ("b", 0, False) in by_text
        assert by_text[("a", 0, False)].log_prob == pytest.approx(math.log(0.5))
        # END at 0.2 < P_0: covered by a band-1 packed node carrying the parent state
        packed = [c for c in children if c.band == 1]
        assert len(packed) == 1
        assert packed[0].input == ROOT.input
        assert packed[0].log_prob == ROOT.log_prob
        assert packed[0].deep == ROOT.deep
        assert not any(c.terminal for c in children)

    def test_no_packed_node_when_nothing_below(self):
        model = TableModel({"": {"a": 1.0}})
        children = expand(ROOT, model, PackingLadder([0.25]), math.log(0.01), 0, 4)
        assert len(children) == 1 and children[0].band == 0 and children[0].text == "a"

    def test_path_pruning_discards_everything(self):
        model = TableModel({"x": {"a": 0.5, "b": 0.3, "END": 0.2}})
        parent = state("x", math.log(0.001))
        children = expand(parent, model, PackingLadder([0.25, 0.05]),
                          math.log(0.01), 0, 4)
        assert children == []

    def test_packed_expansion_materializes_band(self):
        model = TableModel(ROOT_DIST)
        lad = PackingLadder([0.25, 0.05])
        packed = state("", 0.0, band=1)
        children = expand_packed(packed, model, lad, math.log(0.01), min_len=0,
                                 max_len=4)
        # END (0.2) is the only symbol in [0.05, 0.25); it becomes a terminal
        assert len(children) == 1
        (term,) = children
        assert term.terminal and term.text == ""
        assert term.log_prob == pytest.approx(math.log(0.2))

    def test_packed_expansion_min_len_suppresses_empty(self):
        model = TableModel(ROOT_DIST)
        lad = PackingLadder([0.25, 0.05])
        packed = state("", 0.0, band=1)
        children = expand(packed, model, lad, math.log(0.01), min_len=1, max_len=4)
        assert children == []  # nothing below 0.05 either, so no band-2 node

    def test_single_threshold_last_band_unpacks_all(self):
        model = TableModel({"": {"a": 0.5, "b": 0.3, "c": 0.1, "END": 0.1}})
        lad = PackingLadder([0.25])
        packed = state("", 0.0, band=1)
        children = expand(packed, model, lad, math.log(0.01), min_len=0, max_len=4)
        texts = sorted(c.text for c in children)
        assert texts == ["", "c"]  # everything below P_0 in one step
        assert all(c.band == 0 for c in children)

    def test_packed_chain_band_increments(self):
        model = TableModel({"": {"a": 0.9, "b": 0.04, "c": 0.004, "END": 0.056}})
        lad = PackingLadder([0.25, 0.05, 0.005])
        c0 = expand(ROOT, model, lad, math.log(1e-6), 0, 4)
        packed1 = [c for c in c0 if c.band == 1]
        assert len(packed1) == 1
        c1 = expand(packed1[0], model, lad, math.log(1e-6), 0, 4)
        # band 1 covers [0.05, 0.25): only END at 0.056
        assert {c.text for c in c1 if c.terminal} == {""}
        packed2 = [c for c in c1 if c.band == 2]
        assert len(packed2) == 1
        c2 = expand(packed2[0], model, lad, math.log(1e-6), 0, 4)
        assert {c.text for c in c2 if c.band == 0} == {"b"}  # [0.005, 0.05)
        packed3 = [c for c in c2 if c.band == 3]
        assert len(packed3) == 1
        c3 = expand(packed3[0], model, lad, math.log(1e-6), 0, 4)
        assert {c.text for c in c3} == {"c"}  # last band: everything below 0.005

    def test_no_packed_node_when_remainder_cannot_clear_p_min(self):
        model = TableModel(ROOT_DIST)
        lad = PackingLadder([0.25, 0.05])
        # parent path 0.04: a and b survive (0.02, 0.012 >= 0.01) but END would
        # only ever reach 0.04*0.2 = 0.008 < p_min, so no packed node appears
        parent = state("", math.log(0.04))
        children = expand(parent, model, lad, math.log(0.01), 0, 4)
        assert sorted(c.text for c in children) == ["a", "b"]
        assert [c.band for c in children] == [0, 0]

    def test_max_len_end_only(self):
        model = TableModel({"ab": {"a": 0.5, "b": 0.3, "END": 0.2}})
        parent = state("ab", math.log(0.25))
        children = expand(parent, model, PackingLadder([0.01]), math.log(1e-6),
                          min_len=0, max_len=2)
        assert len(children) == 1
        assert children[0].terminal and children[0].text == "ab"

    def test_packing_disabled_materializes_everything(self):
        model = TableModel(ROOT_DIST)
        children = expand(ROOT, model, None, math.log(0.01), min_len=0, max_len=4)
        assert sorted((c.text, c.terminal) for c in children) == [
            ("", True), ("a", False), ("b", False)]
        assert all(c.band == 0 for c in children)


    def test_expand_packed_rejects_ordinary_nodes(self):
        model = TableModel(ROOT_DIST)
        with pytest.raises(ValueError):
            expand_packed(ROOT, model, PackingLadder([0.25]), math.log(0.01), 0, 4)

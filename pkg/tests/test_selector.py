"""Tests for src/selector/selection.py."""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from src.inference.rng import RandomStream
from src.scene.model import Visibility
from src.selector.selection import (
    ConsistencyMatrix,
    SelectionResult,
    consistency_matrix,
    get_selector,
    select_baseline,
    select_enhanced,
)
from src.shadow.matching import modes_from_visibility, visibility_at
from tests.conftest import far_sat, make_epoch, street_epoch, street_sats

TRUTH = (25.0, -20.0)


@pytest.fixture
def two_mode_case(two_mode_scene, north_sat):
    """Epoch observed from behind the east building, with its modes."""
    sats = {
        "G01": north_sat,
        "G02": far_sat(90.0, 30.0),
        "G03": far_sat(230.0, 60.0),
        "G04": far_sat(300.0, 50.0),
    }
    vis = visibility_at(two_mode_scene, TRUTH, sats)
    assert vis["G01"] is Visibility.NLOS
    epoch = make_epoch(sats, (*TRUTH, 0.0))
    modes = modes_from_visibility(two_mode_scene, vis, sats)
    return two_mode_scene, epoch, modes


# ---------------------------------------------------------------------------
# Case logic
# ---------------------------------------------------------------------------


class TestSelectEnhanced:

    def test_case_1_single_consistent_model(self):
        matrix = ConsistencyMatrix(np.array([[0.3, 0.7], [0.45, 0.55]]))
        result = select_enhanced(matrix)
        assert result.chosen_mode_id == 1
        assert result.case_type == 1
        np.testing.assert_allclose(result.row_probs, [0.45, 0.55])

    def test_case_2_largest_self_probability(self):
        matrix = ConsistencyMatrix(np.array([[0.6, 0.2, 0.2], [0.5, 0.2, 0.3], [0.1, 0.2, 0.7]]))
        assert matrix.consistent_rows == [0, 2]
        result = select_enhanced(matrix)
        assert result.chosen_mode_id == 2
        assert result.case_type == 2
        np.testing.assert_allclose(result.row_probs, [0.6, 0.2, 0.7])

    def test_case_3_no_consistent_model(self):
        matrix = ConsistencyMatrix(np.array([[0.30, 0.40, 0.30], [0.45, 0.25, 0.30], [0.5, 0.3, 0.2]]))
        assert matrix.consistent_rows == []
        result = select_enhanced(matrix)
        assert result.chosen_mode_id == 0
        assert result.case_type == 3

    def test_case_2_tie_goes_to_lowest_id(self):
        matrix = ConsistencyMatrix(np.array([[0.5, 0.25, 0.25], [0.25, 0.5, 0.25], [0.2, 0.3, 0.5]]))
        result = select_enhanced(matrix)
        assert result.case_type == 2
        assert result.chosen_mode_id == 0

    def test_case_2_two_consistent_rows(self):
        result = select_enhanced(ConsistencyMatrix(np.array([[0.7, 0.3], [0.2, 0.8]])))
        assert (result.chosen_mode_id, result.case_type) == (1, 2)

    def test_case_1_second_row_defers_to_first(self):
        result = select_enhanced(ConsistencyMatrix(np.array([[0.55, 0.45], [0.60, 0.40]])))
        assert (result.chosen_mode_id, result.case_type) == (0, 1)
        np.testing.assert_allclose(result.row_probs, [0.55, 0.45])

    @settings(max_examples=100, deadline=None)
    @given(m=st.integers(2, 6), seed=st.integers(0, 2**32 - 1))
    def test_relabelling_modes_relabels_the_choice(self, m, seed):
        rng = np.random.default_rng(seed)
        probs = rng.dirichlet(np.ones(m), size=m) + 0.01
        probs /= probs.sum(axis=1, keepdims=True)
        perm = rng.permutation(m)
        relabelled = np.empty_like(probs)
        relabelled[np.ix_(perm, perm)] = probs

        before = select_enhanced(ConsistencyMatrix(probs))
        after = select_enhanced(ConsistencyMatrix(relabelled))
        assert after.case_type == before.case_type
        assert after.chosen_mode_id == perm[before.chosen_mode_id]

    def test_single_mode(self):
        result = select_enhanced(ConsistencyMatrix(np.array([[1.0]])))
        assert (result.chosen_mode_id, result.case_type) == (0, 1)


class TestConsistencyMatrix:

    def test_not_square(self):
        with pytest.raises(ValueError, match="square"):
            ConsistencyMatrix(np.array([[0.5, 0.5]]))

    def test_zero_entry(self):
        with pytest.raises(ValueError, match="positive"):
            ConsistencyMatrix(np.array([[1.0, 0.0], [0.5, 0.5]]))

    def test_row_sum(self):
        with pytest.raises(ValueError, match="sum to 1"):
            ConsistencyMatrix(np.array([[0.6, 0.6], [0.5, 0.5]]))

    def test_diagonal_is_a_copy(self):
        matrix = ConsistencyMatrix(np.array([[0.6, 0.4], [0.3, 0.7]]))
        diag = matrix.diagonal
        diag[0] = 0.0
        assert matrix.probs[0, 0] == 0.6


class TestSelectionResult:

    def test_case_must_match_method(self):
        with pytest.raises(ValueError, match="does not match"):
            SelectionResult("baseline_spc", 0, 1, np.array([1.0]))
        with pytest.raises(ValueError, match="does not match"):
            SelectionResult("enhanced_spc", 0, "baseline", np.array([1.0]))

    def test_to_dict(self):
        d = SelectionResult("enhanced_spc", 1, 2, np.array([0.25, 0.75])).to_dict()
        assert d == {
            "method": "enhanced_spc",
            "chosen_mode_id": 1,
            "case_type": 2,
            "row_probs": [0.25, 0.75],
        }


# ---------------------------------------------------------------------------
# End-to-end selectors
# ---------------------------------------------------------------------------


class TestSelectors:

    def test_consistency_matrix_shape(self, two_mode_case):
        scene, epoch, modes = two_mode_case
        matrix = consistency_matrix(scene, epoch, modes, RandomStream(5), k=200)
        m = len(modes)
        assert matrix.probs.shape == (m, m)
        np.testing.assert_allclose(matrix.probs.sum(axis=1), np.ones(m), atol=1e-12)
        assert len(matrix.estimates) == m
        assert all(len(row) == 4 for row in matrix.estimates)

    def test_consistency_matrix_reproducible(self, two_mode_case):
        scene, epoch, modes = two_mode_case
        a = consistency_matrix(scene, epoch, modes, RandomStream(5), k=200)
        b = consistency_matrix(scene, epoch, modes, RandomStream(5), k=200)
        np.testing.assert_array_equal(a.probs, b.probs)

    def test_baseline_is_a_posterior(self, two_mode_case):
        scene, epoch, modes = two_mode_case
        result = select_baseline(epoch, modes, RandomStream(1), scene.anchor, k=200)
        assert result.case_type == "baseline"
        assert abs(result.row_probs.sum() - 1.0) < 1e-12
        assert result.chosen_mode_id == int(np.argmax(result.row_probs))

    def test_registry_matches_direct_calls(self, two_mode_case):
        scene, epoch, modes = two_mode_case
        rng = RandomStream(8)
        via_registry = get_selector("spc")(scene, epoch, modes, rng, k=200)
        direct = select_baseline(epoch, modes, rng.spawn(0), scene.anchor, k=200)
        np.testing.assert_array_equal(via_registry.row_probs, direct.row_probs)
        enhanced = get_selector("enhanced")(scene, epoch, modes, rng, k=200)
        assert enhanced.method == "enhanced_spc"
        assert enhanced.case_type in (1, 2, 3)

    def test_enhanced_overturns_a_wrong_baseline(self, canyon_scene, street_modes):
        # G04's reflection delay makes the east mode look exactly right to
        # the uncorrected model; the truth is the west mode
        epoch = street_epoch(street_sats(), reflected=("G04",))
        rng = RandomStream(3)
        baseline = select_baseline(epoch, street_modes, rng.spawn(0), canyon_scene.anchor, k=400)
        assert baseline.chosen_mode_id == 1

        matrix = consistency_matrix(canyon_scene, epoch, street_modes, rng, k=400)
        delays = {e.sat_id: e.delay for e in matrix.estimates[0]}
        assert delays["G04"] == pytest.approx(8.944, abs=0.01)
        assert matrix.consistent_rows == [0]
        enhanced = select_enhanced(matrix)
        assert (enhanced.chosen_mode_id, enhanced.case_type) == (0, 1)

    def test_unknown_method(self):
        with pytest.raises(ValueError, match="Unknown selection method"):
            get_selector("oracle")

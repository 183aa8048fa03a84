"""Problem construction, exact lattice geometry, and estimator behavior."""

import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from lincom_ci import (
    InputError,
    ObservedCounts,
    build_problem,
    estimate_L,
    attainable_range_check,
    experiment,
    simplex_point,
    y_lattice,
)
from lincom_ci.model import (
    as_fraction,
    attainable_mask,
    check_counts,
    enumerate_outcomes,
    lattice_geometry,
    problem_from_json,
)

from conftest import random_small_problem


def scenario_c(n=5):
    return build_problem([experiment(n, (1, 0)), experiment(n, (-1, 0))])


class TestWeightParsing:
    def test_decimal_string_is_exact(self):
        assert as_fraction("0.28") == Fraction(28, 100)

    def test_float_goes_through_decimal_repr(self):
        assert as_fraction(0.1) == Fraction(1, 10)

    def test_fraction_string(self):
        assert as_fraction("1/3") == Fraction(1, 3)

    @pytest.mark.parametrize("bad", [float("inf"), float("nan"), "abc", None])
    def test_rejects_garbage(self, bad):
        with pytest.raises(InputError):
            as_fraction(bad)


class TestBuildProblem:
    def test_scenario_c_range(self):
        prob = scenario_c(5)
        assert (prob.L_min, prob.L_max) == (-1, 1)

    def test_single_binomial_range(self):
        prob = build_problem([experiment(10, (1, 0))])
        assert (prob.L_min, prob.L_max) == (0, 1)

    def test_scenario_d_range(self):
        prob = build_problem([experiment(10, (4, -2, -2)), experiment(10, (4, -1, -1, -2))])
        assert (prob.L_min, prob.L_max) == (-4, 8)

    def test_empty_list_rejected(self):
        with pytest.raises(InputError):
            build_problem([])

    def test_one_category_rejected(self):
        with pytest.raises(InputError):
            experiment(5, (1,))

    def test_zero_trials_rejected(self):
        with pytest.raises(InputError):
            experiment(0, (1, 0))


class TestYLattice:
    def test_scenario_c(self):
        lat = y_lattice(scenario_c(5))
        assert (lat.origin, lat.step, lat.count) == (-1, Fraction(1, 5), 11)

    def test_binomial_quarters(self):
        lat = y_lattice(build_problem([experiment(4, (1, 0))]))
        assert (lat.origin, lat.step, lat.count) == (0, Fraction(1, 4), 5)

    def test_scenario_a_against_enumeration(self):
        prob = build_problem(
            [experiment(5, (0, 1, 1)), experiment(5, (2, 0, 3)), experiment(5, (5, 3, 0))]
        )
        lat = y_lattice(prob)
        assert (lat.origin, lat.step, lat.count) == (0, Fraction(1, 5), 46)
        observed = {estimate_L(prob, x) for x in enumerate_outcomes(prob)}
        assert min(observed) == lat.origin
        assert max(observed) == lat.top
        for y in observed:
            assert lat.index_of(y) >= 0

    def test_grid_may_be_finer_than_attainable_set(self):
        # With weights (3, 1) over 2 trials only whole numbers occur, but the
        # shared-divisor grid has half-integer steps carrying zero mass.
        prob = build_problem([experiment(2, (3, 1))])
        lat = y_lattice(prob)
        assert (lat.origin, lat.step, lat.count) == (1, Fraction(1, 2), 5)
        mask = attainable_mask(prob)
        attained = {lat.value(i) for i in np.flatnonzero(mask)}
        assert attained == {1, 2, 3}

    def test_degenerate_all_zero_weights(self):
        prob = build_problem([experiment(3, (0, 0))])
        lat = y_lattice(prob)
        assert lat.count == 1 and lat.origin == 0

    def test_attainable_mask_matches_enumeration(self):
        rng = np.random.default_rng(4)
        for _ in range(5):
            prob = random_small_problem(rng)
            lat = y_lattice(prob)
            mask = attainable_mask(prob)
            attained = {estimate_L(prob, x) for x in enumerate_outcomes(prob)}
            from_mask = {lat.value(i) for i in np.flatnonzero(mask)}
            assert attained == from_mask


class TestEstimate:
    def test_scenario_c_example(self):
        prob = scenario_c(5)
        counts = ObservedCounts(blocks=((3, 2), (1, 4)))
        assert estimate_L(prob, counts) == Fraction(2, 5)

    def test_zero_weight_categories(self):
        prob = scenario_c(5)
        counts = ObservedCounts(blocks=((0, 5), (0, 5)))
        assert estimate_L(prob, counts) == 0

    def test_scenario_a_hand_value(self):
        prob = build_problem(
            [experiment(5, (0, 1, 1)), experiment(5, (2, 0, 3)), experiment(5, (5, 3, 0))]
        )
        counts = ObservedCounts(blocks=((0, 5, 0), (0, 5, 0), (0, 0, 5)))
        assert estimate_L(prob, counts) == 1

    def test_bad_block_sum_rejected(self):
        prob = scenario_c(5)
        with pytest.raises(InputError):
            check_counts(prob, ObservedCounts(blocks=((3, 3), (1, 4))))

    def test_every_outcome_lands_on_lattice(self):
        rng = np.random.default_rng(11)
        for _ in range(4):
            prob = random_small_problem(rng)
            lat = y_lattice(prob)
            for x in enumerate_outcomes(prob):
                lat.index_of(estimate_L(prob, x))  # raises if off-grid

    @given(st.permutations(range(3)))
    def test_permutation_invariance(self, order):
        specs = [
            experiment(5, (0, 1, 1)),
            experiment(4, (2, 0, 3)),
            experiment(3, (5, 3, 0)),
        ]
        blocks = ((2, 2, 1), (0, 4, 0), (1, 1, 1))
        base = estimate_L(build_problem(specs), ObservedCounts(blocks=blocks))
        permuted = estimate_L(
            build_problem([specs[i] for i in order]),
            ObservedCounts(blocks=tuple(blocks[i] for i in order)),
        )
        assert base == permuted


class TestRangeCheck:
    def test_inside(self):
        assert attainable_range_check(scenario_c(5), 0.0)

    def test_outside(self):
        assert not attainable_range_check(scenario_c(5), 1.2)

    def test_boundary_inclusive(self):
        prob = build_problem([experiment(10, (4, -2, -2)), experiment(10, (4, -1, -1, -2))])
        assert attainable_range_check(prob, -4)

    @given(st.lists(st.floats(0, 1), min_size=2, max_size=4))
    def test_all_simplex_targets_in_range(self, raw):
        prob = build_problem([experiment(6, tuple(range(len(raw))))])
        total = sum(raw)
        if total == 0:
            raw = [1.0] * len(raw)
            total = float(len(raw))
        p = simplex_point(prob, [np.array(raw) / total])
        L = p.dot_weights(prob)
        assert float(prob.L_min) - 1e-9 <= L <= float(prob.L_max) + 1e-9


class TestConfigSchema:
    def test_round_trip(self):
        text = '{"experiments": [{"n": 5, "weights": [1, 0]}, {"n": 5, "weights": ["-1", "0"]}], "alpha": 0.05}'
        prob, alpha = problem_from_json(text)
        assert alpha == 0.05
        assert (prob.L_min, prob.L_max) == (-1, 1)

    def test_missing_experiments(self):
        with pytest.raises(InputError, match="experiments"):
            problem_from_json('{"alpha": 0.05}')

    def test_bad_alpha(self):
        with pytest.raises(InputError, match="alpha"):
            problem_from_json('{"experiments": [{"n": 2, "weights": [1, 0]}], "alpha": 1.5}')

    def test_invalid_json(self):
        with pytest.raises(InputError, match="JSON"):
            problem_from_json("{not json")


class TestSimplexPoint:
    def test_renormalizes_rounding_noise(self):
        prob = scenario_c(5)
        p = simplex_point(prob, [(0.3, 0.7 + 1e-13), (0.5, 0.5)])
        assert math.isclose(p.blocks[0].sum(), 1.0, abs_tol=0)

    def test_rejects_negative(self):
        prob = scenario_c(5)
        with pytest.raises(InputError):
            simplex_point(prob, [(-0.1, 1.1), (0.5, 0.5)])

    def test_rejects_bad_sum(self):
        prob = scenario_c(5)
        with pytest.raises(InputError):
            simplex_point(prob, [(0.3, 0.3), (0.5, 0.5)])

    def test_rejects_wrong_block_count(self):
        prob = scenario_c(5)
        with pytest.raises(InputError):
            simplex_point(prob, [(0.5, 0.5)])

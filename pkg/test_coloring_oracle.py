#!/usr/bin/env python3
"""
🎨 Coloring oracle tests for BKS Collapse
Exactly-one-per-triple colorability in exhaustive and backtracking modes.
"""

import random

import pytest

from bks_collapse.errors import ColoringProblemError, ContradictoryPinError, ExhaustiveLimitError
from bks_collapse.services.coloring_oracle import (
    ColoringMode,
    ColoringProblem,
    check_coloring,
    check_consistency,
    iter_colorings,
    satisfies,
)

MODES = [ColoringMode.EXHAUSTIVE, ColoringMode.BACKTRACKING]

# each point on three of the seven lines, so the lines' sum 7 would be a multiple of 3
FANO = [(0, 1, 2), (0, 3, 4), (0, 5, 6), (1, 3, 5), (1, 4, 6), (2, 3, 6), (2, 4, 5)]


@pytest.mark.parametrize("mode", MODES)
def test_one_triple_is_colorable(mode):
    result = check_coloring(ColoringProblem(3, [(0, 1, 2)], mode))
    assert result.colorable
    assert result.verdict == "colorable"
    assert sum(result.witness) == 1


def test_one_triple_has_three_colorings():
    problem = ColoringProblem(3, [(0, 1, 2)], ColoringMode.EXHAUSTIVE)
    assert check_coloring(problem).stats.solutions == 3
    assert sorted(iter_colorings(problem)) == [[0, 0, 1], [0, 1, 0], [1, 0, 0]]


@pytest.mark.parametrize("mode", MODES)
def test_empty_problem_takes_the_all_zero_witness(mode):
    result = check_coloring(ColoringProblem(4, [], mode))
    assert result.colorable
    assert result.witness == [0, 0, 0, 0]


@pytest.mark.parametrize("mode", MODES)
def test_pins(mode):
    problem = ColoringProblem(3, [(0, 1, 2)], mode)
    pinned = check_consistency(problem, {0: 1})
    assert pinned.colorable and pinned.witness == [1, 0, 0]
    assert not check_consistency(problem, {0: 1, 1: 1}).colorable
    assert not check_consistency(problem, [(0, 0), (1, 0), (2, 0)]).colorable


def test_pinned_solutions_are_unique():
    problem = ColoringProblem(3, [(0, 1, 2)], ColoringMode.EXHAUSTIVE)
    assert check_consistency(problem, {0: 1}).stats.solutions == 1
    assert list(iter_colorings(problem, {0: 1})) == [[1, 0, 0]]


@pytest.mark.parametrize("mode", MODES)
def test_fano_plane_is_uncolorable(mode):
    result = check_coloring(ColoringProblem(7, FANO, mode))
    assert not result.colorable
    assert result.witness is None
    assert result.verdict == "uncolorable"


@pytest.mark.parametrize("mode", MODES)
def test_dropping_a_triple_keeps_witnesses_sound(mode):
    for skip in range(len(FANO)):
        reduced = [t for i, t in enumerate(FANO) if i != skip]
        result = check_coloring(ColoringProblem(7, reduced, mode))
        if result.colorable:
            assert satisfies(reduced, result.witness)


def test_modes_agree_on_random_instances():
    rng = random.Random(404)
    for _ in range(40):
        points = rng.randint(3, 20)
        triples = set()
        for _ in range(rng.randint(0, 15)):
            triples.add(tuple(sorted(rng.sample(range(points), 3))))
        triples = sorted(triples)
        exhaustive = check_coloring(ColoringProblem(points, triples, ColoringMode.EXHAUSTIVE))
        backtracking = check_coloring(ColoringProblem(points, triples, ColoringMode.BACKTRACKING))
        assert exhaustive.colorable == backtracking.colorable
        for result in (exhaustive, backtracking):
            if result.colorable:
                assert satisfies(triples, result.witness)
        assert (exhaustive.stats.solutions > 0) == exhaustive.colorable


def test_backtracking_is_deterministic():
    problem = ColoringProblem(7, FANO[:5], ColoringMode.BACKTRACKING)
    first, second = check_coloring(problem), check_coloring(problem)
    assert first.witness == second.witness
    assert first.stats.nodes == second.stats.nodes


def test_exhaustive_point_cap():
    problem = ColoringProblem(26, [(0, 1, 2)], ColoringMode.EXHAUSTIVE)
    with pytest.raises(ExhaustiveLimitError):
        check_coloring(problem)
    assert check_coloring(ColoringProblem(26, [(0, 1, 2)])).colorable
    with pytest.raises(ExhaustiveLimitError):
        check_coloring(ColoringProblem(5, [(0, 1, 2)], ColoringMode.EXHAUSTIVE), cap=4)


def test_problem_validation():
    with pytest.raises(ColoringProblemError, match="outside"):
        ColoringProblem(3, [(0, 1, 3)])
    with pytest.raises(ColoringProblemError, match="repeats"):
        ColoringProblem(3, [(0, 1, 1)])
    with pytest.raises(ColoringProblemError, match="duplicate"):
        ColoringProblem(3, [(0, 1, 2), (2, 1, 0)])
    with pytest.raises(ColoringProblemError, match="label"):
        ColoringProblem(3, [(0, 1, 2)], labels=["a"])
    with pytest.raises(ValueError):
        ColoringProblem(3, [], "greedy")


def test_pin_validation():
    problem = ColoringProblem(3, [(0, 1, 2)])
    with pytest.raises(ContradictoryPinError):
        check_consistency(problem, [(0, 1), (0, 0)])
    with pytest.raises(ColoringProblemError, match="out of range"):
        check_consistency(problem, {5: 1})
    with pytest.raises(ColoringProblemError, match="not 0 or 1"):
        check_consistency(problem, {0: 2})

"""
Tests the quality indicators against hand values and independent oracles.
"""
from itertools import combinations

import numpy as np
import pytest

from engine.errors import IndicatorError
from engine.indicators import (
    HV_REFERENCE,
    best,
    build_reference_front,
    epsilon,
    evaluate_all,
    gspread,
    hypervolume,
    igd_plus,
    normalize,
    ranking_table,
)
from engine.pareto import dominates


def inclusion_exclusion_volume(front, ref):
    """Exact volume of a union of boxes [p, ref] by inclusion-exclusion."""
    volume = 0.0
    for size in range(1, len(front) + 1):
        for subset in combinations(front, size):
            corner = np.max(subset, axis=0)
            volume += (-1) ** (size + 1) * np.prod(np.maximum(ref - corner, 0.0))
    return volume


def loop_igd_plus(front, reference):
    total = 0.0
    for z in reference:
        nearest = min(sum(max(a_k - z_k, 0.0) ** 2 for a_k, z_k in zip(a, z)) ** 0.5 for a in front)
        total += nearest ** 2
    return total ** 0.5 / len(reference)


def loop_epsilon(front, reference):
    return max(min(max(a_k - z_k for a_k, z_k in zip(a, z)) for a in front) for z in reference)


def direct_gspread(front, reference):
    m = len(reference[0])
    extremes = [min(reference, key=lambda z: z[k]) for k in range(m)]

    def dist(a, b):
        return sum((x - y) ** 2 for x, y in zip(a, b)) ** 0.5

    d_ext = sum(min(dist(e, a) for a in front) for e in extremes)
    nearest = [min(dist(a, b) for j, b in enumerate(front) if j != i) for i, a in enumerate(front)]
    mean = sum(nearest) / len(nearest)
    return (d_ext + sum(abs(d - mean) for d in nearest)) / (d_ext + len(front) * mean)


# Test hypervolume()
def test_hypervolume_single_box():
    assert hypervolume([(0.5, 0.5)], (1.0, 1.0)) == pytest.approx(0.25)
    assert hypervolume([(0.5, 0.5, 0.5)], (1.0, 1.0, 1.0)) == pytest.approx(0.125)


def test_hypervolume_two_boxes():
    assert hypervolume([(0.2, 0.6), (0.6, 0.2)], (1.0, 1.0)) == pytest.approx(0.48)


def test_hypervolume_empty_front():
    assert hypervolume([], (1.0, 1.0)) == 0.0


def test_hypervolume_ignores_dominated_and_duplicate_points():
    ref = np.ones(3)
    front = [(0.2, 0.5, 0.4), (0.2, 0.5, 0.4), (0.3, 0.6, 0.5)]
    assert hypervolume(front, ref) == pytest.approx(0.8 * 0.5 * 0.6)


def test_hypervolume_rejects_points_beyond_the_reference():
    with pytest.raises(IndicatorError):
        hypervolume([(0.5, 1.5)], (1.0, 1.0))


def test_hypervolume_matches_inclusion_exclusion():
    rng = np.random.default_rng(2)
    ref = np.full(4, HV_REFERENCE)
    for _ in range(50):
        front = rng.random((int(rng.integers(1, 7)), 4))
        assert hypervolume(front, ref) == pytest.approx(inclusion_exclusion_volume(front, ref), abs=1e-12)


@pytest.mark.slow
def test_hypervolume_matches_monte_carlo():
    rng = np.random.default_rng(3)
    ref = np.full(4, HV_REFERENCE)
    front = rng.random((5, 4))
    samples, hits = 10_000_000, 0
    for _ in range(10):
        points = rng.random((samples // 10, 4)) * HV_REFERENCE
        hits += int((points[:, None, :] >= front[None, :, :]).all(axis=-1).any(axis=1).sum())
    box = HV_REFERENCE ** 4
    p = hits / samples
    sigma = box * np.sqrt(p * (1 - p) / samples)
    assert abs(hypervolume(front, ref) - box * p) <= 3 * sigma


# Test igdPlus()
def test_igd_plus_examples():
    assert igd_plus([(0.3, 0.4)], [(0.0, 0.0)]) == pytest.approx(0.5)
    reference = [(0.0, 1.0), (1.0, 0.0)]
    assert igd_plus(reference, reference) == 0.0
    assert igd_plus([(-0.1, -0.1)], reference) == 0.0


def test_igd_plus_matches_loop_oracle():
    rng = np.random.default_rng(4)
    for _ in range(50):
        front, reference = rng.random((6, 4)), rng.random((5, 4))
        assert igd_plus(front, reference) == pytest.approx(loop_igd_plus(front, reference), abs=1e-12)


# Test epsilon()
def test_epsilon_examples():
    reference = np.array([(0.0, 1.0), (0.5, 0.5), (1.0, 0.0)])
    assert epsilon(reference, reference) == 0.0
    assert epsilon(reference + 0.1, reference) == pytest.approx(0.1)


def test_epsilon_matches_loop_oracle():
    rng = np.random.default_rng(5)
    for _ in range(50):
        front, reference = rng.random((2, 4)), rng.random((2, 4))
        assert epsilon(front, reference) == pytest.approx(loop_epsilon(front, reference), abs=1e-12)


# Test gspread()
def test_gspread_uniform_front_on_the_extremes():
    front = [(0.0, 1.0), (0.5, 0.5), (1.0, 0.0)]
    assert gspread(front, front) == pytest.approx(0.0, abs=1e-12)


def test_gspread_identical_points():
    assert gspread([(0.5, 0.5), (0.5, 0.5)], [(0.0, 1.0), (1.0, 0.0)]) == 1.0


def test_gspread_single_point():
    assert gspread([(0.5, 0.5)], [(0.0, 1.0), (1.0, 0.0)]) == 1.0


def test_gspread_matches_direct_formula():
    rng = np.random.default_rng(6)
    for _ in range(50):
        front, reference = rng.random((7, 4)), rng.random((5, 4))
        assert gspread(front, reference) == pytest.approx(direct_gspread(front, reference), abs=1e-9)


# Test buildReferenceFront()
def test_reference_front_of_one_front():
    front = [(0.0, 1.0), (1.0, 0.0)]
    assert sorted(map(tuple, build_reference_front([front]).tolist())) == front


def test_reference_front_keeps_the_dominating_front():
    good, bad = [(0.0, 0.5), (0.5, 0.0)], [(1.0, 1.5), (1.5, 1.0)]
    assert sorted(map(tuple, build_reference_front([bad, good]).tolist())) == good


def test_reference_front_matches_union_then_filter():
    rng = np.random.default_rng(7)
    for _ in range(200):
        points = rng.integers(0, 6, size=(int(rng.integers(1, 33)), 4)).astype(float)
        fronts = np.array_split(points, int(rng.integers(1, 5)))
        union = {tuple(p) for p in points.tolist()}
        expected = {p for p in union if not any(dominates(q, p) for q in union)}
        reference = build_reference_front(fronts).tolist()
        assert len(reference) == len(expected)
        assert set(map(tuple, reference)) == expected


def test_reference_front_rejects_mixed_arity():
    with pytest.raises(IndicatorError):
        build_reference_front([[(0.0, 1.0)], [(0.0, 1.0, 2.0)]])


def test_normalize_maps_flat_objectives_to_zero():
    reference = [(0.0, 3.0), (2.0, 3.0)]
    assert normalize([(1.0, 3.0)], reference).tolist() == [[0.5, 0.0]]


def test_evaluate_all_on_the_reference_itself():
    reference = [(0.0, 1.0, 0.5, 0.2), (1.0, 0.0, 0.2, 0.5)]
    values = evaluate_all(reference, reference)
    assert values["IGD+"] == 0.0
    assert values["EP"] == 0.0
    assert values["HV"] > 0.0


def test_ranking_table_orders_best_first():
    records = [
        {"brf": "yes", "maxeval": 72, "probpas": 95, "q_indicator": "HV", "value": 0.2},
        {"brf": "no", "maxeval": 72, "probpas": 95, "q_indicator": "HV", "value": 0.7},
        {"brf": "yes", "maxeval": 72, "probpas": 95, "q_indicator": "IGD+", "value": 0.4},
        {"brf": "no", "maxeval": 72, "probpas": 95, "q_indicator": "IGD+", "value": 0.1},
    ]
    table = ranking_table(records)
    assert table["value"].tolist() == [0.7, 0.2, 0.1, 0.4]
    assert best(table, n=1)["brf"].tolist() == ["no", "no"]

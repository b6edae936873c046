"""Pareto dominance, non-dominated sorting and crowding distance on all-minimize points."""
import numpy as np
from pymoo.operators.survival.rank_and_crowding.metrics import calc_crowding_distance
from pymoo.util.nds.non_dominated_sorting import NonDominatedSorting


def dominates(a, b):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return bool(np.all(a <= b) and np.any(a < b))


def _as_matrix(points):
    points = np.asarray(points, dtype=float)
    return points.reshape(len(points), -1) if points.size else np.zeros((len(points), 0))


def non_dominated_sort(points):
    """Fronts of point indices, best first; indices ascend within a front."""
    F = _as_matrix(points)
    if len(F) == 0:
        return []
    return [sorted(int(i) for i in front) for front in NonDominatedSorting().do(F)]


def non_dominated(points):
    """Indices of the first front."""
    fronts = non_dominated_sort(points)
    return fronts[0] if fronts else []


def crowding_distance(points):
    """Sum over objectives of the normalized gap between each point's neighbours.

    Boundary points are infinite; an objective with zero range adds nothing.
    """
    F = _as_matrix(points)
    if len(F) <= 2:
        return np.full(len(F), np.inf)
    # pymoo averages the per-objective gaps
    return calc_crowding_distance(F, filter_out_duplicates=False) * F.shape[1]


def unique_points(points):
    """Indices of the first occurrence of every distinct point."""
    seen, keep = set(), []
    for i, p in enumerate(points):
        key = tuple(float(v) for v in p)
        if key not in seen:
            seen.add(key)
            keep.append(i)
    return keep

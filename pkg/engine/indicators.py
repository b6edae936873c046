"""Quality indicators of computed Pareto fronts against a reference front.

All points are canonical (all-minimize) objective tuples. Indicators are
evaluated after min-max normalization over the reference front.
"""
import logging

import numpy as np
import pandas as pd
from pymoo.indicators.hv import HV
from scipy.spatial.distance import cdist

from engine.errors import IndicatorError
from engine.pareto import non_dominated, unique_points

logger = logging.getLogger(__name__)

INDICATORS = ("HV", "IGD+", "EP", "GSPREAD")
# HV is the only indicator where larger is better
HIGHER_IS_BETTER = {"HV": True, "IGD+": False, "EP": False, "GSPREAD": False}
HV_REFERENCE = 1.1
RANKING_COLUMNS = ["brf", "maxeval", "probpas", "q_indicator", "value"]


def _as_array(points):
    array = np.asarray(points, dtype=float)
    if array.size == 0:
        return array.reshape(0, 0)
    if array.ndim != 2:
        raise IndicatorError(f"expected a list of objective vectors, got shape {array.shape}")
    return array


def build_reference_front(fronts):
    """Non-dominated subset of the union of fronts, without duplicates."""
    arrays = [_as_array(f) for f in fronts]
    arrays = [a for a in arrays if a.size]
    if not arrays:
        return np.zeros((0, 0))
    arity = {a.shape[1] for a in arrays}
    if len(arity) != 1:
        raise IndicatorError(f"fronts have different objective counts: {sorted(arity)}")
    union = np.vstack(arrays)
    union = union[unique_points(union)]
    return union[non_dominated(union)]


def bounds(reference):
    reference = _as_array(reference)
    if reference.size == 0:
        raise IndicatorError("empty reference front")
    return reference.min(axis=0), reference.max(axis=0)


def normalize(points, reference):
    """Min-max scale by the reference front; objectives with no spread map to 0."""
    points = _as_array(points)
    if points.size == 0:
        return points
    low, high = bounds(reference)
    spread = high - low
    scaled = np.divide(points - low, spread, out=np.zeros_like(points), where=spread > 0)
    return scaled


def hypervolume(front, ref_point):
    front = _as_array(front)
    if front.size == 0:
        return 0.0
    ref_point = np.asarray(ref_point, dtype=float)
    if front.shape[1] != len(ref_point):
        raise IndicatorError("reference point arity does not match the front")
    outside = ~(front < ref_point).all(axis=1)
    if outside.any():
        raise IndicatorError(f"{int(outside.sum())} point(s) do not dominate the reference point")
    return float(HV(ref_point=ref_point)(front[unique_points(front)]))


def igd_plus(front, reference):
    front, reference = _as_array(front), _as_array(reference)
    if reference.size == 0:
        raise IndicatorError("empty reference front")
    if front.size == 0:
        raise IndicatorError("empty front")
    gaps = np.maximum(front[None, :, :] - reference[:, None, :], 0.0)
    distances = np.sqrt((gaps ** 2).sum(axis=-1)).min(axis=1)
    return float(np.sqrt((distances ** 2).sum()) / len(reference))


def epsilon(front, reference):
    """Additive epsilon: the smallest shift making the front weakly dominate every reference point."""
    front, reference = _as_array(front), _as_array(reference)
    if front.size == 0 or reference.size == 0:
        raise IndicatorError("epsilon needs non-empty fronts")
    shifts = (front[None, :, :] - reference[:, None, :]).max(axis=-1)
    return float(shifts.min(axis=1).max())


def gspread(front, reference):
    front, reference = _as_array(front), _as_array(reference)
    if len(front) < 2:
        return 1.0
    if reference.size == 0:
        raise IndicatorError("empty reference front")
    extremes = reference[reference.argmin(axis=0)]
    extreme_distance = cdist(extremes, front).min(axis=1).sum()
    pairwise = cdist(front, front)
    np.fill_diagonal(pairwise, np.inf)
    nearest = pairwise.min(axis=1)
    mean = nearest.mean()
    numerator = extreme_distance + np.abs(nearest - mean).sum()
    denominator = extreme_distance + len(front) * mean
    if denominator == 0:
        return 1.0
    return float(numerator / denominator)


def evaluate_all(front, reference):
    """Every indicator of one front, both normalized by the reference front."""
    front, reference = _as_array(front), _as_array(reference)
    if front.size == 0:
        raise IndicatorError("empty front")
    scaled = normalize(front, reference)
    scaled_reference = normalize(reference, reference)
    ref_point = np.full(scaled.shape[1], HV_REFERENCE)
    inside = (scaled < ref_point).all(axis=1)
    if not inside.all():
        logger.debug("%d point(s) beyond the hypervolume reference point", int((~inside).sum()))
    return {
        "HV": hypervolume(scaled[inside], ref_point),
        "IGD+": igd_plus(scaled, scaled_reference),
        "EP": epsilon(scaled, scaled_reference),
        "GSPREAD": gspread(scaled, scaled_reference),
    }


def ranking_table(records):
    """Indicator values sorted best-first within each indicator.

    records: iterable of mappings with keys brf, maxeval, probpas, q_indicator, value.
    """
    table = pd.DataFrame(list(records), columns=RANKING_COLUMNS)
    parts = []
    for name in INDICATORS:
        part = table[table["q_indicator"] == name]
        parts.append(part.sort_values("value", ascending=not HIGHER_IS_BETTER[name], kind="stable"))
    return pd.concat(parts, ignore_index=True)


def best(table, n=5):
    return table.groupby("q_indicator", sort=False).head(n).reset_index(drop=True)

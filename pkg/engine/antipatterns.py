"""Fuzzy detection of performance antipatterns.

Every detector evaluates a few numeric literals on each eligible target. A
literal's fuzzy value places it between the lowest and highest value seen on
the whole system; the occurrence probability is the minimum over literals.
A literal with no spread across the system does not discriminate and is
skipped. Rules:

  Blob                        component    messages exchanged, host utilization, demand share
  ConcurrentProcessingSystem  node pair    max utilization, utilization imbalance
  PipeAndFilter               operation    demand share within a scenario, host utilization
  ExtensiveProcessing         component    largest operation demand, response time share
  EmptySemiTruck              component pair  messages exchanged, inverse mean message size
  TowerOfBabel                component pair  traffic exchanged, distinct message sizes
"""
import logging
from dataclasses import dataclass, field
from itertools import combinations
from typing import Dict, Tuple

from engine.errors import AntipatternError
from engine.model import ACTOR

logger = logging.getLogger(__name__)

KINDS = ("Blob", "ConcurrentProcessingSystem", "PipeAndFilter",
         "ExtensiveProcessing", "EmptySemiTruck", "TowerOfBabel")


@dataclass(frozen=True)
class AntipatternOccurrence:
    kind: str
    target: str
    probability: float
    literals: Dict[str, Tuple[float, float, float]] = field(default_factory=dict, compare=False)

    def to_dict(self):
        return {
            "kind": self.kind,
            "target": self.target,
            "probability": self.probability,
            "literals": {name: {"value": v, "lb": lb, "ub": ub} for name, (v, lb, ub) in self.literals.items()},
        }


def fuzzy_value(literal, lb, ub):
    if lb > ub:
        raise AntipatternError(f"lower bound {lb} exceeds upper bound {ub}")
    if ub == lb:
        return 1.0
    return min(1.0, max(0.0, 1.0 - (ub - literal) / (ub - lb)))


def pair_id(a, b):
    return "|".join(sorted((a, b)))


def _primaries(model):
    return [c for c in model.components if not c.is_replica]


def _blob(model, indices):
    primaries = _primaries(model)
    messages = {c.id: 0.0 for c in primaries}
    work = {c.id: 0.0 for c in primaries}
    for s in model.scenarios:
        for m in s.messages:
            messages[m.callee] += m.repetitions
            if m.caller != ACTOR:
                messages[m.caller] += m.repetitions
            work[m.callee] += s.prob * m.repetitions * model.operation(m.operation).service_demand
    total = sum(work.values()) or 1.0
    return {
        c.id: {
            "messages": messages[c.id],
            "hostUtilization": indices.node_utilization[model.host(c.id)],
            "demandShare": work[c.id] / total,
        }
        for c in primaries
    }


def _concurrent_processing(model, indices):
    candidates = {}
    for a, b in combinations(sorted(n.id for n in model.nodes), 2):
        ua, ub = indices.node_utilization[a], indices.node_utilization[b]
        candidates[pair_id(a, b)] = {"maxUtilization": max(ua, ub), "imbalance": abs(ua - ub)}
    return candidates


def _pipe_and_filter(model, indices):
    shares = {}
    for s in model.scenarios:
        work = {}
        for m in s.messages:
            work[m.operation] = work.get(m.operation, 0.0) + m.repetitions * model.operation(m.operation).service_demand
        total = sum(work.values()) or 1.0
        for op, w in work.items():
            shares[op] = max(shares.get(op, 0.0), w / total)
    return {
        op: {"demandShare": share,
             "hostUtilization": indices.node_utilization[model.host(model.owner(op))]}
        for op, share in shares.items()
    }


def _extensive_processing(model, indices):
    candidates = {}
    for c in _primaries(model):
        if not c.operations:
            continue
        share = 0.0
        for s in model.scenarios:
            response = indices.scenario_response_time.get(s.id, 0.0)
            if response > 0:
                residence = sum(indices.component_residence.get(s.id, {}).get(t, 0.0)
                                for t in model.replica_group(c.id))
                share = max(share, residence / response)
        candidates[c.id] = {"maxDemand": max(op.service_demand for op in c.operations),
                            "responseShare": share}
    return candidates


def _exchanges(model):
    """Per communicating component pair: (repetitions, size) of every message between them."""
    pairs = {}
    for s in model.scenarios:
        for m in s.messages:
            if m.caller == ACTOR or m.caller == m.callee:
                continue
            pairs.setdefault(pair_id(m.caller, m.callee), []).append((m.repetitions, m.size))
    return pairs


def _empty_semi_truck(model, indices):
    candidates = {}
    for pair, exchanged in _exchanges(model).items():
        count = sum(rep for rep, _ in exchanged)
        mean_size = sum(rep * size for rep, size in exchanged) / count
        candidates[pair] = {"messages": float(count), "inverseMeanSize": 1.0 / (1.0 + mean_size)}
    return candidates


def _tower_of_babel(model, indices):
    candidates = {}
    for pair, exchanged in _exchanges(model).items():
        candidates[pair] = {"traffic": sum(rep * size for rep, size in exchanged),
                            "sizeClasses": float(len({size for _, size in exchanged}))}
    return candidates


DETECTORS = {
    "Blob": _blob,
    "ConcurrentProcessingSystem": _concurrent_processing,
    "PipeAndFilter": _pipe_and_filter,
    "ExtensiveProcessing": _extensive_processing,
    "EmptySemiTruck": _empty_semi_truck,
    "TowerOfBabel": _tower_of_babel,
}


def score(kind, candidates):
    """Occurrence candidates of one kind with their combined probability, unfiltered."""
    if not candidates:
        return []
    names = next(iter(candidates.values())).keys()
    bounds = {name: (min(c[name] for c in candidates.values()),
                     max(c[name] for c in candidates.values())) for name in names}
    scored = []
    for target in sorted(candidates):
        literals = {name: (candidates[target][name],) + bounds[name] for name in names}
        values = [fuzzy_value(v, lb, ub) for v, lb, ub in literals.values() if ub > lb]
        if not values:
            continue
        scored.append(AntipatternOccurrence(kind, target, min(values), literals))
    return scored


def detect(model, indices, fuzziness):
    if not 0.0 < fuzziness <= 1.0:
        raise AntipatternError(f"fuzziness must be in (0, 1], got {fuzziness}")
    occurrences = []
    for kind in KINDS:
        for occurrence in score(kind, DETECTORS[kind](model, indices)):
            if occurrence.probability >= fuzziness:
                occurrences.append(occurrence)
    logger.debug("%d antipattern occurrences at fuzziness %.2f", len(occurrences), fuzziness)
    return occurrences


def pas_objective(occurrences, count_mode=False):
    if count_mode:
        return float(len(occurrences))
    return float(sum(o.probability for o in occurrences))

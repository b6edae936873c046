"""
Shared pytest fixtures: the bundled case studies, synthetic models and a seeded generator.
"""
import json

import numpy as np
import pytest

from engine import fixtures
from engine.model import load_model


def model_from(document):
    """Load a model from a Python dict document."""
    return load_model(json.dumps(document))


def open_scenario(scenario_id, messages, prob=1.0, rate=1.0):
    return {
        "id": scenario_id,
        "prob": prob,
        "workload": {"type": "open", "arrivalRate": rate},
        "messages": [
            {"caller": c, "callee": e, "operation": op, "size": size, "repetitions": reps}
            for c, e, op, size, reps in messages
        ],
    }


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture
def ttbs():
    return fixtures.ttbs()


@pytest.fixture
def cocome():
    return fixtures.cocome()


@pytest.fixture
def single_station():
    return fixtures.single_station()


@pytest.fixture
def chain():
    return fixtures.chain()


@pytest.fixture
def three_stage_chain():
    return fixtures.chain(demands=(0.1, 0.1, 0.1))


@pytest.fixture
def star():
    return fixtures.star(leaves=3, hub_demand=0.2)


@pytest.fixture
def two_node_model():
    """A on n1 (theta 0.1), B on n1 and C on n2, joined by one link (psi 0.01).

    Scenario s1 invokes A twice; scenario s2 sends B -> C a message of size 3.
    """
    return model_from({
        "name": "two-node",
        "components": [
            {"id": "A", "failureProb": 0.1, "operations": [{"id": "a", "serviceDemand": 0.1}]},
            {"id": "B", "failureProb": 0.0, "operations": [{"id": "b", "serviceDemand": 0.1}]},
            {"id": "C", "failureProb": 0.0, "operations": [{"id": "c", "serviceDemand": 0.1}]},
        ],
        "nodes": [{"id": "n1"}, {"id": "n2"}],
        "links": [{"id": "l", "endpoints": ["n1", "n2"], "failureProb": 0.01}],
        "scenarios": [
            open_scenario("s1", [("actor", "A", "a", 0, 2)], prob=0.5),
            open_scenario("s2", [("actor", "B", "b", 0, 1), ("B", "C", "c", 3, 1)], prob=0.5),
        ],
        "deployment": {"A": "n1", "B": "n1", "C": "n2"},
    })


@pytest.fixture
def symmetric_model():
    """Two identical components on two identical nodes, each invoked once by the actor."""
    return model_from({
        "name": "symmetric",
        "components": [
            {"id": "A", "failureProb": 0.0, "operations": [{"id": "a", "serviceDemand": 0.1}]},
            {"id": "B", "failureProb": 0.0, "operations": [{"id": "b", "serviceDemand": 0.1}]},
        ],
        "nodes": [{"id": "nA"}, {"id": "nB"}],
        "links": [{"id": "l", "endpoints": ["nA", "nB"], "failureProb": 0.0}],
        "scenarios": [open_scenario("main", [("actor", "A", "a", 1, 1), ("actor", "B", "b", 1, 1)])],
        "deployment": {"A": "nA", "B": "nB"},
    })

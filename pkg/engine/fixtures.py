"""Bundled case-study models and small synthetic models.

Service demands, workloads and failure probabilities of the case studies are
synthetic: every loaded node sits between 30% and 80% utilization, CoCoME
starts near 0.75 reliability and a few components concentrate traffic.
"""
from functools import lru_cache
from pathlib import Path

import numpy as np

from engine.config import CASE_STUDIES
from engine.errors import ConfigError
from engine.model import (
    ACTOR,
    ArchModel,
    CommLink,
    Component,
    Message,
    Node,
    Operation,
    Scenario,
    Workload,
    load_model_file,
    validate,
)

DATA_DIR = Path(__file__).parent / "data"


@lru_cache(maxsize=None)
def load_case_study(name):
    if name not in CASE_STUDIES:
        raise ConfigError(f"unknown case study {name!r}; expected one of {CASE_STUDIES}")
    return load_model_file(DATA_DIR / f"{name}.json")


def ttbs():
    return load_case_study("ttbs")


def cocome():
    return load_case_study("cocome")


def single_station(demand=1.0, arrival_rate=0.5, servers=1):
    """One operation on one node under an open workload."""
    return validate(ArchModel(
        components=(Component("server", (Operation("serve", demand),), 0.0),),
        nodes=(Node("host", servers, 1.0),),
        links=(),
        scenarios=(Scenario("main", 1.0, Workload("open", arrival_rate=arrival_rate),
                            (Message(ACTOR, "server", "serve", 1.0, 1),)),),
        deployment={"server": "host"},
        name="single-station",
    ))


def chain(demands=(0.2, 0.3), arrival_rate=1.0, workload=None):
    """A call chain: stage k calls stage k+1 once, each stage on its own node."""
    components, nodes, links, messages, deployment = [], [], [], [], {}
    for k, demand in enumerate(demands):
        components.append(Component(f"stage{k}", (Operation(f"op{k}", demand),), 0.0))
        nodes.append(Node(f"node{k}", 1, 1.0))
        deployment[f"stage{k}"] = f"node{k}"
        messages.append(Message(ACTOR if k == 0 else f"stage{k - 1}", f"stage{k}", f"op{k}", 1.0, 1))
        if k > 0:
            links.append(CommLink(f"link{k}", (f"node{k - 1}", f"node{k}"), 0.0))
    workload = workload or Workload("open", arrival_rate=arrival_rate)
    return validate(ArchModel(tuple(components), tuple(nodes), tuple(links),
                              (Scenario("main", 1.0, workload, tuple(messages)),),
                              deployment, name="chain"))


def star(leaves=2, hub_demand=0.4, leaf_demand=0.1, arrival_rate=1.0):
    """A hub component on its own node called by the actor and by every leaf."""
    components = [Component("hub", tuple(Operation(f"hub_op{k}", hub_demand) for k in range(leaves)), 0.0)]
    nodes = [Node("hub-node", 1, 1.0)]
    links, messages, deployment = [], [], {"hub": "hub-node"}
    for k in range(leaves):
        components.append(Component(f"leaf{k}", (Operation(f"leaf_op{k}", leaf_demand),), 0.0))
        nodes.append(Node(f"leaf{k}-node", 1, 1.0))
        deployment[f"leaf{k}"] = f"leaf{k}-node"
        links.append(CommLink(f"link{k}", ("hub-node", f"leaf{k}-node"), 0.0))
        messages.append(Message(ACTOR, f"leaf{k}", f"leaf_op{k}", 1.0, 1))
        messages.append(Message(f"leaf{k}", "hub", f"hub_op{k}", 1.0, 1))
    return validate(ArchModel(tuple(components), tuple(nodes), tuple(links),
                              (Scenario("main", 1.0, Workload("open", arrival_rate=arrival_rate),
                                        tuple(messages)),),
                              deployment, name="star"))


def random_micro_model(rng, max_components=4, max_links=3, max_scenarios=3):
    """A small random valid model: up to four components on up to three nodes."""
    n_components = int(rng.integers(1, max_components + 1))
    n_nodes = int(rng.integers(1, min(3, n_components) + 1))
    nodes = tuple(Node(f"n{k}", 1, 1.0) for k in range(n_nodes))
    components = tuple(
        Component(f"c{k}", (Operation(f"op{k}", float(rng.uniform(0.01, 0.05))),),
                  float(rng.uniform(0.0, 0.2)))
        for k in range(n_components)
    )
    deployment = {c.id: f"n{int(rng.integers(n_nodes))}" for c in components}
    pairs = [(f"n{a}", f"n{b}") for a in range(n_nodes) for b in range(a + 1, n_nodes)]
    rng.shuffle(pairs)
    links = tuple(CommLink(f"l{k}", pair, float(rng.uniform(0.0, 0.1)))
                  for k, pair in enumerate(pairs[:max_links]))
    n_scenarios = int(rng.integers(1, max_scenarios + 1))
    weights = rng.dirichlet(np.ones(n_scenarios))
    weights = weights / weights.sum()
    scenarios = []
    for j in range(n_scenarios):
        callees = rng.choice(n_components, size=int(rng.integers(1, n_components + 1)), replace=False)
        messages = []
        caller = ACTOR
        for k in callees:
            messages.append(Message(caller, f"c{k}", f"op{k}", float(rng.integers(0, 4)),
                                    int(rng.integers(1, 3))))
            caller = f"c{k}"
        prob = float(weights[j]) if j < n_scenarios - 1 else max(0.0, float(1.0 - weights[:-1].sum()))
        scenarios.append(Scenario(f"s{j}", prob, Workload("open", arrival_rate=1.0), tuple(messages)))
    return validate(ArchModel(components, nodes, links, tuple(scenarios), deployment, name="micro"))

"""Three-view architecture model: static (components/operations), dynamic
(scenarios of messages) and platform (nodes, links, deployment).

Models are immutable once loaded. Every refactoring produces a new instance.
"""
import json
import logging
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Mapping, Optional, Tuple

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import shortest_path

from engine.errors import ModelParseError, ModelValidationError, UnknownElementError

logger = logging.getLogger(__name__)

# Reserved caller id for the external actor that triggers a scenario
ACTOR = "actor"
PROB_SUM_TOLERANCE = 1e-9


@dataclass(frozen=True)
class Operation:
    id: str
    service_demand: float


@dataclass(frozen=True)
class Component:
    id: str
    operations: Tuple[Operation, ...]
    failure_prob: float
    replica_of: Optional[str] = None

    @property
    def operation_ids(self):
        return tuple(op.id for op in self.operations)

    @property
    def is_replica(self):
        return self.replica_of is not None


@dataclass(frozen=True)
class Node:
    id: str
    multiplicity: int = 1
    speed_factor: float = 1.0


@dataclass(frozen=True)
class CommLink:
    id: str
    endpoints: Tuple[str, str]
    failure_prob: float

    def __post_init__(self):
        # endpoints are an unordered pair, stored sorted
        object.__setattr__(self, "endpoints", tuple(sorted(self.endpoints)))

    def other(self, node_id):
        a, b = self.endpoints
        return b if node_id == a else a


@dataclass(frozen=True)
class Workload:
    kind: str
    arrival_rate: Optional[float] = None
    population: Optional[int] = None
    think_time: Optional[float] = None

    @property
    def is_open(self):
        return self.kind == "open"


@dataclass(frozen=True)
class Message:
    caller: str
    callee: str
    operation: str
    size: float = 0.0
    repetitions: int = 1


@dataclass(frozen=True)
class Scenario:
    id: str
    prob: float
    workload: Workload
    messages: Tuple[Message, ...]


@dataclass(frozen=True)
class ArchModel:
    components: Tuple[Component, ...]
    nodes: Tuple[Node, ...]
    links: Tuple[CommLink, ...]
    scenarios: Tuple[Scenario, ...]
    deployment: Mapping[str, str]
    name: str = field(default="model", compare=False)

    # -- lookups -----------------------------------------------------------

    @cached_property
    def _components(self):
        return {c.id: c for c in self.components}

    @cached_property
    def _nodes(self):
        return {n.id: n for n in self.nodes}

    @cached_property
    def _links(self):
        return {link.id: link for link in self.links}

    @cached_property
    def _scenarios(self):
        return {s.id: s for s in self.scenarios}

    @cached_property
    def _owners(self):
        return {op.id: c.id for c in self.components for op in c.operations}

    @cached_property
    def _operations(self):
        return {op.id: op for c in self.components for op in c.operations}

    @cached_property
    def _pair_links(self):
        return {link.endpoints: link for link in self.links}

    @cached_property
    def _replica_groups(self):
        groups = {}
        for c in self.components:
            primary = c.replica_of or c.id
            groups.setdefault(primary, []).append(c.id)
        return {primary: tuple(ids) for primary, ids in groups.items()}

    def component(self, component_id):
        try:
            return self._components[component_id]
        except KeyError:
            raise UnknownElementError(f"unknown component '{component_id}'") from None

    def node(self, node_id):
        try:
            return self._nodes[node_id]
        except KeyError:
            raise UnknownElementError(f"unknown node '{node_id}'") from None

    def link(self, link_id):
        try:
            return self._links[link_id]
        except KeyError:
            raise UnknownElementError(f"unknown link '{link_id}'") from None

    def scenario(self, scenario_id):
        try:
            return self._scenarios[scenario_id]
        except KeyError:
            raise UnknownElementError(f"unknown scenario '{scenario_id}'") from None

    def operation(self, operation_id):
        try:
            return self._operations[operation_id]
        except KeyError:
            raise UnknownElementError(f"unknown operation '{operation_id}'") from None

    def owner(self, operation_id):
        try:
            return self._owners[operation_id]
        except KeyError:
            raise UnknownElementError(f"unknown operation '{operation_id}'") from None

    def host(self, component_id):
        try:
            return self.deployment[component_id]
        except KeyError:
            raise UnknownElementError(f"component '{component_id}' is not deployed") from None

    def has_component(self, component_id):
        return component_id in self._components

    def has_node(self, node_id):
        return node_id in self._nodes

    def has_operation(self, operation_id):
        return operation_id in self._operations

    def has_element(self, element_id):
        return (element_id in self._components or element_id in self._nodes
                or element_id in self._operations)

    def element_kind(self, element_id):
        if element_id in self._components:
            return "component"
        if element_id in self._nodes:
            return "node"
        if element_id in self._operations:
            return "operation"
        raise UnknownElementError(f"unknown element '{element_id}'")

    def components_on(self, node_id):
        return tuple(c.id for c in self.components if self.deployment.get(c.id) == node_id)

    def links_of(self, node_id):
        return tuple(link for link in self.links if node_id in link.endpoints)

    def link_between(self, a, b):
        return self._pair_links.get(tuple(sorted((a, b))))

    def primary_of(self, component_id):
        return self.component(component_id).replica_of or component_id

    def replica_group(self, component_id):
        """Primary first, then its replicas in declaration order."""
        return self._replica_groups[self.primary_of(component_id)]

    @property
    def element_ids(self):
        return (tuple(self._components) + tuple(self._nodes) + tuple(self._operations))

    # -- routing -----------------------------------------------------------

    @cached_property
    def _routing(self):
        index = {n.id: i for i, n in enumerate(self.nodes)}
        size = len(self.nodes)
        rows, cols = [], []
        for link in self.links:
            a, b = (index[e] for e in link.endpoints)
            rows += [a, b]
            cols += [b, a]
        graph = csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(size, size))
        _, predecessors = shortest_path(graph, directed=False, unweighted=True,
                                        return_predecessors=True)
        return index, predecessors

    def direct_route(self, source, target):
        """The link joining two nodes as a one-element tuple; empty when co-located or not adjacent."""
        link = self.link_between(source, target) if source != target else None
        return (link.id,) if link is not None else ()

    def route(self, source, target):
        """Link ids traversed between two nodes; empty when co-located or unreachable."""
        if source == target:
            return ()
        direct = self.link_between(source, target)
        if direct is not None:
            return (direct.id,)
        index, predecessors = self._routing
        nodes = [n.id for n in self.nodes]
        hops = []
        current = index[target]
        start = index[source]
        while current != start:
            previous = predecessors[start, current]
            if previous < 0:
                return ()
            hops.append(self.link_between(nodes[previous], nodes[current]).id)
            current = previous
        return tuple(reversed(hops))


# -- ingestion -----------------------------------------------------------------

def _field(obj, key, path, kinds, required=True, default=None):
    if not isinstance(obj, dict):
        raise ModelParseError("expected an object", field=path)
    if key not in obj:
        if required:
            raise ModelParseError("missing required field", field=f"{path}.{key}" if path else key)
        return default
    value = obj[key]
    if isinstance(value, bool) and bool not in kinds:
        raise ModelParseError(f"expected {'/'.join(k.__name__ for k in kinds)}, got boolean",
                              field=f"{path}.{key}" if path else key)
    if not isinstance(value, kinds):
        raise ModelParseError(
            f"expected {'/'.join(k.__name__ for k in kinds)}, got {type(value).__name__}",
            field=f"{path}.{key}" if path else key)
    return value


def _parse_workload(obj, path):
    kind = _field(obj, "type", path, (str,))
    if kind == "open":
        return Workload("open", arrival_rate=float(_field(obj, "arrivalRate", path, (int, float))))
    if kind == "closed":
        return Workload("closed",
                        population=_field(obj, "population", path, (int,)),
                        think_time=float(_field(obj, "thinkTime", path, (int, float))))
    raise ModelParseError(f"unknown workload type '{kind}'", field=f"{path}.type")


def _parse_document(data):
    if not isinstance(data, dict):
        raise ModelParseError("top-level value must be an object")
    components = []
    for i, raw in enumerate(_field(data, "components", "", (list,))):
        path = f"components[{i}]"
        operations = tuple(
            Operation(_field(op, "id", f"{path}.operations[{j}]", (str,)),
                      float(_field(op, "serviceDemand", f"{path}.operations[{j}]", (int, float))))
            for j, op in enumerate(_field(raw, "operations", path, (list,), required=False, default=[]))
        )
        components.append(Component(
            id=_field(raw, "id", path, (str,)),
            operations=operations,
            failure_prob=float(_field(raw, "failureProb", path, (int, float))),
            replica_of=_field(raw, "replicaOf", path, (str,), required=False),
        ))
    nodes = tuple(
        Node(_field(raw, "id", f"nodes[{i}]", (str,)),
             _field(raw, "multiplicity", f"nodes[{i}]", (int,), required=False, default=1),
             float(_field(raw, "speedFactor", f"nodes[{i}]", (int, float), required=False, default=1.0)))
        for i, raw in enumerate(_field(data, "nodes", "", (list,)))
    )
    links = []
    for i, raw in enumerate(_field(data, "links", "", (list,), required=False, default=[])):
        path = f"links[{i}]"
        endpoints = _field(raw, "endpoints", path, (list,))
        if len(endpoints) != 2 or not all(isinstance(e, str) for e in endpoints):
            raise ModelParseError("expected a pair of node ids", field=f"{path}.endpoints")
        links.append(CommLink(_field(raw, "id", path, (str,)), tuple(endpoints),
                              float(_field(raw, "failureProb", path, (int, float)))))
    scenarios = []
    for i, raw in enumerate(_field(data, "scenarios", "", (list,))):
        path = f"scenarios[{i}]"
        messages = tuple(
            Message(
                caller=_field(m, "caller", f"{path}.messages[{j}]", (str,)),
                callee=_field(m, "callee", f"{path}.messages[{j}]", (str,)),
                operation=_field(m, "operation", f"{path}.messages[{j}]", (str,)),
                size=float(_field(m, "size", f"{path}.messages[{j}]", (int, float), required=False, default=0.0)),
                repetitions=_field(m, "repetitions", f"{path}.messages[{j}]", (int,), required=False, default=1),
            )
            for j, m in enumerate(_field(raw, "messages", path, (list,)))
        )
        scenarios.append(Scenario(
            id=_field(raw, "id", path, (str,)),
            prob=float(_field(raw, "prob", path, (int, float))),
            workload=_parse_workload(_field(raw, "workload", path, (dict,)), f"{path}.workload"),
            messages=messages,
        ))
    deployment = _field(data, "deployment", "", (dict,))
    for component_id, node_id in deployment.items():
        if not isinstance(node_id, str):
            raise ModelParseError("expected a node id", field=f"deployment.{component_id}")
    return ArchModel(tuple(components), nodes, tuple(links), tuple(scenarios), dict(deployment),
                     name=data.get("name", "model") if isinstance(data.get("name"), str) else "model")


def load_model(text):
    """Parse and validate a JSON model document."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ModelParseError(e.msg, line=e.lineno, column=e.colno) from None
    model = _parse_document(data)
    validate(model)
    return model


def load_model_file(path):
    return load_model(Path(path).read_text(encoding="utf-8"))


def to_document(model):
    def workload(w):
        if w.is_open:
            return {"type": "open", "arrivalRate": w.arrival_rate}
        return {"type": "closed", "population": w.population, "thinkTime": w.think_time}

    components = []
    for c in model.components:
        entry = {
            "id": c.id,
            "failureProb": c.failure_prob,
            "operations": [{"id": op.id, "serviceDemand": op.service_demand} for op in c.operations],
        }
        if c.replica_of is not None:
            entry["replicaOf"] = c.replica_of
        components.append(entry)
    return {
        "name": model.name,
        "components": components,
        "nodes": [{"id": n.id, "multiplicity": n.multiplicity, "speedFactor": n.speed_factor}
                  for n in model.nodes],
        "links": [{"id": link.id, "endpoints": list(link.endpoints), "failureProb": link.failure_prob}
                  for link in model.links],
        "scenarios": [{
            "id": s.id,
            "prob": s.prob,
            "workload": workload(s.workload),
            "messages": [{"caller": m.caller, "callee": m.callee, "operation": m.operation,
                          "size": m.size, "repetitions": m.repetitions} for m in s.messages],
        } for s in model.scenarios],
        "deployment": dict(model.deployment),
    }


def render(model):
    """Canonical JSON text of a model; load_model(render(m)) == m."""
    return json.dumps(to_document(model), indent=2)


# -- validation ----------------------------------------------------------------

def _duplicates(ids):
    seen, dups = set(), []
    for i in ids:
        if i in seen and i not in dups:
            dups.append(i)
        seen.add(i)
    return dups


def validate(model):
    """Raise ModelValidationError listing every violated invariant."""
    violations = []
    component_ids = [c.id for c in model.components]
    node_ids = [n.id for n in model.nodes]
    operation_ids = [op.id for c in model.components for op in c.operations]

    for kind, ids in (("component", component_ids), ("node", node_ids),
                      ("operation", operation_ids), ("link", [l.id for l in model.links]),
                      ("scenario", [s.id for s in model.scenarios])):
        for dup in _duplicates(ids):
            violations.append(f"duplicate {kind} id '{dup}'")
    shared = (set(component_ids) & set(node_ids)) | (set(component_ids) & set(operation_ids)) \
        | (set(node_ids) & set(operation_ids))
    for element_id in sorted(shared):
        violations.append(f"element id '{element_id}' is used by more than one element kind")
    if ACTOR in component_ids:
        violations.append(f"'{ACTOR}' is reserved for the external actor")

    nodes = set(node_ids)
    components = {c.id: c for c in model.components}
    for c in model.components:
        if not 0.0 <= c.failure_prob <= 1.0:
            violations.append(f"component '{c.id}' failureProb {c.failure_prob} outside [0, 1]")
        for op in c.operations:
            if op.service_demand <= 0:
                violations.append(f"operation '{op.id}' serviceDemand must be > 0")
        if c.replica_of is not None:
            primary = components.get(c.replica_of)
            if primary is None:
                violations.append(f"component '{c.id}' replicates unknown component '{c.replica_of}'")
            elif primary.replica_of is not None:
                violations.append(f"component '{c.id}' replicates a replica ('{c.replica_of}')")
            if c.operations:
                violations.append(f"replica component '{c.id}' must not own operations")
        if c.id not in model.deployment:
            violations.append(f"component '{c.id}' is not deployed")
    for component_id, node_id in model.deployment.items():
        if component_id not in components:
            violations.append(f"deployment references unknown component '{component_id}'")
        if node_id not in nodes:
            violations.append(f"component '{component_id}' deployed on unknown node '{node_id}'")

    for n in model.nodes:
        if not isinstance(n.multiplicity, int) or n.multiplicity < 1:
            violations.append(f"node '{n.id}' multiplicity must be a positive integer")
        if n.speed_factor <= 0:
            violations.append(f"node '{n.id}' speedFactor must be > 0")

    pairs = set()
    for link in model.links:
        a, b = link.endpoints
        if a == b:
            violations.append(f"link '{link.id}' connects node '{a}' to itself")
        for e in link.endpoints:
            if e not in nodes:
                violations.append(f"link '{link.id}' references unknown node '{e}'")
        if link.endpoints in pairs:
            violations.append(f"more than one link between '{a}' and '{b}'")
        pairs.add(link.endpoints)
        if not 0.0 <= link.failure_prob <= 1.0:
            violations.append(f"link '{link.id}' failureProb {link.failure_prob} outside [0, 1]")

    owners = {op.id: c.id for c in model.components for op in c.operations}
    for s in model.scenarios:
        if not 0.0 <= s.prob <= 1.0:
            violations.append(f"scenario '{s.id}' prob {s.prob} outside [0, 1]")
        w = s.workload
        if w.is_open and not (w.arrival_rate or 0) > 0:
            violations.append(f"scenario '{s.id}' arrivalRate must be > 0")
        if not w.is_open and (not (w.population or 0) > 0 or not (w.think_time or 0) > 0):
            violations.append(f"scenario '{s.id}' population and thinkTime must be > 0")
        for j, m in enumerate(s.messages):
            where = f"scenario '{s.id}' message {j}"
            if m.caller != ACTOR and m.caller not in components:
                violations.append(f"{where}: unknown caller '{m.caller}'")
            if m.callee not in components:
                violations.append(f"{where}: unknown callee '{m.callee}'")
            elif components[m.callee].replica_of is not None:
                violations.append(f"{where}: callee '{m.callee}' is a replica")
            if owners.get(m.operation) != m.callee:
                violations.append(f"{where}: callee '{m.callee}' does not own operation '{m.operation}'")
            if m.size < 0:
                violations.append(f"{where}: size must be >= 0")
            if not isinstance(m.repetitions, int) or m.repetitions < 1:
                violations.append(f"{where}: repetitions must be a positive integer")
    total = sum(s.prob for s in model.scenarios)
    if model.scenarios and abs(total - 1.0) > PROB_SUM_TOLERANCE:
        violations.append(f"scenario probabilities sum to {total}, expected 1")
    if not model.scenarios:
        violations.append("model has no scenarios")

    if violations:
        raise ModelValidationError(violations)
    return model


def lint(model):
    """Non-fatal findings: communicating nodes without a link, idle nodes, unused operations."""
    warnings = []
    invoked = {m.operation for s in model.scenarios for m in s.messages}
    for c in model.components:
        for op in c.operations:
            if op.id not in invoked:
                warnings.append(f"operation '{op.id}' is never invoked")
    busy = {model.host(c) for s in model.scenarios for m in s.messages
            for c in model.replica_group(m.callee)}
    for n in model.nodes:
        if n.id not in busy:
            warnings.append(f"node '{n.id}' hosts no invoked operation")
    reported = set()
    for s in model.scenarios:
        for m in s.messages:
            if m.caller == ACTOR:
                continue
            u, v = model.host(m.caller), model.host(m.callee)
            if u != v and not model.direct_route(u, v) and (u, v) not in reported:
                reported.add((u, v))
                warnings.append(f"no link between '{u}' and '{v}' (scenario '{s.id}')")
    return warnings


# -- structural queries ----------------------------------------------------------

def call_parents(messages):
    """Index of the message each message is nested under, or None for top-level calls.

    A message sent by X runs inside the most recent preceding message whose
    callee is X. Actor messages are always top-level.
    """
    parents = []
    for k, m in enumerate(messages):
        parent = None
        if m.caller != ACTOR:
            for j in range(k - 1, -1, -1):
                if messages[j].callee == m.caller:
                    parent = j
                    break
        parents.append(parent)
    return parents


def invocation_count(model, scenario_id, component_id):
    scenario = model.scenario(scenario_id)
    model.component(component_id)
    return sum(m.repetitions for m in scenario.messages if m.callee == component_id)


def link_traffic(model, scenario_id, routed=False):
    """Total message size carried by every link in one scenario.

    A message counts on the link joining its caller's node to its callee's
    node. With routed=True, messages between non-adjacent nodes follow the
    shortest hop path instead of carrying nothing. Actor messages carry no
    link traffic.

    The message is split evenly over the caller replicas. A caller replica
    sharing a node with a callee replica stays local; any other caller
    replica splits its share evenly over the callee replicas.
    """
    scenario = model.scenario(scenario_id)
    traffic = {link.id: 0.0 for link in model.links}
    path = model.route if routed else model.direct_route
    for m in scenario.messages:
        if m.caller == ACTOR or m.size == 0:
            continue
        callers = model.replica_group(m.caller)
        callees = model.replica_group(m.callee)
        hosts = [model.host(e) for e in callees]
        share = m.size * m.repetitions / (len(callers) * len(callees))
        for c in callers:
            source = model.host(c)
            if source in hosts:
                continue
            for target in hosts:
                for link_id in path(source, target):
                    traffic[link_id] += share
    return traffic


def message_traffic(model, scenario_id, link_id, routed=False):
    model.link(link_id)
    return link_traffic(model, scenario_id, routed)[link_id]


def connection_degrees(model, kind):
    """Connection count of every element of one kind (component, node or operation)."""
    if kind == "component":
        partners = {c.id: set() for c in model.components}
        for s in model.scenarios:
            for m in s.messages:
                if m.caller == ACTOR or m.caller == m.callee:
                    continue
                partners[m.caller].add(m.callee)
                partners[m.callee].add(m.caller)
        return {c.id: len(partners[c.id]) + len(model.links_of(model.host(c.id)))
                for c in model.components}
    if kind == "node":
        return {n.id: len(model.links_of(n.id)) + len(model.components_on(n.id)) for n in model.nodes}
    if kind == "operation":
        callers = {op_id: set() for op_id in model._operations}
        for s in model.scenarios:
            for m in s.messages:
                if m.caller != ACTOR:
                    callers[m.operation].add(m.caller)
        return {op_id: len(ids) for op_id, ids in callers.items()}
    raise ValueError(f"unknown element kind '{kind}'")


def architectural_weight(model, element_id):
    """AW(el) = 1 + deg(el) / maxdeg over elements of the same kind, in [1, 2].

    An element with no connections weighs 1.0 unless its whole kind is
    unconnected, in which case every element weighs 2.0.
    """
    kind = model.element_kind(element_id)
    degrees = connection_degrees(model, kind)
    max_degree = max(degrees.values())
    if max_degree == 0:
        return 2.0
    return 1.0 + degrees[element_id] / max_degree

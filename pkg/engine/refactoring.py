"""Refactoring actions, their pre/post conditions and sequence feasibility.

Four actions are supported: Clon (clone a node with everything deployed on
it), MO2N (move an operation to a new component on a new node), MO2C (move an
operation to an existing component) and ReDe (redeploy a component to a new
node). Elements created by an action get ids derived from the action target
and its position in the sequence, so equal genotypes give equal models.
"""
import logging
from dataclasses import dataclass, replace
from typing import NamedTuple, Optional, Tuple

from engine.errors import (
    ConditionConflictError,
    ExhaustionError,
    PreconditionError,
    RefactoringError,
    UnresolvedTargetError,
)
from engine.model import ACTOR, CommLink, Component, call_parents

logger = logging.getLogger(__name__)

KINDS = ("Clon", "MO2N", "MO2C", "ReDe")
# Baseline refactoring factors: the intrinsic cost of each action kind
BRF = {"Clon": 1.23, "MO2N": 1.80, "MO2C": 1.64, "ReDe": 1.45}
RETRY_BUDGET = 100


@dataclass(frozen=True)
class RefactoringAction:
    kind: str
    target: str
    dest: Optional[str] = None
    brf: Optional[float] = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise RefactoringError(f"unknown action kind {self.kind!r}")
        if (self.kind == "MO2C") != (self.dest is not None):
            raise RefactoringError(f"{self.kind} {'requires' if self.kind == 'MO2C' else 'takes no'} destination")
        if self.brf is None:
            object.__setattr__(self, "brf", BRF[self.kind])
        if not self.brf > 0:
            raise RefactoringError(f"brf must be > 0, got {self.brf}")

    @property
    def elements(self):
        return (self.target,) if self.dest is None else (self.target, self.dest)

    def to_dict(self):
        data = {"kind": self.kind, "target": self.target}
        if self.dest is not None:
            data["dest"] = self.dest
        return data

    @classmethod
    def from_dict(cls, data):
        return cls(data["kind"], data["target"], data.get("dest"))

    def __str__(self):
        if self.dest is not None:
            return f"{self.kind}({self.target}->{self.dest})"
        return f"{self.kind}({self.target})"


@dataclass(frozen=True)
class RefactoringSequence:
    actions: Tuple[RefactoringAction, ...]

    def __len__(self):
        return len(self.actions)

    def __iter__(self):
        return iter(self.actions)

    def __getitem__(self, index):
        return self.actions[index]

    @property
    def kinds(self):
        return tuple(a.kind for a in self.actions)

    def to_list(self):
        return [a.to_dict() for a in self.actions]

    @classmethod
    def from_list(cls, items):
        return cls(tuple(RefactoringAction.from_dict(item) for item in items))

    def __str__(self):
        return "[" + ", ".join(str(a) for a in self.actions) + "]"


# -- conditions -----------------------------------------------------------------

class Atom(NamedTuple):
    predicate: str
    args: Tuple[str, ...]
    positive: bool = True

    def negated(self):
        return Atom(self.predicate, self.args, not self.positive)

    def holds(self, model):
        if self.predicate == "exists":
            value = model.has_element(self.args[0])
        elif self.predicate == "deployedOn":
            value = model.deployment.get(self.args[0]) == self.args[1]
        elif self.predicate == "owns":
            component_id, operation_id = self.args
            value = model.has_operation(operation_id) and model.owner(operation_id) == component_id
        elif self.predicate == "connected":
            value = model.link_between(*self.args) is not None
        else:
            raise RefactoringError(f"unknown predicate {self.predicate!r}")
        return value == self.positive

    def __str__(self):
        text = f"{self.predicate}({', '.join(self.args)})"
        return text if self.positive else f"¬{text}"


def exists(element_id):
    return Atom("exists", (element_id,))


def deployed_on(component_id, node_id):
    return Atom("deployedOn", (component_id, node_id))


def owns(component_id, operation_id):
    return Atom("owns", (component_id, operation_id))


def connected(a, b):
    return Atom("connected", tuple(sorted((a, b))))


class Condition:
    """A conjunction of atoms; an atom and its negation never coexist."""

    def __init__(self, atoms=()):
        atoms = frozenset(atoms)
        for atom in atoms:
            if atom.negated() in atoms:
                raise ConditionConflictError(f"condition contains both {atom} and {atom.negated()}")
        self.atoms = atoms

    def holds(self, model):
        return all(atom.holds(model) for atom in self.atoms)

    def violated(self, model):
        return sorted((a for a in self.atoms if not a.holds(model)), key=str)

    def __contains__(self, atom):
        return atom in self.atoms

    def __len__(self):
        return len(self.atoms)

    def __eq__(self, other):
        return isinstance(other, Condition) and self.atoms == other.atoms

    def __hash__(self):
        return hash(self.atoms)

    def __repr__(self):
        return "{" + ", ".join(sorted(str(a) for a in self.atoms)) + "}"


def fold_conditions(pairs):
    """Compose (pre, post) pairs left to right.

    The global pre collects each action's pre minus what earlier posts already
    guarantee; a pre atom whose negation an earlier post established is a
    conflict. The global post is the conjunction of posts where later atoms
    supersede contradicting earlier ones.
    """
    pre, post = set(), set()
    for step, (pre_j, post_j) in enumerate(pairs):
        for atom in pre_j.atoms:
            if atom in post:
                continue
            if atom.negated() in post:
                raise ConditionConflictError(f"action {step} requires {atom} but an earlier action established {atom.negated()}")
            if atom.negated() in pre:
                raise ConditionConflictError(f"action {step} requires {atom} which contradicts an earlier requirement")
            pre.add(atom)
        for atom in post_j.atoms:
            post.discard(atom.negated())
            post.add(atom)
    return Condition(pre), Condition(post)


# -- target resolution ---------------------------------------------------------

def _resolve(action, model):
    """Check the target ids against the model and return the action's source element."""
    target = action.target
    if action.kind == "Clon":
        if not model.has_node(target):
            raise UnresolvedTargetError(f"Clon target '{target}' is not a node")
        return target
    if action.kind in ("MO2N", "MO2C"):
        if not model.has_operation(target):
            raise UnresolvedTargetError(f"{action.kind} target '{target}' is not an operation")
        if action.kind == "MO2C":
            if not model.has_component(action.dest):
                raise UnresolvedTargetError(f"MO2C destination '{action.dest}' is not a component")
            if model.component(action.dest).is_replica:
                raise UnresolvedTargetError(f"MO2C destination '{action.dest}' is a replica")
        return model.owner(target)
    if not model.has_component(target):
        raise UnresolvedTargetError(f"ReDe target '{target}' is not a component")
    return model.host(target)


def pre_condition(action, model):
    source = _resolve(action, model)
    if action.kind == "Clon":
        return Condition([exists(action.target)])
    if action.kind == "MO2N":
        return Condition([exists(action.target), owns(source, action.target)])
    if action.kind == "MO2C":
        return Condition([exists(action.target), exists(action.dest),
                          owns(action.dest, action.target).negated()])
    return Condition([exists(action.target)])


def post_condition(action, model, position=0):
    """Atoms that hold after applying the action: its targets, every created
    element, deployment and ownership changes and every new link."""
    after = apply(action, model, position=position, check=False)
    atoms = {exists(e) for e in action.elements}
    atoms.update(exists(e) for e in after.element_ids if not model.has_element(e))
    for component_id, node_id in after.deployment.items():
        before = model.deployment.get(component_id)
        if before != node_id:
            atoms.add(deployed_on(component_id, node_id))
            if before is not None:
                atoms.add(deployed_on(component_id, before).negated())
    for c in after.components:
        for op in c.operations:
            before = model.owner(op.id) if model.has_operation(op.id) else None
            if before != c.id:
                atoms.add(owns(c.id, op.id))
                if before is not None:
                    atoms.add(owns(before, op.id).negated())
    for link in after.links:
        if model.link_between(*link.endpoints) is None:
            atoms.add(connected(*link.endpoints))
    return Condition(atoms)


# -- application ---------------------------------------------------------------

def _fresh(model, candidate, taken=()):
    used = set(model.element_ids) | {link.id for link in model.links} | set(taken)
    name, n = candidate, 2
    while name in used:
        name = f"{candidate}-{n}"
        n += 1
    return name


def _rewire(model, operation_id, new_owner):
    """Point every invocation of an operation, and every call made while
    serving it, at a new owner. Sizes and repetitions are untouched."""
    scenarios = []
    for s in model.scenarios:
        parents = call_parents(s.messages)
        moved = {i for i, m in enumerate(s.messages) if m.operation == operation_id}
        messages = []
        for i, m in enumerate(s.messages):
            if i in moved:
                m = replace(m, callee=new_owner)
            if parents[i] in moved:
                m = replace(m, caller=new_owner)
            messages.append(m)
        scenarios.append(replace(s, messages=tuple(messages)))
    return tuple(scenarios)


def _apply_clon(model, action, position):
    node = model.node(action.target)
    new_node = replace(node, id=_fresh(model, f"{node.id}.clon{position}"))
    components = list(model.components)
    deployment = dict(model.deployment)
    created = [new_node.id]
    for component_id in model.components_on(node.id):
        original = model.component(component_id)
        replica_id = _fresh(model, f"{component_id}.clon{position}", created)
        created.append(replica_id)
        components.append(Component(replica_id, (), original.failure_prob,
                                    replica_of=original.replica_of or original.id))
        deployment[replica_id] = new_node.id
    links = list(model.links)
    for link in model.links_of(node.id):
        link_id = _fresh(model, f"{link.id}.clon{position}", created)
        created.append(link_id)
        links.append(CommLink(link_id, (new_node.id, link.other(node.id)), link.failure_prob))
    return replace(model, components=tuple(components), nodes=model.nodes + (new_node,),
                   links=tuple(links), deployment=deployment)


def _link_like(model, source_node, new_node, partner, link_id):
    """New link to partner, with the failure probability of the source node's link to it."""
    existing = model.link_between(source_node, partner) if partner != source_node else None
    if existing is not None:
        psi = existing.failure_prob
    else:
        incident = model.links_of(source_node)
        psi = sum(l.failure_prob for l in incident) / len(incident) if incident else 0.0
    return CommLink(link_id, (new_node, partner), psi)


def _apply_mo2n(model, action, position):
    operation = model.operation(action.target)
    source = model.component(model.owner(operation.id))
    source_node = model.node(model.host(source.id))
    component_id = _fresh(model, f"{operation.id}.mo2n{position}")
    node_id = _fresh(model, f"{operation.id}.mo2n{position}.host", [component_id])
    components = []
    for c in model.components:
        if c.id == source.id:
            c = replace(c, operations=tuple(op for op in c.operations if op.id != operation.id))
        components.append(c)
    components.append(Component(component_id, (operation,), source.failure_prob))
    deployment = dict(model.deployment)
    deployment[component_id] = node_id
    new_node = replace(source_node, id=node_id)
    moved = replace(model, components=tuple(components), nodes=model.nodes + (new_node,),
                    deployment=deployment)
    scenarios = _rewire(moved, operation.id, component_id)

    partners = []
    for s in scenarios:
        for m in s.messages:
            other = None
            if m.callee == component_id and m.caller not in (ACTOR, component_id):
                other = m.caller
            elif m.caller == component_id and m.callee != component_id:
                other = m.callee
            if other is not None:
                host = deployment[other]
                if host not in partners:
                    partners.append(host)
    links = list(model.links)
    for partner in partners:
        links.append(_link_like(model, source_node.id, node_id, partner, f"{node_id}--{partner}"))
    return replace(moved, scenarios=scenarios, links=tuple(links))


def _apply_mo2c(model, action, position):
    operation = model.operation(action.target)
    source_id = model.owner(operation.id)
    components = []
    for c in model.components:
        if c.id == source_id:
            c = replace(c, operations=tuple(op for op in c.operations if op.id != operation.id))
        elif c.id == action.dest:
            c = replace(c, operations=c.operations + (operation,))
        components.append(c)
    moved = replace(model, components=tuple(components))
    return replace(moved, scenarios=_rewire(moved, operation.id, action.dest))


def _apply_rede(model, action, position):
    component = model.component(action.target)
    old_node = model.node(model.host(component.id))
    new_node = replace(old_node, id=_fresh(model, f"{component.id}.rede{position}.host"))
    deployment = dict(model.deployment)
    deployment[component.id] = new_node.id
    links = list(model.links)
    for link in model.links_of(old_node.id):
        link_id = _fresh(model, f"{link.id}.rede{position}", [new_node.id])
        links.append(CommLink(link_id, (new_node.id, link.other(old_node.id)), link.failure_prob))
    return replace(model, nodes=model.nodes + (new_node,), links=tuple(links), deployment=deployment)


_APPLY = {"Clon": _apply_clon, "MO2N": _apply_mo2n, "MO2C": _apply_mo2c, "ReDe": _apply_rede}


def apply(action, model, position=0, check=True):
    """Return a new model with the action applied; the input is never modified."""
    if check:
        pre = pre_condition(action, model)
        if not pre.holds(model):
            violated = ", ".join(str(a) for a in pre.violated(model))
            raise PreconditionError(f"{action} not applicable: {violated}")
    else:
        _resolve(action, model)
    return _APPLY[action.kind](model, action, position)


def apply_sequence(sequence, model):
    for position, action in enumerate(sequence):
        model = apply(action, model, position=position)
    return model


def intermediate_models(sequence, model):
    """The model each action of the sequence is applied to, in order."""
    states = []
    for position, action in enumerate(sequence):
        states.append(model)
        model = apply(action, model, position=position)
    return states


def compose_conditions(sequence, model):
    """Global (pre, post) of a sequence, resolving each target on the state left by the previous actions."""
    pairs = []
    state = model
    for position, action in enumerate(sequence):
        pairs.append((pre_condition(action, state), post_condition(action, state, position)))
        state = apply(action, state, position=position, check=False)
    return fold_conditions(pairs)


def is_feasible(sequence, model):
    try:
        pre, _ = compose_conditions(sequence, model)
    except (UnresolvedTargetError, ConditionConflictError):
        return False
    return pre.holds(model)


# -- random generation -----------------------------------------------------------

def valid_targets(model, kind):
    """Every action of one kind that can be applied to the model as it stands."""
    if kind == "Clon":
        return [RefactoringAction("Clon", n.id) for n in model.nodes]
    if kind == "MO2N":
        return [RefactoringAction("MO2N", op.id) for c in model.components for op in c.operations]
    if kind == "MO2C":
        primaries = [c.id for c in model.components if not c.is_replica]
        return [RefactoringAction("MO2C", op.id, dest)
                for c in model.components for op in c.operations
                for dest in primaries if dest != c.id]
    if kind == "ReDe":
        return [RefactoringAction("ReDe", c.id) for c in model.components]
    raise RefactoringError(f"unknown action kind {kind!r}")


def target_counts(model):
    return {kind: len(valid_targets(model, kind)) for kind in KINDS}


def random_action(model, rng):
    """Draw a kind uniformly among kinds with a non-empty domain, then a target uniformly."""
    domains = {kind: valid_targets(model, kind) for kind in KINDS}
    kinds = [kind for kind in KINDS if domains[kind]]
    if not kinds:
        raise ExhaustionError("model admits no refactoring action")
    kind = kinds[int(rng.integers(len(kinds)))]
    domain = domains[kind]
    return domain[int(rng.integers(len(domain)))]


def _applicable(action, state):
    try:
        return pre_condition(action, state).holds(state)
    except UnresolvedTargetError:
        return False


def _draw(state, rng, retry_budget, position):
    for _ in range(retry_budget):
        action = random_action(state, rng)
        if _applicable(action, state):
            return action
    raise ExhaustionError(f"no applicable action found for position {position} after {retry_budget} draws")


def random_sequence(model, rng, length, retry_budget=RETRY_BUDGET):
    if length < 1:
        raise RefactoringError(f"sequence length must be >= 1, got {length}")
    actions = []
    state = model
    for position in range(length):
        action = _draw(state, rng, retry_budget, position)
        actions.append(action)
        state = apply(action, state, position=position, check=False)
    return RefactoringSequence(tuple(actions))


def repair(sequence, model, rng, retry_budget=RETRY_BUDGET):
    """Keep every action still applicable after its prefix; redraw the others."""
    actions = []
    state = model
    for position, action in enumerate(sequence):
        if not _applicable(action, state):
            logger.debug("redrawing %s at position %d", action, position)
            action = _draw(state, rng, retry_budget, position)
        actions.append(action)
        state = apply(action, state, position=position, check=False)
    return RefactoringSequence(tuple(actions))

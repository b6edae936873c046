"""Layered queueing network built from an architecture model, and its approximate solver.

Processors are nodes, tasks are components and entries are operations. Each
scenario is a reference task issuing its messages as synchronous calls. The
solver alternates per-processor queueing estimates with the propagation of
entry residence times up the call graph: open classes use the square-root
multi-server waiting approximation, closed classes use Schweitzer MVA with the
Seidmann multi-server split.
"""
import logging
from dataclasses import dataclass, field
from graphlib import CycleError, TopologicalSorter
from typing import Dict, Optional, Tuple

import numpy as np

from engine.errors import LqnStructureError, SolverError
from engine.model import call_parents

logger = logging.getLogger(__name__)

DEFAULT_TOL = 1e-6
DEFAULT_MAX_ITER = 1000
# Residence of a saturated station is evaluated at this utilization
SATURATION_CAP = 0.999


@dataclass(frozen=True)
class Processor:
    id: str
    multiplicity: int
    speed_factor: float


@dataclass(frozen=True)
class Task:
    id: str
    processor: str


@dataclass(frozen=True)
class Entry:
    id: str
    task: str
    demand: float


@dataclass(frozen=True)
class Call:
    scenario: str
    # None is the scenario's reference task
    caller: Optional[str]
    callee: str
    mean_calls: float


@dataclass(frozen=True)
class ReferenceTask:
    id: str
    workload: object


@dataclass(frozen=True)
class LqnModel:
    processors: Tuple[Processor, ...]
    tasks: Tuple[Task, ...]
    entries: Tuple[Entry, ...]
    calls: Tuple[Call, ...]
    reference_tasks: Tuple[ReferenceTask, ...]


@dataclass
class PerformanceIndices:
    scenario_throughput: Dict[str, float]
    scenario_response_time: Dict[str, float]
    node_utilization: Dict[str, float]
    component_residence: Dict[str, Dict[str, float]] = field(default_factory=dict)
    converged: bool = True
    saturated: Tuple[str, ...] = ()
    iterations: int = 0

    def index_map(self):
        """Flat map of every performance index: one throughput and one response
        time per scenario, one utilization per node."""
        indices = {}
        for s, value in self.scenario_throughput.items():
            indices[("X", s)] = value
        for s, value in self.scenario_response_time.items():
            indices[("R", s)] = value
        for n, value in self.node_utilization.items():
            indices[("U", n)] = value
        return indices

    def to_dict(self):
        return {
            "scenarioThroughput": dict(self.scenario_throughput),
            "scenarioResponseTime": dict(self.scenario_response_time),
            "nodeUtilization": dict(self.node_utilization),
            "componentResidence": {s: dict(r) for s, r in self.component_residence.items()},
            "converged": self.converged,
            "saturated": list(self.saturated),
            "iterations": self.iterations,
        }


def entry_id(operation_id, task_id, primary_id):
    return operation_id if task_id == primary_id else f"{operation_id}@{task_id}"


def to_lqn(model):
    processors = tuple(Processor(n.id, n.multiplicity, n.speed_factor) for n in model.nodes)
    tasks = tuple(Task(c.id, model.host(c.id)) for c in model.components)
    entries = []
    for c in model.components:
        if c.is_replica:
            continue
        for task_id in model.replica_group(c.id):
            speed = model.node(model.host(task_id)).speed_factor
            for op in c.operations:
                entries.append(Entry(entry_id(op.id, task_id, c.id), task_id, op.service_demand / speed))

    def group_entries(operation_id):
        owner = model.owner(operation_id)
        return [entry_id(operation_id, t, owner) for t in model.replica_group(owner)]

    calls = []
    for s in model.scenarios:
        parents = call_parents(s.messages)
        for k, m in enumerate(s.messages):
            callees = group_entries(m.operation)
            if parents[k] is None:
                for callee in callees:
                    calls.append(Call(s.id, None, callee, m.repetitions / len(callees)))
                continue
            parent = s.messages[parents[k]]
            # repetitions are totals per scenario run; calls are per invocation of the caller
            per_invocation = m.repetitions / parent.repetitions
            for caller in group_entries(parent.operation):
                for callee in callees:
                    calls.append(Call(s.id, caller, callee, per_invocation / len(callees)))
    reference_tasks = tuple(ReferenceTask(s.id, s.workload) for s in model.scenarios)
    return LqnModel(processors, tasks, tuple(entries), tuple(calls), reference_tasks)


def render(lqn):
    """Line-oriented listing of an LQN for manual inspection."""
    lines = []
    for p in lqn.processors:
        lines.append(f"P {p.id} m={p.multiplicity} speed={p.speed_factor:g}")
    for t in lqn.tasks:
        lines.append(f"T {t.id} on {t.processor}")
    for e in lqn.entries:
        lines.append(f"E {e.id} task={e.task} demand={e.demand:g}")
    for r in lqn.reference_tasks:
        w = r.workload
        if w.is_open:
            lines.append(f"R {r.id} open rate={w.arrival_rate:g}")
        else:
            lines.append(f"R {r.id} closed N={w.population} Z={w.think_time:g}")
    for c in lqn.calls:
        caller = c.caller if c.caller is not None else f"<{c.scenario}>"
        lines.append(f"C {c.scenario} {caller} -> {c.callee} y={c.mean_calls:g}")
    return "\n".join(lines) + "\n"


def _call_order(lqn, scenario_id):
    """Entries of a scenario's call graph, callers before callees."""
    graph = {}
    for c in lqn.calls:
        if c.scenario != scenario_id:
            continue
        graph.setdefault(c.callee, set())
        if c.caller is not None:
            graph[c.callee].add(c.caller)
    try:
        return list(TopologicalSorter(graph).static_order())
    except CycleError as e:
        raise LqnStructureError(f"cyclic call graph in scenario '{scenario_id}': {e.args[1]}") from None


def visit_counts(lqn):
    """Invocations of every entry per run of every scenario."""
    visits = {}
    for r in lqn.reference_tasks:
        order = _call_order(lqn, r.id)
        counts = dict.fromkeys(order, 0.0)
        outgoing = {}
        for c in lqn.calls:
            if c.scenario == r.id:
                outgoing.setdefault(c.caller, []).append(c)
        for c in outgoing.get(None, []):
            counts[c.callee] += c.mean_calls
        for e in order:
            for c in outgoing.get(e, []):
                counts[c.callee] += counts[e] * c.mean_calls
        visits[r.id] = counts
    return visits


def _open_factor(rho, servers):
    """Residence per unit demand at a multi-server station (exact for one server)."""
    rho = np.minimum(rho, SATURATION_CAP)
    waiting = rho ** (np.sqrt(2.0 * (servers + 1)) - 1.0) / (servers * (1.0 - rho))
    return 1.0 + waiting


def solve(lqn, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER):
    if tol <= 0 or max_iter < 1:
        raise SolverError(f"invalid solver settings tol={tol} max_iter={max_iter}")
    visits = visit_counts(lqn)
    scenarios = [r.id for r in lqn.reference_tasks]
    workloads = [r.workload for r in lqn.reference_tasks]
    processors = [p.id for p in lqn.processors]
    p_index = {p: i for i, p in enumerate(processors)}
    task_processor = {t.id: t.processor for t in lqn.tasks}
    entries = {e.id: e for e in lqn.entries}
    servers = np.array([p.multiplicity for p in lqn.processors], dtype=float)

    # per-class demand on every processor
    demand = np.zeros((len(scenarios), len(processors)))
    for i, s in enumerate(scenarios):
        for e, v in visits[s].items():
            entry = entries[e]
            demand[i, p_index[task_processor[entry.task]]] += v * entry.demand

    is_open = np.array([w.is_open for w in workloads])
    arrival = np.array([w.arrival_rate if w.is_open else 0.0 for w in workloads])
    population = np.array([0.0 if w.is_open else float(w.population) for w in workloads])
    think = np.array([0.0 if w.is_open else w.think_time for w in workloads])

    open_util = (arrival[:, None] * demand).sum(axis=0) / servers
    throughput = np.where(is_open, arrival, 0.0)
    residence = demand.copy()
    queue = np.zeros_like(demand)
    closed = ~is_open
    if closed.any():
        # start from an even spread of each closed population over its stations
        visited = (demand > 0).sum(axis=1, keepdims=True).clip(min=1)
        queue[closed] = (population[:, None] / visited * (demand > 0))[closed]

    previous = None
    converged = False
    iteration = 0
    for iteration in range(1, max_iter + 1):
        closed_util = (throughput[:, None] * demand)[closed].sum(axis=0) / servers
        rho = open_util + closed_util
        factor = _open_factor(rho, servers)
        residence[is_open] = demand[is_open] * factor
        if closed.any():
            per_server = demand / servers
            others = queue.sum(axis=0)[None, :] - queue / np.where(population > 0, population, 1.0)[:, None]
            inflation = 1.0 / (1.0 - np.minimum(open_util, SATURATION_CAP))
            queueing = per_server * (1.0 + others) * inflation
            delay = demand * (servers - 1.0) / servers
            residence[closed] = (queueing + delay)[closed]
            cycle = think + residence.sum(axis=1)
            throughput[closed] = (population / cycle)[closed]
            queue[closed] = (throughput[:, None] * queueing)[closed]
        current = np.concatenate([throughput, residence.sum(axis=1), rho])
        if previous is not None:
            change = np.abs(current - previous) / np.maximum(np.abs(previous), 1e-12)
            if change.max() < tol:
                converged = True
                break
        previous = current

    utilization = (throughput[:, None] * demand).sum(axis=0) / servers
    saturated = tuple(p for p, u in zip(processors, utilization) if u >= 1.0)
    if saturated:
        logger.warning("saturated processors: %s", ", ".join(saturated))
        for i in np.flatnonzero(is_open):
            peak = max((utilization[j] for j in np.flatnonzero(demand[i] > 0)), default=0.0)
            throughput[i] = arrival[i] / max(1.0, peak)
    if not converged:
        logger.warning("LQN solver did not converge within %d iterations", max_iter)

    # residence per unit demand, per class and processor
    unit = np.divide(residence, demand, out=np.ones_like(residence), where=demand > 0)
    response, component_residence = {}, {}
    for i, s in enumerate(scenarios):
        own = {}
        for e in visits[s]:
            entry = entries[e]
            own[e] = entry.demand * unit[i, p_index[task_processor[entry.task]]]
        # entry residence including nested synchronous calls, callees first
        total = dict(own)
        for e in reversed(_call_order(lqn, s)):
            total[e] = own[e] + sum(c.mean_calls * total[c.callee]
                                    for c in lqn.calls if c.scenario == s and c.caller == e)
        response[s] = sum(c.mean_calls * total[c.callee]
                          for c in lqn.calls if c.scenario == s and c.caller is None)
        per_task = {}
        for e, v in visits[s].items():
            task = entries[e].task
            per_task[task] = per_task.get(task, 0.0) + v * own[e]
        component_residence[s] = {t.id: per_task.get(t.id, 0.0) for t in lqn.tasks}

    return PerformanceIndices(
        scenario_throughput={s: float(x) for s, x in zip(scenarios, throughput)},
        scenario_response_time={s: float(response[s]) for s in scenarios},
        node_utilization={p: float(min(u, 1.0)) for p, u in zip(processors, utilization)},
        component_residence=component_residence,
        converged=converged,
        saturated=saturated,
        iterations=iteration,
    )


def analyze(model, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER):
    return solve(to_lqn(model), tol=tol, max_iter=max_iter)
